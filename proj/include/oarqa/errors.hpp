#ifndef OARQA_ERRORS_HPP
#define OARQA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace oarqa {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : Error {
    using Error::Error;
};

struct MalformedHeader : Error {
    using Error::Error;
};

struct UnsupportedDimension : Error {
    using Error::Error;
};

struct UnsupportedType : Error {
    using Error::Error;
};

struct UnsupportedEncoding : Error {
    using Error::Error;
};

struct TruncatedData : Error {
    using Error::Error;
};

struct GeometryMismatch : Error {
    using Error::Error;
};

struct EmptySeeds : Error {
    using Error::Error;
};

struct EmptySurface : Error {
    using Error::Error;
};

struct InvalidThresholds : Error {
    using Error::Error;
};

struct MalformedConfig : Error {
    using Error::Error;
};

struct InvariantViolation : Error {
    using Error::Error;
};

struct MalformedManifest : Error {
    using Error::Error;
};

struct SpecOutOfBounds : Error {
    using Error::Error;
};

struct VolumeTooLargeForOracle : Error {
    using Error::Error;
};

} // namespace oarqa

#endif // OARQA_ERRORS_HPP

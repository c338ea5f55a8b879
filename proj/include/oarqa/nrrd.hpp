#ifndef OARQA_NRRD_HPP
#define OARQA_NRRD_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <zlib.h>

#include "oarqa/errors.hpp"
#include "oarqa/geometry.hpp"

namespace oarqa {

// Supported NRRD subset: dimension 3, attached data, raw/gzip encodings,
// element types uint8/int16/uint16/int32.

enum class NrrdElementType { UInt8, Int16, UInt16, Int32 };
enum class NrrdEncoding { Raw, Gzip };
enum class NrrdEndian { Little, Big };

inline std::size_t element_size(NrrdElementType t) {
    switch (t) {
        case NrrdElementType::UInt8: return 1;
        case NrrdElementType::Int16:
        case NrrdElementType::UInt16: return 2;
        case NrrdElementType::Int32: return 4;
    }
    return 0;
}

struct NrrdHeader {
    int dimension = 0;
    std::vector<std::int64_t> sizes;
    NrrdElementType element_type = NrrdElementType::UInt8;
    NrrdEncoding encoding = NrrdEncoding::Raw;
    NrrdEndian endianness = NrrdEndian::Little;
    std::optional<std::array<std::array<double, 3>, 3>> space_directions;
    std::array<double, 3> space_origin{0.0, 0.0, 0.0};
    std::map<std::string, std::string> keyed_fields;
};

struct NonzeroIsForeground {};
struct SpecificLabel {
    std::int64_t label;
};
using LabelPolicy = std::variant<NonzeroIsForeground, SpecificLabel>;

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline NrrdElementType parse_type(const std::string& raw) {
    std::string t = lower(trim(raw));
    if (t == "uchar" || t == "unsigned char" || t == "uint8" || t == "uint8_t")
        return NrrdElementType::UInt8;
    if (t == "short" || t == "short int" || t == "signed short" || t == "signed short int" ||
        t == "int16" || t == "int16_t")
        return NrrdElementType::Int16;
    if (t == "ushort" || t == "unsigned short" || t == "unsigned short int" || t == "uint16" ||
        t == "uint16_t")
        return NrrdElementType::UInt16;
    if (t == "int" || t == "signed int" || t == "int32" || t == "int32_t")
        return NrrdElementType::Int32;
    throw UnsupportedType("unsupported NRRD element type: " + raw);
}

// "(a,b,c) (d,e,f) ..." with possible "none" entries for non-spatial axes.
inline std::vector<std::optional<std::array<double, 3>>> parse_space_directions(
    const std::string& value) {
    std::vector<std::optional<std::array<double, 3>>> out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
        if (pos >= value.size()) break;
        if (value.compare(pos, 4, "none") == 0) {
            out.push_back(std::nullopt);
            pos += 4;
            continue;
        }
        if (value[pos] != '(')
            throw MalformedHeader("malformed space directions: " + value);
        std::size_t close = value.find(')', pos);
        if (close == std::string::npos)
            throw MalformedHeader("malformed space directions: " + value);
        std::string vec = value.substr(pos + 1, close - pos - 1);
        std::replace(vec.begin(), vec.end(), ',', ' ');
        std::istringstream is(vec);
        std::array<double, 3> v{};
        if (!(is >> v[0] >> v[1] >> v[2]))
            throw MalformedHeader("malformed space direction vector: " + value);
        out.push_back(v);
        pos = close + 1;
    }
    return out;
}

inline std::vector<std::uint8_t> gzip_inflate(const std::vector<std::uint8_t>& in,
                                              std::size_t expected) {
    std::vector<std::uint8_t> out;
    out.reserve(expected);
    z_stream zs{};
    // 15+32: accept both gzip and zlib wrappers
    if (inflateInit2(&zs, 15 + 32) != Z_OK)
        throw IoError("zlib inflateInit failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::vector<std::uint8_t> buf(1 << 16);
    int ret = Z_OK;
    do {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw TruncatedData("gzip payload corrupt or truncated");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (ret != Z_STREAM_END && zs.avail_in > 0);
    inflateEnd(&zs);
    if (ret != Z_STREAM_END)
        throw TruncatedData("gzip stream ended prematurely");
    return out;
}

inline std::vector<std::uint8_t> gzip_deflate(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    // 15+16: gzip wrapper
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK)
        throw IoError("zlib deflateInit failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> buf(1 << 16);
    int ret = Z_OK;
    do {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        ret = deflate(&zs, Z_FINISH);
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (ret != Z_STREAM_END);
    deflateEnd(&zs);
    return out;
}

inline std::int64_t decode_element(const std::uint8_t* p, NrrdElementType t, NrrdEndian e) {
    auto load = [&](int n) {
        std::uint64_t v = 0;
        if (e == NrrdEndian::Little)
            for (int i = n - 1; i >= 0; --i) v = (v << 8) | p[i];
        else
            for (int i = 0; i < n; ++i) v = (v << 8) | p[i];
        return v;
    };
    switch (t) {
        case NrrdElementType::UInt8: return p[0];
        case NrrdElementType::UInt16: return static_cast<std::uint16_t>(load(2));
        case NrrdElementType::Int16: return static_cast<std::int16_t>(static_cast<std::uint16_t>(load(2)));
        case NrrdElementType::Int32: return static_cast<std::int32_t>(static_cast<std::uint32_t>(load(4)));
    }
    return 0;
}

} // namespace detail

/// Parse the text header from a stream positioned at the magic line. Leaves
/// the stream positioned at the first payload byte.
inline NrrdHeader parse_nrrd_header(std::istream& in, std::vector<std::string>& warnings) {
    std::string line;
    if (!std::getline(in, line))
        throw MalformedHeader("empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() < 8 || line.compare(0, 4, "NRRD") != 0 || !std::isdigit((unsigned char)line[4]))
        throw MalformedHeader("missing NRRD magic line");

    NrrdHeader h;
    bool have_dimension = false, have_sizes = false, have_type = false, have_encoding = false;
    bool have_endian = false;
    std::vector<std::optional<std::array<double, 3>>> dirs;
    bool have_dirs = false;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;                  // header/data separator
        if (line[0] == '#') continue;             // comment

        std::size_t kv = line.find(":=");
        if (kv != std::string::npos) {
            h.keyed_fields[line.substr(0, kv)] = line.substr(kv + 2);
            continue;
        }
        std::size_t colon = line.find(": ");
        if (colon == std::string::npos) {
            colon = line.find(':');
            if (colon == std::string::npos)
                throw MalformedHeader("malformed header line: " + line);
        }
        std::string key = detail::lower(detail::trim(line.substr(0, colon)));
        std::string value = detail::trim(line.substr(colon + 1));

        if (key == "dimension") {
            h.dimension = std::stoi(value);
            have_dimension = true;
        } else if (key == "sizes") {
            std::istringstream is(value);
            std::int64_t s;
            while (is >> s) h.sizes.push_back(s);
            have_sizes = true;
        } else if (key == "type") {
            h.element_type = detail::parse_type(value);
            have_type = true;
        } else if (key == "encoding") {
            std::string enc = detail::lower(value);
            if (enc == "raw")
                h.encoding = NrrdEncoding::Raw;
            else if (enc == "gzip" || enc == "gz")
                h.encoding = NrrdEncoding::Gzip;
            else if (enc == "ascii" || enc == "text" || enc == "txt")
                throw UnsupportedEncoding("ASCII encoding not supported");
            else
                throw UnsupportedEncoding("unsupported encoding: " + value);
            have_encoding = true;
        } else if (key == "endian") {
            std::string en = detail::lower(value);
            if (en == "little")
                h.endianness = NrrdEndian::Little;
            else if (en == "big")
                h.endianness = NrrdEndian::Big;
            else
                throw MalformedHeader("unknown endian: " + value);
            have_endian = true;
        } else if (key == "space directions") {
            dirs = detail::parse_space_directions(value);
            have_dirs = true;
        } else if (key == "space origin") {
            auto v = detail::parse_space_directions(value);
            if (v.size() == 1 && v[0]) h.space_origin = *v[0];
        } else if (key == "data file" || key == "datafile") {
            throw UnsupportedEncoding("detached NRRD headers not supported");
        } else {
            h.keyed_fields[key] = value;   // preserve unrecognized fields
        }
    }

    if (!have_dimension || !have_sizes || !have_type || !have_encoding)
        throw MalformedHeader("missing required field (dimension/sizes/type/encoding)");
    if (h.dimension != 3)
        throw UnsupportedDimension("only dimension 3 supported, got " +
                                   std::to_string(h.dimension));
    if (h.sizes.size() != 3)
        throw MalformedHeader("sizes length != dimension");
    for (auto s : h.sizes)
        if (s < 1) throw MalformedHeader("non-positive size in sizes field");
    if (!have_endian && element_size(h.element_type) > 1)
        warnings.push_back("endian missing for multi-byte type; assuming little");

    if (have_dirs) {
        std::vector<std::array<double, 3>> spatial;
        for (auto& d : dirs)
            if (d) spatial.push_back(*d);
        if (spatial.size() != 3)
            throw MalformedHeader("expected 3 spatial direction vectors");
        h.space_directions = {spatial[0], spatial[1], spatial[2]};
    }
    return h;
}

inline GridGeometry geometry_from_header(const NrrdHeader& h, std::vector<std::string>& warnings) {
    GridGeometry g;
    g.dims = {h.sizes[0], h.sizes[1], h.sizes[2]};
    g.origin_mm = h.space_origin;
    if (h.space_directions) {
        for (int a = 0; a < 3; ++a) {
            const auto& v = (*h.space_directions)[a];
            double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            if (!(norm > 0.0) || !std::isfinite(norm))
                throw MalformedHeader("zero-length space direction vector");
            g.spacing_mm[a] = norm;
            // oblique axes: spacing taken as vector norm, flagged not fatal
            int nonzero = (v[0] != 0.0) + (v[1] != 0.0) + (v[2] != 0.0);
            if (nonzero > 1)
                warnings.push_back("ObliqueGeometryWarning: axis " + std::to_string(a) +
                                   " direction is not axis-aligned; using vector norm as spacing");
        }
    } else {
        warnings.push_back("space directions missing; assuming 1 mm isotropic spacing");
    }
    return g;
}

/// Load a 3D binary mask from an NRRD file.
inline MaskVolume read_nrrd(const std::string& path, LabelPolicy policy = NonzeroIsForeground{}) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);

    std::vector<std::string> warnings;
    NrrdHeader h = parse_nrrd_header(in, warnings);
    GridGeometry geom = geometry_from_header(h, warnings);

    std::vector<std::uint8_t> payload((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
    std::size_t esize = element_size(h.element_type);
    std::size_t need = static_cast<std::size_t>(geom.voxel_count()) * esize;
    if (h.encoding == NrrdEncoding::Gzip)
        payload = detail::gzip_inflate(payload, need);
    if (payload.size() < need)
        throw TruncatedData("payload has " + std::to_string(payload.size()) +
                            " bytes, need " + std::to_string(need));

    std::vector<std::uint8_t> voxels(static_cast<std::size_t>(geom.voxel_count()));
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        std::int64_t v = detail::decode_element(payload.data() + i * esize, h.element_type,
                                                h.endianness);
        if (std::holds_alternative<NonzeroIsForeground>(policy))
            voxels[i] = (v != 0);
        else
            voxels[i] = (v == std::get<SpecificLabel>(policy).label);
    }
    return MaskVolume(geom, std::move(voxels), std::move(warnings));
}

/// Write a mask as uint8 NRRD, raw or gzip encoded.
inline void write_nrrd(const MaskVolume& m, const std::string& path,
                       NrrdEncoding encoding = NrrdEncoding::Raw) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    const auto& g = m.geometry();
    out << "NRRD0004\n";
    out << "type: uint8\n";
    out << "dimension: 3\n";
    out << "sizes: " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << "\n";
    out << "encoding: " << (encoding == NrrdEncoding::Raw ? "raw" : "gzip") << "\n";
    out << "endian: little\n";
    out << "space: left-posterior-superior\n";
    out << "space directions: (" << g.spacing_mm[0] << ",0,0) (0," << g.spacing_mm[1]
        << ",0) (0,0," << g.spacing_mm[2] << ")\n";
    out << "space origin: (" << g.origin_mm[0] << "," << g.origin_mm[1] << ","
        << g.origin_mm[2] << ")\n";
    out << "\n";
    if (encoding == NrrdEncoding::Raw) {
        out.write(reinterpret_cast<const char*>(m.raw().data()),
                  static_cast<std::streamsize>(m.raw().size()));
    } else {
        auto z = detail::gzip_deflate(m.raw());
        out.write(reinterpret_cast<const char*>(z.data()), static_cast<std::streamsize>(z.size()));
    }
    if (!out)
        throw IoError("write failed: " + path);
}

} // namespace oarqa

#endif // OARQA_NRRD_HPP

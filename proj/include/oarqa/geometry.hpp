#ifndef OARQA_GEOMETRY_HPP
#define OARQA_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "oarqa/errors.hpp"

namespace oarqa {

/// Voxel grid with physical spacing in millimeters. Distances are always
/// computed between voxel centers in mm, never in voxel units.
struct GridGeometry {
    std::array<std::int64_t, 3> dims{1, 1, 1};   // (nx, ny, nz)
    std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
    std::array<double, 3> origin_mm{0.0, 0.0, 0.0};

    std::int64_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }

    double voxel_volume_mm3() const {
        return spacing_mm[0] * spacing_mm[1] * spacing_mm[2];
    }

    /// Physical length of the grid diagonal, an upper bound for any
    /// within-grid distance.
    double diagonal_mm() const {
        double s = 0.0;
        for (int a = 0; a < 3; ++a) {
            double e = static_cast<double>(dims[a] - 1) * spacing_mm[a];
            s += e * e;
        }
        return std::sqrt(s);
    }

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (dims[a] < 1)
                throw InvariantViolation("GridGeometry: dims must be >= 1");
            if (!(spacing_mm[a] > 0.0) || !std::isfinite(spacing_mm[a]))
                throw InvariantViolation("GridGeometry: spacing must be positive and finite");
        }
    }

    static constexpr double kSpacingRelTol = 1e-6;

    bool compatible_with(const GridGeometry& other) const {
        if (dims != other.dims) return false;
        for (int a = 0; a < 3; ++a) {
            double da = spacing_mm[a], db = other.spacing_mm[a];
            double scale = std::max(std::abs(da), std::abs(db));
            if (std::abs(da - db) > kSpacingRelTol * scale) return false;
        }
        return true;
    }

    std::string describe() const {
        return "dims=(" + std::to_string(dims[0]) + "," + std::to_string(dims[1]) + "," +
               std::to_string(dims[2]) + ") spacing_mm=(" + std::to_string(spacing_mm[0]) + "," +
               std::to_string(spacing_mm[1]) + "," + std::to_string(spacing_mm[2]) + ")";
    }
};

/// Immutable 3D binary mask, x-fastest linear order.
class MaskVolume {
public:
    MaskVolume() = default;

    MaskVolume(GridGeometry geometry, std::vector<std::uint8_t> voxels,
               std::vector<std::string> warnings = {})
        : geometry_(geometry), voxels_(std::move(voxels)), warnings_(std::move(warnings)) {
        geometry_.validate();
        if (static_cast<std::int64_t>(voxels_.size()) != geometry_.voxel_count())
            throw InvariantViolation("MaskVolume: voxel array length != nx*ny*nz");
        foreground_count_ = 0;
        for (auto v : voxels_) foreground_count_ += (v != 0);
    }

    const GridGeometry& geometry() const { return geometry_; }
    std::int64_t foreground_count() const { return foreground_count_; }
    bool empty_mask() const { return foreground_count_ == 0; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    std::int64_t size() const { return static_cast<std::int64_t>(voxels_.size()); }
    bool at(std::int64_t i) const { return voxels_[static_cast<std::size_t>(i)] != 0; }

    bool at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return at(index_of(x, y, z));
    }

    std::int64_t index_of(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return x + geometry_.dims[0] * (y + geometry_.dims[1] * z);
    }

    std::array<std::int64_t, 3> coords_of(std::int64_t i) const {
        std::int64_t nx = geometry_.dims[0], ny = geometry_.dims[1];
        return {i % nx, (i / nx) % ny, i / (nx * ny)};
    }

    double volume_mm3() const {
        return static_cast<double>(foreground_count_) * geometry_.voxel_volume_mm3();
    }

    const std::vector<std::uint8_t>& raw() const { return voxels_; }

private:
    GridGeometry geometry_;
    std::vector<std::uint8_t> voxels_;
    std::vector<std::string> warnings_;
    std::int64_t foreground_count_ = 0;
};

enum class PairFlag { Ok, EmptyPrediction, EmptyGroundTruth, BothEmpty };

inline const char* to_string(PairFlag f) {
    switch (f) {
        case PairFlag::Ok: return "Ok";
        case PairFlag::EmptyPrediction: return "EmptyPrediction";
        case PairFlag::EmptyGroundTruth: return "EmptyGroundTruth";
        case PairFlag::BothEmpty: return "BothEmpty";
    }
    return "?";
}

/// Geometry check plus degenerate-emptiness flags. Mismatched geometry is an
/// error; empty masks are not.
inline PairFlag validate_pair(const MaskVolume& pred, const MaskVolume& gt) {
    if (!pred.geometry().compatible_with(gt.geometry()))
        throw GeometryMismatch("geometry mismatch: pred " + pred.geometry().describe() +
                               " vs gt " + gt.geometry().describe());
    if (pred.empty_mask() && gt.empty_mask()) return PairFlag::BothEmpty;
    if (pred.empty_mask()) return PairFlag::EmptyPrediction;
    if (gt.empty_mask()) return PairFlag::EmptyGroundTruth;
    return PairFlag::Ok;
}

} // namespace oarqa

#endif // OARQA_GEOMETRY_HPP

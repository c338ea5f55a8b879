#ifndef OARQA_METRICS_HPP
#define OARQA_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "oarqa/errors.hpp"
#include "oarqa/geometry.hpp"

namespace oarqa {

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

/// Foreground voxels with at least one face-adjacent background neighbor;
/// the volume border counts as background. Points in ascending linear index.
struct SurfaceSet {
    GridGeometry geometry;
    std::vector<std::array<std::int64_t, 3>> points;

    bool empty() const { return points.empty(); }
};

/// Distance in mm from each voxel center to the nearest seed voxel center.
struct DistanceField {
    GridGeometry geometry;
    std::vector<double> values;

    double at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return values[static_cast<std::size_t>(x + geometry.dims[0] * (y + geometry.dims[1] * z))];
    }
};

struct ComponentInfo {
    int component_id = 0;
    std::int64_t voxel_count = 0;
    double min_distance_to_gt_mm = 0.0;
};

struct MetricResult {
    double dice = 0.0;
    double hd_pred_to_gt_mm = 0.0;
    double hd_gt_to_pred_mm = 0.0;
    double hd_mm = 0.0;
    double pred_volume_mm3 = 0.0;
    double gt_volume_mm3 = 0.0;
    std::vector<ComponentInfo> components;
    PairFlag flag = PairFlag::Ok;
};

/// Dice = 2|A∩B| / (|A|+|B|). Both empty -> 1.0 (nothing to segment,
/// nothing segmented); exactly one empty -> 0.0.
inline double dice(const MaskVolume& a, const MaskVolume& b) {
    if (!a.geometry().compatible_with(b.geometry()))
        throw GeometryMismatch("dice: " + a.geometry().describe() + " vs " +
                               b.geometry().describe());
    if (a.empty_mask() && b.empty_mask()) return 1.0;
    if (a.empty_mask() || b.empty_mask()) return 0.0;
    std::int64_t inter = 0;
    const auto& ra = a.raw();
    const auto& rb = b.raw();
    for (std::size_t i = 0; i < ra.size(); ++i) inter += (ra[i] && rb[i]);
    return 2.0 * static_cast<double>(inter) /
           static_cast<double>(a.foreground_count() + b.foreground_count());
}

inline SurfaceSet extract_surface(const MaskVolume& m) {
    SurfaceSet s;
    s.geometry = m.geometry();
    const auto [nx, ny, nz] = m.geometry().dims;
    for (std::int64_t z = 0; z < nz; ++z)
        for (std::int64_t y = 0; y < ny; ++y)
            for (std::int64_t x = 0; x < nx; ++x) {
                if (!m.at(x, y, z)) continue;
                bool boundary = x == 0 || x == nx - 1 || y == 0 || y == ny - 1 || z == 0 ||
                                z == nz - 1 || !m.at(x - 1, y, z) || !m.at(x + 1, y, z) ||
                                !m.at(x, y - 1, z) || !m.at(x, y + 1, z) ||
                                !m.at(x, y, z - 1) || !m.at(x, y, z + 1);
                if (boundary) s.points.push_back({x, y, z});
            }
    return s;
}

namespace detail {

// 1D squared-distance transform, samples at positions i*step. Lower envelope
// of parabolas; infinite entries contribute no parabola. Coordinates are
// anchored at the first finite entry so a shifted pattern computes
// bit-identically (translation invariance of HD is exact, not approximate).
inline void dt1d(double* f, std::int64_t n, std::int64_t stride, double step,
                 std::vector<std::int64_t>& v, std::vector<double>& zb,
                 std::vector<double>& out) {
    const double inf = std::numeric_limits<double>::infinity();
    std::int64_t q0 = -1;
    for (std::int64_t q = 0; q < n; ++q)
        if (f[q * stride] != inf) {
            q0 = q;
            break;
        }
    if (q0 < 0) return;  // all infinite, nothing to propagate

    auto pos = [&](std::int64_t i) { return static_cast<double>(i - q0) * step; };
    std::int64_t k = -1;
    for (std::int64_t q = q0; q < n; ++q) {
        double fq = f[q * stride];
        if (fq == inf) continue;
        double xq = pos(q);
        while (k >= 0) {
            double xv = pos(v[k]);
            double s = ((fq + xq * xq) - (f[v[k] * stride] + xv * xv)) / (2.0 * (xq - xv));
            if (s <= zb[k])
                --k;
            else
                break;
        }
        ++k;
        v[k] = q;
        if (k == 0) {
            zb[k] = -inf;
        } else {
            double xv = pos(v[k - 1]);
            zb[k] = ((fq + xq * xq) - (f[v[k - 1] * stride] + xv * xv)) / (2.0 * (xq - xv));
        }
        zb[k + 1] = inf;
    }

    std::int64_t j = 0;
    for (std::int64_t q = 0; q < n; ++q) {
        double xq = pos(q);
        while (zb[j + 1] < xq) ++j;
        double xv = pos(v[j]);
        out[q] = (xq - xv) * (xq - xv) + f[v[j] * stride];
    }
    for (std::int64_t q = 0; q < n; ++q) f[q * stride] = out[q];
}

} // namespace detail

/// Exact anisotropic Euclidean distance transform via separable per-axis
/// lower-envelope passes over squared distances.
inline DistanceField distance_transform(const SurfaceSet& seeds, const GridGeometry& geometry) {
    if (seeds.empty())
        throw EmptySeeds("distance_transform requires nonempty seeds");
    geometry.validate();
    const auto [nx, ny, nz] = geometry.dims;
    const auto [sx, sy, sz] = geometry.spacing_mm;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> f(static_cast<std::size_t>(nx * ny * nz), inf);
    for (const auto& p : seeds.points)
        f[static_cast<std::size_t>(p[0] + nx * (p[1] + ny * p[2]))] = 0.0;

    std::int64_t nmax = std::max({nx, ny, nz});
    std::vector<std::int64_t> v(static_cast<std::size_t>(nmax));
    std::vector<double> zb(static_cast<std::size_t>(nmax + 1));
    std::vector<double> out(static_cast<std::size_t>(nmax));

    for (std::int64_t z = 0; z < nz; ++z)            // x pass
        for (std::int64_t y = 0; y < ny; ++y)
            detail::dt1d(f.data() + nx * (y + ny * z), nx, 1, sx, v, zb, out);
    for (std::int64_t z = 0; z < nz; ++z)            // y pass
        for (std::int64_t x = 0; x < nx; ++x)
            detail::dt1d(f.data() + x + nx * ny * z, ny, nx, sy, v, zb, out);
    for (std::int64_t y = 0; y < ny; ++y)            // z pass
        for (std::int64_t x = 0; x < nx; ++x)
            detail::dt1d(f.data() + x + nx * y, nz, nx * ny, sz, v, zb, out);

    DistanceField field;
    field.geometry = geometry;
    field.values.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) field.values[i] = std::sqrt(f[i]);
    return field;
}

/// h(from, to) = max over `from` surface points of the distance to the
/// nearest `to` surface point, read off the precomputed field.
inline double directed_hausdorff(const SurfaceSet& from, const DistanceField& to_field) {
    if (from.empty())
        throw EmptySurface("directed_hausdorff requires nonempty source surface");
    if (!from.geometry.compatible_with(to_field.geometry))
        throw GeometryMismatch("directed_hausdorff: surface and field geometry differ");
    double best = 0.0;
    for (const auto& p : from.points)
        best = std::max(best, to_field.at(p[0], p[1], p[2]));
    return best;
}

struct HausdorffResult {
    double a_to_b_mm = 0.0;
    double b_to_a_mm = 0.0;
    double hd_mm = 0.0;
    PairFlag flag = PairFlag::Ok;
};

/// Symmetric Hausdorff = max of the two directed distances, in mm between
/// surface voxel centers. Either mask empty -> infinite sentinel.
inline HausdorffResult hausdorff(const MaskVolume& a, const MaskVolume& b) {
    HausdorffResult r;
    r.flag = validate_pair(a, b);
    if (r.flag != PairFlag::Ok) {
        r.a_to_b_mm = r.b_to_a_mm = r.hd_mm = kInfiniteDistance;
        return r;
    }
    SurfaceSet sa = extract_surface(a);
    SurfaceSet sb = extract_surface(b);
    DistanceField da = distance_transform(sa, a.geometry());
    DistanceField db = distance_transform(sb, b.geometry());
    r.a_to_b_mm = directed_hausdorff(sa, db);
    r.b_to_a_mm = directed_hausdorff(sb, da);
    r.hd_mm = std::max(r.a_to_b_mm, r.b_to_a_mm);
    return r;
}

/// Maximal 26-connected foreground components, labeled by ascending minimal
/// linear index.
inline std::vector<MaskVolume> connected_components(const MaskVolume& m) {
    const auto [nx, ny, nz] = m.geometry().dims;
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(m.size()), 0);
    std::vector<MaskVolume> comps;
    std::vector<std::int64_t> stack;
    for (std::int64_t start = 0; start < m.size(); ++start) {
        if (!m.at(start) || visited[static_cast<std::size_t>(start)]) continue;
        std::vector<std::uint8_t> comp(static_cast<std::size_t>(m.size()), 0);
        stack.clear();
        stack.push_back(start);
        visited[static_cast<std::size_t>(start)] = 1;
        while (!stack.empty()) {
            std::int64_t i = stack.back();
            stack.pop_back();
            comp[static_cast<std::size_t>(i)] = 1;
            auto [x, y, z] = m.coords_of(i);
            for (std::int64_t dz = -1; dz <= 1; ++dz)
                for (std::int64_t dy = -1; dy <= 1; ++dy)
                    for (std::int64_t dx = -1; dx <= 1; ++dx) {
                        if (!dx && !dy && !dz) continue;
                        std::int64_t X = x + dx, Y = y + dy, Z = z + dz;
                        if (X < 0 || X >= nx || Y < 0 || Y >= ny || Z < 0 || Z >= nz) continue;
                        std::int64_t j = m.index_of(X, Y, Z);
                        if (m.at(j) && !visited[static_cast<std::size_t>(j)]) {
                            visited[static_cast<std::size_t>(j)] = 1;
                            stack.push_back(j);
                        }
                    }
        }
        comps.emplace_back(m.geometry(), std::move(comp));
    }
    return comps;
}

/// Full metric bundle for one prediction/ground-truth pair.
inline MetricResult evaluate_metrics(const MaskVolume& pred, const MaskVolume& gt) {
    MetricResult r;
    r.flag = validate_pair(pred, gt);
    r.dice = dice(pred, gt);
    r.pred_volume_mm3 = pred.volume_mm3();
    r.gt_volume_mm3 = gt.volume_mm3();

    DistanceField gt_field;
    bool have_gt_field = false;
    if (r.flag == PairFlag::Ok) {
        SurfaceSet sp = extract_surface(pred);
        SurfaceSet sg = extract_surface(gt);
        gt_field = distance_transform(sg, gt.geometry());
        have_gt_field = true;
        DistanceField pred_field = distance_transform(sp, pred.geometry());
        r.hd_pred_to_gt_mm = directed_hausdorff(sp, gt_field);
        r.hd_gt_to_pred_mm = directed_hausdorff(sg, pred_field);
        r.hd_mm = std::max(r.hd_pred_to_gt_mm, r.hd_gt_to_pred_mm);
    } else {
        r.hd_pred_to_gt_mm = r.hd_gt_to_pred_mm = r.hd_mm = kInfiniteDistance;
    }

    auto comps = connected_components(pred);
    int id = 0;
    for (const auto& c : comps) {
        ComponentInfo info;
        info.component_id = id++;
        info.voxel_count = c.foreground_count();
        if (have_gt_field) {
            double best = kInfiniteDistance;
            for (const auto& p : extract_surface(c).points)
                best = std::min(best, gt_field.at(p[0], p[1], p[2]));
            info.min_distance_to_gt_mm = best;
        } else {
            info.min_distance_to_gt_mm = kInfiniteDistance;
        }
        r.components.push_back(info);
    }
    return r;
}

} // namespace oarqa

#endif // OARQA_METRICS_HPP

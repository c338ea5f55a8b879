#ifndef OARQA_SYNTH_HPP
#define OARQA_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "oarqa/classifier.hpp"
#include "oarqa/errors.hpp"
#include "oarqa/geometry.hpp"
#include "oarqa/metrics.hpp"

namespace oarqa {
namespace synth {

// Analytic base shapes. A voxel is foreground iff its center lies inside.
struct Sphere {
    std::array<double, 3> center_mm;
    double radius_mm;
};
struct Cuboid {
    std::array<double, 3> min_corner_mm;
    std::array<double, 3> max_corner_mm;
};
using BaseShape = std::variant<Sphere, Cuboid>;

// Corruptions applied to the prediction copy.
struct NoCorruption {};
struct Erode {
    int voxels;
};
struct Dilate {
    int voxels;
};
struct AddBlob {
    std::array<double, 3> center_mm;
    double radius_mm;
};
struct DeleteSlabs {
    std::int64_t z_begin;  // [z_begin, z_end) voxel slices cleared
    std::int64_t z_end;
};
struct Translate {
    std::array<std::int64_t, 3> offset_voxels;
};
using Corruption =
    std::variant<NoCorruption, Erode, Dilate, AddBlob, DeleteSlabs, Translate>;

struct PhantomSpec {
    GridGeometry geometry;
    BaseShape base_shape;
    Corruption corruption;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::array<double, 3> voxel_center_mm(const GridGeometry& g, std::int64_t x,
                                             std::int64_t y, std::int64_t z) {
    return {static_cast<double>(x) * g.spacing_mm[0], static_cast<double>(y) * g.spacing_mm[1],
            static_cast<double>(z) * g.spacing_mm[2]};
}

inline bool inside(const BaseShape& s, const std::array<double, 3>& p) {
    if (std::holds_alternative<Sphere>(s)) {
        const auto& sp = std::get<Sphere>(s);
        double d2 = 0;
        for (int a = 0; a < 3; ++a) {
            double d = p[a] - sp.center_mm[a];
            d2 += d * d;
        }
        return d2 <= sp.radius_mm * sp.radius_mm;
    }
    const auto& c = std::get<Cuboid>(s);
    for (int a = 0; a < 3; ++a)
        if (p[a] < c.min_corner_mm[a] || p[a] > c.max_corner_mm[a]) return false;
    return true;
}

inline std::vector<std::uint8_t> rasterize(const GridGeometry& g, const BaseShape& s) {
    std::vector<std::uint8_t> v(static_cast<std::size_t>(g.voxel_count()), 0);
    std::size_t i = 0;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
        for (std::int64_t y = 0; y < g.dims[1]; ++y)
            for (std::int64_t x = 0; x < g.dims[0]; ++x, ++i)
                v[i] = inside(s, voxel_center_mm(g, x, y, z));
    return v;
}

// 6-neighborhood morphology, k iterations.
inline void morph(std::vector<std::uint8_t>& v, const GridGeometry& g, int k, bool dilate) {
    const auto [nx, ny, nz] = g.dims;
    for (int it = 0; it < k; ++it) {
        std::vector<std::uint8_t> out(v.size());
        std::size_t i = 0;
        for (std::int64_t z = 0; z < nz; ++z)
            for (std::int64_t y = 0; y < ny; ++y)
                for (std::int64_t x = 0; x < nx; ++x, ++i) {
                    auto nb = [&](std::int64_t X, std::int64_t Y, std::int64_t Z) -> bool {
                        if (X < 0 || X >= nx || Y < 0 || Y >= ny || Z < 0 || Z >= nz)
                            return false;
                        return v[static_cast<std::size_t>(X + nx * (Y + ny * Z))] != 0;
                    };
                    bool any = v[i] || nb(x - 1, y, z) || nb(x + 1, y, z) || nb(x, y - 1, z) ||
                               nb(x, y + 1, z) || nb(x, y, z - 1) || nb(x, y, z + 1);
                    bool all = v[i] && nb(x - 1, y, z) && nb(x + 1, y, z) && nb(x, y - 1, z) &&
                               nb(x, y + 1, z) && nb(x, y, z - 1) && nb(x, y, z + 1);
                    out[i] = dilate ? any : all;
                }
        v.swap(out);
    }
}

inline void check_shape_in_bounds(const GridGeometry& g, const BaseShape& s) {
    auto extent = [&](int a) { return static_cast<double>(g.dims[a] - 1) * g.spacing_mm[a]; };
    if (std::holds_alternative<Sphere>(s)) {
        const auto& sp = std::get<Sphere>(s);
        for (int a = 0; a < 3; ++a)
            if (sp.center_mm[a] - sp.radius_mm < 0.0 ||
                sp.center_mm[a] + sp.radius_mm > extent(a))
                throw SpecOutOfBounds("sphere exceeds grid along axis " + std::to_string(a));
    } else {
        const auto& c = std::get<Cuboid>(s);
        for (int a = 0; a < 3; ++a)
            if (c.min_corner_mm[a] < 0.0 || c.max_corner_mm[a] > extent(a) ||
                c.min_corner_mm[a] > c.max_corner_mm[a])
                throw SpecOutOfBounds("cuboid exceeds grid along axis " + std::to_string(a));
    }
}

} // namespace detail

struct PhantomPair {
    MaskVolume pred;
    MaskVolume gt;
};

/// Deterministic phantom pair: gt is the rasterized base shape, pred the
/// corrupted copy.
inline PhantomPair generate_pair(const PhantomSpec& spec) {
    spec.geometry.validate();
    detail::check_shape_in_bounds(spec.geometry, spec.base_shape);
    auto gt_vox = detail::rasterize(spec.geometry, spec.base_shape);
    auto pred_vox = gt_vox;
    const auto& g = spec.geometry;

    if (std::holds_alternative<Erode>(spec.corruption)) {
        detail::morph(pred_vox, g, std::get<Erode>(spec.corruption).voxels, false);
    } else if (std::holds_alternative<Dilate>(spec.corruption)) {
        detail::morph(pred_vox, g, std::get<Dilate>(spec.corruption).voxels, true);
    } else if (std::holds_alternative<AddBlob>(spec.corruption)) {
        const auto& b = std::get<AddBlob>(spec.corruption);
        Sphere blob{b.center_mm, b.radius_mm};
        detail::check_shape_in_bounds(g, BaseShape{blob});
        std::size_t i = 0;
        for (std::int64_t z = 0; z < g.dims[2]; ++z)
            for (std::int64_t y = 0; y < g.dims[1]; ++y)
                for (std::int64_t x = 0; x < g.dims[0]; ++x, ++i)
                    if (detail::inside(BaseShape{blob}, detail::voxel_center_mm(g, x, y, z)))
                        pred_vox[i] = 1;
    } else if (std::holds_alternative<DeleteSlabs>(spec.corruption)) {
        const auto& d = std::get<DeleteSlabs>(spec.corruption);
        if (d.z_begin < 0 || d.z_end > g.dims[2] || d.z_begin > d.z_end)
            throw SpecOutOfBounds("DeleteSlabs z-range outside grid");
        for (std::int64_t z = d.z_begin; z < d.z_end; ++z)
            std::fill(pred_vox.begin() + z * g.dims[0] * g.dims[1],
                      pred_vox.begin() + (z + 1) * g.dims[0] * g.dims[1], 0);
    } else if (std::holds_alternative<Translate>(spec.corruption)) {
        const auto& t = std::get<Translate>(spec.corruption);
        std::vector<std::uint8_t> out(pred_vox.size(), 0);
        std::size_t i = 0;
        for (std::int64_t z = 0; z < g.dims[2]; ++z)
            for (std::int64_t y = 0; y < g.dims[1]; ++y)
                for (std::int64_t x = 0; x < g.dims[0]; ++x, ++i) {
                    if (!pred_vox[i]) continue;
                    std::int64_t X = x + t.offset_voxels[0];
                    std::int64_t Y = y + t.offset_voxels[1];
                    std::int64_t Z = z + t.offset_voxels[2];
                    if (X < 0 || X >= g.dims[0] || Y < 0 || Y >= g.dims[1] || Z < 0 ||
                        Z >= g.dims[2])
                        throw SpecOutOfBounds("Translate moves foreground outside grid");
                    out[static_cast<std::size_t>(X + g.dims[0] * (Y + g.dims[1] * Z))] = 1;
                }
        pred_vox.swap(out);
    }

    return PhantomPair{MaskVolume(g, std::move(pred_vox)), MaskVolume(g, std::move(gt_vox))};
}

// ---- Brute-force reference oracles (small volumes only) ----

inline constexpr std::int64_t kOracleMaxVoxelsPerAxis = 32;

inline void check_oracle_size(const MaskVolume& m) {
    for (int a = 0; a < 3; ++a)
        if (m.geometry().dims[a] > kOracleMaxVoxelsPerAxis)
            throw VolumeTooLargeForOracle("oracle limited to <= 32 voxels per axis");
}

inline double oracle_dice(const MaskVolume& a, const MaskVolume& b) {
    check_oracle_size(a);
    check_oracle_size(b);
    if (!a.geometry().compatible_with(b.geometry()))
        throw GeometryMismatch("oracle_dice geometry mismatch");
    std::int64_t inter = 0, ca = 0, cb = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        ca += a.at(i);
        cb += b.at(i);
        inter += a.at(i) && b.at(i);
    }
    if (ca + cb == 0) return 1.0;
    if (ca == 0 || cb == 0) return 0.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

namespace detail {

// Exhaustive boundary scan, independent of the metrics-module surface code.
inline std::vector<std::array<double, 3>> surface_points_mm(const MaskVolume& m) {
    std::vector<std::array<double, 3>> pts;
    const auto [nx, ny, nz] = m.geometry().dims;
    for (std::int64_t z = 0; z < nz; ++z)
        for (std::int64_t y = 0; y < ny; ++y)
            for (std::int64_t x = 0; x < nx; ++x) {
                if (!m.at(x, y, z)) continue;
                auto bg = [&](std::int64_t X, std::int64_t Y, std::int64_t Z) {
                    if (X < 0 || X >= nx || Y < 0 || Y >= ny || Z < 0 || Z >= nz) return true;
                    return !m.at(X, Y, Z);
                };
                if (bg(x - 1, y, z) || bg(x + 1, y, z) || bg(x, y - 1, z) || bg(x, y + 1, z) ||
                    bg(x, y, z - 1) || bg(x, y, z + 1))
                    pts.push_back(voxel_center_mm(m.geometry(), x, y, z));
            }
    return pts;
}

inline double directed_max_min(const std::vector<std::array<double, 3>>& from,
                               const std::vector<std::array<double, 3>>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            double d2 = 0;
            for (int a = 0; a < 3; ++a) {
                double d = p[a] - q[a];
                d2 += d * d;
            }
            best = std::min(best, d2);
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

} // namespace detail

/// All-pairs symmetric Hausdorff over surface voxel centers, mm.
inline double oracle_hausdorff(const MaskVolume& a, const MaskVolume& b) {
    check_oracle_size(a);
    check_oracle_size(b);
    if (!a.geometry().compatible_with(b.geometry()))
        throw GeometryMismatch("oracle_hausdorff geometry mismatch");
    auto pa = detail::surface_points_mm(a);
    auto pb = detail::surface_points_mm(b);
    if (pa.empty() || pb.empty()) return kInfiniteDistance;
    return std::max(detail::directed_max_min(pa, pb), detail::directed_max_min(pb, pa));
}

inline double oracle_directed_hausdorff(const MaskVolume& from, const MaskVolume& to) {
    check_oracle_size(from);
    check_oracle_size(to);
    auto pf = detail::surface_points_mm(from);
    auto pt = detail::surface_points_mm(to);
    if (pf.empty() || pt.empty()) return kInfiniteDistance;
    return detail::directed_max_min(pf, pt);
}

// ---- Labeled corpus construction ----

struct LabeledPhantom {
    std::string case_id;
    std::string organ;
    PhantomSpec spec;
    VerdictCategory expected_category = VerdictCategory::Good;
};

/// Generate the pair and verify by running the real metrics and classifier
/// that the corruption produced its intended category. Mislabeled specs are
/// rejected rather than emitted.
inline PhantomPair generate_verified(const LabeledPhantom& lp, const OrganThresholds& t) {
    PhantomPair pair = generate_pair(lp.spec);
    MetricResult m = evaluate_metrics(pair.pred, pair.gt);
    CaseVerdict v = classify(m, t, m.flag);
    if (v.category != lp.expected_category)
        throw SpecOutOfBounds("phantom '" + lp.case_id + "' lands in " +
                              std::string(to_string(v.category)) + ", expected " +
                              to_string(lp.expected_category) + " (dice=" +
                              std::to_string(m.dice) + ", hd=" + std::to_string(m.hd_mm) + ")");
    return pair;
}

/// 20 labeled phantoms per organ: clean cases plus corruptions tuned per
/// organ so each lands in its intended verdict band.
inline std::vector<LabeledPhantom> default_corpus() {
    std::vector<LabeledPhantom> out;
    struct OrganPlan {
        const char* organ;
        double radius_mm;            // base sphere radius
        double z_spacing_mm;         // slice thickness
        std::int64_t nz;             // slice count
        int erode_voxels;            // Underseg strength (0 = not achievable)
        std::int64_t slab_frac_pct;  // DeleteSlabs share of z extent, MixedFailure
    };
    // Most organs: spacing (1,1,2) mm, 120 slices -> 238 mm of z, enough room
    // past the sphere for a blob beyond the 100 mm far threshold.
    // Chiasma is small and its near threshold is 3.4 mm, so it gets 1 mm
    // slices and a deeper relative erosion.
    // LymphNode's 0.5 mm near threshold cannot coexist with a large dice drop
    // on a voxel grid, so its erosions are labeled MixedFailure instead of
    // Underseg.
    const std::vector<OrganPlan> plans = {
        {"Breast", 16.0, 2.0, 120, 2, 45},  {"LymphNode", 16.0, 2.0, 120, 0, 60},
        {"Femur", 16.0, 2.0, 120, 2, 45},   {"Trachea", 16.0, 2.0, 120, 2, 70},
        {"Chiasma", 6.0, 1.0, 224, 3, 70},  {"Brainstem", 16.0, 2.0, 120, 3, 55},
    };

    for (const auto& plan : plans) {
        GridGeometry g;
        g.dims = {72, 72, plan.nz};
        g.spacing_mm = {1.0, 1.0, plan.z_spacing_mm};
        const std::array<double, 3> center{36.0, 36.0, 60.0};
        const Sphere base{center, plan.radius_mm};
        const std::string organ = plan.organ;
        int n = 0;
        auto add = [&](Corruption c, VerdictCategory expect) {
            LabeledPhantom lp;
            lp.case_id = normalize_organ(organ) + "_" + std::to_string(n++);
            lp.organ = organ;
            lp.spec = PhantomSpec{g, base, c, 0};
            lp.expected_category = expect;
            out.push_back(lp);
        };

        // 8 clean
        for (int i = 0; i < 8; ++i) add(NoCorruption{}, VerdictCategory::Good);
        // 3 near over-segmentation: small blob ~40 mm past the surface,
        // inside (hd_near, hd_far] for every organ in the registry
        for (int i = 0; i < 3; ++i) {
            double gap = 38.0 + 2.0 * i;
            AddBlob blob{{center[0], center[1], center[2] + plan.radius_mm + gap + 3.0}, 3.0};
            add(blob, VerdictCategory::OversegNear);
        }
        // 3 far over-segmentation: blob > 100 mm past the surface
        for (int i = 0; i < 3; ++i) {
            double gap = 108.0 + 4.0 * i;
            AddBlob blob{{center[0], center[1], center[2] + plan.radius_mm + gap + 3.0}, 3.0};
            add(blob, VerdictCategory::OversegFar);
        }
        // 3 under-segmentation (surface distances stay small, dice collapses)
        if (plan.erode_voxels > 0) {
            for (int i = 0; i < 3; ++i) add(Erode{plan.erode_voxels}, VerdictCategory::Underseg);
        } else {
            for (int i = 0; i < 3; ++i) add(Erode{2}, VerdictCategory::MixedFailure);
        }
        // 2 mixed failures: big slab deletion, lost surface far from remainder
        {
            std::int64_t cz = static_cast<std::int64_t>(center[2] / g.spacing_mm[2]);
            std::int64_t rz =
                static_cast<std::int64_t>(plan.radius_mm / g.spacing_mm[2]);
            std::int64_t lo = cz - rz;            // bottom slice of the sphere
            std::int64_t extent = 2 * rz + 1;
            std::int64_t cut = extent * plan.slab_frac_pct / 100;
            for (int i = 0; i < 2; ++i)
                add(DeleteSlabs{lo, lo + cut}, VerdictCategory::MixedFailure);
        }
        // 1 empty prediction
        add(DeleteSlabs{0, g.dims[2]}, VerdictCategory::EmptyPrediction);
    }
    return out;
}

} // namespace synth
} // namespace oarqa

#endif // OARQA_SYNTH_HPP

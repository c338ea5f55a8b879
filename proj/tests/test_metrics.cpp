#include <doctest.h>

#include <cmath>
#include <random>

#include "oarqa/metrics.hpp"
#include "oarqa/synth.hpp"
#include "test_util.hpp"

using namespace oarqa;

namespace {

MaskVolume cube(std::array<std::int64_t, 3> dims, std::array<double, 3> spacing,
                std::array<std::int64_t, 3> lo, std::array<std::int64_t, 3> hi) {
    std::vector<std::array<std::int64_t, 3>> on;
    for (std::int64_t z = lo[2]; z < hi[2]; ++z)
        for (std::int64_t y = lo[1]; y < hi[1]; ++y)
            for (std::int64_t x = lo[0]; x < hi[0]; ++x) on.push_back({x, y, z});
    return testutil::make_mask(dims, spacing, on);
}

} // namespace

TEST_CASE("dice: identity, disjoint, and the shifted-cube case") {
    MaskVolume a = cube({8, 8, 8}, {1, 1, 1}, {0, 0, 0}, {2, 2, 2});
    CHECK(dice(a, a) == 1.0);

    MaskVolume far = cube({8, 8, 8}, {1, 1, 1}, {5, 5, 5}, {7, 7, 7});
    CHECK(dice(a, far) == 0.0);

    // 2x2x2 cube vs same cube shifted +1 in x: overlap 4 of 8+8
    MaskVolume shifted = cube({8, 8, 8}, {1, 1, 1}, {1, 0, 0}, {3, 2, 2});
    CHECK(dice(a, shifted) == 0.5);
    CHECK(synth::oracle_dice(a, shifted) == 0.5);
}

TEST_CASE("dice empty-mask conventions") {
    MaskVolume a = cube({4, 4, 4}, {1, 1, 1}, {0, 0, 0}, {2, 2, 2});
    MaskVolume empty = testutil::make_mask({4, 4, 4}, {1, 1, 1}, {});
    CHECK(dice(empty, empty) == 1.0);
    CHECK(dice(a, empty) == 0.0);
    CHECK(dice(empty, a) == 0.0);
}

TEST_CASE("dice rejects incompatible geometry") {
    MaskVolume a = cube({4, 4, 4}, {1, 1, 1}, {0, 0, 0}, {2, 2, 2});
    MaskVolume b = cube({4, 4, 4}, {1, 1, 2}, {0, 0, 0}, {2, 2, 2});
    CHECK_THROWS_AS(dice(a, b), GeometryMismatch);
}

TEST_CASE("extract_surface: single voxel, interior cube, full grid") {
    MaskVolume single = testutil::make_mask({5, 5, 5}, {1, 1, 1}, {{2, 2, 2}});
    CHECK(extract_surface(single).points.size() == 1);

    // solid 4^3 cube inside a 10^3 grid: 4^3 - 2^3 = 56 boundary voxels
    MaskVolume c = cube({10, 10, 10}, {1, 1, 1}, {3, 3, 3}, {7, 7, 7});
    CHECK(extract_surface(c).points.size() == 56);

    // grid border counts as background: a full 3^3 grid is surface except
    // its single interior voxel
    MaskVolume full = cube({3, 3, 3}, {1, 1, 1}, {0, 0, 0}, {3, 3, 3});
    CHECK(extract_surface(full).points.size() == 26);
    MaskVolume slab = cube({3, 3, 1}, {1, 1, 1}, {0, 0, 0}, {3, 3, 1});
    CHECK(extract_surface(slab).points.size() == 9);  // every voxel touches the border

    MaskVolume empty = testutil::make_mask({3, 3, 3}, {1, 1, 1}, {});
    CHECK(extract_surface(empty).empty());
}

TEST_CASE("extract_surface points are foreground, ordered, boundary-only") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        MaskVolume m = testutil::random_mask(rng, {7, 6, 5}, {1, 1, 1}, 0.35);
        SurfaceSet s = extract_surface(m);
        std::int64_t last = -1;
        for (const auto& p : s.points) {
            CHECK(m.at(p[0], p[1], p[2]));
            std::int64_t li = m.index_of(p[0], p[1], p[2]);
            CHECK(li > last);  // ascending linear index
            last = li;
        }
        // brute-force recount
        std::size_t expected = synth::detail::surface_points_mm(m).size();
        CHECK(s.points.size() == expected);
    }
}

TEST_CASE("distance_transform: single seed, all seeds, exactness vs brute force") {
    GridGeometry g;
    g.dims = {5, 5, 5};
    g.spacing_mm = {1, 1, 2};

    SUBCASE("single seed at center") {
        MaskVolume seed = testutil::make_mask(g.dims, g.spacing_mm, {{2, 2, 2}});
        DistanceField f = distance_transform(extract_surface(seed), g);
        CHECK(f.at(2, 2, 2) == 0.0);
        CHECK(f.at(0, 0, 0) == doctest::Approx(std::sqrt(24.0)));  // sqrt(2^2+2^2+4^2)
    }
    SUBCASE("all voxels seeded -> all zeros") {
        MaskVolume full = cube(g.dims, g.spacing_mm, {0, 0, 0}, {5, 5, 5});
        SurfaceSet all;
        all.geometry = g;
        for (std::int64_t z = 0; z < 5; ++z)
            for (std::int64_t y = 0; y < 5; ++y)
                for (std::int64_t x = 0; x < 5; ++x) all.points.push_back({x, y, z});
        DistanceField f = distance_transform(all, g);
        for (double v : f.values) CHECK(v == 0.0);
        (void)full;
    }
    SUBCASE("empty seeds rejected") {
        SurfaceSet none;
        none.geometry = g;
        CHECK_THROWS_AS(distance_transform(none, g), EmptySeeds);
    }
}

TEST_CASE("EDT equals brute-force nearest-seed scan on random anisotropic grids") {
    std::mt19937 rng(9);
    for (int trial = 0; trial < 60; ++trial) {
        auto spacing = testutil::random_spacing(rng);
        MaskVolume m = testutil::random_mask(rng, {8, 8, 8}, spacing, 0.15);
        SurfaceSet seeds = extract_surface(m);
        DistanceField f = distance_transform(seeds, m.geometry());
        // independent all-pairs scan
        for (std::int64_t z = 0; z < 8; ++z)
            for (std::int64_t y = 0; y < 8; ++y)
                for (std::int64_t x = 0; x < 8; ++x) {
                    double best = std::numeric_limits<double>::infinity();
                    for (const auto& p : seeds.points) {
                        double dx = (x - p[0]) * spacing[0];
                        double dy = (y - p[1]) * spacing[1];
                        double dz = (z - p[2]) * spacing[2];
                        best = std::min(best, dx * dx + dy * dy + dz * dz);
                    }
                    best = std::sqrt(best);
                    CHECK(f.at(x, y, z) == doctest::Approx(best).epsilon(1e-9));
                    CHECK(f.at(x, y, z) <= m.geometry().diagonal_mm() * (1 + 1e-12));
                }
    }
}

TEST_CASE("directed_hausdorff: identity, anisotropic single pair, asymmetry") {
    SUBCASE("from == to -> 0") {
        MaskVolume m = cube({6, 6, 6}, {1, 1, 1}, {1, 1, 1}, {4, 4, 4});
        SurfaceSet s = extract_surface(m);
        DistanceField f = distance_transform(s, m.geometry());
        CHECK(directed_hausdorff(s, f) == 0.0);
    }
    SUBCASE("single pair under spacing (2,1,1)") {
        MaskVolume a = testutil::make_mask({5, 1, 1}, {2, 1, 1}, {{0, 0, 0}});
        MaskVolume b = testutil::make_mask({5, 1, 1}, {2, 1, 1}, {{3, 0, 0}});
        auto r = hausdorff(a, b);
        CHECK(r.hd_mm == doctest::Approx(6.0));
        CHECK(synth::oracle_hausdorff(a, b) == doctest::Approx(6.0));
    }
    SUBCASE("asymmetry: directed values differ") {
        MaskVolume from = testutil::make_mask({11, 1, 1}, {1, 1, 1}, {{0, 0, 0}, {10, 0, 0}});
        MaskVolume to = testutil::make_mask({11, 1, 1}, {1, 1, 1}, {{0, 0, 0}});
        auto r = hausdorff(from, to);
        CHECK(r.a_to_b_mm == doctest::Approx(10.0));
        CHECK(r.b_to_a_mm == 0.0);
        CHECK(r.hd_mm == doctest::Approx(10.0));
    }
    SUBCASE("empty source surface rejected") {
        GridGeometry g;
        g.dims = {3, 3, 3};
        MaskVolume seed = testutil::make_mask(g.dims, g.spacing_mm, {{1, 1, 1}});
        DistanceField f = distance_transform(extract_surface(seed), g);
        SurfaceSet none;
        none.geometry = g;
        CHECK_THROWS_AS(directed_hausdorff(none, f), EmptySurface);
    }
}

TEST_CASE("hausdorff degenerate and outlier cases") {
    MaskVolume c = cube({140, 8, 8}, {1, 1, 1}, {1, 1, 1}, {7, 7, 7});
    SUBCASE("identical masks -> zeros") {
        auto r = hausdorff(c, c);
        CHECK(r.a_to_b_mm == 0.0);
        CHECK(r.b_to_a_mm == 0.0);
        CHECK(r.hd_mm == 0.0);
        CHECK(r.flag == PairFlag::Ok);
    }
    SUBCASE("one spurious voxel 120mm away dominates") {
        auto pred_vox = c.raw();
        MaskVolume tmp = c;
        pred_vox[static_cast<std::size_t>(tmp.index_of(126, 4, 4))] = 1;  // 120mm past x=6
        MaskVolume pred(c.geometry(), std::move(pred_vox));
        auto r = hausdorff(pred, c);
        CHECK(r.a_to_b_mm == doctest::Approx(120.0));
        CHECK(r.b_to_a_mm < 10.0);
        CHECK(r.hd_mm == r.a_to_b_mm);
    }
    SUBCASE("empty prediction -> infinite sentinel") {
        MaskVolume empty = testutil::make_mask(c.geometry().dims, c.geometry().spacing_mm, {});
        auto r = hausdorff(empty, c);
        CHECK(std::isinf(r.hd_mm));
        CHECK(std::isinf(r.a_to_b_mm));
        CHECK(r.flag == PairFlag::EmptyPrediction);
    }
}

TEST_CASE("connected_components: 26-connectivity semantics") {
    SUBCASE("solid cube is one component") {
        MaskVolume c = cube({6, 6, 6}, {1, 1, 1}, {1, 1, 1}, {4, 4, 4});
        CHECK(connected_components(c).size() == 1);
    }
    SUBCASE("corner-touching voxels connect under 26-connectivity") {
        MaskVolume m = testutil::make_mask({4, 4, 4}, {1, 1, 1}, {{1, 1, 1}, {2, 2, 1}});
        CHECK(connected_components(m).size() == 1);
    }
    SUBCASE("gap >= 2 voxels separates components") {
        std::vector<std::array<std::int64_t, 3>> on;
        for (std::int64_t z = 0; z < 2; ++z)
            for (std::int64_t y = 0; y < 2; ++y)
                for (std::int64_t x = 0; x < 2; ++x) on.push_back({x, y, z});
        on.push_back({6, 6, 6});
        MaskVolume m = testutil::make_mask({8, 8, 8}, {1, 1, 1}, on);
        auto comps = connected_components(m);
        REQUIRE(comps.size() == 2);
        // labeled by ascending minimal linear index: cube first
        CHECK(comps[0].foreground_count() == 8);
        CHECK(comps[1].foreground_count() == 1);
    }
    SUBCASE("component masks partition the foreground") {
        std::mt19937 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            MaskVolume m = testutil::random_mask(rng, {6, 6, 6}, {1, 1, 1}, 0.25);
            auto comps = connected_components(m);
            std::int64_t total = 0;
            for (const auto& c : comps) total += c.foreground_count();
            CHECK(total == m.foreground_count());
        }
    }
}

TEST_CASE("evaluate_metrics bundles dice, hd, volumes, components") {
    SUBCASE("identical masks") {
        MaskVolume c = cube({8, 8, 8}, {1, 1, 2}, {2, 2, 2}, {6, 6, 6});
        MetricResult r = evaluate_metrics(c, c);
        CHECK(r.dice == 1.0);
        CHECK(r.hd_mm == 0.0);
        CHECK(r.pred_volume_mm3 == doctest::Approx(64 * 2.0));
        REQUIRE(r.components.size() == 1);
        CHECK(r.components[0].min_distance_to_gt_mm == 0.0);
        CHECK(r.hd_mm == std::max(r.hd_pred_to_gt_mm, r.hd_gt_to_pred_mm));
    }
    SUBCASE("eroded ground truth as prediction") {
        MaskVolume gt = cube({10, 10, 10}, {1, 1, 1}, {2, 2, 2}, {8, 8, 8});
        MaskVolume pred = cube({10, 10, 10}, {1, 1, 1}, {3, 3, 3}, {7, 7, 7});
        MetricResult r = evaluate_metrics(pred, gt);
        CHECK(r.dice < 1.0);
        CHECK(r.hd_gt_to_pred_mm > 0.0);
        CHECK(r.components.size() == 1);
    }
    SUBCASE("far blob's component records its gap") {
        MaskVolume gt = cube({64, 8, 8}, {1, 1, 1}, {1, 1, 1}, {5, 5, 5});
        auto vox = gt.raw();
        vox[static_cast<std::size_t>(gt.index_of(50, 2, 2))] = 1;
        MaskVolume pred(gt.geometry(), std::move(vox));
        MetricResult r = evaluate_metrics(pred, gt);
        CHECK(r.dice > 0.9);
        CHECK(r.hd_mm == doctest::Approx(46.0));  // x distance 50 -> 4
        REQUIRE(r.components.size() == 2);
        CHECK(r.components[1].voxel_count == 1);
        CHECK(r.components[1].min_distance_to_gt_mm == doctest::Approx(46.0));
        CHECK(r.components[0].min_distance_to_gt_mm == 0.0);
    }
}

TEST_CASE("metric properties over random masks vs oracles") {
    std::mt19937 rng(2024);
    int trials = 150;
    for (int t = 0; t < trials; ++t) {
        auto spacing = testutil::random_spacing(rng);
        MaskVolume a = testutil::random_mask(rng, {8, 8, 8}, spacing, 0.2);
        MaskVolume b = testutil::random_mask(rng, {8, 8, 8}, spacing, 0.2);

        double d = dice(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(d == dice(b, a));
        CHECK(d == synth::oracle_dice(a, b));

        auto h = hausdorff(a, b);
        auto hs = hausdorff(b, a);
        CHECK(h.hd_mm == hs.hd_mm);
        CHECK(h.a_to_b_mm <= h.hd_mm);
        CHECK(h.b_to_a_mm <= h.hd_mm);
        double oracle = synth::oracle_hausdorff(a, b);
        CHECK(h.hd_mm == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("translation invariance and spacing scaling") {
    std::mt19937 rng(77);
    for (int t = 0; t < 30; ++t) {
        auto spacing = testutil::random_spacing(rng);
        MaskVolume a = testutil::random_mask(rng, {6, 6, 6}, spacing, 0.3);
        MaskVolume b = testutil::random_mask(rng, {6, 6, 6}, spacing, 0.3);

        // embed both in a larger grid at offset (2,3,1)
        auto embed = [&](const MaskVolume& m, std::array<std::int64_t, 3> off) {
            GridGeometry g;
            g.dims = {12, 12, 12};
            g.spacing_mm = spacing;
            std::vector<std::uint8_t> v(static_cast<std::size_t>(g.voxel_count()), 0);
            for (std::int64_t i = 0; i < m.size(); ++i) {
                if (!m.at(i)) continue;
                auto [x, y, z] = m.coords_of(i);
                v[static_cast<std::size_t>((x + off[0]) +
                                           12 * ((y + off[1]) + 12 * (z + off[2])))] = 1;
            }
            return MaskVolume(g, std::move(v));
        };
        MaskVolume a0 = embed(a, {0, 0, 0});
        MaskVolume b0 = embed(b, {0, 0, 0});
        MaskVolume a1 = embed(a, {2, 3, 1});
        MaskVolume b1 = embed(b, {2, 3, 1});
        CHECK(dice(a0, b0) == dice(a1, b1));
        CHECK(hausdorff(a0, b0).hd_mm == hausdorff(a1, b1).hd_mm);

        // scale all spacing components by s: hd scales by s, dice unchanged
        double s = 2.5;
        GridGeometry gs;
        gs.dims = a.geometry().dims;
        gs.spacing_mm = {spacing[0] * s, spacing[1] * s, spacing[2] * s};
        MaskVolume as(gs, std::vector<std::uint8_t>(a.raw()));
        MaskVolume bs(gs, std::vector<std::uint8_t>(b.raw()));
        CHECK(dice(as, bs) == dice(a, b));
        CHECK(hausdorff(as, bs).hd_mm == doctest::Approx(hausdorff(a, b).hd_mm * s).epsilon(1e-12));
    }
}

TEST_CASE("triangle inequality on random nonempty triples") {
    std::mt19937 rng(13);
    for (int t = 0; t < 100; ++t) {
        auto spacing = testutil::random_spacing(rng);
        MaskVolume a = testutil::random_mask(rng, {7, 7, 7}, spacing, 0.25);
        MaskVolume b = testutil::random_mask(rng, {7, 7, 7}, spacing, 0.25);
        MaskVolume c = testutil::random_mask(rng, {7, 7, 7}, spacing, 0.25);
        double ab = hausdorff(a, b).hd_mm;
        double bc = hausdorff(b, c).hd_mm;
        double ac = hausdorff(a, c).hd_mm;
        CHECK(ac <= ab + bc + 1e-9);
    }
}

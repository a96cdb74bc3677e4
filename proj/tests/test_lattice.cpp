#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ris/lattice.hpp"
#include "ris/rng.hpp"

using namespace ris;

namespace {

// Brute-force oracle: enumerate a centered box and keep strict-norm members.
std::vector<Point> brute_ball(const Point& c, double radius) {
    std::vector<Point> out;
    const int lim = static_cast<int>(std::floor(radius)) + 1;
    for (int x = -lim; x <= lim; ++x)
        for (int y = -lim; y <= lim; ++y)
            for (int z = -lim; z <= lim; ++z) {
                Point p{c.c[0] + x, c.c[1] + y, c.c[2] + z};
                if (static_cast<double>(dist2(p, c)) < radius * radius - 1e-9) out.push_back(p);
            }
    std::sort(out.begin(), out.end());
    return out;
}

SiteSet random_set(RngStream& rng, int n, int span) {
    std::vector<Point> pts;
    while (static_cast<int>(pts.size()) < n) {
        Point p{static_cast<std::int32_t>(rng.uniform_int(2 * span + 1)) - span,
                static_cast<std::int32_t>(rng.uniform_int(2 * span + 1)) - span,
                static_cast<std::int32_t>(rng.uniform_int(2 * span + 1)) - span};
        pts.push_back(p);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    }
    return SiteSet::from_points(std::move(pts));
}

} // namespace

TEST_SUITE_BEGIN("lattice");

TEST_CASE("set_distance basics") {
    auto A = SiteSet::from_points({Point{0, 0, 0}});
    auto B = SiteSet::from_points({Point{5, 0, 0}});
    CHECK(set_distance(A, B) == doctest::Approx(5.0));
    CHECK(set_distance(A, A) == doctest::Approx(0.0));
    auto C = SiteSet::from_points({Point{0, 0, 0}, Point{1, 0, 0}});
    auto D = SiteSet::from_points({Point{4, 3, 0}});
    CHECK(set_distance(C, D) == doctest::Approx(std::sqrt(18.0)));
    CHECK_THROWS_AS(set_distance(SiteSet{}, A), ValidationError);
}

TEST_CASE("set_diameter basics") {
    CHECK(set_diameter(SiteSet::from_points({Point{0, 0, 0}})) == doctest::Approx(0.0));
    CHECK(set_diameter(SiteSet::from_points({Point{0, 0, 0}, Point{1, 0, 0}, Point{0, 1, 0}})) ==
          doctest::Approx(std::sqrt(2.0)));
    CHECK(set_diameter(SiteSet::from_points({Point{0, 0, 0}, Point{3, 4, 0}})) == doctest::Approx(5.0));
    CHECK_THROWS_AS(set_diameter(SiteSet{}), ValidationError);
}

TEST_CASE("ball matches brute-force enumeration") {
    CHECK(ball(Point{0, 0, 0}, 1.0).size() == 1);
    CHECK(ball(Point{0, 0, 0}, 1.5).size() == 19);
    CHECK(ball(Point{0, 0, 0}, 2.0).size() == static_cast<int>(brute_ball(Point{0, 0, 0}, 2.0).size()));
    for (double r : {1.2, 2.0, 2.5, 3.9, 5.0}) {
        const auto got = ball(Point{1, -2, 3}, r);
        const auto want = brute_ball(Point{1, -2, 3}, r);
        REQUIRE(got.size() == static_cast<int>(want.size()));
        for (int i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
    }
    CHECK_THROWS_AS(ball(Point{0, 0, 0}, 0.0), ValidationError);
    CHECK_THROWS_AS(ball(Point{0, 0, 0}, -2.0), ValidationError);
}

TEST_CASE("boundaries: examples") {
    // singleton
    auto s = SiteSet::from_points({Point{0, 0, 0}});
    CHECK(internal_boundary(s).size() == 1);
    CHECK(external_boundary(s).size() == 6);
    // 3x3x3 cube: everything but the center
    std::vector<Point> cube;
    for (int x = -1; x <= 1; ++x)
        for (int y = -1; y <= 1; ++y)
            for (int z = -1; z <= 1; ++z) cube.push_back(Point{x, y, z});
    auto c = SiteSet::from_points(cube);
    CHECK(internal_boundary(c).size() == 26);
    CHECK_FALSE(internal_boundary(c).contains(Point{0, 0, 0}));
    // two adjacent points
    auto two = SiteSet::from_points({Point{0, 0, 0}, Point{1, 0, 0}});
    CHECK(external_boundary(two).size() == 10);
    // empty set
    CHECK(internal_boundary(SiteSet{}).empty());
    CHECK(external_boundary(SiteSet{}).empty());
}

TEST_CASE("boundary properties on random sets") {
    RngStream rng(2024, 0);
    for (int rep = 0; rep < 40; ++rep) {
        const SiteSet A = random_set(rng, 1 + static_cast<int>(rng.uniform_int(30)), 4);
        const SiteSet ib = internal_boundary(A);
        const SiteSet eb = external_boundary(A);
        for (const auto& p : ib) CHECK(A.contains(p));
        for (const auto& p : eb) CHECK_FALSE(A.contains(p));
        // translation equivariance
        const Point v{3, -7, 11};
        CHECK(internal_boundary(A.translated(v)).serialize() == ib.translated(v).serialize());
        CHECK(external_boundary(A.translated(v)).serialize() == eb.translated(v).serialize());
        CHECK(set_diameter(A.translated(v)) == doctest::Approx(set_diameter(A)));
    }
}

TEST_CASE("make_configuration: valid miniature scene") {
    auto K1 = SiteSet::from_points({Point{0, 0, 0}});
    const Configuration cfg = make_configuration(K1, Point{9, 0, 0}, 1.0);
    CHECK(cfg.R == doctest::Approx(4.0));
    CHECK(cfg.delta == doctest::Approx(0.25));
    CHECK(cfg.K2.contains(Point{9, 0, 0}));
    CHECK(cfg.K.size() == 2);
    CHECK(cfg.bK.size() == 2);
    // shells disjoint, sites of each shell outside V_R and adjacent to it
    for (const auto& y : cfg.beVR) {
        CHECK_FALSE(cfg.in_VR(y));
        bool adj = false;
        for (int k = 0; k < 6; ++k) adj = adj || cfg.in_VR(y.neighbour(k));
        CHECK(adj);
    }
    // K1 inside the first ball, K2 inside the second
    for (const auto& p : cfg.K1) CHECK(cfg.ball1.contains(p));
    for (const auto& p : cfg.K2) CHECK(cfg.ball2.contains(p));
    // dist <= 3R
    CHECK(set_distance(cfg.K1, cfg.K2) <= 3.0 * cfg.R + 1e-12);
}

TEST_CASE("make_configuration: examples and failures") {
    auto K1 = SiteSet::from_points({Point{0, 0, 0}});
    CHECK_THROWS_AS(make_configuration(K1, Point{2, 0, 0}, 1.0), ValidationError);
    CHECK_THROWS_AS(make_configuration(K1, Point{9, 0, 0}, 0.0), ValidationError);
    CHECK_THROWS_AS(make_configuration(K1, Point{9, 0, 0}, -1.0), ValidationError);
    auto off = SiteSet::from_points({Point{1, 0, 0}});
    CHECK_THROWS_AS(make_configuration(off, Point{9, 0, 0}, 1.0), ValidationError); // origin not in K1

    auto pair = SiteSet::from_points({Point{0, 0, 0}, Point{1, 0, 0}});
    const Configuration cfg = make_configuration(pair, Point{11, 0, 0}, 0.5);
    CHECK(cfg.R == doctest::Approx(5.0));
    CHECK(cfg.delta == doctest::Approx(0.2));
    // diam = 1: need ||xhat|| >= 7
    CHECK_THROWS_AS(make_configuration(pair, Point{6, 0, 0}, 0.5), ValidationError);
    CHECK_NOTHROW(make_configuration(pair, Point{7, 0, 0}, 0.5));
}

TEST_CASE("even axis separation leaves the shells overlapping and is rejected") {
    auto K1 = SiteSet::from_points({Point{0, 0, 0}});
    CHECK_THROWS_WITH_AS(make_configuration(K1, Point{16, 0, 0}, 1.0),
                         doctest::Contains("external boundaries"), ValidationError);
}

TEST_CASE("scene ball membership uses exact arithmetic") {
    const Configuration cfg = make_configuration(SiteSet::from_points({Point{0, 0, 0}}), Point{9, 0, 0}, 1.0);
    // R = 4 exactly: norm-16 sites are outside, norm < 16 inside
    CHECK_FALSE(cfg.ball1.contains(Point{4, 0, 0}));
    CHECK(cfg.ball1.contains(Point{3, 2, 1})); // norm2 = 14 < 16
    CHECK_FALSE(cfg.ball1.contains(Point{0, 4, 0}));
    // non-square separation: R irrational, membership still exact
    const auto irr = BallRegion::scene(Point::zero(3), 98); // R = (sqrt(98)-1)/2
    const double R2 = irr.radius;
    auto sites = irr.enumerate();
    for (const auto& p : sites) CHECK(p.norm() < R2 + 1e-12);
    // count must match a double-precision enumeration of the same radius
    CHECK(static_cast<int>(sites.size()) == static_cast<int>(brute_ball(Point{0, 0, 0}, R2).size()));
}

TEST_CASE("exact dyadic radius comparison at the boundary") {
    CHECK(lt_radius2(2, 1.5));        // 2 < 2.25
    CHECK_FALSE(lt_radius2(3, 1.5));  // 3 > 2.25
    CHECK_FALSE(lt_radius2(4, 2.0));  // exact equality is not inside
    CHECK(lt_radius2(3, 2.0));
}

TEST_CASE("site set serialization round-trip") {
    RngStream rng(77, 1);
    for (int rep = 0; rep < 20; ++rep) {
        const SiteSet A = random_set(rng, 1 + static_cast<int>(rng.uniform_int(40)), 9);
        const SiteSet B = SiteSet::deserialize(A.serialize(), 3);
        REQUIRE(B.size() == A.size());
        for (int i = 0; i < A.size(); ++i) CHECK(A[i] == B[i]);
    }
    CHECK_THROWS_AS(SiteSet::from_points({Point{0, 0, 0}, Point{0, 0, 0}}), ValidationError);
}

TEST_CASE("VR membership is consistent with enumeration") {
    const Configuration cfg = make_configuration(SiteSet::from_points({Point{0, 0, 0}}), Point{9, 0, 0}, 1.0);
    const auto vr = cfg.enumerate_VR();
    CHECK(static_cast<std::int64_t>(vr.size()) == cfg.vr_site_count());
    for (const auto& p : vr) CHECK(cfg.in_VR(p));
}

TEST_SUITE_END();

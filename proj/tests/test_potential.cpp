#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "ris/potential.hpp"
#include "ris/stats.hpp"

using namespace ris;
using ris::testing::cached_scene;
using ris::testing::mini_scene;

TEST_SUITE_BEGIN("potential");

TEST_CASE("equilibrium measure of a single point") {
    auto g = shared_green_table(3);
    const auto eq = equilibrium_measure(SiteSet::from_points({Point{0, 0, 0}}), *g);
    CHECK(eq.cap == doctest::Approx(1.0 / g->at_origin()).epsilon(1e-12));
    CHECK(eq.e(0) == doctest::Approx(0.659463).epsilon(1e-4));
    CHECK(eq.hbar(0) == doctest::Approx(1.0));
    CHECK(eq.residual <= 1e-8);
}

TEST_CASE("two-point capacity: closed form and large-separation limit") {
    auto g = shared_green_table(3);
    const double g0 = g->at_origin();
    for (int L : {10, 40, 100}) {
        const auto eq = equilibrium_measure(SiteSet::from_points({Point{0, 0, 0}, Point{L, 0, 0}}), *g);
        const double gl = g->eval(Point{L, 0, 0});
        CHECK(eq.cap == doctest::Approx(2.0 / (g0 + gl)).epsilon(1e-10));
    }
    const auto eq100 = equilibrium_measure(SiteSet::from_points({Point{0, 0, 0}, Point{100, 0, 0}}), *g);
    CHECK(std::fabs(eq100.cap - 2.0 / g0) / (2.0 / g0) < 0.01);
}

TEST_CASE("symmetric set: harmonic measure uniform over an orbit") {
    auto g = shared_green_table(3);
    std::vector<Point> cube;
    for (int x = 0; x <= 1; ++x)
        for (int y = 0; y <= 1; ++y)
            for (int z = 0; z <= 1; ++z) cube.push_back(Point{x, y, z});
    const auto eq = equilibrium_measure(SiteSet::from_points(cube), *g);
    for (int i = 1; i < 8; ++i) CHECK(eq.hbar(i) == doctest::Approx(eq.hbar(0)).epsilon(1e-10));
}

TEST_CASE("capacity monotonicity, translation invariance, subadditivity") {
    auto g = shared_green_table(3);
    const SiteSet small = ball(Point{0, 0, 0}, 1.5);
    const SiteSet big = ball(Point{0, 0, 0}, 2.5);
    CHECK(capacity(small, *g) <= capacity(big, *g));
    CHECK(capacity(small.translated(Point{7, -3, 2}), *g) == doctest::Approx(capacity(small, *g)).epsilon(1e-10));
    const Scene& sc = mini_scene();
    CHECK(sc.eqK.cap <= sc.eqK1.cap + sc.eqK2.cap + 1e-12);
    CHECK(sc.eqK.cap <= 2.0 * sc.eqK1.cap + 1e-12);
}

TEST_CASE("escape probability closed forms") {
    auto g = shared_green_table(3);
    const auto eq = equilibrium_measure(SiteSet::from_points({Point{0, 0, 0}}), *g);
    const double g0 = g->at_origin();
    CHECK(escape_probability(Point{1, 0, 0}, eq, *g) == doctest::Approx(1.0 - (g0 - 1.0) / g0).epsilon(1e-12));
    CHECK(escape_probability(Point{1, 0, 0}, eq, *g) == doctest::Approx(0.6595).epsilon(1e-3));
    for (int L : {5, 20, 80}) {
        const double want = 1.0 - g->eval(Point{L, 0, 0}) / g0;
        CHECK(escape_probability(Point{L, 0, 0}, eq, *g) == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(escape_probability(Point{200, 0, 0}, eq, *g) > 0.997);
    CHECK_THROWS_AS(escape_probability(Point{0, 0, 0}, eq, *g), ValidationError);
    // translation invariance
    const auto eqt = equilibrium_measure(SiteSet::from_points({Point{3, -1, 4}}), *g);
    CHECK(escape_probability(Point{4, -1, 4}, eqt, *g) ==
          doctest::Approx(escape_probability(Point{1, 0, 0}, eq, *g)).epsilon(1e-12));
}

TEST_CASE("escape table: infimum, regime flag, monotonicity in R, mirror symmetry") {
    const Scene& s9 = mini_scene();
    const Scene& s17 = cached_scene("singleton", 0, 17, 1.0);
    const Scene& s33 = cached_scene("singleton", 0, 33, 1.0);
    CHECK(s9.esc.q > 0.5);
    CHECK(s9.esc.regime_ok);
    CHECK(s17.esc.q > s9.esc.q);
    CHECK(s33.esc.q > s17.esc.q);
    for (const auto& tab : {&s9.esc, &s17.esc}) {
        for (double p : tab->p) {
            CHECK(p > 0.0);
            CHECK(p <= 1.0);
            CHECK(p >= tab->q);
        }
    }
    // the reflection through the midpoint maps the shell onto itself and
    // preserves the escape probability
    const Configuration& cfg = s9.cfg;
    for (int i = 0; i < cfg.beVR.size(); i += 17) {
        const Point y = cfg.beVR[i];
        const Point my{9 - y.c[0], y.c[1], y.c[2]};
        const auto j = cfg.beVR.index_of(my);
        REQUIRE(j.has_value());
        CHECK(s9.esc.p[static_cast<std::size_t>(i)] ==
              doctest::Approx(s9.esc.p[static_cast<std::size_t>(*j)]).epsilon(1e-9));
    }
}

namespace {

// Independent dense solve of the absorbed harmonic system on V_R: the exit
// row from x is computed with plain Eigen linear algebra over the enumerated
// domain, with no shared code with BallSolver's CG.
Eigen::VectorXd dense_exit_row(const Configuration& cfg, const Point& x) {
    const auto vr = cfg.enumerate_VR();
    std::map<Point, int> idx;
    for (std::size_t i = 0; i < vr.size(); ++i) idx[vr[i]] = static_cast<int>(i);
    const int n = static_cast<int>(vr.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 2 * cfg.d; ++k) {
            auto it = idx.find(vr[static_cast<std::size_t>(i)].neighbour(k));
            if (it != idx.end()) A(i, it->second) -= 1.0 / (2.0 * cfg.d);
        }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(idx.at(x)) = 1.0;
    // killed Green column via the transposed system (A is symmetric)
    const Eigen::VectorXd gcol = A.ldlt().solve(b);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(cfg.beVR.size());
    for (int j = 0; j < cfg.beVR.size(); ++j) {
        double acc = 0.0;
        for (int k = 0; k < 2 * cfg.d; ++k) {
            auto it = idx.find(cfg.beVR[j].neighbour(k));
            if (it != idx.end()) acc += gcol(it->second);
        }
        row(j) = acc / (2.0 * cfg.d);
    }
    return row;
}

} // namespace

TEST_CASE("exit distribution: stochasticity, symmetry, dense-solve oracle") {
    const Scene& sc = mini_scene();
    const Eigen::VectorXd row = exit_distribution(Point{0, 0, 0}, sc.cfg);
    CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row.minCoeff() >= 0.0);
    // symmetry under the stabilizer of the x-axis: permuting/flipping (y,z)
    for (int j = 0; j < sc.cfg.beVR.size(); j += 11) {
        const Point y = sc.cfg.beVR[j];
        const Point sym{y.c[0], -y.c[2], y.c[1]};
        auto k = sc.cfg.beVR.index_of(sym);
        REQUIRE(k.has_value());
        CHECK(row(j) == doctest::Approx(row(*k)).epsilon(1e-8));
    }
    // independent dense linear-algebra oracle
    const Eigen::VectorXd want = dense_exit_row(sc.cfg, Point{0, 0, 0});
    CHECK((row - want).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_THROWS_AS(exit_distribution(Point{40, 0, 0}, sc.cfg), ValidationError);
}

TEST_CASE("exit distribution matches Monte Carlo frequencies") {
    const Scene& sc = mini_scene();
    const Eigen::VectorXd row = exit_distribution(Point{0, 0, 0}, sc.cfg);
    RngStream rng(314, 1);
    const int n = 1000000;
    std::vector<std::uint64_t> hits(static_cast<std::size_t>(sc.cfg.beVR.size()), 0);
    for (int i = 0; i < n; ++i) {
        Point p = Point::zero(3);
        while (sc.cfg.in_VR(p)) p = p.neighbour(static_cast<int>(rng.uniform_int(6)));
        ++hits[static_cast<std::size_t>(*sc.cfg.beVR.index_of(p))];
    }
    int bad = 0;
    for (int j = 0; j < row.size(); ++j) {
        const double se = std::sqrt(std::max(row(j) * (1.0 - row(j)) / n, 1e-12));
        if (std::fabs(static_cast<double>(hits[static_cast<std::size_t>(j)]) / n - row(j)) > 3.0 * se) ++bad;
    }
    // ~0.27% of sites may exceed 3 sigma by chance
    CHECK(bad <= 6);
    CHECK(chi2_goodness(hits, std::vector<double>(row.data(), row.data() + row.size())).pvalue > 0.001);
}

TEST_CASE("hitting distribution: stochasticity and mirror swap") {
    const Scene& sc = mini_scene();
    const Point y = sc.cfg.beVR[3];
    const Eigen::VectorXd row = hitting_distribution(y, sc.cfg, *sc.hit);
    CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-8));
    // mirror through the midpoint swaps the two K sites
    const Point my{9 - y.c[0], y.c[1], y.c[2]};
    const Eigen::VectorXd mrow = hitting_distribution(my, sc.cfg, *sc.hit);
    CHECK(row(0) == doctest::Approx(mrow(1)).epsilon(1e-8));
    CHECK(row(1) == doctest::Approx(mrow(0)).epsilon(1e-8));
}

TEST_CASE("hitting distribution matches truncation-corrected Monte Carlo") {
    // Plain SRW from y until it hits K or crosses a distant sphere. Walks that
    // cross the sphere are credited with the exact re-entry mass from their
    // crossing point, so the estimate is unbiased; the far rows are in the
    // near-harmonic regime and carry ~10% of the weight, while the row under
    // test sits deep in the near field.
    const Scene& sc = mini_scene();
    const Point y = sc.cfg.beVR[0];
    const Eigen::VectorXd row = hitting_distribution(y, sc.cfg, *sc.hit);
    RngStream rng(2718, 5);
    const Point mid{4, 0, 0};
    const std::int64_t far2 = 44 * 44;
    const Point x2{9, 0, 0};
    const int n = 120000;
    double mass0 = 0.0, mass_tot = 0.0;
    std::uint64_t direct_hits = 0;
    for (int i = 0; i < n; ++i) {
        Point p = y;
        for (;;) {
            p = p.neighbour(static_cast<int>(rng.uniform_int(6)));
            if (p.norm2() == 0 || p == x2) {
                if (p.norm2() == 0) mass0 += 1.0;
                mass_tot += 1.0;
                ++direct_hits;
                break;
            }
            if (dist2(p, mid) > far2) {
                const Eigen::VectorXd far = sc.hit->hit_row(p);
                mass0 += far(*sc.cfg.K.index_of(Point::zero(3)));
                mass_tot += far.sum();
                break;
            }
        }
    }
    const double phat = mass0 / mass_tot;
    // binomial-scale error bar on the dominant direct-hit component
    const double se = std::sqrt(row(0) * (1.0 - row(0)) / static_cast<double>(direct_hits));
    CHECK(std::fabs(phat - row(0)) < 3.5 * se);
    // unconditional return mass agrees with 1 - p_y
    const double pret = mass_tot / n;
    const int yidx = *sc.cfg.beVR.index_of(y);
    const double want = 1.0 - sc.esc.p[static_cast<std::size_t>(yidx)];
    CHECK(std::fabs(pret - want) < 4.0 * std::sqrt(want * (1.0 - want) / n));
}

TEST_CASE("transition density: normalization identity and errors") {
    const Scene& sc = mini_scene();
    for (int j = 0; j < sc.cfg.beVR.size(); j += 29) {
        const Point y = sc.cfg.beVR[j];
        double acc = 0.0;
        for (std::size_t a = 0; a < sc.alphabet.size(); ++a)
            acc += transition_density(y, sc.alphabet[a], sc.cfg, *sc.hit, sc.eqK) * sc.ebar[a];
        CHECK(acc == doctest::Approx(1.0).epsilon(1e-8));
    }
    // interior site of a thick K has no harmonic mass
    const Scene& sb = cached_scene("ball", 2.0, 33, 1.0);
    CHECK_THROWS_AS(transition_density(sb.cfg.beVR[0], Point{0, 0, 0}, sb.cfg, *sb.hit, sb.eqK),
                    ValidationError);
}

TEST_CASE("transition density deviation shrinks with the separation") {
    const Scene& s17 = cached_scene("singleton", 0, 17, 1.0);
    const Scene& s33 = cached_scene("singleton", 0, 33, 1.0);
    double dev17 = 0.0, dev33 = 0.0;
    for (int j = 0; j < s17.cfg.beVR.size(); ++j) {
        const Eigen::VectorXd cond = hitting_distribution(s17.cfg.beVR[j], s17.cfg, *s17.hit);
        for (std::size_t a = 0; a < s17.alphabet.size(); ++a)
            dev17 = std::max(dev17, std::fabs(cond(s17.alphabet_to_K[a]) / s17.ebar[a] - 1.0));
    }
    for (int j = 0; j < s33.cfg.beVR.size(); ++j) {
        const Eigen::VectorXd cond = hitting_distribution(s33.cfg.beVR[j], s33.cfg, *s33.hit);
        for (std::size_t a = 0; a < s33.alphabet.size(); ++a)
            dev33 = std::max(dev33, std::fabs(cond(s33.alphabet_to_K[a]) / s33.ebar[a] - 1.0));
    }
    CHECK(dev33 < dev17);
}

TEST_CASE("kernel table rows are stochastic") {
    const Scene& sc = mini_scene();
    const KernelTable kt = build_kernel_table(sc.cfg, *sc.hit, sc.eqK);
    for (int i = 0; i < kt.exit.rows(); ++i) CHECK(kt.exit.row(i).sum() == doctest::Approx(1.0).epsilon(1e-8));
    for (int j = 0; j < kt.hit.rows(); ++j) CHECK(kt.hit.row(j).sum() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("expected excursion chain agrees with a dense shell-state system") {
    // Independent route: solve the absorbing chain on the separating boundary
    // with dense linear algebra. m(y) = expected follow-on excursions after an
    // exit at y, so (I - H E) m = H 1 with H the unconditional entry kernel
    // and E the dense exit kernel.
    const Scene& sc = mini_scene();
    const int ns = sc.cfg.beVR.size();
    const int nb = sc.cfg.bK.size();
    Eigen::MatrixXd E(nb, ns); // exit rows from dK, via the independent dense solver
    for (int i = 0; i < nb; ++i) E.row(i) = dense_exit_row(sc.cfg, sc.cfg.bK[i]).transpose();
    Eigen::MatrixXd H(ns, nb); // unconditional entry law, restricted to dK
    for (int j = 0; j < ns; ++j) {
        const Eigen::VectorXd row = sc.hit->hit_row(sc.cfg.beVR[j]);
        for (int i = 0; i < nb; ++i) H(j, i) = row(*sc.cfg.K.index_of(sc.cfg.bK[i]));
    }
    const Eigen::VectorXd m =
        (Eigen::MatrixXd::Identity(ns, ns) - H * E).partialPivLu().solve(H * Eigen::VectorXd::Ones(nb));
    Eigen::VectorXd ebar_b(nb);
    for (int i = 0; i < nb; ++i) ebar_b(i) = sc.eqK.hbar(*sc.cfg.K.index_of(sc.cfg.bK[i]));
    const double e_t1 = 1.0 + ebar_b.dot(E * m) / (1.0 - sc.esc.q);
    CHECK(e_t1 == doctest::Approx(sc.chain.e_t1).epsilon(1e-8));
    CHECK(sc.chain.exact);
    CHECK(sc.chain.identity_gap < 1e-12);
}

TEST_CASE("harmonic measure quarter bound on the union") {
    const Scene& sb = cached_scene("ball", 2.0, 33, 1.0);
    const SiteSet bd1 = internal_boundary(sb.cfg.K1);
    for (const auto& y : bd1) {
        const auto ku = sb.cfg.K.index_of(y);
        const auto k1 = sb.eqK1.K.index_of(y);
        REQUIRE(ku.has_value());
        REQUIRE(k1.has_value());
        CHECK(sb.eqK.hbar(*ku) >= 0.25 * sb.eqK1.hbar(*k1) - 1e-10);
    }
}

TEST_SUITE_END();

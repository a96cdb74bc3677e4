#include <doctest.h>

#include <cmath>

#include "ris/green.hpp"

using namespace ris;

TEST_SUITE_BEGIN("green");

// Watson's integral gives the d=3 value in closed form; the d=4 value is the
// standard return-probability constant. Both are independent of this code.
static constexpr double kG3Origin = 1.5163860591519780;
static constexpr double kG4Origin = 1.2394671218425486;

TEST_CASE("origin values across dimensions") {
    CHECK(green(3, Point::zero(3)) == doctest::Approx(kG3Origin).epsilon(1e-10));
    auto t4 = shared_green_table(4);
    CHECK(t4->at_origin() == doctest::Approx(kG4Origin).epsilon(1e-8));
    CHECK_THROWS_AS(build_green_table(2, 24, 0.0), ValidationError);
}

TEST_CASE("one-step identity: G(e1) = G(0) - 1") {
    for (int d = 3; d <= 5; ++d) {
        auto t = shared_green_table(d);
        Point e1 = Point::zero(d);
        e1.c[0] = 1;
        CHECK(t->eval(e1) == doctest::Approx(t->at_origin() - 1.0).epsilon(1e-12));
    }
}

TEST_CASE("harmonicity away from the origin") {
    auto t = shared_green_table(3);
    for (Point x : {Point{2, 1, 0}, Point{5, 3, 2}, Point{10, 0, 0}, Point{17, 4, 9}}) {
        double m = 0.0;
        for (int k = 0; k < 6; ++k) m += t->eval(x.neighbour(k));
        CHECK(t->eval(x) == doctest::Approx(m / 6.0).epsilon(1e-9));
    }
}

TEST_CASE("symmetry under permutations and sign flips") {
    auto t = shared_green_table(3);
    const double base = t->eval(Point{3, 2, 1});
    CHECK(t->eval(Point{-3, 2, 1}) == base);
    CHECK(t->eval(Point{1, 3, -2}) == base);
    CHECK(t->eval(Point{2, -1, -3}) == base);
}

TEST_CASE("strictly positive and decreasing along an axis") {
    auto t = shared_green_table(3);
    double prev = t->at_origin();
    for (int k = 1; k <= 50; ++k) {
        const double v = t->eval(Point{k, 0, 0});
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("asymptotic front coefficient matches the closed form") {
    auto t = shared_green_table(3);
    CHECK(t->analytic_front_coeff() == doctest::Approx(3.0 / (2.0 * M_PI)).epsilon(1e-12));
    CHECK(t->fitted_front_coeff() == doctest::Approx(t->analytic_front_coeff()).epsilon(1e-3));
    // ratio G * ||x|| at moderate range is within 2% of the constant
    const double ratio = t->eval(Point{50, 0, 0}) * 50.0;
    CHECK(std::fabs(ratio - t->analytic_front_coeff()) / t->analytic_front_coeff() < 0.02);
}

TEST_CASE("table and far-field branches agree at the cutoff") {
    auto t = shared_green_table(3);
    CHECK(t->fit_band_residual() < 1e-6);
    // explicit continuity probe across the cutoff along several directions
    for (Point dir : {Point{1, 0, 0}, Point{2, 2, 1}, Point{1, 1, 1}}) {
        const double n = dir.norm();
        const auto in_scale = static_cast<int>(std::floor(29.0 / n));
        const auto out_scale = static_cast<int>(std::ceil(31.0 / n));
        Point pin{dir.c[0] * in_scale, dir.c[1] * in_scale, dir.c[2] * in_scale};
        Point pout{dir.c[0] * out_scale, dir.c[1] * out_scale, dir.c[2] * out_scale};
        const double gin = t->eval(pin);
        const double gout = t->eval(pout);
        // both bracket the asymptotic curve: crude sandwich within 1e-4 relative
        const double pred_out = gin * pin.norm() / pout.norm();
        CHECK(gout == doctest::Approx(pred_out).epsilon(2e-3));
    }
}

TEST_CASE("quadrature order does not change the values") {
    const GreenTable a = build_green_table(3, 20, 12.0);
    const GreenTable b = build_green_table(3, 32, 12.0);
    CHECK(a.at_origin() == doctest::Approx(b.at_origin()).epsilon(1e-13));
    CHECK(a.eval(Point{5, 4, 3}) == doctest::Approx(b.eval(Point{5, 4, 3})).epsilon(1e-12));
}

TEST_CASE("scaled bessel vector sanity") {
    std::vector<double> v;
    scaled_bessel_i(0.0, 4, v);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 0.0);
    // identity e^z = I0 + 2 sum I_m  =>  scaled values sum to 1
    for (double z : {0.5, 10.0, 200.0, 30000.0}) {
        scaled_bessel_i(z, 40, v);
        // compare against the asymptotic head for large z
        if (z >= 200.0) CHECK(v[0] == doctest::Approx(1.0 / std::sqrt(2 * M_PI * z)).epsilon(0.01));
        for (double x : v) CHECK(x >= 0.0);
        CHECK(v[1] < v[0]);
    }
    // recurrence I_{n-1}(z) - I_{n+1}(z) = (2n/z) I_n(z)
    scaled_bessel_i(7.0, 10, v);
    for (int n = 1; n < 9; ++n)
        CHECK(v[n - 1] - v[n + 1] == doctest::Approx((2.0 * n / 7.0) * v[n]).epsilon(1e-10));
}

TEST_SUITE_END();

#include <doctest.h>

#include <cmath>
#include <set>

#include "ris/rng.hpp"
#include "ris/stats.hpp"

using namespace ris;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same (seed, stream) reproduces the sequence") {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct streams differ") {
    RngStream a(42, 7), b(42, 8), c(43, 7);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        if (va == b.next_u64()) ++same_ab;
        if (va == c.next_u64()) ++same_ac;
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("seed_derive is idempotent and collision-free over purposes") {
    std::set<std::uint64_t> ids;
    for (std::uint64_t r = 0; r < 16; ++r)
        for (std::uint64_t p = 0; p < kRngPurposeCount; ++p) {
            auto s1 = seed_derive(5, r, static_cast<RngPurpose>(p));
            auto s2 = seed_derive(5, r, static_cast<RngPurpose>(p));
            CHECK(s1.stream_id() == s2.stream_id());
            ids.insert(s1.stream_id());
        }
    CHECK(ids.size() == 16 * kRngPurposeCount);
}

TEST_CASE("uniform moments") {
    RngStream r(1, 1);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    const double mean = s / n;
    CHECK(std::fabs(mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::fabs(s2 / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("cross-stream independence: correlation near zero") {
    RngStream a = seed_derive(99, 0, RngPurpose::Clocks);
    RngStream b = seed_derive(99, 0, RngPurpose::Paths);
    const int n = 1000000;
    double sxy = 0.0, sx = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = a.uniform() - 0.5;
        const double y = b.uniform() - 0.5;
        sxy += x * y;
        sx += x;
        sy += y;
    }
    const double corr = (sxy / n - (sx / n) * (sy / n)) * 12.0;
    CHECK(std::fabs(corr) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("poisson moments, small and large mean") {
    for (double lam : {0.3, 2.5, 25.0, 400.0}) {
        RngStream r(7, static_cast<std::uint64_t>(lam * 1000));
        const int n = 100000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = static_cast<double>(r.poisson(lam));
            s += k;
            s2 += k * k;
        }
        const double mean = s / n;
        const double var = s2 / n - mean * mean;
        CHECK(std::fabs(mean - lam) < 4.0 * std::sqrt(lam / n));
        CHECK(std::fabs(var - lam) < 0.05 * lam + 4.0 * lam * std::sqrt(2.0 / n));
    }
}

TEST_CASE("poisson(0) is 0 and exponential requires a positive rate") {
    RngStream r(1, 2);
    CHECK(r.poisson(0.0) == 0);
    CHECK_THROWS_AS(r.exponential(0.0), std::invalid_argument);
}

TEST_CASE("exponential sample passes a KS test") {
    RngStream r(11, 3);
    std::vector<double> xs(20000);
    for (auto& x : xs) x = r.exponential(2.5);
    CHECK(ks_exponential_pvalue(xs, 2.5) > 0.01);
}

TEST_CASE("uniform_int is unbiased over a non-power-of-two range") {
    RngStream r(5, 4);
    std::vector<std::uint64_t> cnt(6, 0);
    const int n = 600000;
    for (int i = 0; i < n; ++i) ++cnt[r.uniform_int(6)];
    const std::vector<double> probs(6, 1.0 / 6.0);
    CHECK(chi2_goodness(cnt, probs).pvalue > 0.001);
}

TEST_SUITE_END();

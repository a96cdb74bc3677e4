#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ris {

// Regularized incomplete gamma P(a,x) and its complement.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, double df);

// Kolmogorov distribution survival function.
double kolmogorov_sf(double x);

// One-sided z survival.
double normal_sf(double z);

// Wilson 95% interval for k successes out of n.
struct Interval {
    double phat = 0.0, lo = 0.0, hi = 0.0;
};
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

// One-sample chi-square against expected probabilities; cells with expected
// count below min_expected are pooled into the smallest-neighbour bucket.
struct Chi2Result {
    double stat = 0.0;
    int df = 0;
    double pvalue = 1.0;
};
Chi2Result chi2_goodness(const std::vector<std::uint64_t>& observed, const std::vector<double>& prob,
                         double min_expected = 5.0);

// Two-sample chi-square for identical distributions.
Chi2Result chi2_two_sample(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                           double min_expected = 5.0);

// Pearson independence test on a contingency table (rows x cols, flattened
// row-major).
Chi2Result chi2_independence(const std::vector<std::uint64_t>& table, int rows, int cols);

// Mutual-independence test of three integer samples (values capped so every
// marginal bucket keeps a workable expected count).
Chi2Result chi2_mutual_independence3(const std::vector<int>& a, const std::vector<int>& b,
                                     const std::vector<int>& c);

// Bucket an integer sample: values >= cap collapse into the last bucket; cap
// chosen so the tail bucket keeps at least min_count observations.
std::vector<int> cap_for_buckets(const std::vector<int>& sample, std::uint64_t min_count, int& cap_out);

// Kolmogorov-Smirnov test that `sample` is Exponential(rate).
double ks_exponential_pvalue(std::vector<double> sample, double rate);

// Weighted least squares line y = a + b x; returns (b, se_b, a).
struct LineFit {
    double slope = 0.0, se_slope = 0.0, intercept = 0.0;
    double chi2 = 0.0;
    int npoints = 0;
};
LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& sigma_y);

} // namespace ris

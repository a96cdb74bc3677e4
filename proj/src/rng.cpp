#include "ris/rng.hpp"

namespace ris {

std::uint64_t RngStream::poisson(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be nonnegative");
    if (lambda == 0.0) return 0;
    if (lambda < 10.0) return poisson_inversion(lambda);
    return poisson_ptrd(lambda);
}

std::uint64_t RngStream::poisson_inversion(double lambda) {
    const double u = uniform();
    double p = std::exp(-lambda);
    double cum = p;
    std::uint64_t k = 0;
    while (u > cum) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cum += p;
        if (k > 200 + 10 * static_cast<std::uint64_t>(lambda)) break; // fp tail guard
    }
    return k;
}

// Transformed rejection with decomposition (Hormann, PTRD). Exact sampler for
// moderate-to-large means, used so that Poisson bootstrap resampling with
// counts in the millions stays O(1) per draw.
std::uint64_t RngStream::poisson_ptrd(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double k = kf;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = k * loglam - lambda - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
    }
}

} // namespace ris

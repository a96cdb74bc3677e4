#pragma once

#include "ris/coupling.hpp"
#include "ris/stats.hpp"

namespace ris {

// Exact occupancy histogram over the 2^|K| trace outcomes; |K| <= 20.
struct TraceHistogram {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    int nsites = 0;

    explicit TraceHistogram(int nsites_ = 0)
        : counts(std::size_t(1) << nsites_, 0), nsites(nsites_) {
        if (nsites_ > 20) throw ValidationError("trace histogram: |K| > 20");
    }
    void add(std::uint32_t mask) {
        ++counts[mask];
        ++total;
    }
};

// Half-L1 distance between the normalized histograms, with a Poisson
// bootstrap confidence half-width (resamples the cell counts).
std::pair<double, double> tv_empirical(const TraceHistogram& h1, const TraceHistogram& h2,
                                       int resamples = 1000, std::uint64_t boot_seed = 757575);

// Replica generators for the standalone builders (threaded, replica-id
// deterministic).
TraceHistogram trace_histogram_ri(const Scene& sc, std::uint64_t replicas, std::uint64_t seed, int threads = 1);
TraceHistogram trace_histogram_ns(const Scene& sc, std::uint64_t replicas, std::uint64_t seed, int threads = 1);

TraceHistogram histogram_of(const std::vector<CoupledSummary>& rows, int nsites, bool ns_side);

// [0,1]-valued function of the occupancy pattern of a sub-window of K.
struct TruthTable {
    std::vector<double> f; // size 2^nsites
    int nsites = 0;
    double eval(std::uint32_t mask) const { return f[mask]; }
};

// Bit positions of the K1 / K2 sites inside the K enumeration.
std::vector<int> window_bits(const Configuration& cfg, bool second);
std::uint32_t project_mask(std::uint32_t kmask, const std::vector<int>& bits);

struct CovEstimate {
    double cov = 0.0;
    double ci = 0.0; // ~95% half width (batch means)
    double mean1 = 0.0, mean2 = 0.0;
    std::uint64_t replicas = 0;
};

CovEstimate covariance_experiment(const Scene& sc, const TruthTable& f1, const TruthTable& f2,
                                  std::uint64_t replicas, std::uint64_t seed, int threads = 1,
                                  int batches = 32);

// Per-scene exact lemma quantities.
struct LemmaRung {
    double dist = 0.0, R = 0.0, delta = 0.0;
    double q = 0.0, one_minus_q = 0.0;
    bool regime_ok = false;
    double sup_g_dev = 0.0;            // sup |g - 1| over the whole kernel
    double harm_quarter_margin = 0.0;  // min over dK1 u dK2 of ebar_K - ebar_Ki/4
    double e_n22_invsqrt = 0.0;        // exact E[N22^{-1/2}; N22 >= 1]
    double e_n22_bound = 0.0;          // 4 sqrt(3) (u cap K1)^{-1/2}
    double p_n1pos_n22zero = 0.0;      // exact
    double shape_ref = 0.0;            // sqrt(u) cap(K1)^{3/2} / R^{d-2}
    double cap_K = 0.0, cap_K1 = 0.0;
};

LemmaRung lemma_rung(const Scene& sc);

// sup over exit points and start sites of |g(y,x) - 1| (streamed).
double sup_g_deviation(const Scene& sc);

// Exact series E[N^{-1/2} 1{N>=1}] for N ~ Poisson(lambda).
double poisson_inv_sqrt_moment(double lambda);

// Weighted log-log slope fit; rungs with fewer than min_failures successes
// are censored out of the fit.
struct ScalingFit {
    LineFit line;
    std::vector<int> used;     // rung indices in the fit
    std::vector<int> censored; // rung indices excluded
};
ScalingFit fit_scaling(const std::vector<double>& xvals, const std::vector<FailureEstimate>& fes,
                       std::uint64_t min_failures = 5);

} // namespace ris

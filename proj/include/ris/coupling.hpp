#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ris/processes.hpp"

namespace ris {

// Exact total variation distance between Poisson(theta) and k + Poisson(theta),
// by summation of positive pmf differences. Checked against the |k|/sqrt(theta)
// bound before returning.
double poisson_shift_tv(double theta, long long k);

// Family of maximally coupled pairs (Ytilde_k, k + Xtilde_k), both marginals
// Poisson(lambda). Tables are precomputed for |k| <= window; shifts beyond the
// window (total variation ~ 1 there) fall back to independent draws.
class PoissonShiftCoupler {
public:
    PoissonShiftCoupler(double lambda, int window);

    double lambda() const { return lambda_; }
    int window() const { return window_; }
    double tv(long long k) const;

    // Given the realized shift k, returns (Xtilde, Ytilde) with
    // P[Ytilde == k + Xtilde] = 1 - tv(k).
    std::pair<std::uint64_t, std::uint64_t> sample(long long k, RngStream& rng) const;

    // Window wide enough that a centered count difference with the given
    // standard-deviation scale exceeds it with probability ~1e-12.
    static int window_for(double mean_scale, double sd_scale);

private:
    struct KTable {
        double overlap_mass = 0.0;
        std::vector<double> overlap_cdf; // over value j of Ytilde
        std::vector<double> resid_y_cdf;
        std::vector<double> resid_x_cdf; // over value j of (k + Xtilde)
    };

    double lambda_;
    int window_;
    std::vector<double> pmf_;
    std::vector<KTable> tables_; // index k + window
};

// Full transcript of one coupled construction.
struct CouplingRecord {
    std::uint64_t N1 = 0, N1p = 0, N21 = 0, N21p = 0, N22 = 0, Theta = 0;
    double Xi22 = 0.0;
    bool D = false;
    bool Upsilon = false;
    double psi_sup_dev = 0.0;
    RiSample ri;
    NsSample ns;
    std::uint64_t replica_id = 0;
    std::uint64_t master_seed = 0;
};

// Positive-part density over start sites, normalized against the harmonic
// weights; the all-ones fallback applies when the positive part vanishes.
std::vector<double> psi_density(const std::vector<double>& GI, double Gp, const std::vector<double>& ebar);

CouplingRecord build_coupled_pair(const Scene& sc, const PoissonShiftCoupler& coupler, ReplicaCtx& ctx,
                                  std::uint64_t replica_id = 0, std::uint64_t master_seed = 0);

// Make the scene's coupler (lambda = q u cap / 2, window sized for the
// equality-event shift distribution).
PoissonShiftCoupler make_scene_coupler(const Scene& sc);

// Compact per-replica outcome, enough for the failure estimate, the marginal
// histograms, the independence checks and the per-replica report rows.
struct CoupledSummary {
    std::uint64_t Theta = 0, N1p = 0;
    std::uint32_t N1 = 0, N21 = 0, N21p = 0, N22 = 0;
    bool D = false, Upsilon = false;
    float psi_sup_dev = 0.0f;
    std::uint32_t ri_mask = 0, ns_mask = 0; // trace over K when |K| <= 32
};

// Runs `replicas` coupled constructions on `threads` workers; results land in
// replica-id order regardless of scheduling.
std::vector<CoupledSummary> run_coupled_replicas(const Scene& sc, const PoissonShiftCoupler& coupler,
                                                 std::uint64_t replicas, std::uint64_t master_seed,
                                                 int threads = 1);

struct FailureEstimate {
    std::uint64_t replicas = 0;
    std::uint64_t failures = 0; // Upsilon^c
    double phat = 0.0, lo = 0.0, hi = 0.0; // Wilson 95%
    // Partition of the failures
    std::uint64_t n_Dc = 0;
    std::uint64_t n_D_n1zero = 0;        // must stay 0
    std::uint64_t n_D_n1pos_n22zero = 0;
    std::uint64_t n_remainder = 0;
    // event frequencies (not failure-restricted)
    std::uint64_t ev_Dc = 0, ev_D_n1zero = 0, ev_D_n1pos_n22zero = 0;
};

FailureEstimate summarize_failures(const std::vector<CoupledSummary>& rows);

FailureEstimate estimate_coupling_failure(const Scene& sc, const PoissonShiftCoupler& coupler,
                                          std::uint64_t replicas, std::uint64_t master_seed, int threads = 1);

} // namespace ris

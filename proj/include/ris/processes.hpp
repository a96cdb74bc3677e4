#pragma once

#include <utility>
#include <vector>

#include "ris/slt.hpp"

namespace ris {

// Excursion soup of the interlacement process restricted to K: the
// possibly-returning portion (N1 trajectories, stopped by the zeta/kappa
// rule) followed by N2 non-returning excursions.
struct RiSample {
    std::uint64_t N1 = 0;
    std::vector<std::uint32_t> T; // excursions per returning trajectory
    std::uint64_t Theta = 0;      // sum of T
    std::uint64_t N2 = 0;
    std::uint64_t Ntot = 0;       // Theta + N2
    std::uint64_t zeta_used = 0;
    std::vector<ExcursionPtr> excursions;
    std::vector<double> Gfinal; // accumulated soft local time, alphabet-aligned

    void check_invariants() const;
};

// Soup of completely independent excursions with the matching expected count.
struct NsSample {
    std::uint64_t Nprime = 0;
    std::vector<ExcursionPtr> excursions;
};

// Two independent Poisson counts with means (1-q) u cap and q u cap.
std::pair<std::uint64_t, std::uint64_t> sample_counts(double q, double ucap, RngStream& rng);

// Incremental driver for the soft-local-times construction of the RI soup;
// the coupling reuses it to interleave surgery between the phases.
class RiBuilder {
public:
    RiBuilder(const Scene& sc, ReplicaCtx& ctx);

    void run_trajectories(std::uint64_t n1);
    void run_unit_steps(std::uint64_t n);

    SoftLocalTimes& slt() { return slt_; }
    const SoftLocalTimes& slt() const { return slt_; }
    const std::vector<std::uint32_t>& T() const { return T_; }
    std::uint64_t theta() const { return theta_; }
    std::uint64_t zeta_used() const { return zeta_used_; }

    RiSample assemble(std::uint64_t n1, std::uint64_t n2) const;

private:
    const Scene& sc_;
    ReplicaCtx& ctx_;
    SoftLocalTimes slt_;
    std::vector<std::uint32_t> T_;
    std::uint64_t theta_ = 0;
    std::uint64_t zeta_used_ = 0;
};

RiSample build_ri(const Scene& sc, ReplicaCtx& ctx);
NsSample build_ns(const Scene& sc, ReplicaCtx& ctx);

// E[total excursion count] of the RI soup (exact chain value or MC fallback,
// computed at scene build).
double mean_total_excursions(const Scene& sc);

enum class TrajectoryMode {
    Standard,    // stop after each excursion with the exact escape probability
    KappaFirst,  // modified first-stop rule (the returning-portion law)
    ForcedEscape // diagnostic: stop after the first excursion always
};

// Direct simulation of one trajectory's excursion sequence; the independent
// oracle the soft-local-times construction is tested against.
std::vector<ExcursionPtr> direct_trajectory(const Scene& sc, ReplicaCtx& ctx, RngStream& rng, TrajectoryMode mode);

} // namespace ris

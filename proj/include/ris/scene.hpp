#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "ris/excursions.hpp"
#include "ris/potential.hpp"

namespace ris {

struct SceneOptions {
    int green_order = 24;
    double cg_tol = 1e-12;
    // Largest single-ball domain for the exact expected-count chain; bigger
    // scenes estimate the mean excursion count by Monte Carlo instead.
    std::int64_t chain_exact_max_ball_sites = 4'000'000;
    std::uint64_t chain_mc_trajectories = 400'000;
    std::uint64_t chain_mc_seed = 9001;
    bool memory_lean = false;
};

// Expected-excursion bookkeeping: mean excursions of one possibly-returning
// trajectory (with the modified first stopping rule), of the whole returning
// portion, and of the full soup.
struct ChainStats {
    double e_t1 = 1.0;
    double e_theta = 0.0;
    double e_ntot = 0.0;
    bool exact = true;
    double ci_e_theta = 0.0;  // half-width (0 when exact)
    double identity_gap = 0.0; // |E[Ntot] - u cap E_harmonic[T_std]| consistency check, exact mode
};

// Immutable per-scene bundle shared by all replicas.
struct Scene {
    Configuration cfg;
    std::shared_ptr<const GreenTable> green;
    EquilibriumData eqK, eqK1, eqK2;
    EscapeTable esc;
    std::unique_ptr<HitKernel> hit;
    ChainStats chain;
    SceneOptions opts;

    // Start-site alphabet: sites of dK with positive harmonic measure, in the
    // fixed dK enumeration order.
    std::vector<Point> alphabet;
    std::vector<int> alphabet_to_K; // index into K enumeration
    std::vector<double> ebar;       // harmonic measure on the alphabet
    std::vector<double> ebar_cdf;
    BoxIndex kindex;                // lattice -> K ordinal
    BoxIndex alpha_index;           // lattice -> alphabet ordinal

    double ucap() const { return cfg.u * eqK.cap; }
    double q() const { return esc.q; }
    int shell_index(const Point& y) const {
        auto i = cfg.beVR.index_of(y);
        return i ? *i : -1;
    }
    double p_at_shell(int idx) const { return esc.p[static_cast<std::size_t>(idx)]; }

    Scene() = default;
    Scene(Scene&&) = default;
    Scene& operator=(Scene&&) = default;
    Scene(const Scene&) = delete;
};

Scene build_scene(const Configuration& cfg, const SceneOptions& opts = {});

// Per-replica mutable context: derived RNG streams and kernel-row caches.
struct ReplicaCtx {
    RngStream counts, zeta, clocks, paths, coupling, glue;
    // cache key: shell index of the exit point
    std::unordered_map<int, std::vector<double>> g_rows;
    std::unordered_map<int, std::vector<double>> hit_cdfs;

    static ReplicaCtx derive(std::uint64_t master_seed, std::uint64_t replica_id) {
        ReplicaCtx c;
        c.counts = seed_derive(master_seed, replica_id, RngPurpose::Counts);
        c.zeta = seed_derive(master_seed, replica_id, RngPurpose::Zeta);
        c.clocks = seed_derive(master_seed, replica_id, RngPurpose::Clocks);
        c.paths = seed_derive(master_seed, replica_id, RngPurpose::Paths);
        c.coupling = seed_derive(master_seed, replica_id, RngPurpose::Coupling);
        c.glue = seed_derive(master_seed, replica_id, RngPurpose::Glue);
        return c;
    }
};

// Transition density row g(y, .) over the alphabet for an exit point with
// shell index yidx; cached in the replica context.
const std::vector<double>& g_row(const Scene& sc, ReplicaCtx& ctx, int yidx);

// CDF of the conditional re-entry law over the alphabet for exit point yidx.
const std::vector<double>& hit_cdf(const Scene& sc, ReplicaCtx& ctx, int yidx);

// Draw a start site from the harmonic measure (alphabet index).
int sample_from_harmonic(const Scene& sc, RngStream& rng);

// Draw an alphabet index from a cdf.
int sample_from_cdf(const std::vector<double>& cdf, RngStream& rng);

// Sample one excursion from the given alphabet site.
ExcursionPtr sample_alphabet_excursion(const Scene& sc, int site, RngStream& rng);

} // namespace ris

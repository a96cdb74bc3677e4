#include "ris/processes.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace ris {

// --- scene helpers ----------------------------------------------------------

int sample_from_cdf(const std::vector<double>& cdf, RngStream& rng) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = static_cast<std::size_t>(it - cdf.begin());
    return static_cast<int>(std::min(idx, cdf.size() - 1));
}

int sample_from_harmonic(const Scene& sc, RngStream& rng) { return sample_from_cdf(sc.ebar_cdf, rng); }

ExcursionPtr sample_alphabet_excursion(const Scene& sc, int site, RngStream& rng) {
    return std::make_shared<Excursion>(sample_excursion(sc.alphabet[static_cast<std::size_t>(site)], sc.cfg,
                                                        sc.kindex, sc.cfg.K.size(), rng, sc.opts.memory_lean));
}

const std::vector<double>& g_row(const Scene& sc, ReplicaCtx& ctx, int yidx) {
    auto it = ctx.g_rows.find(yidx);
    if (it != ctx.g_rows.end()) return it->second;
    const Eigen::VectorXd cond = hitting_distribution(sc.cfg.beVR[yidx], sc.cfg, *sc.hit);
    std::vector<double> row(sc.alphabet.size());
    for (std::size_t a = 0; a < sc.alphabet.size(); ++a)
        row[a] = cond(sc.alphabet_to_K[a]) / sc.ebar[a];
    return ctx.g_rows.emplace(yidx, std::move(row)).first->second;
}

const std::vector<double>& hit_cdf(const Scene& sc, ReplicaCtx& ctx, int yidx) {
    auto it = ctx.hit_cdfs.find(yidx);
    if (it != ctx.hit_cdfs.end()) return it->second;
    const Eigen::VectorXd cond = hitting_distribution(sc.cfg.beVR[yidx], sc.cfg, *sc.hit);
    std::vector<double> cdf(sc.alphabet.size());
    double acc = 0.0;
    for (std::size_t a = 0; a < sc.alphabet.size(); ++a) {
        acc += cond(sc.alphabet_to_K[a]);
        cdf[a] = acc;
    }
    // renormalize away the (tiny) interior mass
    for (auto& v : cdf) v /= acc;
    return ctx.hit_cdfs.emplace(yidx, std::move(cdf)).first->second;
}

// --- chain: exact expected excursion counts ---------------------------------

namespace {

ChainStats chain_exact(const Configuration& cfg, const GreenTable& green, const EquilibriumData& eqK,
                       const HitKernel& hit, const EscapeTable& esc, const SceneOptions& opts) {
    const int nK = cfg.K.size();
    BallSolver s1(cfg.ball1, opts.cg_tol);
    BallSolver s2(cfg.ball2, opts.cg_tol);

    // psi(y) = E_y[h(entry site); K hit] evaluated on the whole separating
    // boundary, then extended harmonically into each ball. The fixed point of
    // h = 1 + (extension at K) is the expected excursion count per entry.
    const int nShell = cfg.beVR.size();
    Eigen::VectorXd h = Eigen::VectorXd::Ones(nK);
    std::vector<double> psi(static_cast<std::size_t>(nShell), 0.0);

    Eigen::VectorXd rho_h = Eigen::VectorXd::Zero(nK);
    double last_delta = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const Eigen::VectorXd vt = hit.solveK(h);
        for (int j = 0; j < nShell; ++j) {
            const Point& y = cfg.beVR[j];
            double acc = 0.0;
            for (int z = 0; z < nK; ++z) acc += green.eval(y - cfg.K[z]) * vt(z);
            psi[static_cast<std::size_t>(j)] = acc;
        }
        auto shell_fn = [&](const Point& p) {
            auto idx = cfg.beVR.index_of(p);
            return idx ? psi[static_cast<std::size_t>(*idx)] : 0.0;
        };
        const std::vector<double> u1 = s1.harmonic_extension(shell_fn);
        const std::vector<double> u2 = s2.harmonic_extension(shell_fn);
        for (int z = 0; z < nK; ++z) {
            const Point& x = cfg.K[z];
            if (cfg.ball1.contains(x)) {
                auto i = s1.index_of(x);
                rho_h(z) = u1[static_cast<std::size_t>(*i)];
            } else {
                auto i = s2.index_of(x);
                rho_h(z) = u2[static_cast<std::size_t>(*i)];
            }
        }
        Eigen::VectorXd hn = Eigen::VectorXd::Ones(nK) + rho_h;
        const double delta = (hn - h).cwiseAbs().maxCoeff();
        h = hn;
        if (delta <= 1e-13 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
            last_delta = delta;
            break;
        }
        last_delta = delta;
    }

    ChainStats cs;
    cs.exact = true;
    const double ucap = cfg.u * eqK.cap;
    const double q = esc.q;
    const double ebar_rho_h = eqK.hbar.dot(rho_h);
    cs.e_theta = ucap * ((1.0 - q) + ebar_rho_h);
    cs.e_ntot = cs.e_theta + q * ucap;
    cs.e_t1 = (1.0 - q) > 1e-14 ? cs.e_theta / ((1.0 - q) * ucap) : 1.0;
    cs.identity_gap = last_delta; // fixed-point convergence certificate
    return cs;
}

} // namespace

// --- counts / builders -------------------------------------------------------

std::pair<std::uint64_t, std::uint64_t> sample_counts(double q, double ucap, RngStream& rng) {
    if (!(ucap >= 0.0) || !(q >= 0.0) || !(q <= 1.0)) throw ValidationError("sample_counts: bad parameters");
    const std::uint64_t n1 = rng.poisson((1.0 - q) * ucap);
    const std::uint64_t n2 = rng.poisson(q * ucap);
    return {n1, n2};
}

RiBuilder::RiBuilder(const Scene& sc, ReplicaCtx& ctx) : sc_(sc), ctx_(ctx), slt_(sc, ctx) {}

void RiBuilder::run_trajectories(std::uint64_t n1) {
    const double q = sc_.q();
    for (std::uint64_t j = 0; j < n1; ++j) {
        std::uint32_t steps_this = 0;
        auto [xi, mark] = slt_.next_unit();
        (void)xi;
        for (;;) {
            ++steps_this;
            const int yidx = sc_.shell_index(mark.exc->end);
            if (yidx < 0) throw ValidationError("ri: excursion end not on the separating boundary");
            const double p = sc_.p_at_shell(yidx);
            double kappa;
            if (steps_this == 1)
                kappa = (1.0 - q) > 0.0 ? (p - q) / (1.0 - q) : 1.0;
            else
                kappa = p;
            const double zeta = ctx_.zeta.uniform();
            ++zeta_used_;
            if (zeta <= kappa) break;
            std::tie(xi, mark) = slt_.next(g_row(sc_, ctx_, yidx), yidx);
            if (steps_this > 100'000'000) throw ValidationError("ri: runaway trajectory");
        }
        T_.push_back(steps_this);
        theta_ += steps_this;
    }
}

void RiBuilder::run_unit_steps(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) slt_.next_unit();
}

RiSample RiBuilder::assemble(std::uint64_t n1, std::uint64_t n2) const {
    RiSample s;
    s.N1 = n1;
    s.T = T_;
    s.Theta = theta_;
    s.N2 = n2;
    s.Ntot = theta_ + n2;
    s.zeta_used = zeta_used_;
    const auto& tr = slt_.transcript();
    s.excursions.reserve(tr.size());
    for (const auto& st : tr) s.excursions.push_back(st.exc);
    s.Gfinal.reserve(slt_.G().size());
    for (auto v : slt_.G()) s.Gfinal.push_back(static_cast<double>(v));
    s.check_invariants();
    return s;
}

void RiSample::check_invariants() const {
    std::uint64_t sum = 0;
    for (auto t : T) {
        if (t < 1) throw ValidationError("ri sample: trajectory with no excursion");
        sum += t;
    }
    if (sum != Theta) throw ValidationError("ri sample: Theta mismatch");
    if (Theta + N2 != Ntot) throw ValidationError("ri sample: Ntot mismatch");
    if (excursions.size() != Ntot) throw ValidationError("ri sample: excursion count mismatch");
    if (T.size() != N1) throw ValidationError("ri sample: trajectory count mismatch");
}

RiSample build_ri(const Scene& sc, ReplicaCtx& ctx) {
    auto [n1, n2] = sample_counts(sc.q(), sc.ucap(), ctx.counts);
    RiBuilder rb(sc, ctx);
    rb.run_trajectories(n1);
    rb.run_unit_steps(n2);
    return rb.assemble(n1, n2);
}

NsSample build_ns(const Scene& sc, ReplicaCtx& ctx) {
    NsSample s;
    s.Nprime = ctx.counts.poisson(sc.chain.e_ntot);
    s.excursions.reserve(s.Nprime);
    for (std::uint64_t i = 0; i < s.Nprime; ++i) {
        const int a = sample_from_harmonic(sc, ctx.paths);
        s.excursions.push_back(sample_alphabet_excursion(sc, a, ctx.paths));
    }
    return s;
}

double mean_total_excursions(const Scene& sc) { return sc.chain.e_ntot; }

std::vector<ExcursionPtr> direct_trajectory(const Scene& sc, ReplicaCtx& ctx, RngStream& rng, TrajectoryMode mode) {
    std::vector<ExcursionPtr> out;
    int site = sample_from_harmonic(sc, rng);
    for (;;) {
        out.push_back(sample_alphabet_excursion(sc, site, rng));
        const int yidx = sc.shell_index(out.back()->end);
        if (yidx < 0) throw ValidationError("direct_trajectory: end not on the separating boundary");
        double stop;
        switch (mode) {
            case TrajectoryMode::ForcedEscape: stop = 1.0; break;
            case TrajectoryMode::KappaFirst:
                stop = out.size() == 1 ? (sc.p_at_shell(yidx) - sc.q()) / std::max(1.0 - sc.q(), 1e-300)
                                       : sc.p_at_shell(yidx);
                break;
            case TrajectoryMode::Standard:
            default: stop = sc.p_at_shell(yidx); break;
        }
        if (rng.uniform() <= stop) break;
        site = sample_from_cdf(hit_cdf(sc, ctx, yidx), rng);
        if (out.size() > 100'000'000) throw ValidationError("direct_trajectory: runaway");
    }
    return out;
}

// --- scene assembly -----------------------------------------------------------

Scene build_scene(const Configuration& cfg, const SceneOptions& opts) {
    Scene sc;
    sc.cfg = cfg;
    sc.opts = opts;
    sc.green = shared_green_table(cfg.d, opts.green_order);
    sc.eqK = equilibrium_measure(cfg.K, *sc.green);
    sc.eqK1 = equilibrium_measure(cfg.K1, *sc.green);
    sc.eqK2 = equilibrium_measure(cfg.K2, *sc.green);
    sc.esc = escape_table(cfg, sc.eqK, *sc.green);
    sc.hit = std::make_unique<HitKernel>(cfg.K, *sc.green);
    if (!sc.esc.regime_ok)
        std::cerr << "[scene] warning: q = " << sc.esc.q
                  << " < 1/2; constructions proceed outside the bound regime\n";

    for (int i = 0; i < cfg.bK.size(); ++i) {
        const auto ki = cfg.K.index_of(cfg.bK[i]);
        if (!ki) throw ValidationError("scene: boundary site missing from K");
        if (sc.eqK.hbar(*ki) > 0.0) {
            sc.alphabet.push_back(cfg.bK[i]);
            sc.alphabet_to_K.push_back(*ki);
            sc.ebar.push_back(sc.eqK.hbar(*ki));
        }
    }
    if (sc.alphabet.empty()) throw ValidationError("scene: empty start alphabet");
    sc.ebar_cdf.resize(sc.ebar.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < sc.ebar.size(); ++i) {
        acc += sc.ebar[i];
        sc.ebar_cdf[i] = acc;
    }
    for (auto& v : sc.ebar_cdf) v /= acc;
    sc.kindex = BoxIndex(cfg.K);
    sc.alpha_index = BoxIndex(SiteSet::from_points(sc.alphabet));

    if (cfg.ball1.site_count() <= opts.chain_exact_max_ball_sites) {
        sc.chain = chain_exact(cfg, *sc.green, sc.eqK, *sc.hit, sc.esc, opts);
    } else {
        // Monte Carlo estimate of E[T1] with the modified first-stop rule.
        ChainStats cs;
        cs.exact = false;
        ReplicaCtx octx = ReplicaCtx::derive(opts.chain_mc_seed, 0);
        RngStream rng = seed_derive(opts.chain_mc_seed, 1, RngPurpose::Oracle);
        double sum = 0.0, sum2 = 0.0;
        const auto n = opts.chain_mc_trajectories;
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto exc = direct_trajectory(sc, octx, rng, TrajectoryMode::KappaFirst);
            const double t = static_cast<double>(exc.size());
            sum += t;
            sum2 += t * t;
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
        cs.e_t1 = mean;
        const double ucap = cfg.u * sc.eqK.cap;
        cs.e_theta = (1.0 - sc.esc.q) * ucap * mean;
        cs.ci_e_theta = (1.0 - sc.esc.q) * ucap * 1.96 * std::sqrt(var / static_cast<double>(n));
        cs.e_ntot = cs.e_theta + sc.esc.q * ucap;
        sc.chain = cs;
    }
    return sc;
}

} // namespace ris

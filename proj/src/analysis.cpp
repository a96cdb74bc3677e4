#include "ris/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace ris {

namespace {

double half_l1(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
    return 0.5 * s;
}

} // namespace

std::pair<double, double> tv_empirical(const TraceHistogram& h1, const TraceHistogram& h2, int resamples,
                                       std::uint64_t boot_seed) {
    if (h1.counts.size() != h2.counts.size()) throw ValidationError("tv_empirical: outcome spaces differ");
    if (h1.total == 0 || h2.total == 0) throw ValidationError("tv_empirical: empty histogram");
    std::vector<double> p(h1.counts.size()), q(h2.counts.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = static_cast<double>(h1.counts[i]) / static_cast<double>(h1.total);
        q[i] = static_cast<double>(h2.counts[i]) / static_cast<double>(h2.total);
    }
    const double tv = half_l1(p, q);

    RngStream rng(boot_seed, 0);
    std::vector<double> tvs;
    tvs.reserve(static_cast<std::size_t>(resamples));
    std::vector<double> bp(p.size()), bq(q.size());
    for (int r = 0; r < resamples; ++r) {
        double st1 = 0.0, st2 = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            bp[i] = h1.counts[i] ? static_cast<double>(rng.poisson(static_cast<double>(h1.counts[i]))) : 0.0;
            bq[i] = h2.counts[i] ? static_cast<double>(rng.poisson(static_cast<double>(h2.counts[i]))) : 0.0;
            st1 += bp[i];
            st2 += bq[i];
        }
        if (st1 == 0.0 || st2 == 0.0) continue;
        for (std::size_t i = 0; i < p.size(); ++i) {
            bp[i] /= st1;
            bq[i] /= st2;
        }
        tvs.push_back(half_l1(bp, bq));
    }
    std::sort(tvs.begin(), tvs.end());
    double ci = 0.0;
    if (tvs.size() > 40) {
        const auto lo = tvs[static_cast<std::size_t>(0.025 * static_cast<double>(tvs.size()))];
        const auto hi = tvs[static_cast<std::size_t>(0.975 * static_cast<double>(tvs.size()))];
        ci = 0.5 * (hi - lo);
    }
    return {tv, ci};
}

namespace {

template <typename MaskFn>
TraceHistogram histogram_threaded(const Scene& sc, std::uint64_t replicas, int threads, MaskFn&& fn) {
    if (sc.cfg.K.size() > 20) throw ValidationError("trace histogram: |K| > 20");
    threads = std::max(1, threads);
    std::vector<TraceHistogram> parts;
    parts.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) parts.emplace_back(sc.cfg.K.size());
    auto work = [&](int tid) {
        for (std::uint64_t r = static_cast<std::uint64_t>(tid); r < replicas;
             r += static_cast<std::uint64_t>(threads))
            parts[static_cast<std::size_t>(tid)].add(fn(r));
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    TraceHistogram out(sc.cfg.K.size());
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += p.counts[i];
        out.total += p.total;
    }
    return out;
}

} // namespace

TraceHistogram trace_histogram_ri(const Scene& sc, std::uint64_t replicas, std::uint64_t seed, int threads) {
    return histogram_threaded(sc, replicas, threads, [&](std::uint64_t r) {
        ReplicaCtx ctx = ReplicaCtx::derive(seed, r);
        const RiSample s = build_ri(sc, ctx);
        return trace_of(s.excursions, sc.cfg.K.size()).low();
    });
}

TraceHistogram trace_histogram_ns(const Scene& sc, std::uint64_t replicas, std::uint64_t seed, int threads) {
    return histogram_threaded(sc, replicas, threads, [&](std::uint64_t r) {
        ReplicaCtx ctx = ReplicaCtx::derive(seed, r);
        const NsSample s = build_ns(sc, ctx);
        return trace_of(s.excursions, sc.cfg.K.size()).low();
    });
}

TraceHistogram histogram_of(const std::vector<CoupledSummary>& rows, int nsites, bool ns_side) {
    TraceHistogram h(nsites);
    for (const auto& s : rows) h.add(ns_side ? s.ns_mask : s.ri_mask);
    return h;
}

std::vector<int> window_bits(const Configuration& cfg, bool second) {
    const SiteSet& w = second ? cfg.K2 : cfg.K1;
    std::vector<int> bits;
    bits.reserve(static_cast<std::size_t>(w.size()));
    for (const auto& p : w) {
        auto idx = cfg.K.index_of(p);
        if (!idx) throw ValidationError("window_bits: site missing from K");
        bits.push_back(*idx);
    }
    return bits;
}

std::uint32_t project_mask(std::uint32_t kmask, const std::vector<int>& bits) {
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if ((kmask >> bits[i]) & 1u) out |= (1u << i);
    return out;
}

CovEstimate covariance_experiment(const Scene& sc, const TruthTable& f1, const TruthTable& f2,
                                  std::uint64_t replicas, std::uint64_t seed, int threads, int batches) {
    if ((1u << f1.nsites) != f1.f.size() || (1u << f2.nsites) != f2.f.size())
        throw ValidationError("covariance_experiment: truth table size mismatch");
    if (f1.nsites != sc.cfg.K1.size() || f2.nsites != sc.cfg.K2.size())
        throw ValidationError("covariance_experiment: truth table does not match the window sizes");
    const auto bits1 = window_bits(sc.cfg, false);
    const auto bits2 = window_bits(sc.cfg, true);
    threads = std::max(1, threads);
    batches = std::max(2, batches);

    // Values land in replica-id slots and are reduced in id order, so the
    // result is byte-identical for any thread count.
    std::vector<std::pair<double, double>> vals(replicas);
    auto work = [&](int tid) {
        for (std::uint64_t r = static_cast<std::uint64_t>(tid); r < replicas;
             r += static_cast<std::uint64_t>(threads)) {
            ReplicaCtx ctx = ReplicaCtx::derive(seed, r);
            const RiSample s = build_ri(sc, ctx);
            const std::uint32_t mask = trace_of(s.excursions, sc.cfg.K.size()).low();
            vals[r] = {f1.eval(project_mask(mask, bits1)), f2.eval(project_mask(mask, bits2))};
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    struct Acc {
        double s1 = 0.0, s2 = 0.0, s12 = 0.0;
        std::uint64_t n = 0;
    };
    std::vector<Acc> batch_accs(static_cast<std::size_t>(batches));
    for (std::uint64_t r = 0; r < replicas; ++r) {
        Acc& a = batch_accs[static_cast<std::size_t>(r % static_cast<std::uint64_t>(batches))];
        a.s1 += vals[r].first;
        a.s2 += vals[r].second;
        a.s12 += vals[r].first * vals[r].second;
        ++a.n;
    }

    CovEstimate ce;
    ce.replicas = replicas;
    double S1 = 0.0, S2 = 0.0, S12 = 0.0;
    std::uint64_t n = 0;
    std::vector<double> bcov;
    for (const auto& a : batch_accs) {
        S1 += a.s1;
        S2 += a.s2;
        S12 += a.s12;
        n += a.n;
        if (a.n > 1) {
            const double m1 = a.s1 / static_cast<double>(a.n);
            const double m2 = a.s2 / static_cast<double>(a.n);
            bcov.push_back(a.s12 / static_cast<double>(a.n) - m1 * m2);
        }
    }
    ce.mean1 = S1 / static_cast<double>(n);
    ce.mean2 = S2 / static_cast<double>(n);
    ce.cov = S12 / static_cast<double>(n) - ce.mean1 * ce.mean2;
    double bm = 0.0;
    for (auto v : bcov) bm += v;
    bm /= static_cast<double>(bcov.size());
    double bv = 0.0;
    for (auto v : bcov) bv += (v - bm) * (v - bm);
    bv /= std::max<double>(1.0, static_cast<double>(bcov.size()) - 1.0);
    ce.ci = 1.96 * std::sqrt(bv / static_cast<double>(bcov.size()));
    return ce;
}

double sup_g_deviation(const Scene& sc) {
    double dev = 0.0;
    for (int j = 0; j < sc.cfg.beVR.size(); ++j) {
        const Eigen::VectorXd cond = hitting_distribution(sc.cfg.beVR[j], sc.cfg, *sc.hit);
        for (std::size_t a = 0; a < sc.alphabet.size(); ++a) {
            const double g = cond(sc.alphabet_to_K[a]) / sc.ebar[a];
            dev = std::max(dev, std::fabs(g - 1.0));
        }
    }
    return dev;
}

double poisson_inv_sqrt_moment(double lambda) {
    if (lambda <= 0.0) return 0.0;
    double term = std::exp(-lambda);
    long double sum = 0.0L;
    for (std::uint64_t n = 1; n < 100000; ++n) {
        term *= lambda / static_cast<double>(n);
        const double add = term / std::sqrt(static_cast<double>(n));
        sum += static_cast<long double>(add);
        if (n > lambda && add < 1e-18) break;
    }
    return static_cast<double>(sum);
}

LemmaRung lemma_rung(const Scene& sc) {
    LemmaRung r;
    r.dist = set_distance(sc.cfg.K1, sc.cfg.K2);
    r.R = sc.cfg.R;
    r.delta = sc.cfg.delta;
    r.q = sc.q();
    r.one_minus_q = 1.0 - sc.q();
    r.regime_ok = sc.esc.regime_ok;
    r.sup_g_dev = sup_g_deviation(sc);
    r.cap_K = sc.eqK.cap;
    r.cap_K1 = sc.eqK1.cap;

    double margin = 1e300;
    auto check_side = [&](const EquilibriumData& eqi, const SiteSet& Ki) {
        const SiteSet bd = internal_boundary(Ki);
        for (const auto& y : bd) {
            const auto kidx = sc.cfg.K.index_of(y);
            const auto iidx = eqi.K.index_of(y);
            if (!kidx || !iidx) throw ValidationError("lemma_rung: boundary site missing");
            margin = std::min(margin, sc.eqK.hbar(*kidx) - 0.25 * eqi.hbar(*iidx));
        }
    };
    check_side(sc.eqK1, sc.cfg.K1);
    check_side(sc.eqK2, sc.cfg.K2);
    r.harm_quarter_margin = margin;

    const double lam22 = 0.5 * sc.q() * sc.ucap();
    r.e_n22_invsqrt = poisson_inv_sqrt_moment(lam22);
    r.e_n22_bound = 4.0 * std::sqrt(3.0) / std::sqrt(sc.cfg.u * sc.eqK1.cap);
    r.p_n1pos_n22zero = (1.0 - std::exp(-(1.0 - sc.q()) * sc.ucap())) * std::exp(-lam22);
    r.shape_ref = std::sqrt(sc.cfg.u) * std::pow(sc.eqK1.cap, 1.5) / std::pow(sc.cfg.R, sc.cfg.d - 2);
    return r;
}

ScalingFit fit_scaling(const std::vector<double>& xvals, const std::vector<FailureEstimate>& fes,
                       std::uint64_t min_failures) {
    if (xvals.size() != fes.size()) throw ValidationError("fit_scaling: size mismatch");
    ScalingFit out;
    std::vector<double> x, y, s;
    for (std::size_t i = 0; i < xvals.size(); ++i) {
        if (fes[i].failures < min_failures) {
            out.censored.push_back(static_cast<int>(i));
            continue;
        }
        out.used.push_back(static_cast<int>(i));
        x.push_back(std::log(xvals[i]));
        y.push_back(std::log(fes[i].phat));
        // delta-method sigma of log(phat)
        const double sig = 0.5 * (fes[i].hi - fes[i].lo) / (1.959963984540054 * fes[i].phat);
        s.push_back(std::max(sig, 1e-6));
    }
    if (x.size() >= 2) out.line = weighted_line_fit(x, y, s);
    return out;
}

} // namespace ris

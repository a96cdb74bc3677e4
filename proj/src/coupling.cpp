#include "ris/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <thread>

namespace ris {

namespace {

// Poisson pmf 0..n-1 via log-space evaluation (stable for any lambda).
std::vector<double> poisson_pmf(double lambda, std::size_t n) {
    std::vector<double> p(n, 0.0);
    if (lambda == 0.0) {
        if (n > 0) p[0] = 1.0;
        return p;
    }
    const double ll = std::log(lambda);
    for (std::size_t j = 0; j < n; ++j) {
        const double lp = static_cast<double>(j) * ll - lambda - std::lgamma(static_cast<double>(j) + 1.0);
        p[j] = std::exp(lp);
    }
    return p;
}

std::size_t pmf_support(double lambda, long long extra) {
    const double span = lambda + 12.0 * std::sqrt(lambda + 1.0) + 40.0;
    return static_cast<std::size_t>(span) + static_cast<std::size_t>(std::llabs(extra)) + 2;
}

} // namespace

double poisson_shift_tv(double theta, long long k) {
    if (!(theta > 0.0)) throw ValidationError("poisson_shift_tv: theta must be positive");
    if (k == 0) return 0.0;
    const std::size_t n = pmf_support(theta, k);
    const std::vector<double> p = poisson_pmf(theta, n);
    auto at = [&](long long j) { return (j < 0 || j >= static_cast<long long>(n)) ? 0.0 : p[static_cast<std::size_t>(j)]; };
    long double tv = 0.0L;
    for (long long j = 0; j < static_cast<long long>(n); ++j) {
        const double diff = at(j) - at(j - k);
        if (diff > 0.0) tv += static_cast<long double>(diff);
    }
    const double out = static_cast<double>(tv);
    const double bound = static_cast<double>(std::llabs(k)) / std::sqrt(theta);
    if (out > bound + 1e-12)
        throw ValidationError("poisson_shift_tv: value exceeds the |k|/sqrt(theta) bound");
    return std::min(out, 1.0);
}

int PoissonShiftCoupler::window_for(double mean_scale, double sd_scale) {
    // ~1e-12 tail for a light-tailed centered difference: mean offset plus a
    // generous multiple of the sd, floor of 64.
    const int w = static_cast<int>(std::ceil(mean_scale + 14.0 * sd_scale + 40.0));
    return std::max(64, w);
}

PoissonShiftCoupler::PoissonShiftCoupler(double lambda, int window) : lambda_(lambda), window_(window) {
    if (!(lambda > 0.0)) throw ValidationError("shift coupler: lambda must be positive");
    const std::size_t n = pmf_support(lambda, window);
    pmf_ = poisson_pmf(lambda, n);
    tables_.resize(static_cast<std::size_t>(2 * window + 1));
    auto at = [&](long long j) { return (j < 0 || j >= static_cast<long long>(n)) ? 0.0 : pmf_[static_cast<std::size_t>(j)]; };
    for (int k = -window; k <= window; ++k) {
        KTable& t = tables_[static_cast<std::size_t>(k + window)];
        const long long len = static_cast<long long>(n) + std::max<long long>(k, 0);
        t.overlap_cdf.resize(static_cast<std::size_t>(len));
        t.resid_y_cdf.resize(static_cast<std::size_t>(len));
        t.resid_x_cdf.resize(static_cast<std::size_t>(len));
        long double om = 0.0L, ry = 0.0L, rx = 0.0L;
        for (long long j = 0; j < len; ++j) {
            const double py = at(j);       // Ytilde pmf
            const double px = at(j - k);   // (k + Xtilde) pmf
            const double o = std::min(py, px);
            om += o;
            ry += py - o;
            rx += px - o;
            t.overlap_cdf[static_cast<std::size_t>(j)] = static_cast<double>(om);
            t.resid_y_cdf[static_cast<std::size_t>(j)] = static_cast<double>(ry);
            t.resid_x_cdf[static_cast<std::size_t>(j)] = static_cast<double>(rx);
        }
        t.overlap_mass = static_cast<double>(om);
        const double norm_o = static_cast<double>(om), norm_y = static_cast<double>(ry), norm_x = static_cast<double>(rx);
        for (auto& v : t.overlap_cdf) v = norm_o > 0.0 ? v / norm_o : 1.0;
        for (auto& v : t.resid_y_cdf) v = norm_y > 0.0 ? v / norm_y : 1.0;
        for (auto& v : t.resid_x_cdf) v = norm_x > 0.0 ? v / norm_x : 1.0;
    }
}

double PoissonShiftCoupler::tv(long long k) const {
    if (k == 0) return 0.0;
    if (std::llabs(k) <= window_)
        return 1.0 - tables_[static_cast<std::size_t>(k + window_)].overlap_mass;
    return poisson_shift_tv(lambda_, k);
}

std::pair<std::uint64_t, std::uint64_t> PoissonShiftCoupler::sample(long long k, RngStream& rng) const {
    if (std::llabs(k) > window_) {
        // effectively disjoint supports: independent draws
        const std::uint64_t x = rng.poisson(lambda_);
        const std::uint64_t y = rng.poisson(lambda_);
        return {x, y};
    }
    const KTable& t = tables_[static_cast<std::size_t>(k + window_)];
    const double u = rng.uniform();
    auto draw = [&](const std::vector<double>& cdf) {
        const double v = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
        return static_cast<long long>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
    };
    if (u < t.overlap_mass) {
        const long long j = draw(t.overlap_cdf); // Ytilde = j, Xtilde = j - k
        return {static_cast<std::uint64_t>(j - k), static_cast<std::uint64_t>(j)};
    }
    const long long y = draw(t.resid_y_cdf);
    const long long xk = draw(t.resid_x_cdf);
    return {static_cast<std::uint64_t>(xk - k), static_cast<std::uint64_t>(y)};
}

std::vector<double> psi_density(const std::vector<double>& GI, double Gp, const std::vector<double>& ebar) {
    std::vector<double> psi(GI.size(), 0.0);
    long double z = 0.0L;
    for (std::size_t i = 0; i < GI.size(); ++i) {
        const double pos = std::max(0.0, Gp - GI[i]);
        psi[i] = pos;
        z += static_cast<long double>(pos) * static_cast<long double>(ebar[i]);
    }
    if (z <= 0.0L) {
        std::fill(psi.begin(), psi.end(), 1.0);
        return psi;
    }
    const double invz = 1.0 / static_cast<double>(z);
    for (auto& v : psi) v *= invz;
    return psi;
}

namespace {

struct NsMark {
    long double level;
    int site;
    std::uint64_t seq; // deterministic tie-break
    ExcursionPtr exc;  // null for not-yet-sampled glue
    bool glue;
};
struct NsMarkCmp {
    bool operator()(const NsMark& a, const NsMark& b) const {
        if (a.level != b.level) return a.level > b.level; // min-heap
        if (a.site != b.site) return a.site > b.site;
        return a.seq > b.seq;
    }
};

bool multiset_equal(std::vector<ExcursionPtr> a, std::vector<ExcursionPtr> b) {
    if (a.size() != b.size()) return false;
    auto lt = [](const ExcursionPtr& x, const ExcursionPtr& y) { return Excursion::order(*x, *y); };
    std::sort(a.begin(), a.end(), lt);
    std::sort(b.begin(), b.end(), lt);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        if (!a[i]->same_path(*b[i])) return false;
    }
    return true;
}

} // namespace

PoissonShiftCoupler make_scene_coupler(const Scene& sc) {
    const double lam = 0.5 * sc.q() * sc.ucap();
    // Shift k = Theta - N1'; both are light-tailed with mean E[Theta].
    const double mean_scale = 2.0 * sc.chain.e_theta;
    const double sd_scale = std::sqrt(std::max(1.0, 4.0 * sc.chain.e_theta));
    return PoissonShiftCoupler(lam, PoissonShiftCoupler::window_for(mean_scale, sd_scale));
}

CouplingRecord build_coupled_pair(const Scene& sc, const PoissonShiftCoupler& coupler, ReplicaCtx& ctx,
                                  std::uint64_t replica_id, std::uint64_t master_seed) {
    CouplingRecord rec;
    rec.replica_id = replica_id;
    rec.master_seed = master_seed;
    const double q = sc.q();
    const double ucap = sc.ucap();

    rec.N1 = ctx.counts.poisson((1.0 - q) * ucap);
    rec.N1p = ctx.counts.poisson(sc.chain.e_theta);
    rec.N22 = ctx.counts.poisson(0.5 * q * ucap);

    RiBuilder rb(sc, ctx);
    rb.run_trajectories(rec.N1);
    rec.Theta = rb.theta();

    const long long k = static_cast<long long>(rec.Theta) - static_cast<long long>(rec.N1p);
    auto [n21, n21p] = coupler.sample(k, ctx.coupling);
    rec.N21 = n21;
    rec.N21p = n21p;

    rb.run_unit_steps(rec.N21);
    const std::vector<long double> G_snap = rb.slt().G();

    rb.run_unit_steps(rec.N22);
    const int tail_from = static_cast<int>(rec.Theta + rec.N21);
    std::vector<long double> tail_prefix(rec.N22 + 1, 0.0L);
    {
        const auto& tr = rb.slt().transcript();
        for (std::uint64_t i = 0; i < rec.N22; ++i)
            tail_prefix[i + 1] = tail_prefix[i] + tr[static_cast<std::size_t>(tail_from) + i].xi;
    }
    rec.Xi22 = static_cast<double>(tail_prefix[rec.N22]);

    // Resampling of the last N22 marks with fresh harmonic-start excursions,
    // placed exactly on the existing curves.
    std::vector<SltMark> ymarks(rec.N22);
    for (std::uint64_t i = 0; i < rec.N22; ++i) {
        const int a = sample_from_harmonic(sc, ctx.coupling);
        ymarks[i].site = a;
        ymarks[i].level = G_snap[static_cast<std::size_t>(a)] + tail_prefix[i + 1];
        ymarks[i].exc = sample_alphabet_excursion(sc, a, ctx.coupling);
    }
    rb.slt().resample_overwrite(tail_from, ymarks);
    rec.ri = rb.assemble(rec.N1, rec.N21 + rec.N22);

    // The flat companion curve and the band density between the curves.
    long double gmin = G_snap.empty() ? 0.0L : G_snap[0];
    for (auto v : G_snap) gmin = std::min(gmin, v);
    const long double Gp = gmin + static_cast<long double>(rec.Xi22);

    std::vector<double> GI(G_snap.size());
    for (std::size_t i = 0; i < G_snap.size(); ++i) GI[i] = static_cast<double>(G_snap[i]);
    std::vector<double> psi;
    if (rec.N22 >= 1) {
        psi = psi_density(GI, static_cast<double>(Gp), sc.ebar);
        double dev = 0.0;
        for (auto v : psi) dev = std::max(dev, std::fabs(v - 1.0));
        rec.psi_sup_dev = dev;
    }

    // Y' coordinates: conditionally maximal coupling with the Y draws, path
    // reused whenever the start sites agree.
    std::vector<SltMark> ypmarks(rec.N22);
    if (rec.N22 >= 1) {
        const std::size_t ns = sc.ebar.size();
        // law of Y: harmonic measure (normalized over the alphabet)
        std::vector<double> law1(ns);
        double tot1 = 0.0;
        for (std::size_t i = 0; i < ns; ++i) tot1 += sc.ebar[i];
        for (std::size_t i = 0; i < ns; ++i) law1[i] = sc.ebar[i] / tot1;

        auto couple_coordinate = [&](const std::vector<double>& law2, bool identical, std::uint64_t i) {
            const int ysite = ymarks[i].site;
            if (identical) {
                ypmarks[i].site = ysite;
                ypmarks[i].exc = ymarks[i].exc;
                return;
            }
            const double accept = law1[static_cast<std::size_t>(ysite)] > 0.0
                                      ? std::min(1.0, law2[static_cast<std::size_t>(ysite)] /
                                                          law1[static_cast<std::size_t>(ysite)])
                                      : 0.0;
            if (ctx.coupling.uniform() < accept) {
                ypmarks[i].site = ysite;
                ypmarks[i].exc = ymarks[i].exc;
                return;
            }
            // residual of law2 against law1
            std::vector<double> cdf(ns);
            long double acc = 0.0L;
            for (std::size_t s = 0; s < ns; ++s) {
                acc += std::max(0.0, law2[s] - law1[s]);
                cdf[s] = static_cast<double>(acc);
            }
            if (acc <= 0.0L) { // laws equal up to round-off
                ypmarks[i].site = ysite;
                ypmarks[i].exc = ymarks[i].exc;
                return;
            }
            for (auto& v : cdf) v /= static_cast<double>(acc);
            const int s = sample_from_cdf(cdf, ctx.coupling);
            ypmarks[i].site = s;
            ypmarks[i].exc = sample_alphabet_excursion(sc, s, ctx.coupling);
        };

        // coordinates 1..N22-1: density psi against the harmonic base
        if (rec.N22 >= 2) {
            std::vector<double> law2(ns);
            long double z = 0.0L;
            for (std::size_t s = 0; s < ns; ++s) {
                law2[s] = psi[s] * sc.ebar[s];
                z += law2[s];
            }
            for (auto& v : law2) v /= static_cast<double>(z);
            double dev = 0.0;
            for (std::size_t s = 0; s < ns; ++s) dev = std::max(dev, std::fabs(law2[s] - law1[s]));
            const bool identical = dev <= 1e-13;
            for (std::uint64_t i = 0; i + 1 < rec.N22; ++i) couple_coordinate(law2, identical, i);
        }
        // last coordinate: restriction to the open band
        {
            std::vector<double> law2(ns, 0.0);
            long double z = 0.0L;
            for (std::size_t s = 0; s < ns; ++s) {
                if (Gp > G_snap[s]) {
                    law2[s] = sc.ebar[s];
                    z += law2[s];
                }
            }
            bool identical = false;
            if (z <= 0.0L) {
                law2 = law1; // fallback: unrestricted base law
                identical = true;
            } else {
                for (auto& v : law2) v /= static_cast<double>(z);
                double dev = 0.0;
                for (std::size_t s = 0; s < ns; ++s) dev = std::max(dev, std::fabs(law2[s] - law1[s]));
                identical = dev <= 1e-13;
            }
            couple_coordinate(law2, identical, rec.N22 - 1);
        }

        // vertical placement between the curves
        for (std::uint64_t i = 0; i < rec.N22; ++i) {
            const int s = ypmarks[i].site;
            if (i + 1 == rec.N22) {
                ypmarks[i].level = Gp;
            } else {
                const long double band = Gp - G_snap[static_cast<std::size_t>(s)];
                if (band > 0.0L)
                    ypmarks[i].level =
                        G_snap[static_cast<std::size_t>(s)] + band * static_cast<long double>(ctx.coupling.uniform());
                else // unreachable under the band law; kept for the degenerate clause
                    ypmarks[i].level =
                        G_snap[static_cast<std::size_t>(s)] + static_cast<long double>(ctx.coupling.uniform());
            }
        }
    }

    // Noodle-soup side: consume the lowest marks of the surgered process
    // under flat curves; the glued process above the working curves is
    // generated lazily, only as far as the consumption frontier reaches.
    const std::uint64_t ns_total = rec.N1p + rec.N21p + rec.N22;
    std::priority_queue<NsMark, std::vector<NsMark>, NsMarkCmp> heap;
    std::uint64_t seq = 0;
    {
        const auto& tr = rb.slt().transcript();
        for (int i = 0; i < tail_from; ++i)
            heap.push(NsMark{tr[static_cast<std::size_t>(i)].level, tr[static_cast<std::size_t>(i)].site, seq++,
                             tr[static_cast<std::size_t>(i)].exc, false});
    }
    for (std::uint64_t i = 0; i < rec.N22; ++i)
        heap.push(NsMark{ypmarks[i].level, ypmarks[i].site, seq++, ypmarks[i].exc, false});
    std::vector<long double> glue_level(sc.ebar.size());
    for (std::size_t s = 0; s < sc.ebar.size(); ++s) {
        const long double base = std::max(Gp, G_snap[s]);
        glue_level[s] = base + static_cast<long double>(ctx.glue.exponential(sc.ebar[s]));
        heap.push(NsMark{glue_level[s], static_cast<int>(s), seq++, nullptr, true});
    }
    rec.ns.Nprime = ns_total;
    rec.ns.excursions.reserve(ns_total);
    for (std::uint64_t i = 0; i < ns_total; ++i) {
        NsMark m = heap.top();
        heap.pop();
        if (m.glue) {
            const auto s = static_cast<std::size_t>(m.site);
            m.exc = sample_alphabet_excursion(sc, m.site, ctx.glue);
            glue_level[s] += static_cast<long double>(ctx.glue.exponential(sc.ebar[s]));
            heap.push(NsMark{glue_level[s], m.site, seq++, nullptr, true});
        }
        rec.ns.excursions.push_back(m.exc);
    }

    rec.D = (rec.Theta + rec.N21) == (rec.N1p + rec.N21p);
    rec.Upsilon = multiset_equal(rec.ri.excursions, rec.ns.excursions);
    return rec;
}

std::vector<CoupledSummary> run_coupled_replicas(const Scene& sc, const PoissonShiftCoupler& coupler,
                                                 std::uint64_t replicas, std::uint64_t master_seed, int threads) {
    threads = std::max(1, threads);
    std::vector<CoupledSummary> rows(replicas);
    const bool small_k = sc.cfg.K.size() <= 32;
    auto work = [&](int tid) {
        for (std::uint64_t r = static_cast<std::uint64_t>(tid); r < replicas;
             r += static_cast<std::uint64_t>(threads)) {
            ReplicaCtx ctx = ReplicaCtx::derive(master_seed, r);
            const CouplingRecord rec = build_coupled_pair(sc, coupler, ctx, r, master_seed);
            CoupledSummary& s = rows[r];
            s.Theta = rec.Theta;
            s.N1p = rec.N1p;
            s.N1 = static_cast<std::uint32_t>(rec.N1);
            s.N21 = static_cast<std::uint32_t>(rec.N21);
            s.N21p = static_cast<std::uint32_t>(rec.N21p);
            s.N22 = static_cast<std::uint32_t>(rec.N22);
            s.D = rec.D;
            s.Upsilon = rec.Upsilon;
            s.psi_sup_dev = static_cast<float>(rec.psi_sup_dev);
            if (small_k) {
                s.ri_mask = trace_of(rec.ri.excursions, sc.cfg.K.size()).low();
                s.ns_mask = trace_of(rec.ns.excursions, sc.cfg.K.size()).low();
            }
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    return rows;
}

FailureEstimate summarize_failures(const std::vector<CoupledSummary>& rows) {
    FailureEstimate fe;
    fe.replicas = rows.size();
    for (const auto& s : rows) {
        if (!s.D) ++fe.ev_Dc;
        if (s.D && s.N1 == 0) ++fe.ev_D_n1zero;
        if (s.D && s.N1 >= 1 && s.N22 == 0) ++fe.ev_D_n1pos_n22zero;
        if (!s.Upsilon) {
            ++fe.failures;
            if (!s.D)
                ++fe.n_Dc;
            else if (s.N1 == 0)
                ++fe.n_D_n1zero;
            else if (s.N22 == 0)
                ++fe.n_D_n1pos_n22zero;
            else
                ++fe.n_remainder;
        }
    }
    const double n = static_cast<double>(fe.replicas);
    fe.phat = static_cast<double>(fe.failures) / n;
    const double z = 1.959963984540054; // Wilson 95%
    const double den = 1.0 + z * z / n;
    const double ctr = (fe.phat + z * z / (2.0 * n)) / den;
    const double hw = (z / den) * std::sqrt(fe.phat * (1.0 - fe.phat) / n + z * z / (4.0 * n * n));
    fe.lo = std::max(0.0, ctr - hw);
    fe.hi = std::min(1.0, ctr + hw);
    return fe;
}

FailureEstimate estimate_coupling_failure(const Scene& sc, const PoissonShiftCoupler& coupler,
                                          std::uint64_t replicas, std::uint64_t master_seed, int threads) {
    if (replicas < 1) throw ValidationError("estimate_coupling_failure: need at least one replica");
    return summarize_failures(run_coupled_replicas(sc, coupler, replicas, master_seed, threads));
}

} // namespace ris

#include "ris/runners.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace ris {

using json = nlohmann::ordered_json;

namespace {

std::string csv_header(const RunConfig& rc) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rc.hash()));
    std::ostringstream os;
    os << "# " << kVersion << "\n# config_hash=" << buf << "\n# seed=" << rc.seed << "\n";
    return os.str();
}

json meta_json(const RunConfig& rc) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rc.hash()));
    json m;
    m["version"] = kVersion;
    m["config_hash"] = buf;
    m["seed"] = rc.seed;
    return m;
}

void write_file(const RunIo& io, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(io.out_dir);
    const std::string path = io.out_dir + "/" + name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("output: cannot write " + path);
    f << content;
}

bool want_csv(const RunIo& io) { return io.format == "csv" || io.format == "both"; }
bool want_json(const RunIo& io) { return io.format == "json" || io.format == "both"; }

std::string fd(double v) { return format_double(v); }

std::string point_fields(const Point& p) {
    std::ostringstream os;
    for (int i = 0; i < p.dim; ++i) {
        if (i) os << ' ';
        os << p.c[i];
    }
    return os.str();
}

} // namespace

SceneOptions scene_options(const RunConfig& rc) {
    SceneOptions so;
    so.green_order = rc.green_order;
    so.cg_tol = rc.cg_tol;
    so.chain_exact_max_ball_sites = rc.chain_exact_max_ball_sites;
    so.chain_mc_trajectories = rc.chain_mc_trajectories;
    so.memory_lean = rc.memory_lean;
    return so;
}

Scene scene_from_config(const RunConfig& rc) {
    return build_scene(make_configuration(rc.make_K1(), rc.make_xhat(), rc.u), scene_options(rc));
}

Scene scene_from_config_at(const RunConfig& rc, std::int64_t xhat1, double u) {
    Point xh = Point::zero(rc.d);
    if (xhat1 < INT32_MIN || xhat1 > INT32_MAX) throw ValidationError("scene: xhat out of range");
    xh.c[0] = static_cast<std::int32_t>(xhat1);
    return build_scene(make_configuration(rc.make_K1(), xh, u), scene_options(rc));
}

TruthTable truth_table_preset(const std::string& name, int nsites) {
    if (nsites > 20) throw ValidationError("truth table: window too large");
    TruthTable t;
    t.nsites = nsites;
    t.f.resize(std::size_t(1) << nsites, 0.0);
    for (std::uint32_t m = 0; m < t.f.size(); ++m) {
        if (name == "const0")
            t.f[m] = 0.0;
        else if (name == "const1")
            t.f[m] = 1.0;
        else if (name == "occupied")
            t.f[m] = m != 0 ? 1.0 : 0.0;
        else if (name == "vacant")
            t.f[m] = m == 0 ? 1.0 : 0.0;
        else if (name == "parity")
            t.f[m] = static_cast<double>(__builtin_popcount(m) & 1);
        else if (name == "origin")
            t.f[m] = static_cast<double>(m & 1u);
        else
            throw ValidationError("truth table: unknown preset '" + name + "'");
    }
    return t;
}

double cov_from_histogram(const TraceHistogram& h, const std::vector<int>& bits1, const std::vector<int>& bits2,
                          const TruthTable& f1, const TruthTable& f2) {
    double s1 = 0.0, s2 = 0.0, s12 = 0.0;
    for (std::uint32_t m = 0; m < h.counts.size(); ++m) {
        if (!h.counts[m]) continue;
        const double w = static_cast<double>(h.counts[m]) / static_cast<double>(h.total);
        const double v1 = f1.eval(project_mask(m, bits1));
        const double v2 = f2.eval(project_mask(m, bits2));
        s1 += w * v1;
        s2 += w * v2;
        s12 += w * v1 * v2;
    }
    return s12 - s1 * s2;
}

std::pair<double, double> cov_from_histogram_ci(const TraceHistogram& h, const std::vector<int>& bits1,
                                                const std::vector<int>& bits2, const TruthTable& f1,
                                                const TruthTable& f2, int resamples, std::uint64_t seed) {
    const double cov = cov_from_histogram(h, bits1, bits2, f1, f2);
    RngStream rng(seed, 0);
    std::vector<double> covs;
    covs.reserve(static_cast<std::size_t>(resamples));
    TraceHistogram b(h.nsites);
    for (int r = 0; r < resamples; ++r) {
        b.total = 0;
        for (std::uint32_t m = 0; m < h.counts.size(); ++m) {
            b.counts[m] = h.counts[m] ? rng.poisson(static_cast<double>(h.counts[m])) : 0;
            b.total += b.counts[m];
        }
        if (b.total == 0) continue;
        covs.push_back(cov_from_histogram(b, bits1, bits2, f1, f2));
    }
    std::sort(covs.begin(), covs.end());
    double ci = 0.0;
    if (covs.size() > 40) {
        const double lo = covs[static_cast<std::size_t>(0.025 * static_cast<double>(covs.size()))];
        const double hi = covs[static_cast<std::size_t>(0.975 * static_cast<double>(covs.size()))];
        ci = 0.5 * (hi - lo);
    }
    return {cov, ci};
}

// --- potential ---------------------------------------------------------------

int run_potential(const RunConfig& rc, const RunIo& io) {
    const Scene sc = scene_from_config(rc);
    if (want_csv(io)) {
        {
            std::ostringstream os;
            os << csv_header(rc) << "site,e,hbar\n";
            for (int i = 0; i < sc.cfg.K.size(); ++i)
                os << point_fields(sc.cfg.K[i]) << ',' << fd(sc.eqK.e(i)) << ',' << fd(sc.eqK.hbar(i)) << '\n';
            write_file(io, "equilibrium.csv", os.str());
        }
        {
            std::ostringstream os;
            os << csv_header(rc) << "site,p_escape\n";
            for (int i = 0; i < sc.cfg.beVR.size(); ++i)
                os << point_fields(sc.cfg.beVR[i]) << ',' << fd(sc.esc.p[static_cast<std::size_t>(i)]) << '\n';
            write_file(io, "escape.csv", os.str());
        }
    }
    if (want_json(io)) {
        json j;
        j["meta"] = meta_json(rc);
        j["d"] = sc.cfg.d;
        j["u"] = sc.cfg.u;
        j["R"] = sc.cfg.R;
        j["delta"] = sc.cfg.delta;
        j["dist_K1_K2"] = set_distance(sc.cfg.K1, sc.cfg.K2);
        j["green_origin"] = sc.green->at_origin();
        j["green_fit_residual"] = sc.green->fit_band_residual();
        j["cap_K"] = sc.eqK.cap;
        j["cap_K1"] = sc.eqK1.cap;
        j["cap_K2"] = sc.eqK2.cap;
        j["equilibrium_residual"] = sc.eqK.residual;
        j["q"] = sc.esc.q;
        j["regime_ok"] = sc.esc.regime_ok;
        j["boundary_sites"] = sc.cfg.beVR.size();
        j["chain"] = {{"e_t1", sc.chain.e_t1},
                      {"e_theta", sc.chain.e_theta},
                      {"e_ntot", sc.chain.e_ntot},
                      {"exact", sc.chain.exact},
                      {"ci_e_theta", sc.chain.ci_e_theta}};
        write_file(io, "potential_summary.json", j.dump(2) + "\n");
    }
    return 0;
}

// --- sample -------------------------------------------------------------------

int run_sample(const RunConfig& rc, const RunIo& io, bool ns_process) {
    const Scene sc = scene_from_config(rc);
    const int ks = sc.cfg.K.size();
    struct Row {
        std::uint64_t n1 = 0, theta = 0, n2 = 0, ntot = 0;
        std::string trace_hex;
    };
    std::vector<Row> rows(rc.replicas);
    const int threads = std::max(1, rc.threads);
    auto work = [&](int tid) {
        for (std::uint64_t r = static_cast<std::uint64_t>(tid); r < rc.replicas;
             r += static_cast<std::uint64_t>(threads)) {
            ReplicaCtx ctx = ReplicaCtx::derive(rc.seed, r);
            Row& row = rows[r];
            if (ns_process) {
                const NsSample s = build_ns(sc, ctx);
                row.ntot = s.Nprime;
                row.trace_hex = trace_of(s.excursions, ks).hex();
            } else {
                const RiSample s = build_ri(sc, ctx);
                row.n1 = s.N1;
                row.theta = s.Theta;
                row.n2 = s.N2;
                row.ntot = s.Ntot;
                row.trace_hex = trace_of(s.excursions, ks).hex();
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

    double mean_ntot = 0.0;
    for (const auto& r : rows) mean_ntot += static_cast<double>(r.ntot);
    mean_ntot /= static_cast<double>(rc.replicas);

    if (want_csv(io)) {
        std::ostringstream os;
        os << csv_header(rc);
        if (ns_process)
            os << "replica,nprime,trace\n";
        else
            os << "replica,n1,theta,n2,ntot,trace\n";
        for (std::uint64_t r = 0; r < rc.replicas; ++r) {
            if (ns_process)
                os << r << ',' << rows[r].ntot << ',' << rows[r].trace_hex << '\n';
            else
                os << r << ',' << rows[r].n1 << ',' << rows[r].theta << ',' << rows[r].n2 << ',' << rows[r].ntot
                   << ',' << rows[r].trace_hex << '\n';
        }
        write_file(io, ns_process ? "samples_ns.csv" : "samples_ri.csv", os.str());
    }
    if (rc.dump_paths && rc.replicas <= 1000) {
        std::string bin;
        std::ostringstream dbg;
        for (std::uint64_t r = 0; r < rc.replicas; ++r) {
            ReplicaCtx ctx = ReplicaCtx::derive(rc.seed, r);
            std::vector<ExcursionPtr> ex;
            if (ns_process)
                ex = build_ns(sc, ctx).excursions;
            else
                ex = build_ri(sc, ctx).excursions;
            for (const auto& e : ex) {
                e->append_binary(bin);
                dbg << "# replica " << r << "\n" << e->to_csv();
            }
        }
        write_file(io, ns_process ? "excursions_ns.bin" : "excursions_ri.bin", bin);
        write_file(io, ns_process ? "excursions_ns.csv" : "excursions_ri.csv", dbg.str());
    }
    if (want_json(io)) {
        json j;
        j["meta"] = meta_json(rc);
        j["process"] = ns_process ? "ns" : "ri";
        j["replicas"] = rc.replicas;
        j["mean_ntot"] = mean_ntot;
        j["expected_ntot"] = ns_process ? sc.chain.e_ntot : sc.chain.e_ntot;
        j["ucap"] = sc.ucap();
        write_file(io, ns_process ? "sample_ns_summary.json" : "sample_ri_summary.json", j.dump(2) + "\n");
    }
    return 0;
}

// --- couple -------------------------------------------------------------------

int run_couple(const RunConfig& rc, const RunIo& io) {
    const Scene sc = scene_from_config(rc);
    const PoissonShiftCoupler coupler = make_scene_coupler(sc);
    const auto rows = run_coupled_replicas(sc, coupler, rc.replicas, rc.seed, rc.threads);
    const FailureEstimate fe = summarize_failures(rows);
    const bool small_k = sc.cfg.K.size() <= 32;

    if (want_csv(io)) {
        std::ostringstream os;
        os << csv_header(rc)
           << "seed,replica,N1,N1p,N21,N21p,N22,Theta,D,Upsilon,psi_sup_dev,ri_trace,ns_trace\n";
        char hexbuf[16];
        for (std::uint64_t r = 0; r < rows.size(); ++r) {
            const auto& s = rows[r];
            os << rc.seed << ',' << r << ',' << s.N1 << ',' << s.N1p << ',' << s.N21 << ',' << s.N21p << ','
               << s.N22 << ',' << s.Theta << ',' << (s.D ? 1 : 0) << ',' << (s.Upsilon ? 1 : 0) << ','
               << fd(static_cast<double>(s.psi_sup_dev)) << ',';
            if (small_k) {
                std::snprintf(hexbuf, sizeof(hexbuf), "%x", s.ri_mask);
                os << hexbuf << ',';
                std::snprintf(hexbuf, sizeof(hexbuf), "%x", s.ns_mask);
                os << hexbuf << '\n';
            } else {
                os << "-,-\n";
            }
        }
        write_file(io, "couple_records.csv", os.str());
    }
    if (want_json(io)) {
        json j;
        j["meta"] = meta_json(rc);
        j["replicas"] = fe.replicas;
        j["failures"] = fe.failures;
        j["phat"] = fe.phat;
        j["wilson_lo"] = fe.lo;
        j["wilson_hi"] = fe.hi;
        j["components"] = {{"Dc", fe.n_Dc},
                           {"D_n1zero", fe.n_D_n1zero},
                           {"D_n1pos_n22zero", fe.n_D_n1pos_n22zero},
                           {"remainder", fe.n_remainder}};
        j["event_freqs"] = {{"Dc", fe.ev_Dc},
                            {"D_n1zero", fe.ev_D_n1zero},
                            {"D_n1pos_n22zero", fe.ev_D_n1pos_n22zero}};
        j["q"] = sc.esc.q;
        j["e_theta"] = sc.chain.e_theta;
        j["coupler_window"] = coupler.window();
        write_file(io, "couple_summary.json", j.dump(2) + "\n");
    }
    return 0;
}

// --- experiments ----------------------------------------------------------------

namespace {

int run_experiment_lemmas(const RunConfig& rc, const RunIo& io) {
    const bool use_rs = rc.kv.has("experiment", "rs") || !rc.kv.has("experiment", "dists");
    const std::vector<double>& ladder = use_rs ? rc.rs : rc.dists;

    std::vector<LemmaRung> rungs;
    for (double v : ladder) {
        const auto x1 = static_cast<std::int64_t>(use_rs ? 2.0 * v + 1.0 : v);
        const Scene sc = scene_from_config_at(rc, x1, rc.u);
        rungs.push_back(lemma_rung(sc));
    }

    // fits over the ladder
    std::vector<double> lx, ly_q, ly_p, ones;
    for (const auto& r : rungs) {
        lx.push_back(std::log(r.R));
        ly_q.push_back(std::log(r.one_minus_q));
        ly_p.push_back(std::log(std::max(r.p_n1pos_n22zero, 1e-300)));
        ones.push_back(1.0);
    }
    const LineFit fit_q = weighted_line_fit(lx, ly_q, ones);
    const LineFit fit_p = weighted_line_fit(lx, ly_p, ones);
    bool g_decreasing = true, q_nondecreasing = true, margins_ok = true, n22_bound_ok = true;
    for (std::size_t i = 0; i < rungs.size(); ++i) {
        if (i) {
            g_decreasing = g_decreasing && rungs[i].sup_g_dev < rungs[i - 1].sup_g_dev;
            q_nondecreasing = q_nondecreasing && rungs[i].q >= rungs[i - 1].q;
        }
        margins_ok = margins_ok && rungs[i].harm_quarter_margin >= -1e-10;
        n22_bound_ok = n22_bound_ok && rungs[i].e_n22_invsqrt <= rungs[i].e_n22_bound + 1e-12;
    }

    // shifted-Poisson total variation grid
    json shift_grid = json::array();
    bool shift_ok = true;
    for (double theta : {1.0, 4.0, 25.0}) {
        for (long long k = 0; k <= 5; ++k) {
            const double tv = poisson_shift_tv(theta, k);
            const double bound = k == 0 ? 0.0 : static_cast<double>(k) / std::sqrt(theta);
            shift_ok = shift_ok && tv <= bound + 1e-12;
            shift_grid.push_back({{"theta", theta}, {"k", k}, {"tv", tv}, {"bound", bound}});
        }
    }

    if (want_csv(io)) {
        std::ostringstream os;
        os << csv_header(rc)
           << "R,dist,delta,q,one_minus_q,regime_ok,sup_g_dev,harm_quarter_margin,e_n22_invsqrt,e_n22_bound,"
              "p_n1pos_n22zero,shape_ref,cap_K,cap_K1\n";
        for (const auto& r : rungs)
            os << fd(r.R) << ',' << fd(r.dist) << ',' << fd(r.delta) << ',' << fd(r.q) << ','
               << fd(r.one_minus_q) << ',' << (r.regime_ok ? 1 : 0) << ',' << fd(r.sup_g_dev) << ','
               << fd(r.harm_quarter_margin) << ',' << fd(r.e_n22_invsqrt) << ',' << fd(r.e_n22_bound) << ','
               << fd(r.p_n1pos_n22zero) << ',' << fd(r.shape_ref) << ',' << fd(r.cap_K) << ',' << fd(r.cap_K1)
               << '\n';
        write_file(io, "lemmas_rungs.csv", os.str());
    }
    if (want_json(io)) {
        json j;
        j["meta"] = meta_json(rc);
        j["slope_log_one_minus_q"] = fit_q.slope;
        j["slope_se"] = fit_q.se_slope;
        j["slope_log_p_n1pos_n22zero"] = fit_p.slope;
        j["sup_g_strictly_decreasing"] = g_decreasing;
        j["q_nondecreasing"] = q_nondecreasing;
        j["harmonic_quarter_margins_ok"] = margins_ok;
        j["n22_moment_bound_ok"] = n22_bound_ok;
        j["q_at_least_half_everywhere"] = std::all_of(rungs.begin(), rungs.end(),
                                                      [](const LemmaRung& r) { return r.regime_ok; });
        j["poisson_shift_grid"] = shift_grid;
        j["poisson_shift_bound_ok"] = shift_ok;
        write_file(io, "lemmas_summary.json", j.dump(2) + "\n");
    }
    return 0;
}

struct ScalingRungOut {
    std::string part;
    double param = 0.0, dist = 0.0, R = 0.0, capK1 = 0.0, capK = 0.0, q = 0.0, e_theta = 0.0, u = 1.0;
    FailureEstimate fe;
};

ScalingRungOut scaling_rung(const RunConfig& rc, const Scene& sc, const std::string& part, double param) {
    ScalingRungOut out;
    out.part = part;
    out.param = param;
    out.dist = set_distance(sc.cfg.K1, sc.cfg.K2);
    out.R = sc.cfg.R;
    out.capK1 = sc.eqK1.cap;
    out.capK = sc.eqK.cap;
    out.q = sc.esc.q;
    out.e_theta = sc.chain.e_theta;
    out.u = sc.cfg.u;
    const PoissonShiftCoupler coupler = make_scene_coupler(sc);
    out.fe = summarize_failures(run_coupled_replicas(sc, coupler, rc.replicas, rc.seed, rc.threads));
    return out;
}

int run_experiment_scaling(const RunConfig& rc, const RunIo& io) {
    std::vector<ScalingRungOut> rows;
    const bool do_dist = rc.parts.find("dist") != std::string::npos;
    const bool do_u = rc.parts.find('u') != std::string::npos;
    const bool do_cap = rc.parts.find("cap") != std::string::npos;

    json summary;
    summary["meta"] = meta_json(rc);

    if (do_dist) {
        std::vector<double> xs;
        std::vector<FailureEstimate> fes;
        for (double dist : rc.dists) {
            const Scene sc = scene_from_config_at(rc, static_cast<std::int64_t>(dist), rc.u);
            rows.push_back(scaling_rung(rc, sc, "dist", dist));
            xs.push_back(rows.back().dist);
            fes.push_back(rows.back().fe);
        }
        const ScalingFit fit = fit_scaling(xs, fes);
        summary["dist"] = {{"slope", fit.line.slope},
                           {"slope_se", fit.line.se_slope},
                           {"points_used", fit.used.size()},
                           {"censored", fit.censored.size()}};
    }
    if (do_u) {
        std::vector<double> phats, sigmas, uvals;
        for (double u : rc.us) {
            const Scene sc = scene_from_config_at(rc, static_cast<std::int64_t>(rc.u_dist), u);
            rows.push_back(scaling_rung(rc, sc, "u", u));
            phats.push_back(rows.back().fe.phat);
            sigmas.push_back(0.5 * (rows.back().fe.hi - rows.back().fe.lo) / 1.959963984540054);
            uvals.push_back(u);
        }
        json ratios = json::array();
        for (std::size_t i = 1; i < phats.size(); ++i) {
            const double ratio = phats[i] / phats[i - 1];
            const double expect = std::sqrt(uvals[i] / uvals[i - 1]);
            const double sig = ratio * std::sqrt(sigmas[i] * sigmas[i] / (phats[i] * phats[i]) +
                                                 sigmas[i - 1] * sigmas[i - 1] / (phats[i - 1] * phats[i - 1]));
            ratios.push_back({{"u_lo", uvals[i - 1]},
                              {"u_hi", uvals[i]},
                              {"ratio", ratio},
                              {"ratio_sigma", sig},
                              {"expected", expect},
                              {"within_3sigma", std::fabs(ratio - expect) <= 3.0 * sig}});
        }
        summary["u"] = {{"ratios", ratios}};
    }
    if (do_cap) {
        std::vector<double> ly, lx, ls;
        for (double r : rc.cap_radii) {
            RunConfig rung_rc = rc;
            rung_rc.scene_kind = r <= 1.0 ? "singleton" : "ball";
            rung_rc.ball_radius = r;
            const SiteSet K1 = rung_rc.make_K1();
            const double diam = std::max(set_diameter(K1), 1.0);
            std::int64_t dist = std::llround(rc.cap_dist_factor * diam);
            if (dist % 2 == 0) ++dist; // odd axis distances keep the two shells disjoint
            const Scene sc = scene_from_config_at(rung_rc, dist, rc.u);
            rows.push_back(scaling_rung(rc, sc, "cap", r));
            const auto& o = rows.back();
            if (o.fe.failures >= 5) {
                lx.push_back(std::log(o.capK1));
                ly.push_back(std::log(o.fe.phat) + (sc.cfg.d - 2) * std::log(o.dist) -
                             0.5 * std::log(sc.cfg.u));
                ls.push_back(std::max(1e-6, 0.5 * (o.fe.hi - o.fe.lo) / (1.959963984540054 * o.fe.phat)));
            }
        }
        if (lx.size() >= 2) {
            const LineFit fit = weighted_line_fit(lx, ly, ls);
            const char* favored = std::fabs(fit.slope - 1.5) <= std::fabs(fit.slope - 2.0) ? "1.5" : "2.0";
            summary["cap"] = {{"exponent", fit.slope},
                              {"exponent_se", fit.se_slope},
                              {"points", lx.size()},
                              {"favored", favored}};
        }
    }

    if (want_csv(io)) {
        std::ostringstream os;
        os << csv_header(rc)
           << "part,param,u,dist,R,cap_K1,cap_K,q,e_theta,replicas,failures,phat,wilson_lo,wilson_hi,"
              "n_Dc,n_D_n1zero,n_D_n1pos_n22zero,n_remainder\n";
        for (const auto& o : rows)
            os << o.part << ',' << fd(o.param) << ',' << fd(o.u) << ',' << fd(o.dist) << ',' << fd(o.R) << ','
               << fd(o.capK1) << ',' << fd(o.capK) << ',' << fd(o.q) << ',' << fd(o.e_theta) << ','
               << o.fe.replicas << ',' << o.fe.failures << ',' << fd(o.fe.phat) << ',' << fd(o.fe.lo) << ','
               << fd(o.fe.hi) << ',' << o.fe.n_Dc << ',' << o.fe.n_D_n1zero << ',' << o.fe.n_D_n1pos_n22zero
               << ',' << o.fe.n_remainder << '\n';
        write_file(io, "scaling_rungs.csv", os.str());
    }
    if (want_json(io)) write_file(io, "scaling_summary.json", summary.dump(2) + "\n");
    return 0;
}

int run_experiment_tv(const RunConfig& rc, const RunIo& io) {
    std::ostringstream os;
    os << csv_header(rc)
       << "dist,replicas,tv,tv_ci,phat,wilson_lo,wilson_hi,bound_ok\n";
    json rungs = json::array();
    bool all_ok = true;
    for (double dist : rc.dists) {
        const Scene sc = scene_from_config_at(rc, static_cast<std::int64_t>(dist), rc.u);
        if (sc.cfg.K.size() > 20) throw ValidationError("tv experiment: |K| > 20");
        const TraceHistogram h1 = trace_histogram_ri(sc, rc.replicas, rc.seed ^ 0x11, rc.threads);
        const TraceHistogram h2 = trace_histogram_ns(sc, rc.replicas, rc.seed ^ 0x22, rc.threads);
        const auto [tv, tvci] = tv_empirical(h1, h2);
        const PoissonShiftCoupler coupler = make_scene_coupler(sc);
        const FailureEstimate fe =
            summarize_failures(run_coupled_replicas(sc, coupler, rc.replicas, rc.seed, rc.threads));
        const double sig_tv = tvci / 1.959963984540054;
        const double sig_p = 0.5 * (fe.hi - fe.lo) / 1.959963984540054;
        const bool ok = tv <= fe.phat + 3.0 * std::sqrt(sig_tv * sig_tv + sig_p * sig_p);
        all_ok = all_ok && ok;
        os << fd(dist) << ',' << rc.replicas << ',' << fd(tv) << ',' << fd(tvci) << ',' << fd(fe.phat) << ','
           << fd(fe.lo) << ',' << fd(fe.hi) << ',' << (ok ? 1 : 0) << '\n';
        rungs.push_back({{"dist", dist},
                         {"tv", tv},
                         {"tv_ci", tvci},
                         {"phat", fe.phat},
                         {"wilson_lo", fe.lo},
                         {"wilson_hi", fe.hi},
                         {"tv_below_phat", ok}});
    }
    if (want_csv(io)) write_file(io, "tv_rungs.csv", os.str());
    if (want_json(io)) {
        json j;
        j["meta"] = meta_json(rc);
        j["rungs"] = rungs;
        j["all_bounds_ok"] = all_ok;
        write_file(io, "tv_summary.json", j.dump(2) + "\n");
    }
    return 0;
}

int run_experiment_covariance(const RunConfig& rc, const RunIo& io) {
    std::ostringstream os;
    os << csv_header(rc) << "dist,f1,f2,replicas,cov,cov_ci,tv,tv_ci,bound_ok\n";
    json rungs = json::array();
    bool all_ok = true;
    std::vector<double> abscov;
    for (double dist : rc.dists) {
        const Scene sc = scene_from_config_at(rc, static_cast<std::int64_t>(dist), rc.u);
        if (sc.cfg.K.size() > 20) throw ValidationError("covariance experiment: |K| > 20");
        const auto bits1 = window_bits(sc.cfg, false);
        const auto bits2 = window_bits(sc.cfg, true);
        const TraceHistogram h = trace_histogram_ri(sc, rc.replicas, rc.seed ^ 0x33, rc.threads);
        const TraceHistogram hns = trace_histogram_ns(sc, rc.replicas, rc.seed ^ 0x44, rc.threads);
        const auto [tv, tvci] = tv_empirical(h, hns);
        const TruthTable t1 = truth_table_preset(rc.f1, sc.cfg.K1.size());
        const TruthTable t2 = truth_table_preset(rc.f2, sc.cfg.K2.size());
        const auto [cov, covci] = cov_from_histogram_ci(h, bits1, bits2, t1, t2);
        abscov.push_back(std::fabs(cov));

        // extremal grid on singleton windows
        bool grid_ok = true;
        if (sc.cfg.K1.size() == 1) {
            const char* names[4] = {"const0", "const1", "occupied", "vacant"};
            for (const char* n1 : names)
                for (const char* n2 : names) {
                    const TruthTable g1 = truth_table_preset(n1, 1);
                    const TruthTable g2 = truth_table_preset(n2, 1);
                    const auto [c, cci] = cov_from_histogram_ci(h, bits1, bits2, g1, g2, 400);
                    const double sig_tv = tvci / 1.959963984540054;
                    if (std::fabs(c) > 3.0 * (tv + 3.0 * sig_tv) + 3.0 * cci / 1.959963984540054)
                        grid_ok = false;
                }
        }
        all_ok = all_ok && grid_ok;
        os << fd(dist) << ',' << rc.f1 << ',' << rc.f2 << ',' << rc.replicas << ',' << fd(cov) << ','
           << fd(covci) << ',' << fd(tv) << ',' << fd(tvci) << ',' << (grid_ok ? 1 : 0) << '\n';
        rungs.push_back({{"dist", dist},
                         {"cov", cov},
                         {"cov_ci", covci},
                         {"tv", tv},
                         {"tv_ci", tvci},
                         {"extremal_grid_ok", grid_ok}});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < abscov.size(); ++i) decreasing = decreasing && abscov[i] < abscov[i - 1];
    if (want_csv(io)) write_file(io, "covariance_rungs.csv", os.str());
    if (want_json(io)) {
        json j;
        j["meta"] = meta_json(rc);
        j["rungs"] = rungs;
        j["abs_cov_decreasing"] = decreasing;
        j["extremal_grids_ok"] = all_ok;
        write_file(io, "covariance_summary.json", j.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int run_experiment(const RunConfig& rc, const RunIo& io) {
    if (rc.experiment == "lemmas") return run_experiment_lemmas(rc, io);
    if (rc.experiment == "scaling") return run_experiment_scaling(rc, io);
    if (rc.experiment == "tv") return run_experiment_tv(rc, io);
    if (rc.experiment == "covariance") return run_experiment_covariance(rc, io);
    throw ValidationError("experiment: unknown name '" + rc.experiment + "'");
}

} // namespace ris

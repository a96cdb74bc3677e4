#include "ris/potential.hpp"

#include <algorithm>
#include <cmath>

namespace ris {

EquilibriumData equilibrium_measure(const SiteSet& K, const GreenTable& green) {
    if (K.empty()) throw ValidationError("equilibrium_measure: empty set");
    const int n = K.size();
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = green.eval(K[i] - K[j]);
            G(i, j) = v;
            G(j, i) = v;
        }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw ValidationError("equilibrium_measure: Green matrix not positive definite, rcond ~ " +
                              std::to_string(ldlt.rcond()));
    }
    EquilibriumData eq;
    eq.K = K;
    eq.e = ldlt.solve(Eigen::VectorXd::Ones(n));
    eq.residual = (G * eq.e - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff();
    if (!(eq.residual <= 1e-8))
        throw ValidationError("equilibrium_measure: residual " + std::to_string(eq.residual) +
                              " exceeds 1e-8, rcond ~ " + std::to_string(ldlt.rcond()));
    // The measure is supported on the internal boundary: an interior site
    // cannot escape without re-entering K. Interior entries are numerical
    // noise and are zeroed; boundary round-off negatives are clamped.
    const SiteSet bd = internal_boundary(K);
    for (int i = 0; i < n; ++i) {
        if (!bd.contains(K[i])) {
            if (std::fabs(eq.e(i)) > 1e-5)
                throw ValidationError("equilibrium_measure: interior mass " + std::to_string(eq.e(i)));
            eq.e(i) = 0.0;
        } else if (eq.e(i) < 0.0) {
            if (eq.e(i) < -1e-10)
                throw ValidationError("equilibrium_measure: negative mass " + std::to_string(eq.e(i)));
            eq.e(i) = 0.0;
        }
    }
    eq.cap = eq.e.sum();
    eq.hbar = eq.e / eq.cap;
    return eq;
}

double capacity(const SiteSet& K, const GreenTable& green) { return equilibrium_measure(K, green).cap; }

double escape_probability(const Point& y, const EquilibriumData& eq, const GreenTable& green) {
    if (eq.K.contains(y)) throw ValidationError("escape_probability: interior start point");
    double hitmass = 0.0;
    for (int i = 0; i < eq.K.size(); ++i) hitmass += green.eval(y - eq.K[i]) * eq.e(i);
    double p = 1.0 - hitmass;
    if (p < 0.0) {
        if (p < -1e-10) throw ValidationError("escape_probability: negative value " + std::to_string(p));
        p = 0.0;
    }
    return std::min(p, 1.0);
}

EscapeTable escape_table(const Configuration& cfg, const EquilibriumData& eqK, const GreenTable& green) {
    EscapeTable tab;
    const int n = cfg.beVR.size();
    tab.p.resize(static_cast<std::size_t>(n));
    tab.q = 1.0;
    for (int i = 0; i < n; ++i) {
        const double p = escape_probability(cfg.beVR[i], eqK, green);
        tab.p[static_cast<std::size_t>(i)] = p;
        if (p < tab.q) {
            tab.q = p;
            tab.argmin = i;
        }
    }
    tab.regime_ok = tab.q >= 0.5;
    return tab;
}

HitKernel::HitKernel(const SiteSet& K, const GreenTable& green) : K_(K), green_(green) {
    const int n = K.size();
    GK_.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = green.eval(K[i] - K[j]);
            GK_(i, j) = v;
            GK_(j, i) = v;
        }
    ldlt_.compute(GK_);
    if (ldlt_.info() != Eigen::Success)
        throw ValidationError("hit kernel: Green matrix factorization failed");
    const SiteSet bd = internal_boundary(K);
    on_boundary_.assign(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) on_boundary_[static_cast<std::size_t>(i)] = bd.contains(K[i]);
}

Eigen::VectorXd HitKernel::hit_row(const Point& y) const {
    if (K_.contains(y)) throw ValidationError("hit_row: point inside K");
    const int n = K_.size();
    Eigen::VectorXd gy(n);
    for (int i = 0; i < n; ++i) gy(i) = green_.eval(y - K_[i]);
    Eigen::VectorXd row = ldlt_.solve(gy);
    for (int i = 0; i < n; ++i) {
        if (!on_boundary_[static_cast<std::size_t>(i)]) {
            // a first entry always has an outside neighbour; interior mass is noise
            if (std::fabs(row(i)) > 1e-5)
                throw ValidationError("hit_row: interior probability " + std::to_string(row(i)));
            row(i) = 0.0;
        } else if (row(i) < 0.0) {
            if (row(i) < -1e-10)
                throw ValidationError("hit_row: negative probability " + std::to_string(row(i)));
            row(i) = 0.0;
        }
    }
    return row;
}

double HitKernel::return_probability(const Point& y) const { return hit_row(y).sum(); }

// --- BallSolver -------------------------------------------------------------

BallSolver::BallSolver(const BallRegion& ball, double tol) : ball_(ball), tol_(tol), d_(ball.center.dim) {
    const auto lim = static_cast<std::int32_t>(std::floor(ball.radius)) + 1;
    lo_ = ball.center;
    for (int i = 0; i < d_; ++i) lo_.c[i] -= lim;
    std::int64_t total = 1;
    for (int i = 0; i < d_; ++i) {
        dims_[static_cast<std::size_t>(i)] = 2 * lim + 1;
        total *= dims_[static_cast<std::size_t>(i)];
    }
    std::int64_t stride = 1;
    for (int i = d_ - 1; i >= 0; --i) {
        strides_[static_cast<std::size_t>(i)] = stride;
        stride *= dims_[static_cast<std::size_t>(i)];
    }
    box_.assign(static_cast<std::size_t>(total), -1);
    sites_ = ball.enumerate();
    for (std::size_t s = 0; s < sites_.size(); ++s) {
        std::int64_t cell = 0;
        for (int i = 0; i < d_; ++i)
            cell += (sites_[s].c[i] - lo_.c[i]) * strides_[static_cast<std::size_t>(i)];
        box_[static_cast<std::size_t>(cell)] = static_cast<std::int32_t>(s);
    }
}

std::optional<std::int64_t> BallSolver::index_of(const Point& p) const {
    std::int64_t cell = 0;
    for (int i = 0; i < d_; ++i) {
        const std::int64_t off = p.c[i] - lo_.c[i];
        if (off < 0 || off >= dims_[static_cast<std::size_t>(i)]) return std::nullopt;
        cell += off * strides_[static_cast<std::size_t>(i)];
    }
    const std::int64_t s = box_[static_cast<std::size_t>(cell)];
    if (s < 0) return std::nullopt;
    return s;
}

namespace {
inline double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
} // namespace

std::vector<double> BallSolver::cg_solve(const std::vector<double>& b) const {
    // A = I - P restricted to the ball; SPD. Matvec walks box neighbours.
    const std::size_t n = sites_.size();
    const double invdeg = 1.0 / (2.0 * d_);
    auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            std::int64_t cell = 0;
            const Point& p = sites_[i];
            for (int k = 0; k < d_; ++k)
                cell += (p.c[k] - lo_.c[k]) * strides_[static_cast<std::size_t>(k)];
            for (int k = 0; k < d_; ++k) {
                const std::int64_t s = strides_[static_cast<std::size_t>(k)];
                const std::int64_t j1 = box_[static_cast<std::size_t>(cell + s)];
                const std::int64_t j2 = box_[static_cast<std::size_t>(cell - s)];
                if (j1 >= 0) acc += x[static_cast<std::size_t>(j1)];
                if (j2 >= 0) acc += x[static_cast<std::size_t>(j2)];
            }
            y[i] = x[i] - invdeg * acc;
        }
    };
    std::vector<double> x(n, 0.0), r = b, p = b, Ap(n, 0.0);
    double rr = dotv(r, r);
    const double b2 = dotv(b, b);
    if (b2 == 0.0) return x;
    const double stop = tol_ * tol_ * b2;
    const int maxit = 200 + 30 * static_cast<int>(std::sqrt(static_cast<double>(n)));
    int it = 0;
    for (; it < maxit && rr > stop; ++it) {
        matvec(p, Ap);
        const double alpha = rr / dotv(p, Ap);
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
        const double rr2 = dotv(r, r);
        const double beta = rr2 / rr;
        rr = rr2;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    last_iters_ = it;
    if (rr > stop)
        throw ValidationError("ball solver: CG failed to converge");
    return x;
}

std::vector<double> BallSolver::killed_green_column(const Point& x) const {
    auto idx = index_of(x);
    if (!idx) throw ValidationError("killed_green_column: source outside domain");
    std::vector<double> b(sites_.size(), 0.0);
    b[static_cast<std::size_t>(*idx)] = 1.0;
    return cg_solve(b);
}

std::vector<double> BallSolver::harmonic_extension(const std::function<double(const Point&)>& shell_data) const {
    const double invdeg = 1.0 / (2.0 * d_);
    std::vector<double> b(sites_.size(), 0.0);
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        const Point& p = sites_[i];
        double acc = 0.0;
        bool any = false;
        for (int k = 0; k < 2 * d_; ++k) {
            Point q = p.neighbour(k);
            if (!ball_.contains(q)) {
                acc += shell_data(q);
                any = true;
            }
        }
        if (any) b[i] = invdeg * acc;
    }
    return cg_solve(b);
}

void BallSolver::exit_row(const Point& x, const std::function<void(const Point&, double)>& emit) const {
    const std::vector<double> gcol = killed_green_column(x);
    const double invdeg = 1.0 / (2.0 * d_);
    for (const Point& y : ball_.enumerate_shell()) {
        double acc = 0.0;
        for (int k = 0; k < 2 * d_; ++k) {
            auto j = index_of(y.neighbour(k));
            if (j) acc += gcol[static_cast<std::size_t>(*j)];
        }
        if (acc != 0.0) emit(y, invdeg * acc);
    }
}

Eigen::VectorXd exit_distribution(const Point& x, const Configuration& cfg, double tol) {
    if (!cfg.in_VR(x)) throw ValidationError("exit_distribution: start point outside V_R");
    const BallRegion& home = cfg.ball1.contains(x) ? cfg.ball1 : cfg.ball2;
    BallSolver solver(home, tol);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(cfg.beVR.size());
    solver.exit_row(x, [&](const Point& y, double pr) {
        auto idx = cfg.beVR.index_of(y);
        if (!idx) throw ValidationError("exit_distribution: exit site not on the separating boundary");
        row(*idx) = pr;
    });
    return row;
}

Eigen::VectorXd hitting_distribution(const Point& y, const Configuration& cfg, const HitKernel& hk) {
    if (!cfg.beVR.contains(y)) throw ValidationError("hitting_distribution: point not on the separating boundary");
    Eigen::VectorXd row = hk.hit_row(y);
    const double mass = row.sum();
    if (mass <= 0.0) throw ValidationError("hitting_distribution: zero return mass");
    return row / mass;
}

double transition_density(const Point& y, const Point& x, const Configuration& cfg, const HitKernel& hk,
                          const EquilibriumData& eqK) {
    auto xi = eqK.K.index_of(x);
    if (!xi) throw ValidationError("transition_density: x not in K");
    const double hb = eqK.hbar(*xi);
    if (hb <= 0.0) throw ValidationError("transition_density: null harmonic mass");
    const Eigen::VectorXd cond = hitting_distribution(y, cfg, hk);
    return cond(*xi) / hb;
}

KernelTable build_kernel_table(const Configuration& cfg, const HitKernel& hk, const EquilibriumData& eqK,
                               double tol) {
    KernelTable kt;
    const int nb = cfg.bK.size();
    const int ns = cfg.beVR.size();
    kt.exit = Eigen::MatrixXd::Zero(nb, ns);
    BallSolver s1(cfg.ball1, tol), s2(cfg.ball2, tol);
    for (int i = 0; i < nb; ++i) {
        const Point& x = cfg.bK[i];
        BallSolver& solver = cfg.ball1.contains(x) ? s1 : s2;
        solver.exit_row(x, [&](const Point& y, double pr) {
            auto idx = cfg.beVR.index_of(y);
            if (idx) kt.exit(i, *idx) = pr;
        });
    }
    kt.hit.resize(ns, nb);
    kt.g.resize(ns, nb);
    for (int j = 0; j < ns; ++j) {
        const Eigen::VectorXd cond = hitting_distribution(cfg.beVR[j], cfg, hk);
        for (int i = 0; i < nb; ++i) {
            auto ki = eqK.K.index_of(cfg.bK[i]);
            kt.hit(j, i) = cond(*ki);
            kt.g(j, i) = eqK.hbar(*ki) > 0.0 ? cond(*ki) / eqK.hbar(*ki) : 0.0;
        }
    }
    return kt;
}

} // namespace ris

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ris/green.hpp"
#include "ris/lattice.hpp"

namespace ris {

// Equilibrium measure e_K, capacity and harmonic measure of a finite set,
// obtained from the last-exit identity sum_y G(x,y) e(y) = 1 for x in K.
struct EquilibriumData {
    SiteSet K;
    Eigen::VectorXd e;     // K-indexed equilibrium measure
    double cap = 0.0;      // sum of e
    Eigen::VectorXd hbar;  // e / cap
    double residual = 0.0; // max |G_K e - 1|
};

EquilibriumData equilibrium_measure(const SiteSet& K, const GreenTable& green);
double capacity(const SiteSet& K, const GreenTable& green);

// P_y[never hit K] for y outside K, via 1 - sum_z G(y,z) e(z).
double escape_probability(const Point& y, const EquilibriumData& eq, const GreenTable& green);

// Escape probabilities over the separating boundary and their infimum q.
struct EscapeTable {
    std::vector<double> p; // aligned with cfg.beVR enumeration
    double q = 1.0;
    int argmin = -1;
    bool regime_ok = false; // q >= 1/2
};

EscapeTable escape_table(const Configuration& cfg, const EquilibriumData& eqK, const GreenTable& green);

// Entry laws into K from outside, through the first-passage factorization
// G(y,z) = sum_x P_y[hit K at x] G(x,z): one dense factorization of G_K
// serves every query point, with no domain truncation.
class HitKernel {
public:
    HitKernel(const SiteSet& K, const GreenTable& green);

    const SiteSet& K() const { return K_; }
    const Eigen::MatrixXd& greenK() const { return GK_; }
    Eigen::VectorXd solveK(const Eigen::VectorXd& rhs) const { return ldlt_.solve(rhs); }

    // Unconditional entry law P_y[H_K < oo, X_{H_K} = .], K-indexed.
    // Tiny negative round-off (>= -1e-10) is clamped and renormalized to the
    // row's mass; anything more negative is an error.
    Eigen::VectorXd hit_row(const Point& y) const;
    double return_probability(const Point& y) const; // sum of hit_row

private:
    SiteSet K_;
    const GreenTable& green_;
    Eigen::MatrixXd GK_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
    std::vector<bool> on_boundary_;
};

// Matrix-free conjugate-gradient solver on an open ball domain with
// absorption on the external boundary shell. Walks through K are not
// absorbed: the domain is the full ball.
class BallSolver {
public:
    explicit BallSolver(const BallRegion& ball, double tol = 1e-12);

    std::int64_t size() const { return static_cast<std::int64_t>(sites_.size()); }
    const std::vector<Point>& sites() const { return sites_; }
    std::optional<std::int64_t> index_of(const Point& p) const;

    // Killed Green function column E_x[visits to . before leaving the ball].
    std::vector<double> killed_green_column(const Point& x) const;

    // Harmonic extension of boundary data given on the shell.
    std::vector<double> harmonic_extension(const std::function<double(const Point&)>& shell_data) const;

    // Exit distribution from x: emits (shell site, probability).
    void exit_row(const Point& x, const std::function<void(const Point&, double)>& emit) const;

    int last_iterations() const { return last_iters_; }

private:
    std::vector<double> cg_solve(const std::vector<double>& b) const;

    BallRegion ball_;
    double tol_;
    int d_ = 3;
    Point lo_;
    std::array<std::int64_t, kMaxDim> dims_{};
    std::array<std::int64_t, kMaxDim> strides_{};
    std::vector<std::int32_t> box_;  // box cell -> site index or -1
    std::vector<Point> sites_;
    mutable int last_iters_ = 0;
};

// Exit law of an excursion started at x in V_R (row of the exit kernel over
// the external boundary of V_R), exact up to CG tolerance.
Eigen::VectorXd exit_distribution(const Point& x, const Configuration& cfg, double tol = 1e-12);

// Conditional re-entry law P_y[X at first hit of K = . | hit K], K-indexed.
Eigen::VectorXd hitting_distribution(const Point& y, const Configuration& cfg, const HitKernel& hk);

// Transition density g(y,x) = hitting_distribution(y)(x) / hbar(x).
double transition_density(const Point& y, const Point& x, const Configuration& cfg, const HitKernel& hk,
                          const EquilibriumData& eqK);

// Dense kernels for small scenes (tests, table export).
struct KernelTable {
    Eigen::MatrixXd exit; // |bK| x |beVR|
    Eigen::MatrixXd hit;  // |beVR| x |bK|, conditional on return
    Eigen::MatrixXd g;    // |beVR| x |bK|
};
KernelTable build_kernel_table(const Configuration& cfg, const HitKernel& hk, const EquilibriumData& eqK,
                               double tol = 1e-12);

} // namespace ris

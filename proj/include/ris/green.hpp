#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "ris/lattice.hpp"

namespace ris {

// Green's function G(0,x) of simple random walk on Z^d, d >= 3: the expected
// number of visits to x from 0. Values with ||x|| <= cutoff are tabulated by
// deterministic quadrature of
//
//     G(0,x) = int_0^infty prod_j e^{-t/d} I_{x_j}(t/d) dt
//
// (I_n the modified Bessel function), with the integrand evaluated through
// scaled Bessel vectors and the tail integrated via the large-t expansion.
// Beyond the cutoff an asymptotic form a*r^(2-d) plus anisotropic correction
// terms is used, with coefficients matched on the outer shells of the table,
// so the two branches agree to ~1e-7 relative at the cutoff.
class GreenTable {
public:
    int d = 3;
    double cutoff = 30.0;
    int quadrature_order = 24;

    double eval(const Point& x) const;
    double operator()(const Point& x) const { return eval(x); }
    double at_origin() const { return origin_; }

    // Asymptotic coefficient of r^(2-d): fitted value and the closed form
    // a_d = (d/2) Gamma(d/2-1) pi^(-d/2).
    double fitted_front_coeff() const { return fit_[0]; }
    double analytic_front_coeff() const { return a_d_; }
    // Max relative |fit - table| over the matching band near the cutoff.
    double fit_band_residual() const { return fit_residual_; }

    std::size_t table_size() const { return values_.size(); }

    friend GreenTable build_green_table(int d, int order, double cutoff);

private:
    double asymptotic(std::int64_t n2, const std::array<std::int32_t, kMaxDim>& a) const;

    std::unordered_map<std::uint64_t, double> values_;
    double origin_ = 0.0;
    std::array<double, 6> fit_{};   // r^(2-d), r^-d, r^-d*m4, r^-d-2, r^-d-2*m4, r^-d-2*m6
    double a_d_ = 0.0;
    double fit_residual_ = 0.0;
    std::int64_t cutoff_n2_ = 0;
};

// order: Gauss-Legendre points per panel. cutoff <= 0 picks a default per d.
GreenTable build_green_table(int d, int order = 24, double cutoff = 0.0);

// Process-wide shared table per (d, order); built once, immutable after.
std::shared_ptr<const GreenTable> shared_green_table(int d, int order = 24);

// Convenience: G(0,x) through the shared table. Errors for d < 3.
double green(int d, const Point& x);

// Scaled modified Bessel vector: out[n] = e^{-z} I_n(z) for n = 0..nmax.
void scaled_bessel_i(double z, int nmax, std::vector<double>& out);

// Nodes/weights of the s-point Gauss-Legendre rule on [-1,1].
void gauss_legendre(int s, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace ris

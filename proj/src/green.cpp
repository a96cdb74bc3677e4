#include "ris/green.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace ris {

void gauss_legendre(int s, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(s), 0.0);
    weights.assign(static_cast<std::size_t>(s), 0.0);
    // Newton iteration on P_s from the Chebyshev initial guess.
    for (int i = 0; i < (s + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (s + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < s; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = s * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(s - 1 - i)] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(s - 1 - i)] = w;
    }
}

void scaled_bessel_i(double z, int nmax, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(nmax + 1), 0.0);
    if (z == 0.0) {
        out[0] = 1.0;
        return;
    }
    if (z <= 80.0) {
        // Power series I_n(z) = sum_m (z/2)^(n+2m) / (m! (n+m)!), then scale.
        const double ez = std::exp(-z);
        const double h = 0.5 * z;
        for (int n = 0; n <= nmax; ++n) {
            double term = 1.0;
            for (int k = 1; k <= n; ++k) term *= h / k;
            double sum = term;
            for (int m = 1; m < 400; ++m) {
                term *= (h * h) / (static_cast<double>(m) * (n + m));
                sum += term;
                if (term < sum * 1e-18) break;
            }
            out[static_cast<std::size_t>(n)] = sum * ez;
        }
        return;
    }
    // Miller's downward recurrence, normalized with e^z = I_0 + 2 sum I_m,
    // which yields the scaled values directly and never overflows.
    const int start = nmax + static_cast<int>(std::ceil(std::sqrt(90.0 * z))) + 20;
    double fp = 0.0;          // f_{m+1}
    double fc = 1e-280;       // f_m
    double sum = 0.0;         // accumulates 2 * sum_{m>=1} f_m (+ f_0 at the end)
    for (int m = start; m >= 1; --m) {
        const double fm = fp + (2.0 * m / z) * fc; // f_{m-1}
        fp = fc;
        fc = fm;
        if (m - 1 <= nmax) out[static_cast<std::size_t>(m - 1)] = fm;
        if (m >= 2) sum += 2.0 * fp;
        if (fc > 1e280) {
            fc *= 1e-280;
            fp *= 1e-280;
            sum *= 1e-280;
            for (auto& v : out) v *= 1e-280;
        }
    }
    sum += 2.0 * fp; // f_1 contribution
    sum += fc;       // f_0
    const double inv = 1.0 / sum;
    for (auto& v : out) v *= inv;
}

namespace {

std::uint64_t pack_canonical(const std::array<std::int32_t, kMaxDim>& a, int d) {
    std::uint64_t key = 0;
    for (int i = 0; i < d; ++i) key = (key << 8) | static_cast<std::uint64_t>(a[i] & 0xFF);
    return key;
}

std::array<std::int32_t, kMaxDim> canonical(const Point& x) {
    std::array<std::int32_t, kMaxDim> a{};
    for (int i = 0; i < x.dim; ++i) a[i] = std::abs(x.c[i]);
    std::sort(a.begin(), a.begin() + x.dim, std::greater<>());
    return a;
}

struct QuadNodes {
    std::vector<double> t, w;
};

QuadNodes make_panels(int order, double tmax) {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    QuadNodes q;
    double lo = 0.0, hi = 1.0;
    while (lo < tmax) {
        for (int i = 0; i < order; ++i) {
            const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            q.t.push_back(mid + half * gx[static_cast<std::size_t>(i)]);
            q.w.push_back(half * gw[static_cast<std::size_t>(i)]);
        }
        lo = hi;
        hi = 2.0 * hi;
    }
    return q;
}

// Raw large-t expansion coefficients of e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} (1 + a1/z + a2/z^2).
double bessel_a1(double nu) { return -(4.0 * nu * nu - 1.0) / 8.0; }
double bessel_a2(double nu) {
    const double f = 4.0 * nu * nu;
    return (f - 1.0) * (f - 9.0) / 128.0;
}

// Enumerate canonical tuples c_0 >= c_1 >= ... >= c_{d-1} >= 0 with sum of
// squares <= n2max.
template <typename F>
void enumerate_canonical(int d, std::int64_t n2max, F&& emit) {
    std::array<std::int32_t, kMaxDim> a{};
    const auto climit = static_cast<std::int32_t>(std::floor(std::sqrt(static_cast<double>(n2max))));
    // recursive lambda over positions
    auto rec = [&](auto&& self, int pos, std::int32_t maxval, std::int64_t rem) -> void {
        if (pos == d) {
            emit(a);
            return;
        }
        const auto lim = std::min<std::int64_t>(maxval, static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(rem)))));
        for (std::int32_t v = static_cast<std::int32_t>(lim); v >= 0; --v) {
            a[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, v, rem - std::int64_t(v) * v);
        }
    };
    rec(rec, 0, climit, n2max);
}

} // namespace

GreenTable build_green_table(int d, int order, double cutoff) {
    if (d < 3) throw ValidationError("green: transient dimension required (d >= 3)");
    if (d > kMaxDim) throw ValidationError("green: dimension exceeds limit");
    if (order < 8) order = 8;
    if (cutoff <= 0.0) cutoff = (d == 3) ? 30.0 : (d == 4 ? 18.0 : 12.0);

    GreenTable tab;
    tab.d = d;
    tab.cutoff = cutoff;
    tab.quadrature_order = order;
    tab.cutoff_n2_ = static_cast<std::int64_t>(std::floor(cutoff * cutoff + 1e-9));
    tab.a_d_ = 0.5 * d * std::tgamma(0.5 * d - 1.0) * std::pow(M_PI, -0.5 * d);

    const double tmax = 2097152.0; // 2^21
    const QuadNodes q = make_panels(order, tmax);
    const int nmax = static_cast<int>(std::floor(cutoff));

    // Scaled Bessel vectors for every node.
    std::vector<std::vector<double>> bes(q.t.size());
    for (std::size_t i = 0; i < q.t.size(); ++i) scaled_bessel_i(q.t[i] / d, nmax, bes[i]);

    const double front = std::pow(d / (2.0 * M_PI), 0.5 * d);
    auto tail_value = [&](const std::array<std::int32_t, kMaxDim>& a) {
        double A1 = 0.0, A2 = 0.0;
        for (int j = 0; j < d; ++j) {
            A1 += bessel_a1(a[static_cast<std::size_t>(j)]);
            A2 += bessel_a2(a[static_cast<std::size_t>(j)]);
        }
        double pairs = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                pairs += bessel_a1(a[static_cast<std::size_t>(i)]) * bessel_a1(a[static_cast<std::size_t>(j)]);
        A1 *= d;
        A2 = d * static_cast<double>(d) * (A2 + pairs);
        const double h = 0.5 * d; // d/2
        const double t0 = std::pow(tmax, 1.0 - h) / (h - 1.0);
        const double t1 = A1 * std::pow(tmax, -h) / h;
        const double t2 = A2 * std::pow(tmax, -h - 1.0) / (h + 1.0);
        return front * (t0 + t1 + t2);
    };

    enumerate_canonical(d, tab.cutoff_n2_, [&](const std::array<std::int32_t, kMaxDim>& a) {
        double g = 0.0;
        for (std::size_t i = 0; i < q.t.size(); ++i) {
            double p = 1.0;
            for (int j = 0; j < d; ++j) p *= bes[i][static_cast<std::size_t>(a[static_cast<std::size_t>(j)])];
            g += q.w[i] * p;
        }
        g += tail_value(a);
        tab.values_.emplace(pack_canonical(a, d), g);
    });
    tab.origin_ = tab.values_.at(0);

    // Least-squares fit of the far field on the outer shells of the table.
    // Basis: r^(2-d), r^-d, r^-d m4, r^(-d-2), r^(-d-2) m4, r^(-d-2) m6 with
    // m4 = sum x_j^4 / r^4, m6 = sum x_j^6 / r^6. Weighted by r^(d-2) so the
    // fit minimizes relative error.
    const double fit_lo2 = 0.36 * cutoff * cutoff; // from 0.6*cutoff
    Eigen::MatrixXd AtA = Eigen::MatrixXd::Zero(6, 6);
    Eigen::VectorXd Atb = Eigen::VectorXd::Zero(6);
    enumerate_canonical(d, tab.cutoff_n2_, [&](const std::array<std::int32_t, kMaxDim>& a) {
        std::int64_t n2 = 0;
        for (int j = 0; j < d; ++j) n2 += std::int64_t(a[static_cast<std::size_t>(j)]) * a[static_cast<std::size_t>(j)];
        if (static_cast<double>(n2) < fit_lo2) return;
        const double r2 = static_cast<double>(n2);
        const double r = std::sqrt(r2);
        double s4 = 0.0, s6 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double cj = a[static_cast<std::size_t>(j)];
            s4 += cj * cj * cj * cj;
            s6 += cj * cj * cj * cj * cj * cj;
        }
        const double m4 = s4 / (r2 * r2);
        const double m6 = s6 / (r2 * r2 * r2);
        const double rd = std::pow(r, -static_cast<double>(d));
        Eigen::Matrix<double, 6, 1> phi;
        phi << std::pow(r, 2.0 - d), rd, rd * m4, rd / r2, rd * m4 / r2, rd * m6 / r2;
        const double wgt = std::pow(r, d - 2.0);
        AtA += (wgt * wgt) * (phi * phi.transpose());
        Atb += (wgt * wgt) * phi * tab.values_.at(pack_canonical(a, d));
    });
    Eigen::VectorXd coef = AtA.ldlt().solve(Atb);
    for (int i = 0; i < 6; ++i) tab.fit_[static_cast<std::size_t>(i)] = coef(i);

    // Residual of the fit on the outer band [cutoff-1.5, cutoff].
    const double band_lo2 = (cutoff - 1.5) * (cutoff - 1.5);
    double worst = 0.0;
    enumerate_canonical(d, tab.cutoff_n2_, [&](const std::array<std::int32_t, kMaxDim>& a) {
        std::int64_t n2 = 0;
        for (int j = 0; j < d; ++j) n2 += std::int64_t(a[static_cast<std::size_t>(j)]) * a[static_cast<std::size_t>(j)];
        if (static_cast<double>(n2) < band_lo2) return;
        const double exact = tab.values_.at(pack_canonical(a, d));
        const double approx = tab.asymptotic(n2, a);
        worst = std::max(worst, std::fabs(approx - exact) / exact);
    });
    tab.fit_residual_ = worst;

    return tab;
}

double GreenTable::asymptotic(std::int64_t n2, const std::array<std::int32_t, kMaxDim>& a) const {
    const double r2 = static_cast<double>(n2);
    const double r = std::sqrt(r2);
    double s4 = 0.0, s6 = 0.0;
    for (int j = 0; j < d; ++j) {
        const double cj = a[static_cast<std::size_t>(j)];
        s4 += cj * cj * cj * cj;
        s6 += cj * cj * cj * cj * cj * cj;
    }
    const double m4 = s4 / (r2 * r2);
    const double m6 = s6 / (r2 * r2 * r2);
    const double rd = std::pow(r, -static_cast<double>(d));
    return fit_[0] * std::pow(r, 2.0 - d) + fit_[1] * rd + fit_[2] * rd * m4 + fit_[3] * rd / r2 +
           fit_[4] * rd * m4 / r2 + fit_[5] * rd * m6 / r2;
}

double GreenTable::eval(const Point& x) const {
    if (x.dim != d) throw ValidationError("green: dimension mismatch");
    const auto a = canonical(x);
    std::int64_t n2 = 0;
    for (int j = 0; j < d; ++j) n2 += std::int64_t(a[static_cast<std::size_t>(j)]) * a[static_cast<std::size_t>(j)];
    if (n2 <= cutoff_n2_) {
        auto it = values_.find(pack_canonical(a, d));
        if (it != values_.end()) return it->second;
    }
    return asymptotic(n2, a);
}

std::shared_ptr<const GreenTable> shared_green_table(int d, int order) {
    static std::mutex mu;
    static std::unordered_map<std::uint64_t, std::shared_ptr<const GreenTable>> cache;
    const std::uint64_t key = (static_cast<std::uint64_t>(d) << 32) | static_cast<std::uint64_t>(order);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto tab = std::make_shared<GreenTable>(build_green_table(d, order));
    cache.emplace(key, tab);
    return tab;
}

double green(int d, const Point& x) { return shared_green_table(d)->eval(x); }

} // namespace ris

#include "ris/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ris {

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    // Lentz continued fraction for Q(a,x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k & 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
    Interval iv;
    if (n == 0) return iv;
    const double nn = static_cast<double>(n);
    iv.phat = static_cast<double>(k) / nn;
    const double den = 1.0 + z * z / nn;
    const double ctr = (iv.phat + z * z / (2.0 * nn)) / den;
    const double hw = (z / den) * std::sqrt(iv.phat * (1.0 - iv.phat) / nn + z * z / (4.0 * nn * nn));
    iv.lo = std::max(0.0, ctr - hw);
    iv.hi = std::min(1.0, ctr + hw);
    return iv;
}

namespace {

// Pool trailing small-expectation cells into their predecessor until every
// kept cell clears the threshold.
void pool_cells(std::vector<double>& expected, std::vector<std::vector<std::uint64_t>>& observed,
                double min_expected) {
    for (;;) {
        std::size_t worst = expected.size();
        double wmin = min_expected;
        for (std::size_t i = 0; i < expected.size(); ++i)
            if (expected[i] < wmin) {
                wmin = expected[i];
                worst = i;
            }
        if (worst == expected.size() || expected.size() <= 2) return;
        const std::size_t into = worst > 0 ? worst - 1 : 1;
        expected[into] += expected[worst];
        for (auto& obs : observed) obs[into] += obs[worst];
        expected.erase(expected.begin() + static_cast<std::ptrdiff_t>(worst));
        for (auto& obs : observed) obs.erase(obs.begin() + static_cast<std::ptrdiff_t>(worst));
    }
}

} // namespace

Chi2Result chi2_goodness(const std::vector<std::uint64_t>& observed, const std::vector<double>& prob,
                         double min_expected) {
    if (observed.size() != prob.size()) throw std::invalid_argument("chi2_goodness: size mismatch");
    std::uint64_t n = 0;
    for (auto o : observed) n += o;
    std::vector<double> expected(prob.size());
    for (std::size_t i = 0; i < prob.size(); ++i) expected[i] = prob[i] * static_cast<double>(n);
    std::vector<std::vector<std::uint64_t>> obs{observed};
    pool_cells(expected, obs, min_expected);
    Chi2Result r;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        const double diff = static_cast<double>(obs[0][i]) - expected[i];
        r.stat += diff * diff / expected[i];
    }
    r.df = static_cast<int>(expected.size()) - 1;
    r.pvalue = r.df > 0 ? chi2_sf(r.stat, r.df) : 1.0;
    return r;
}

Chi2Result chi2_two_sample(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                           double min_expected) {
    if (a.size() != b.size()) throw std::invalid_argument("chi2_two_sample: size mismatch");
    std::uint64_t na = 0, nb = 0;
    for (auto v : a) na += v;
    for (auto v : b) nb += v;
    if (na == 0 || nb == 0) throw std::invalid_argument("chi2_two_sample: empty sample");
    // pooled expectation per cell
    std::vector<double> expected(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        expected[i] = static_cast<double>(a[i] + b[i]) * static_cast<double>(na) / static_cast<double>(na + nb);
    std::vector<std::vector<std::uint64_t>> obs{a, b};
    pool_cells(expected, obs, min_expected);
    const double ratio = static_cast<double>(nb) / static_cast<double>(na);
    Chi2Result r;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double ea = expected[i];
        const double eb = expected[i] * ratio;
        if (ea <= 0.0 || eb <= 0.0) continue;
        const double da = static_cast<double>(obs[0][i]) - ea;
        const double db = static_cast<double>(obs[1][i]) - eb;
        r.stat += da * da / ea + db * db / eb;
    }
    r.df = static_cast<int>(expected.size()) - 1;
    r.pvalue = r.df > 0 ? chi2_sf(r.stat, r.df) : 1.0;
    return r;
}

Chi2Result chi2_independence(const std::vector<std::uint64_t>& table, int rows, int cols) {
    if (static_cast<int>(table.size()) != rows * cols) throw std::invalid_argument("chi2_independence: bad table");
    std::vector<double> rsum(static_cast<std::size_t>(rows), 0.0), csum(static_cast<std::size_t>(cols), 0.0);
    double n = 0.0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double v = static_cast<double>(table[static_cast<std::size_t>(i * cols + j)]);
            rsum[static_cast<std::size_t>(i)] += v;
            csum[static_cast<std::size_t>(j)] += v;
            n += v;
        }
    Chi2Result r;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double e = rsum[static_cast<std::size_t>(i)] * csum[static_cast<std::size_t>(j)] / n;
            if (e <= 0.0) continue;
            const double d = static_cast<double>(table[static_cast<std::size_t>(i * cols + j)]) - e;
            r.stat += d * d / e;
        }
    r.df = (rows - 1) * (cols - 1);
    r.pvalue = r.df > 0 ? chi2_sf(r.stat, r.df) : 1.0;
    return r;
}

std::vector<int> cap_for_buckets(const std::vector<int>& sample, std::uint64_t min_count, int& cap_out) {
    int hi = 0;
    for (auto v : sample) hi = std::max(hi, v);
    std::vector<std::uint64_t> cnt(static_cast<std::size_t>(hi) + 1, 0);
    for (auto v : sample) ++cnt[static_cast<std::size_t>(v)];
    int cap = hi;
    std::uint64_t tail = cnt[static_cast<std::size_t>(hi)];
    while (cap > 1 && tail < min_count) {
        --cap;
        tail += cnt[static_cast<std::size_t>(cap)];
    }
    cap_out = cap;
    std::vector<int> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) out[i] = std::min(sample[i], cap);
    return out;
}

Chi2Result chi2_mutual_independence3(const std::vector<int>& a, const std::vector<int>& b,
                                     const std::vector<int>& c) {
    if (a.size() != b.size() || b.size() != c.size())
        throw std::invalid_argument("chi2_mutual_independence3: size mismatch");
    int capa = 0, capb = 0, capc = 0;
    const auto aa = cap_for_buckets(a, 200, capa);
    const auto bb = cap_for_buckets(b, 200, capb);
    const auto cc = cap_for_buckets(c, 200, capc);
    const int ra = capa + 1, rb = capb + 1, rc = capc + 1;
    std::vector<std::uint64_t> joint(static_cast<std::size_t>(ra * rb * rc), 0);
    std::vector<double> pa(static_cast<std::size_t>(ra), 0.0), pb(static_cast<std::size_t>(rb), 0.0),
        pc(static_cast<std::size_t>(rc), 0.0);
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < aa.size(); ++i) {
        ++joint[static_cast<std::size_t>((aa[i] * rb + bb[i]) * rc + cc[i])];
        pa[static_cast<std::size_t>(aa[i])] += 1.0;
        pb[static_cast<std::size_t>(bb[i])] += 1.0;
        pc[static_cast<std::size_t>(cc[i])] += 1.0;
    }
    for (auto& v : pa) v /= n;
    for (auto& v : pb) v /= n;
    for (auto& v : pc) v /= n;
    Chi2Result r;
    for (int i = 0; i < ra; ++i)
        for (int j = 0; j < rb; ++j)
            for (int k = 0; k < rc; ++k) {
                const double e = n * pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)] *
                                 pc[static_cast<std::size_t>(k)];
                if (e < 1e-9) continue;
                const double d =
                    static_cast<double>(joint[static_cast<std::size_t>((i * rb + j) * rc + k)]) - e;
                r.stat += d * d / e;
            }
    r.df = ra * rb * rc - ra - rb - rc + 2;
    r.pvalue = r.df > 0 ? chi2_sf(r.stat, r.df) : 1.0;
    return r;
}

double ks_exponential_pvalue(std::vector<double> sample, double rate) {
    if (sample.empty()) return 1.0;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = 1.0 - std::exp(-rate * sample[i]);
        dmax = std::max(dmax, std::fabs(f - static_cast<double>(i) / n));
        dmax = std::max(dmax, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    const double sq = std::sqrt(n);
    return kolmogorov_sf((sq + 0.12 + 0.11 / sq) * dmax);
}

LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& sigma_y) {
    if (x.size() != y.size() || x.size() != sigma_y.size() || x.size() < 2)
        throw std::invalid_argument("weighted_line_fit: need at least two points");
    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = std::max(sigma_y[i], 1e-12);
        const double w = 1.0 / (s * s);
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
        swxx += w * x[i] * x[i];
        swxy += w * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    LineFit f;
    f.npoints = static_cast<int>(x.size());
    f.slope = (sw * swxy - swx * swy) / det;
    f.intercept = (swxx * swy - swx * swxy) / det;
    f.se_slope = std::sqrt(sw / det);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = std::max(sigma_y[i], 1e-12);
        const double r = (y[i] - f.intercept - f.slope * x[i]) / s;
        f.chi2 += r * r;
    }
    return f;
}

} // namespace ris

#include "ris/slt.hpp"

#include <cmath>

namespace ris {

SoftLocalTimes::SoftLocalTimes(const Scene& scene, ReplicaCtx& ctx) : scene_(scene), ctx_(ctx) {
    const std::size_t n = scene.alphabet.size();
    G_.assign(n, 0.0L);
    clocks_.resize(n);
    // First undiscovered level at each site: the marks at site x form a
    // Poisson process of rate ebar(x) in the vertical coordinate.
    for (std::size_t i = 0; i < n; ++i)
        clocks_[i] = static_cast<long double>(ctx.clocks.exponential(scene.ebar[i]));
}

std::pair<double, SltMark> SoftLocalTimes::next(const std::vector<double>& density, int density_y) {
    const std::size_t n = G_.size();
    if (density.size() != n) throw ValidationError("slt: density size mismatch");
    long double best = -1.0L;
    int best_site = -1;
    for (std::size_t i = 0; i < n; ++i) {
        const double dens = density[i];
        if (dens < 0.0) throw ValidationError("slt: negative density");
        if (dens <= 0.0) continue;
        const long double need = (clocks_[i] - G_[i]) / dens;
        if (best_site < 0 || need < best) { // ties resolved by enumeration order
            best = need;
            best_site = static_cast<int>(i);
        }
    }
    if (best_site < 0) throw ValidationError("slt: degenerate density");
    const long double xi = best;
    for (std::size_t i = 0; i < n; ++i) G_[i] += xi * static_cast<long double>(density[i]);

    SltMark mark;
    mark.site = best_site;
    mark.level = clocks_[static_cast<std::size_t>(best_site)];
    mark.exc = sample_alphabet_excursion(scene_, best_site, ctx_.paths);
    clocks_[static_cast<std::size_t>(best_site)] +=
        static_cast<long double>(ctx_.clocks.exponential(scene_.ebar[static_cast<std::size_t>(best_site)]));

    transcript_.push_back(SltStep{mark.site, mark.level, xi, density_y, mark.exc});
    return {static_cast<double>(xi), mark};
}

std::pair<double, SltMark> SoftLocalTimes::next_unit() {
    static thread_local std::vector<double> unit;
    unit.assign(G_.size(), 1.0);
    return next(unit, -1);
}

long double SoftLocalTimes::G_min() const {
    long double m = G_.empty() ? 0.0L : G_[0];
    for (auto v : G_) m = std::min(m, v);
    return m;
}

long double SoftLocalTimes::curve_at(int n, int site) const {
    if (n < 0 || n > steps()) throw ValidationError("slt: step out of range");
    // Cheap for unit tails; g-density steps re-fetch the cached row.
    long double g = 0.0L;
    for (int k = 0; k < n; ++k) {
        const SltStep& st = transcript_[static_cast<std::size_t>(k)];
        if (st.density_y < 0)
            g += st.xi;
        else
            g += st.xi * static_cast<long double>(g_row(scene_, ctx_, st.density_y)[static_cast<std::size_t>(site)]);
    }
    return g;
}

void SoftLocalTimes::resample_overwrite(int from, const std::vector<SltMark>& marks) {
    if (from < 0 || from + static_cast<int>(marks.size()) != steps())
        throw ValidationError("slt: resample range mismatch");
    for (std::size_t i = 0; i < marks.size(); ++i) {
        const SltMark& m = marks[i];
        const int step = from + static_cast<int>(i);
        const long double expect = curve_at(step + 1, m.site);
        const long double tol = 1e-9L * (1.0L + std::fabs(static_cast<double>(expect)));
        if (std::fabs(static_cast<double>(m.level - expect)) > static_cast<double>(tol))
            throw ValidationError("slt: resample level inconsistent with the curve history");
        auto& st = transcript_[static_cast<std::size_t>(step)];
        st.site = m.site;
        st.level = m.level;
        st.exc = m.exc;
    }
}

void SoftLocalTimes::set_clocks_for_test(const std::vector<long double>& clocks) {
    if (clocks.size() != clocks_.size()) throw ValidationError("slt: clock size mismatch");
    clocks_ = clocks;
}

} // namespace ris

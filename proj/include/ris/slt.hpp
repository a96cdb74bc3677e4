#pragma once

#include <utility>
#include <vector>

#include "ris/scene.hpp"

namespace ris {

// One realized mark of the Poisson process on (excursion space) x R_+,
// projected to its start site and vertical level. The excursion itself is
// attached lazily, on consumption.
struct SltMark {
    int site = -1; // alphabet index
    long double level = 0.0L;
    ExcursionPtr exc;
};

struct SltStep {
    int site = -1;
    long double level = 0.0L;
    long double xi = 0.0L;
    int density_y = -1; // -1: unit density; otherwise shell index of g(y, .)
    ExcursionPtr exc;
};

// Lazy realization of the marked Poisson process together with the
// accumulated-curve selection recursion. Everything in play depends on an
// excursion only through its start site, so the state is one accumulated
// value and one undiscovered clock level per alphabet site.
class SoftLocalTimes {
public:
    SoftLocalTimes(const Scene& scene, ReplicaCtx& ctx);

    // Advance one step under the given density over the alphabet.
    // density_y tags the transcript (-1 for the unit density).
    std::pair<double, SltMark> next(const std::vector<double>& density, int density_y);
    std::pair<double, SltMark> next_unit();

    int steps() const { return static_cast<int>(transcript_.size()); }
    const std::vector<SltStep>& transcript() const { return transcript_; }
    const std::vector<long double>& G() const { return G_; }
    long double G_min() const;

    // Curve value at a site after the first n steps (replayed from the
    // transcript densities).
    long double curve_at(int n, int site) const;

    // Replace the consumed marks of steps [from, steps()) by the supplied
    // ones. Curves (xi's and densities) are kept; each supplied level must
    // equal the curve value at its site for the step it takes over.
    void resample_overwrite(int from, const std::vector<SltMark>& marks);

    // Test hook: force the undiscovered clock levels (alphabet-aligned).
    void set_clocks_for_test(const std::vector<long double>& clocks);
    const std::vector<long double>& clocks() const { return clocks_; }

private:
    const Scene& scene_;
    ReplicaCtx& ctx_;
    std::vector<long double> G_;
    std::vector<long double> clocks_;
    std::vector<SltStep> transcript_;
};

} // namespace ris

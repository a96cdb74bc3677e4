#pragma once

#include <map>
#include <memory>
#include <string>

#include "ris/processes.hpp"

namespace ris::testing {

// Scenes are expensive enough to share across test cases; keyed by the scene
// parameters, built on first use.
inline const Scene& cached_scene(const std::string& kind, double ball_radius, std::int64_t xhat1, double u,
                                 std::int64_t chain_exact_max = 4'000'000) {
    static std::map<std::string, std::unique_ptr<Scene>> cache;
    const std::string key = kind + "/" + std::to_string(ball_radius) + "/" + std::to_string(xhat1) + "/" +
                            std::to_string(u) + "/" + std::to_string(chain_exact_max);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    SiteSet K1 = kind == "ball" ? ball(Point::zero(3), ball_radius)
                                : SiteSet::from_points({Point::zero(3)});
    Point xh = Point::zero(3);
    xh.c[0] = static_cast<std::int32_t>(xhat1);
    SceneOptions opts;
    opts.chain_exact_max_ball_sites = chain_exact_max;
    auto sc = std::make_unique<Scene>(build_scene(make_configuration(K1, xh, u), opts));
    return *cache.emplace(key, std::move(sc)).first->second;
}

// K1 = {0}, xhat = (9,0,0): the miniature two-point scene.
inline const Scene& mini_scene(double u = 1.0) { return cached_scene("singleton", 0, 9, u); }

// Exact 4-outcome trace law for a two-point K = {x1, x2}: occupancy events
// follow from the restriction identities P[x not hit] = exp(-u cap({x})) and
// P[trace empty] = exp(-u cap(K)).
// prob[mask] with bit i = "K[i] occupied" in the K enumeration order.
struct TwoPointLaw {
    std::array<double, 4> prob;
};
inline TwoPointLaw exact_two_point_law(const Scene& sc) {
    if (sc.cfg.K.size() != 2) throw ValidationError("exact_two_point_law: need |K| = 2");
    const double u = sc.cfg.u;
    const double pe = std::exp(-u * sc.eqK.cap);
    // vacancy probability of the single site K[i]
    const double v0 = std::exp(-u / sc.green->eval(Point::zero(3)));
    TwoPointLaw law;
    law.prob[0] = pe;
    law.prob[1] = v0 - pe; // K[0] occupied only <=> K[1] vacant minus both vacant
    law.prob[2] = v0 - pe;
    law.prob[3] = 1.0 - 2.0 * v0 + pe;
    return law;
}

} // namespace ris::testing

#include "ris/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ris {

std::string Point::str() const {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < dim; ++i) {
        if (i) os << ",";
        os << c[i];
    }
    os << ")";
    return os.str();
}

std::int64_t dist2(const Point& a, const Point& b) {
    std::int64_t s = 0;
    for (int i = 0; i < a.dim; ++i) {
        const std::int64_t dd = std::int64_t(a.c[i]) - b.c[i];
        s += dd * dd;
    }
    return s;
}

SiteSet SiteSet::from_points(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i] == pts[i - 1])
            throw ValidationError("SiteSet: duplicate site " + pts[i].str());
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].dim != pts[0].dim)
            throw ValidationError("SiteSet: mixed dimensions");
    SiteSet s;
    s.sites_ = std::move(pts);
    return s;
}

SiteSet SiteSet::from_points_dedup(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    SiteSet s;
    s.sites_ = std::move(pts);
    return s;
}

bool SiteSet::contains(const Point& p) const {
    return std::binary_search(sites_.begin(), sites_.end(), p);
}

std::optional<int> SiteSet::index_of(const Point& p) const {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), p);
    if (it != sites_.end() && *it == p) return static_cast<int>(it - sites_.begin());
    return std::nullopt;
}

SiteSet SiteSet::translated(const Point& v) const {
    std::vector<Point> pts;
    pts.reserve(sites_.size());
    for (const auto& p : sites_) pts.push_back(p + v);
    return from_points(std::move(pts));
}

SiteSet SiteSet::united(const SiteSet& other) const {
    std::vector<Point> pts = sites_;
    pts.insert(pts.end(), other.sites_.begin(), other.sites_.end());
    return from_points_dedup(std::move(pts));
}

std::string SiteSet::serialize() const {
    std::ostringstream os;
    for (const auto& p : sites_) {
        for (int i = 0; i < p.dim; ++i) {
            if (i) os << ' ';
            os << p.c[i];
        }
        os << '\n';
    }
    return os.str();
}

SiteSet SiteSet::deserialize(const std::string& text, int expected_dim) {
    std::istringstream is(text);
    std::string line;
    std::vector<Point> pts;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<std::int64_t> vals;
        std::int64_t v;
        while (ls >> v) vals.push_back(v);
        if (vals.empty()) continue;
        if (expected_dim && static_cast<int>(vals.size()) != expected_dim)
            throw ValidationError("SiteSet: line with wrong dimension");
        if (static_cast<int>(vals.size()) > kMaxDim)
            throw ValidationError("SiteSet: dimension exceeds limit");
        Point p;
        p.dim = static_cast<std::int8_t>(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (vals[i] < INT32_MIN || vals[i] > INT32_MAX)
                throw ValidationError("SiteSet: coordinate out of range");
            p.c[i] = static_cast<std::int32_t>(vals[i]);
        }
        pts.push_back(p);
    }
    return from_points(std::move(pts));
}

std::int64_t set_distance2(const SiteSet& a, const SiteSet& b) {
    if (a.empty() || b.empty()) throw ValidationError("set_distance: empty set");
    std::int64_t best = INT64_MAX;
    for (const auto& x : a)
        for (const auto& y : b) best = std::min(best, dist2(x, y));
    return best;
}

double set_distance(const SiteSet& a, const SiteSet& b) {
    return std::sqrt(static_cast<double>(set_distance2(a, b)));
}

std::int64_t set_diameter2(const SiteSet& a) {
    if (a.empty()) throw ValidationError("set_diameter: empty set");
    std::int64_t best = 0;
    for (int i = 0; i < a.size(); ++i)
        for (int j = i + 1; j < a.size(); ++j) best = std::max(best, dist2(a[i], a[j]));
    return best;
}

double set_diameter(const SiteSet& a) {
    return std::sqrt(static_cast<double>(set_diameter2(a)));
}

SiteSet internal_boundary(const SiteSet& a) {
    std::vector<Point> out;
    const int dd = a.dim();
    for (const auto& p : a) {
        for (int k = 0; k < 2 * dd; ++k) {
            if (!a.contains(p.neighbour(k))) {
                out.push_back(p);
                break;
            }
        }
    }
    return SiteSet::from_points(std::move(out));
}

SiteSet external_boundary(const SiteSet& a) {
    std::vector<Point> out;
    const int dd = a.dim();
    for (const auto& p : a) {
        for (int k = 0; k < 2 * dd; ++k) {
            Point q = p.neighbour(k);
            if (!a.contains(q)) out.push_back(q);
        }
    }
    return SiteSet::from_points_dedup(std::move(out));
}

bool lt_radius2(std::int64_t n, double r) {
    // Decide n < r^2 exactly: r is dyadic, so r^2 = m2^2 * 2^(2e) with
    // integer m2 and the comparison reduces to 128-bit integer arithmetic.
    if (!(r > 0.0)) return false;
    int e;
    const double frac = std::frexp(r, &e); // r = frac * 2^e, frac in [0.5,1)
    const auto m2 = static_cast<__int128>(std::ldexp(frac, 53));
    const int shift = 2 * (e - 53);
    const __int128 nn = n;
    const __int128 msq = m2 * m2;
    if (shift >= 0) {
        if (shift >= 127) return true; // r^2 astronomically large
        return nn < (msq << shift);
    }
    if (-shift >= 127) return false;
    return (nn << (-shift)) < msq;
}

SiteSet ball(const Point& center, double radius) {
    if (!(radius > 0.0)) throw ValidationError("ball: radius must be positive");
    BallRegion b = BallRegion::plain(center, radius);
    return SiteSet::from_points(b.enumerate());
}

std::vector<Point> BallRegion::enumerate() const {
    std::vector<Point> out;
    const int d = center.dim;
    const auto lim = static_cast<std::int32_t>(std::floor(radius)) + 1;
    std::vector<std::int32_t> off(static_cast<std::size_t>(d), 0);
    // iterative odometer over the bounding box
    for (auto& o : off) o = -lim;
    for (;;) {
        Point p = center;
        for (int i = 0; i < d; ++i) p.c[i] += off[static_cast<std::size_t>(i)];
        if (contains(p)) out.push_back(p);
        int lvl = d - 1;
        for (;;) {
            if (++off[static_cast<std::size_t>(lvl)] <= lim) break;
            off[static_cast<std::size_t>(lvl)] = -lim;
            if (--lvl < 0) return out;
        }
    }
}

std::vector<Point> BallRegion::enumerate_shell() const {
    // Sites with R <= ||x-c|| < R+1; uses per-prefix pruning so the cost is
    // O(R^(d-1)) rather than the full box.
    std::vector<Point> out;
    const int d = center.dim;
    const auto lim = static_cast<std::int32_t>(std::floor(radius + 1.0)) + 1;
    std::vector<std::int32_t> off(static_cast<std::size_t>(d), -lim);
    const double rhi2 = (radius + 1.0) * (radius + 1.0) + 1.0;
    for (;;) {
        // prune on the partial norm of the first d-1 coordinates
        std::int64_t part = 0;
        for (int i = 0; i + 1 < d; ++i)
            part += std::int64_t(off[static_cast<std::size_t>(i)]) * off[static_cast<std::size_t>(i)];
        if (static_cast<double>(part) <= rhi2) {
            const double rem = rhi2 - static_cast<double>(part);
            const auto zlim = static_cast<std::int32_t>(std::floor(std::sqrt(rem))) + 1;
            for (std::int32_t z = -zlim; z <= zlim; ++z) {
                Point p = center;
                for (int i = 0; i + 1 < d; ++i) p.c[i] += off[static_cast<std::size_t>(i)];
                p.c[d - 1] += z;
                if (contains(p)) continue; // inside the ball
                const std::int64_t n = dist2(p, center);
                if (static_cast<double>(n) > rhi2) continue;
                out.push_back(p);
            }
        }
        int lvl = d - 2;
        if (lvl < 0) break;
        for (;;) {
            if (++off[static_cast<std::size_t>(lvl)] <= lim) break;
            off[static_cast<std::size_t>(lvl)] = -lim;
            if (--lvl < 0) return out;
        }
    }
    return out;
}

std::int64_t BallRegion::site_count() const {
    std::int64_t n = 0;
    const int d = center.dim;
    const auto lim = static_cast<std::int32_t>(std::floor(radius)) + 1;
    std::vector<std::int32_t> off(static_cast<std::size_t>(d), -lim);
    for (;;) {
        Point p = center;
        for (int i = 0; i < d; ++i) p.c[i] += off[static_cast<std::size_t>(i)];
        if (contains(p)) ++n;
        int lvl = d - 1;
        for (;;) {
            if (++off[static_cast<std::size_t>(lvl)] <= lim) break;
            off[static_cast<std::size_t>(lvl)] = -lim;
            if (--lvl < 0) return n;
        }
    }
}

std::vector<Point> Configuration::enumerate_VR() const {
    std::vector<Point> v1 = ball1.enumerate();
    std::vector<Point> v2 = ball2.enumerate();
    v1.insert(v1.end(), v2.begin(), v2.end());
    std::sort(v1.begin(), v1.end());
    return v1;
}

Configuration make_configuration(const SiteSet& K1, const Point& xhat, double u) {
    Configuration cfg;
    if (K1.empty()) throw ValidationError("configuration: K1 is empty");
    cfg.d = K1.dim();
    if (cfg.d < 3) throw ValidationError("configuration: dimension must be at least 3");
    if (xhat.dim != cfg.d) throw ValidationError("configuration: xhat dimension mismatch");
    if (!(u > 0.0)) throw ValidationError("configuration: u must be positive");
    if (!K1.contains(Point::zero(cfg.d)))
        throw ValidationError("configuration: origin must belong to K1");

    cfg.u = u;
    cfg.K1 = K1;
    cfg.xhat = xhat;
    cfg.xhat_norm2 = xhat.norm2();
    if (cfg.xhat_norm2 > (std::int64_t(1) << 31))
        throw ValidationError("configuration: xhat too large for exact radius arithmetic");

    // ||xhat|| >= 4 diam(K1) + 3, exactly:
    // m >= 16 D + 9 + 24 sqrt(D)  <=>  t := m-16D-9 >= 0 and t^2 >= 576 D.
    const std::int64_t m = cfg.xhat_norm2;
    const std::int64_t D = set_diameter2(K1);
    const std::int64_t t = m - 16 * D - 9;
    if (t < 0 || t * t < 576 * D)
        throw ValidationError("configuration: ||xhat|| < 4 diam(K1) + 3");

    cfg.K2 = K1.translated(xhat);
    for (const auto& p : cfg.K2)
        if (K1.contains(p)) throw ValidationError("configuration: K1 and K2 intersect");
    cfg.K = cfg.K1.united(cfg.K2);

    cfg.R = (std::sqrt(static_cast<double>(m)) - 1.0) / 2.0;
    const double diam = std::sqrt(static_cast<double>(D));
    cfg.delta = std::max(diam, 1.0) / cfg.R;

    cfg.ball1 = BallRegion::scene(Point::zero(cfg.d), m);
    cfg.ball2 = BallRegion::scene(xhat, m);

    for (const auto& p : K1)
        if (!cfg.ball1.contains(p))
            throw ValidationError("configuration: K1 not contained in B_R^1");

    // dist(K1,K2) <= 3R, exactly: s := 9m - 4 Dmin - 9 >= 0 and 144 Dmin <= s^2.
    const std::int64_t Dmin = set_distance2(cfg.K1, cfg.K2);
    const std::int64_t s = 9 * m - 4 * Dmin - 9;
    if (s < 0 || 144 * Dmin > s * s)
        throw ValidationError("configuration: dist(K1,K2) > 3R");

    cfg.bK = internal_boundary(cfg.K);

    // External boundary of V_R from the candidate shells of the two balls.
    // No site may be adjacent to both balls (the two external boundaries are
    // disjoint with this choice of R).
    std::vector<Point> candidates = cfg.ball1.enumerate_shell();
    {
        std::vector<Point> shell2 = cfg.ball2.enumerate_shell();
        candidates.insert(candidates.end(), shell2.begin(), shell2.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::vector<Point> bd;
    for (const auto& p : candidates) {
        if (cfg.in_VR(p)) throw ValidationError("configuration: shell site inside V_R");
        bool adj1 = false, adj2 = false;
        for (int k = 0; k < 2 * cfg.d; ++k) {
            const Point nb = p.neighbour(k);
            adj1 = adj1 || cfg.ball1.contains(nb);
            adj2 = adj2 || cfg.ball2.contains(nb);
        }
        if (adj1 && adj2)
            throw ValidationError("configuration: external boundaries of the two balls intersect");
        if (adj1 || adj2) bd.push_back(p);
    }
    cfg.beVR = SiteSet::from_points(std::move(bd));

    return cfg;
}

} // namespace ris

#pragma once

#include <array>
#include <cstdint>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ris {

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kMaxDim = 8;

// Lattice site in Z^d, d in [3, kMaxDim]. Coordinates are kept small enough
// that all squared norms fit comfortably in int64.
struct Point {
    std::array<std::int32_t, kMaxDim> c{};
    std::int8_t dim = 3;

    Point() = default;
    Point(std::initializer_list<std::int32_t> xs) {
        dim = static_cast<std::int8_t>(xs.size());
        int i = 0;
        for (auto v : xs) c[static_cast<std::size_t>(i++)] = v;
    }
    static Point zero(int d) {
        Point p;
        p.dim = static_cast<std::int8_t>(d);
        return p;
    }

    std::int64_t norm2() const {
        std::int64_t s = 0;
        for (int i = 0; i < dim; ++i) s += std::int64_t(c[i]) * c[i];
        return s;
    }
    double norm() const { return std::sqrt(static_cast<double>(norm2())); }

    friend Point operator+(const Point& a, const Point& b) {
        Point r = a;
        for (int i = 0; i < a.dim; ++i) r.c[i] += b.c[i];
        return r;
    }
    friend Point operator-(const Point& a, const Point& b) {
        Point r = a;
        for (int i = 0; i < a.dim; ++i) r.c[i] -= b.c[i];
        return r;
    }
    friend bool operator==(const Point& a, const Point& b) {
        if (a.dim != b.dim) return false;
        for (int i = 0; i < a.dim; ++i)
            if (a.c[i] != b.c[i]) return false;
        return true;
    }
    friend bool operator!=(const Point& a, const Point& b) { return !(a == b); }
    friend bool operator<(const Point& a, const Point& b) {
        if (a.dim != b.dim) return a.dim < b.dim;
        for (int i = 0; i < a.dim; ++i)
            if (a.c[i] != b.c[i]) return a.c[i] < b.c[i];
        return false;
    }

    // Unit neighbour k in [0, 2d): axis k/2, direction +1 for even k.
    Point neighbour(int k) const {
        Point r = *this;
        r.c[k >> 1] += (k & 1) ? -1 : 1;
        return r;
    }

    std::string str() const;
};

std::int64_t dist2(const Point& a, const Point& b);

// Finite ordered collection of sites with a fixed enumeration (lexicographic
// on coordinates), so that anything indexed by sites is reproducible.
class SiteSet {
public:
    SiteSet() = default;

    // Sorts the input; duplicates are a validation error.
    static SiteSet from_points(std::vector<Point> pts);
    // Sorts and silently drops duplicates (for internally computed sets).
    static SiteSet from_points_dedup(std::vector<Point> pts);

    int size() const { return static_cast<int>(sites_.size()); }
    bool empty() const { return sites_.empty(); }
    const Point& operator[](int i) const { return sites_[static_cast<std::size_t>(i)]; }
    const std::vector<Point>& sites() const { return sites_; }
    auto begin() const { return sites_.begin(); }
    auto end() const { return sites_.end(); }

    bool contains(const Point& p) const;
    // Ordinal of p in the fixed enumeration, or nullopt.
    std::optional<int> index_of(const Point& p) const;

    int dim() const { return sites_.empty() ? 0 : sites_.front().dim; }

    SiteSet translated(const Point& v) const;
    SiteSet united(const SiteSet& other) const;

    // Newline-delimited text: one site per line, space-separated integers.
    std::string serialize() const;
    static SiteSet deserialize(const std::string& text, int expected_dim = 0);

private:
    std::vector<Point> sites_;
};

// --- free operations ------------------------------------------------------

double set_distance(const SiteSet& a, const SiteSet& b);
std::int64_t set_distance2(const SiteSet& a, const SiteSet& b);
double set_diameter(const SiteSet& a);
std::int64_t set_diameter2(const SiteSet& a);

SiteSet internal_boundary(const SiteSet& a);
SiteSet external_boundary(const SiteSet& a);

// Open discrete ball {x : ||x - center|| < radius} as an explicit set.
SiteSet ball(const Point& center, double radius);

// Exact comparison n < r^2 for integer n and (dyadic) double r.
bool lt_radius2(std::int64_t n, double r);

// Open ball with an exactly represented radius. Two flavours: a plain double
// radius, or the scene radius R = (sqrt(m)-1)/2 stored via the integer
// m = ||xhat||^2 so membership is decided in integer arithmetic.
struct BallRegion {
    Point center;
    bool scene_radius = false;
    std::int64_t m = 0;   // scene: squared norm of xhat
    double radius = 0.0;  // plain radius, or (sqrt(m)-1)/2 for reporting

    static BallRegion plain(const Point& center, double radius) {
        BallRegion b;
        b.center = center;
        b.radius = radius;
        return b;
    }
    static BallRegion scene(const Point& center, std::int64_t xhat_norm2) {
        BallRegion b;
        b.center = center;
        b.scene_radius = true;
        b.m = xhat_norm2;
        b.radius = (std::sqrt(static_cast<double>(xhat_norm2)) - 1.0) / 2.0;
        return b;
    }

    bool contains(const Point& p) const {
        const std::int64_t n = dist2(p, center);
        if (scene_radius) {
            // n < ((sqrt(m)-1)/2)^2  <=>  s := m+1-4n > 0  and  s^2 > 4m
            const std::int64_t s = m + 1 - 4 * n;
            return s > 0 && s * s > 4 * m;
        }
        return lt_radius2(n, radius);
    }

    // All sites of the ball, lexicographic order.
    std::vector<Point> enumerate() const;
    // Candidate shell {R <= ||x-c|| < R+1} that contains the external boundary.
    std::vector<Point> enumerate_shell() const;
    std::int64_t site_count() const;
};

// The two-set scene: K2 = K1 + xhat, R = (||xhat||-1)/2, V_R the two balls.
// V_R itself is kept implicit (membership predicate); only the small sets
// dK and beVR are materialized, since |V_R| grows like R^d.
struct Configuration {
    int d = 3;
    double u = 1.0;
    SiteSet K1, K2, K;
    Point xhat;
    std::int64_t xhat_norm2 = 0;
    double R = 0.0;
    double delta = 0.0;
    BallRegion ball1, ball2;
    SiteSet bK;    // internal boundary of K
    SiteSet beVR;  // external boundary of V_R

    bool in_VR(const Point& p) const { return ball1.contains(p) || ball2.contains(p); }
    std::int64_t vr_site_count() const { return ball1.site_count() + ball2.site_count(); }
    std::vector<Point> enumerate_VR() const;
};

Configuration make_configuration(const SiteSet& K1, const Point& xhat, double u);

} // namespace ris

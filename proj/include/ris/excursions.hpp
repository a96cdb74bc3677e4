#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ris/lattice.hpp"
#include "ris/rng.hpp"

namespace ris {

// Occupation pattern over the fixed enumeration of K.
struct Trace {
    std::vector<std::uint64_t> bits;
    int nsites = 0;

    explicit Trace(int n = 0) : bits(static_cast<std::size_t>((n + 63) / 64), 0), nsites(n) {}
    void set(int i) { bits[static_cast<std::size_t>(i >> 6)] |= (std::uint64_t(1) << (i & 63)); }
    bool test(int i) const { return (bits[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1; }
    void or_with(const Trace& o) {
        for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= o.bits[i];
    }
    bool operator==(const Trace& o) const { return nsites == o.nsites && bits == o.bits; }
    bool empty() const {
        for (auto b : bits)
            if (b) return false;
        return true;
    }
    int count() const;
    // Low word, valid as a histogram index when nsites <= 20.
    std::uint32_t low() const { return bits.empty() ? 0u : static_cast<std::uint32_t>(bits[0]); }
    std::string hex() const;
};

// O(1) membership/ordinal lookup for K over its bounding box.
class BoxIndex {
public:
    BoxIndex() = default;
    explicit BoxIndex(const SiteSet& s);
    int find(const Point& p) const; // ordinal in the SiteSet enumeration, or -1
private:
    int d_ = 0;
    Point lo_;
    std::array<std::int64_t, kMaxDim> dims_{};
    std::array<std::int64_t, kMaxDim> strides_{};
    std::vector<std::int32_t> cells_;
};

// One nearest-neighbour path from dK to its first visit of the separating
// boundary. The path is stored as packed direction nibbles; in lean mode the
// moves are dropped and only the endpoints, length, K-trace and a path hash
// remain (sufficient for traces and for multiset comparison up to hash
// collisions).
struct Excursion {
    Point start, end;
    std::uint64_t length = 0;
    std::vector<std::uint8_t> moves; // two 4-bit directions per byte
    Trace ktrace;                    // visited sites of K
    std::uint64_t hash = 0;
    bool lean = false;

    std::vector<Point> path() const; // start..end; requires !lean
    bool same_path(const Excursion& o) const;
    // Strict ordering for multiset comparison.
    static bool order(const Excursion& a, const Excursion& b);

    std::string to_csv() const;
    void append_binary(std::string& out) const;
    static Excursion from_binary(const std::string& in, std::size_t& off, int d, const BoxIndex& kidx, int ksize);
};

using ExcursionPtr = std::shared_ptr<const Excursion>;

// SRW from start (in dK) run until it steps out of V_R. Every step is one
// uniform direction draw from rng.
Excursion sample_excursion(const Point& start, const Configuration& cfg, const BoxIndex& kidx, int ksize,
                           RngStream& rng, bool lean = false);

// Excursion path validity: unit steps, start/end membership, no interior
// visit of the separating boundary.
void validate_excursion(const Excursion& exc, const Configuration& cfg);

Trace trace_of(const std::vector<ExcursionPtr>& excursions, int ksize);

} // namespace ris

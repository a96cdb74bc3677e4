#include "ris/excursions.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace ris {

int Trace::count() const {
    int n = 0;
    for (auto b : bits) n += std::popcount(b);
    return n;
}

std::string Trace::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (int w = static_cast<int>(bits.size()) - 1; w >= 0; --w) {
        for (int nib = 15; nib >= 0; --nib) {
            const auto v = (bits[static_cast<std::size_t>(w)] >> (nib * 4)) & 0xF;
            if (s.empty() && v == 0) continue;
            s.push_back(digits[v]);
        }
    }
    if (s.empty()) s = "0";
    return s;
}

BoxIndex::BoxIndex(const SiteSet& s) {
    if (s.empty()) return;
    d_ = s.dim();
    Point hi = s[0];
    lo_ = s[0];
    for (const auto& p : s)
        for (int i = 0; i < d_; ++i) {
            lo_.c[i] = std::min(lo_.c[i], p.c[i]);
            hi.c[i] = std::max(hi.c[i], p.c[i]);
        }
    std::int64_t total = 1;
    for (int i = 0; i < d_; ++i) {
        dims_[static_cast<std::size_t>(i)] = std::int64_t(hi.c[i]) - lo_.c[i] + 1;
        total *= dims_[static_cast<std::size_t>(i)];
    }
    if (total > 50'000'000) throw ValidationError("BoxIndex: bounding box too large");
    std::int64_t stride = 1;
    for (int i = d_ - 1; i >= 0; --i) {
        strides_[static_cast<std::size_t>(i)] = stride;
        stride *= dims_[static_cast<std::size_t>(i)];
    }
    cells_.assign(static_cast<std::size_t>(total), -1);
    for (int i = 0; i < s.size(); ++i) {
        std::int64_t cell = 0;
        for (int k = 0; k < d_; ++k) cell += (s[i].c[k] - lo_.c[k]) * strides_[static_cast<std::size_t>(k)];
        cells_[static_cast<std::size_t>(cell)] = i;
    }
}

int BoxIndex::find(const Point& p) const {
    if (cells_.empty()) return -1;
    std::int64_t cell = 0;
    for (int i = 0; i < d_; ++i) {
        const std::int64_t off = std::int64_t(p.c[i]) - lo_.c[i];
        if (off < 0 || off >= dims_[static_cast<std::size_t>(i)]) return -1;
        cell += off * strides_[static_cast<std::size_t>(i)];
    }
    return cells_[static_cast<std::size_t>(cell)];
}

namespace {

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t hash_start(const Point& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, static_cast<std::uint64_t>(p.dim));
    for (int i = 0; i < p.dim; ++i) h = fnv1a(h, static_cast<std::uint64_t>(std::uint32_t(p.c[i])));
    return h;
}

} // namespace

std::vector<Point> Excursion::path() const {
    if (lean && length > 0 && moves.empty())
        throw ValidationError("excursion: path not stored (lean mode)");
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(length) + 1);
    Point p = start;
    out.push_back(p);
    for (std::uint64_t s = 0; s < length; ++s) {
        const std::uint8_t byte = moves[static_cast<std::size_t>(s >> 1)];
        const int mv = (s & 1) ? (byte >> 4) : (byte & 0xF);
        p = p.neighbour(mv);
        out.push_back(p);
    }
    return out;
}

bool Excursion::same_path(const Excursion& o) const {
    if (length != o.length || !(start == o.start) || !(end == o.end) || hash != o.hash) return false;
    if (!lean && !o.lean) return moves == o.moves;
    return ktrace == o.ktrace; // hash-based comparison in lean mode
}

bool Excursion::order(const Excursion& a, const Excursion& b) {
    if (a.length != b.length) return a.length < b.length;
    if (!(a.start == b.start)) return a.start < b.start;
    if (!(a.end == b.end)) return a.end < b.end;
    if (a.hash != b.hash) return a.hash < b.hash;
    return a.moves < b.moves;
}

std::string Excursion::to_csv() const {
    std::ostringstream os;
    auto pts = path();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int k = 0; k < pts[i].dim; ++k) {
            if (k) os << ' ';
            os << pts[i].c[k];
        }
        os << '\n';
    }
    return os.str();
}

void Excursion::append_binary(std::string& out) const {
    if (lean) throw ValidationError("excursion: cannot serialize lean record as path");
    auto put32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    for (int i = 0; i < start.dim; ++i) put32(static_cast<std::uint32_t>(start.c[i]));
    put32(static_cast<std::uint32_t>(length));
    out.append(reinterpret_cast<const char*>(moves.data()), moves.size());
}

Excursion Excursion::from_binary(const std::string& in, std::size_t& off, int d, const BoxIndex& kidx, int ksize) {
    auto get32 = [&]() {
        if (off + 4 > in.size()) throw ValidationError("excursion: truncated binary record");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)])) << (8 * i);
        off += 4;
        return v;
    };
    Excursion e;
    e.start.dim = static_cast<std::int8_t>(d);
    for (int i = 0; i < d; ++i) e.start.c[i] = static_cast<std::int32_t>(get32());
    e.length = get32();
    const std::size_t nbytes = static_cast<std::size_t>((e.length + 1) / 2);
    if (off + nbytes > in.size()) throw ValidationError("excursion: truncated binary record");
    e.moves.assign(in.begin() + static_cast<std::ptrdiff_t>(off), in.begin() + static_cast<std::ptrdiff_t>(off + nbytes));
    off += nbytes;
    // Rebuild end, trace and hash from the path.
    e.ktrace = Trace(ksize);
    std::uint64_t h = hash_start(e.start);
    Point p = e.start;
    int ki = kidx.find(p);
    if (ki >= 0) e.ktrace.set(ki);
    for (std::uint64_t s = 0; s < e.length; ++s) {
        const std::uint8_t byte = e.moves[static_cast<std::size_t>(s >> 1)];
        const int mv = (s & 1) ? (byte >> 4) : (byte & 0xF);
        p = p.neighbour(mv);
        h = fnv1a(h, static_cast<std::uint64_t>(mv));
        ki = kidx.find(p);
        if (ki >= 0) e.ktrace.set(ki);
    }
    e.end = p;
    e.hash = h;
    return e;
}

Excursion sample_excursion(const Point& start, const Configuration& cfg, const BoxIndex& kidx, int ksize,
                           RngStream& rng, bool lean) {
    if (!cfg.bK.contains(start)) throw ValidationError("sample_excursion: start not on the boundary of K");
    Excursion e;
    e.start = start;
    e.lean = lean;
    e.ktrace = Trace(ksize);
    const int twod = 2 * cfg.d;
    std::uint64_t h = hash_start(start);
    Point p = start;
    int ki = kidx.find(p);
    if (ki >= 0) e.ktrace.set(ki);
    std::uint64_t steps = 0;
    for (;;) {
        const int mv = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(twod)));
        p = p.neighbour(mv);
        ++steps;
        h = fnv1a(h, static_cast<std::uint64_t>(mv));
        if (!lean) {
            if (steps & 1)
                e.moves.push_back(static_cast<std::uint8_t>(mv));
            else
                e.moves.back() = static_cast<std::uint8_t>(e.moves.back() | (mv << 4));
        }
        ki = kidx.find(p);
        if (ki >= 0) e.ktrace.set(ki);
        if (!cfg.in_VR(p)) break;
        if (steps > (std::uint64_t(1) << 34))
            throw ValidationError("sample_excursion: runaway walk");
    }
    e.end = p;
    e.length = steps;
    e.hash = h;
    return e;
}

void validate_excursion(const Excursion& exc, const Configuration& cfg) {
    if (!cfg.bK.contains(exc.start)) throw ValidationError("excursion: start not in dK");
    if (!cfg.beVR.contains(exc.end)) throw ValidationError("excursion: end not in beVR");
    if (exc.lean) return;
    const auto pts = exc.path();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (dist2(pts[i], pts[i - 1]) != 1) throw ValidationError("excursion: non-unit step");
        const bool inside = cfg.in_VR(pts[i]);
        if (i + 1 < pts.size() && !inside) throw ValidationError("excursion: interior visit of the boundary");
        if (i + 1 == pts.size() && inside) throw ValidationError("excursion: end point inside V_R");
    }
    if (!(pts.back() == exc.end)) throw ValidationError("excursion: end mismatch");
}

Trace trace_of(const std::vector<ExcursionPtr>& excursions, int ksize) {
    Trace t(ksize);
    for (const auto& e : excursions) t.or_with(e->ktrace);
    return t;
}

} // namespace ris

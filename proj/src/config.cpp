#include "ris/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ris {

std::uint64_t fnv1a_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec <= 16; ++prec) {
        char tmp[40];
        std::snprintf(tmp, sizeof(tmp), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(tmp, "%lf", &back);
        if (back == v) return tmp;
    }
    return buf;
}

namespace {
std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
} // namespace

KvConfig KvConfig::parse(const std::string& text) {
    KvConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ValidationError("config: empty section name at line " + std::to_string(lineno));
            cfg.sections_[section];
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: expected key=value at line " + std::to_string(lineno));
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw ValidationError("config: empty key at line " + std::to_string(lineno));
        if (section.empty()) throw ValidationError("config: key outside a section at line " + std::to_string(lineno));
        cfg.sections_[section][key] = val;
    }
    return cfg;
}

KvConfig KvConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::string KvConfig::serialize() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [sec, kv] : sections_) {
        if (!first) os << '\n';
        first = false;
        os << '[' << sec << "]\n";
        for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
    }
    return os.str();
}

bool KvConfig::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string KvConfig::get(const std::string& section, const std::string& key, const std::string& fallback) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return fallback;
    auto jt = it->second.find(key);
    return jt == it->second.end() ? fallback : jt->second;
}

double KvConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stod(get(section, key));
    } catch (...) {
        throw ValidationError("config: bad number for " + section + "." + key);
    }
}

std::int64_t KvConfig::get_int(const std::string& section, const std::string& key, std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stoll(get(section, key));
    } catch (...) {
        throw ValidationError("config: bad integer for " + section + "." + key);
    }
}

bool KvConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: bad boolean for " + section + "." + key);
}

std::vector<double> KvConfig::get_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    if (!has(section, key)) return out;
    std::istringstream is(get(section, key));
    std::string tok;
    while (is >> tok) {
        if (tok == ",") continue;
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw ValidationError("config: bad list entry for " + section + "." + key);
        }
    }
    return out;
}

void KvConfig::set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = value;
}

void KvConfig::apply_override(const std::string& spec) {
    const std::size_t dot = spec.find('.');
    const std::size_t eq = spec.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq)
        throw ValidationError("config: override must be section.key=value, got '" + spec + "'");
    set(trim(spec.substr(0, dot)), trim(spec.substr(dot + 1, eq - dot - 1)), trim(spec.substr(eq + 1)));
}

std::uint64_t KvConfig::hash() const { return fnv1a_hash(serialize()); }

RunConfig RunConfig::from_kv(const KvConfig& kv) {
    RunConfig rc;
    rc.kv = kv;
    rc.scene_kind = kv.get("scene", "kind", rc.scene_kind);
    rc.ball_radius = kv.get_double("scene", "ball_radius", rc.ball_radius);
    rc.sites_file = kv.get("scene", "sites_file", rc.sites_file);
    rc.d = static_cast<int>(kv.get_int("scene", "d", rc.d));
    if (kv.has("scene", "xhat")) {
        rc.xhat.clear();
        for (double v : kv.get_list("scene", "xhat")) rc.xhat.push_back(static_cast<std::int64_t>(v));
    }
    rc.u = kv.get_double("scene", "u", rc.u);

    rc.seed = static_cast<std::uint64_t>(kv.get_int("engine", "seed", static_cast<std::int64_t>(rc.seed)));
    rc.replicas =
        static_cast<std::uint64_t>(kv.get_int("engine", "replicas", static_cast<std::int64_t>(rc.replicas)));
    rc.threads = static_cast<int>(kv.get_int("engine", "threads", rc.threads));
    rc.green_order = static_cast<int>(kv.get_int("engine", "quadrature_order", rc.green_order));
    rc.cg_tol = kv.get_double("engine", "cg_tol", rc.cg_tol);
    rc.chain_exact_max_ball_sites = kv.get_int("engine", "chain_exact_max_ball_sites", rc.chain_exact_max_ball_sites);
    rc.chain_mc_trajectories = static_cast<std::uint64_t>(
        kv.get_int("engine", "chain_mc_trajectories", static_cast<std::int64_t>(rc.chain_mc_trajectories)));
    rc.memory_lean = kv.get_bool("engine", "memory_lean", rc.memory_lean);
    rc.dump_paths = kv.get_bool("engine", "dump_paths", rc.dump_paths);

    rc.experiment = kv.get("experiment", "name", rc.experiment);
    if (kv.has("experiment", "dists")) rc.dists = kv.get_list("experiment", "dists");
    if (kv.has("experiment", "rs")) rc.rs = kv.get_list("experiment", "rs");
    if (kv.has("experiment", "us")) rc.us = kv.get_list("experiment", "us");
    rc.u_dist = kv.get_double("experiment", "u_dist", rc.u_dist);
    if (kv.has("experiment", "cap_radii")) rc.cap_radii = kv.get_list("experiment", "cap_radii");
    rc.cap_dist_factor = kv.get_double("experiment", "cap_dist_factor", rc.cap_dist_factor);
    rc.f1 = kv.get("experiment", "f1", rc.f1);
    rc.f2 = kv.get("experiment", "f2", rc.f2);
    rc.parts = kv.get("experiment", "parts", rc.parts);
    return rc;
}

KvConfig RunConfig::to_kv() const {
    KvConfig kv;
    kv.set("scene", "kind", scene_kind);
    if (scene_kind == "ball") kv.set("scene", "ball_radius", format_double(ball_radius));
    if (scene_kind == "sites") kv.set("scene", "sites_file", sites_file);
    kv.set("scene", "d", std::to_string(d));
    {
        std::ostringstream os;
        for (std::size_t i = 0; i < xhat.size(); ++i) {
            if (i) os << ' ';
            os << xhat[i];
        }
        kv.set("scene", "xhat", os.str());
    }
    kv.set("scene", "u", format_double(u));

    kv.set("engine", "seed", std::to_string(seed));
    kv.set("engine", "replicas", std::to_string(replicas));
    kv.set("engine", "threads", std::to_string(threads));
    kv.set("engine", "quadrature_order", std::to_string(green_order));
    kv.set("engine", "cg_tol", format_double(cg_tol));
    kv.set("engine", "chain_exact_max_ball_sites", std::to_string(chain_exact_max_ball_sites));
    kv.set("engine", "chain_mc_trajectories", std::to_string(chain_mc_trajectories));
    kv.set("engine", "memory_lean", memory_lean ? "true" : "false");
    kv.set("engine", "dump_paths", dump_paths ? "true" : "false");

    kv.set("experiment", "name", experiment);
    auto put_list = [&](const char* key, const std::vector<double>& v) {
        std::ostringstream os;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) os << ' ';
            os << format_double(v[i]);
        }
        kv.set("experiment", key, os.str());
    };
    put_list("dists", dists);
    put_list("rs", rs);
    put_list("us", us);
    kv.set("experiment", "u_dist", format_double(u_dist));
    put_list("cap_radii", cap_radii);
    kv.set("experiment", "cap_dist_factor", format_double(cap_dist_factor));
    kv.set("experiment", "f1", f1);
    kv.set("experiment", "f2", f2);
    kv.set("experiment", "parts", parts);
    return kv;
}

SiteSet RunConfig::make_K1() const {
    if (scene_kind == "singleton") {
        return SiteSet::from_points({Point::zero(d)});
    }
    if (scene_kind == "ball") {
        if (ball_radius <= 1.0) return SiteSet::from_points({Point::zero(d)});
        return ball(Point::zero(d), ball_radius);
    }
    if (scene_kind == "sites") {
        std::ifstream f(sites_file);
        if (!f) throw ValidationError("scene: cannot open sites file " + sites_file);
        std::ostringstream ss;
        ss << f.rdbuf();
        return SiteSet::deserialize(ss.str(), d);
    }
    throw ValidationError("scene: unknown kind '" + scene_kind + "'");
}

Point RunConfig::make_xhat() const {
    if (static_cast<int>(xhat.size()) != d) throw ValidationError("scene: xhat dimension mismatch");
    Point p = Point::zero(d);
    for (int i = 0; i < d; ++i) {
        if (xhat[static_cast<std::size_t>(i)] < INT32_MIN || xhat[static_cast<std::size_t>(i)] > INT32_MAX)
            throw ValidationError("scene: xhat coordinate out of range");
        p.c[i] = static_cast<std::int32_t>(xhat[static_cast<std::size_t>(i)]);
    }
    return p;
}

} // namespace ris

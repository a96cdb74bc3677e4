#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ris/lattice.hpp"

namespace ris {

inline constexpr const char* kVersion = "ris 0.1.0";

// Flat sectioned key=value configuration. Parsing and serialization round-trip
// exactly (canonical key order), which makes the config hash stable.
class KvConfig {
public:
    static KvConfig parse(const std::string& text);
    static KvConfig from_file(const std::string& path);
    std::string serialize() const;

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key, const std::string& fallback = "") const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    // "section.key=value"
    void apply_override(const std::string& spec);

    std::uint64_t hash() const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct RunConfig {
    KvConfig kv;

    // scene
    std::string scene_kind = "singleton"; // singleton | ball | sites
    double ball_radius = 2.0;
    std::string sites_file;
    int d = 3;
    std::vector<std::int64_t> xhat{33, 0, 0};
    double u = 1.0;

    // engine
    std::uint64_t seed = 1;
    std::uint64_t replicas = 100000;
    int threads = 1;
    int green_order = 24;
    double cg_tol = 1e-12;
    std::int64_t chain_exact_max_ball_sites = 4'000'000;
    std::uint64_t chain_mc_trajectories = 400'000;
    bool memory_lean = false;
    bool dump_paths = false;

    // experiment
    std::string experiment = "lemmas";
    std::vector<double> dists{17, 33, 65, 129};
    std::vector<double> rs{16, 32, 64, 128};
    std::vector<double> us{1, 4};
    double u_dist = 65.0;
    std::vector<double> cap_radii{1, 2, 4};
    double cap_dist_factor = 24.0;
    std::string f1 = "occupied";
    std::string f2 = "occupied";
    std::string parts = "dist,u,cap";

    static RunConfig from_kv(const KvConfig& kv);
    KvConfig to_kv() const;
    std::uint64_t hash() const { return to_kv().hash(); }

    // K1 from the scene spec (origin-anchored).
    SiteSet make_K1() const;
    Point make_xhat() const;
};

std::uint64_t fnv1a_hash(const std::string& s);
std::string format_double(double v); // shortest round-trip decimal

} // namespace ris

#pragma once

#include <string>

#include "ris/analysis.hpp"
#include "ris/config.hpp"

namespace ris {

struct RunIo {
    std::string out_dir = "out";
    std::string format = "both"; // csv | json | both
};

// Build the scene described by a run configuration (optionally overriding the
// translation vector magnitude along the first axis and the level u).
Scene scene_from_config(const RunConfig& rc);
Scene scene_from_config_at(const RunConfig& rc, std::int64_t xhat1, double u);
SceneOptions scene_options(const RunConfig& rc);

TruthTable truth_table_preset(const std::string& name, int nsites);

int run_potential(const RunConfig& rc, const RunIo& io);
int run_sample(const RunConfig& rc, const RunIo& io, bool ns_process);
int run_couple(const RunConfig& rc, const RunIo& io);
int run_experiment(const RunConfig& rc, const RunIo& io);

// Histogram-based covariance of two window functionals.
double cov_from_histogram(const TraceHistogram& h, const std::vector<int>& bits1, const std::vector<int>& bits2,
                          const TruthTable& f1, const TruthTable& f2);
std::pair<double, double> cov_from_histogram_ci(const TraceHistogram& h, const std::vector<int>& bits1,
                                                const std::vector<int>& bits2, const TruthTable& f1,
                                                const TruthTable& f2, int resamples = 1000,
                                                std::uint64_t seed = 424242);

} // namespace ris

#include <CLI11.hpp>

#include <iostream>

#include "ris/runners.hpp"

using namespace ris;

int main(int argc, char** argv) {
    CLI::App app{"random-interlacement excursion soups: potential tables, soup samplers, coupling and experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string format = "both";
    std::vector<std::string> overrides;
    std::int64_t seed = -1, replicas = -1, threads = -1;

    app.add_option("--config", config_path, "configuration file (sectioned key=value)");
    app.add_option("--seed", seed, "master seed override");
    app.add_option("--replicas", replicas, "replica count override");
    app.add_option("--threads", threads, "worker thread count override");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--format", format, "output format: csv|json|both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    app.add_option("--set", overrides, "override as section.key=value (repeatable)");

    auto* cmd_potential = app.add_subcommand("potential", "emit potential-theory tables");
    auto* cmd_sample = app.add_subcommand("sample", "emit soup samples and traces");
    auto* sample_ri = cmd_sample->add_subcommand("ri", "interlacement excursion soup");
    auto* sample_ns = cmd_sample->add_subcommand("ns", "independent excursion soup");
    cmd_sample->require_subcommand(1);
    auto* cmd_couple = app.add_subcommand("couple", "emit coupled-pair records");
    auto* cmd_exp = app.add_subcommand("experiment", "run an experiment");
    auto* exp_scaling = cmd_exp->add_subcommand("scaling", "failure-probability scaling ladders");
    auto* exp_cov = cmd_exp->add_subcommand("covariance", "covariance ladder and bound checks");
    auto* exp_lemmas = cmd_exp->add_subcommand("lemmas", "exact lemma quantities along a ladder");
    auto* exp_tv = cmd_exp->add_subcommand("tv", "trace total-variation versus coupling failure");
    cmd_exp->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        KvConfig kv = config_path.empty() ? KvConfig{} : KvConfig::from_file(config_path);
        for (const auto& ov : overrides) kv.apply_override(ov);
        RunConfig rc = RunConfig::from_kv(kv);
        if (seed >= 0) rc.seed = static_cast<std::uint64_t>(seed);
        if (replicas >= 0) rc.replicas = static_cast<std::uint64_t>(replicas);
        if (threads >= 0) rc.threads = static_cast<int>(threads);

        RunIo io;
        io.out_dir = out_dir;
        io.format = format;

        if (*cmd_potential) return run_potential(rc, io);
        if (*cmd_couple) return run_couple(rc, io);
        if (*cmd_sample) return run_sample(rc, io, sample_ns->parsed() && !sample_ri->parsed());
        if (*cmd_exp) {
            if (exp_scaling->parsed()) rc.experiment = "scaling";
            if (exp_cov->parsed()) rc.experiment = "covariance";
            if (exp_lemmas->parsed()) rc.experiment = "lemmas";
            if (exp_tv->parsed()) rc.experiment = "tv";
            return run_experiment(rc, io);
        }
        std::cerr << "{\"error\":\"no subcommand\"}\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "{\"error\":\"validation\",\"detail\":\"" << e.what() << "\"}\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"internal\",\"detail\":\"" << e.what() << "\"}\n";
        return 1;
    }
}

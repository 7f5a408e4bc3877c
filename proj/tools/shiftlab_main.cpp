#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "shiftlab/config.hpp"
#include "shiftlab/report.hpp"
#include "shiftlab/suites.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInconclusive = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<double> step;
    std::optional<std::string> out;
    std::optional<unsigned> jobs;
    std::optional<std::string> format;
    std::optional<double> p;
    bool dump_paths = false;
};

void apply_overrides(shiftlab::ExperimentConfig& cfg, const Overrides& ov) {
    if (ov.seed) cfg.run.seed = *ov.seed;
    if (ov.samples) cfg.run.n_paths = *ov.samples;
    if (ov.step) cfg.run.step = *ov.step;
    if (ov.out) cfg.output.directory = *ov.out;
    if (ov.jobs) cfg.run.jobs = *ov.jobs;
    if (ov.format) cfg.output.format = *ov.format;
    if (ov.p) cfg.run.p = *ov.p;
    if (ov.dump_paths) cfg.output.dump_paths = true;
    cfg.validate();
}

int run_check(const std::string& suite, const std::string& config_path, const Overrides& ov) {
    shiftlab::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = shiftlab::ExperimentConfig::load_file(config_path);
        apply_overrides(cfg, ov);
        if (!shiftlab::is_suite_name(suite)) throw shiftlab::ConfigError("unknown suite '" + suite + "'");
    } catch (const shiftlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const shiftlab::SuiteResult result = shiftlab::run_suite(suite, cfg);
        const auto files = shiftlab::emit_report(result, cfg);

        std::string first_fail;
        for (const auto& c : result.checks) {
            std::printf("[%-12s] %-55s slack=%12.5g z=%8.3g\n", shiftlab::verdict_name(c.verdict), c.id.c_str(),
                        c.slack, c.z);
            if (c.verdict == shiftlab::Verdict::fail && first_fail.empty()) first_fail = c.id;
        }
        char hash_buf[32];
        std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                      static_cast<unsigned long long>(shiftlab::determinism_hash(result)));
        std::printf("suite %s: %zu checks, determinism hash %s\n", result.suite.c_str(), result.checks.size(),
                    hash_buf);
        for (const auto& f : files) std::printf("wrote %s\n", f.c_str());

        const int code = shiftlab::aggregate_exit_code(result.checks);
        if (code == kExitFail) std::cerr << "FAILED: " << first_fail << "\n";
        return code;
    } catch (const shiftlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral verification laboratory for shift couplings"};
    app.require_subcommand(1);

    std::string config_path;
    std::string suite = "all";
    Overrides ov;

    CLI::App* check = app.add_subcommand("check", "run a verification suite");
    check->add_option("suite", suite, "suite name (see `list`)")->required();
    check->add_option("--config", config_path, "experiment config file");
    std::uint64_t seed_val = 0;
    std::size_t samples_val = 0;
    double step_val = 0.0, p_val = 0.0;
    std::string out_val, format_val;
    unsigned jobs_val = 0;
    auto* o_seed = check->add_option("--seed", seed_val, "override run.seed");
    auto* o_samples = check->add_option("--samples", samples_val, "override run.n_paths");
    auto* o_step = check->add_option("--step", step_val, "override run.step");
    auto* o_out = check->add_option("--out", out_val, "override output.directory");
    auto* o_jobs = check->add_option("--jobs", jobs_val, "override run.jobs");
    auto* o_format = check->add_option("--format", format_val, "json|csv|both");
    auto* o_p = check->add_option("--p", p_val, "override run.p (Harnack power)");
    check->add_flag("--dump-paths", ov.dump_paths, "write a representative trajectory CSV");

    CLI::App* list = app.add_subcommand("list", "list suite names");
    CLI::App* oracle = app.add_subcommand("oracle", "print closed-form reference values");
    oracle->add_option("--config", config_path, "experiment config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfig;
    }

    if (list->parsed()) {
        for (const auto& s : shiftlab::suite_names()) std::printf("%s\n", s.c_str());
        return kExitPass;
    }
    if (oracle->parsed()) {
        try {
            shiftlab::ExperimentConfig cfg;
            if (!config_path.empty()) cfg = shiftlab::ExperimentConfig::load_file(config_path);
            std::fputs(shiftlab::oracle_table(cfg).c_str(), stdout);
            return kExitPass;
        } catch (const shiftlab::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        }
    }

    if (o_seed->count()) ov.seed = seed_val;
    if (o_samples->count()) ov.samples = samples_val;
    if (o_step->count()) ov.step = step_val;
    if (o_out->count()) ov.out = out_val;
    if (o_jobs->count()) ov.jobs = jobs_val;
    if (o_format->count()) ov.format = format_val;
    if (o_p->count()) ov.p = p_val;
    return run_check(suite, config_path, ov);
}

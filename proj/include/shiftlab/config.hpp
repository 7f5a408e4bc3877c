#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shiftlab {

/// Configuration error carrying the offending line (0 when not line-bound).
struct ConfigError : std::runtime_error {
    int line = 0;
    explicit ConfigError(const std::string& what, int line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what), line(line_no) {}
};

struct ModelConfig {
    std::string kind = "delay";  // delay | evolution
    double beta = 1.0;
    std::size_t modes = 8;
    double tau = 0.25;
    std::string drift = "bounded-smooth";  // zero | linear | bounded-smooth | modulus
    double drift_scale = 0.5;
    double c1 = 0.0;
    double c2 = 0.4;
    double sigma0 = 1.0;
    double a_plus = 0.0;
    std::string nonlinearity = "burgers";  // zero | burgers
    double theta = 0.5;
    double q0 = 0.25;
};

struct ShiftConfig {
    std::string profile = "decay";  // zero | decay | constant | poly
    double scale = 0.2;
    std::string variant = "gramian";  // gramian | ramp | general
    std::string ramp = "linear";      // linear | quadratic (general variant)
};

struct RunConfig {
    double T = 1.0;
    double step = 1.0 / 256.0;
    std::size_t n_paths = 20000;
    std::uint64_t seed = 42;
    double p = 2.0;
    double r = 0.05;
    double c_psi = 1.0;
    unsigned jobs = 1;
    double resolution = 0.0;  // 0 = unset
};

struct OutputConfig {
    std::string directory = "out";
    std::string format = "both";  // json | csv | both
    bool dump_paths = false;
};

/// Flat-sectioned experiment description.  Parsing is strict: unknown
/// sections or keys are rejected, and parse(serialize()) is the identity.
struct ExperimentConfig {
    ModelConfig model;
    ShiftConfig shift;
    RunConfig run;
    OutputConfig output;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load_file(const std::string& path);
    std::string serialize() const;

    /// Cross-field invariants: grids divide exactly, constants positive
    /// where required, enum values known, p > 1.
    void validate() const;
};

}  // namespace shiftlab

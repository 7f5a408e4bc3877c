#include "shiftlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace shiftlab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

struct Setter {
    std::function<void(ExperimentConfig&, const std::string&, int)> apply;
};

double parse_double(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw ConfigError("trailing characters in number '" + v + "'", line);
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        throw ConfigError("expected a number, got '" + v + "'", line);
    }
}

std::uint64_t parse_u64(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw ConfigError("trailing characters in integer '" + v + "'", line);
        return static_cast<std::uint64_t>(x);
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        throw ConfigError("expected an unsigned integer, got '" + v + "'", line);
    }
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("expected true or false, got '" + v + "'", line);
}

std::string parse_string(const std::string& v, int line) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
        throw ConfigError("expected a quoted string, got '" + v + "'", line);
    return v.substr(1, v.size() - 2);
}

const std::map<std::string, Setter>& key_table() {
    static const std::map<std::string, Setter> table = {
        {"model.kind", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.kind = parse_string(v, l); }}},
        {"model.beta", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.beta = parse_double(v, l); }}},
        {"model.modes",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.model.modes = static_cast<std::size_t>(parse_u64(v, l)); }}},
        {"model.tau", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.tau = parse_double(v, l); }}},
        {"model.drift", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.drift = parse_string(v, l); }}},
        {"model.drift_scale",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.model.drift_scale = parse_double(v, l); }}},
        {"model.c1", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.c1 = parse_double(v, l); }}},
        {"model.c2", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.c2 = parse_double(v, l); }}},
        {"model.sigma0", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.sigma0 = parse_double(v, l); }}},
        {"model.a_plus", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.a_plus = parse_double(v, l); }}},
        {"model.nonlinearity",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.model.nonlinearity = parse_string(v, l); }}},
        {"model.theta", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.theta = parse_double(v, l); }}},
        {"model.q0", {[](ExperimentConfig& c, const std::string& v, int l) { c.model.q0 = parse_double(v, l); }}},
        {"shift.profile", {[](ExperimentConfig& c, const std::string& v, int l) { c.shift.profile = parse_string(v, l); }}},
        {"shift.scale", {[](ExperimentConfig& c, const std::string& v, int l) { c.shift.scale = parse_double(v, l); }}},
        {"shift.variant", {[](ExperimentConfig& c, const std::string& v, int l) { c.shift.variant = parse_string(v, l); }}},
        {"shift.ramp", {[](ExperimentConfig& c, const std::string& v, int l) { c.shift.ramp = parse_string(v, l); }}},
        {"run.T", {[](ExperimentConfig& c, const std::string& v, int l) { c.run.T = parse_double(v, l); }}},
        {"run.step", {[](ExperimentConfig& c, const std::string& v, int l) { c.run.step = parse_double(v, l); }}},
        {"run.n_paths",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.run.n_paths = static_cast<std::size_t>(parse_u64(v, l)); }}},
        {"run.seed", {[](ExperimentConfig& c, const std::string& v, int l) { c.run.seed = parse_u64(v, l); }}},
        {"run.p", {[](ExperimentConfig& c, const std::string& v, int l) { c.run.p = parse_double(v, l); }}},
        {"run.r", {[](ExperimentConfig& c, const std::string& v, int l) { c.run.r = parse_double(v, l); }}},
        {"run.c_psi", {[](ExperimentConfig& c, const std::string& v, int l) { c.run.c_psi = parse_double(v, l); }}},
        {"run.jobs",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.run.jobs = static_cast<unsigned>(parse_u64(v, l)); }}},
        {"run.resolution",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.run.resolution = parse_double(v, l); }}},
        {"output.directory",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.output.directory = parse_string(v, l); }}},
        {"output.format", {[](ExperimentConfig& c, const std::string& v, int l) { c.output.format = parse_string(v, l); }}},
        {"output.dump_paths",
         {[](ExperimentConfig& c, const std::string& v, int l) { c.output.dump_paths = parse_bool(v, l); }}},
    };
    return table;
}

void check_divides(double span, double step, const char* what) {
    if (!(step > 0.0)) throw ConfigError("run.step must be positive");
    const double n = std::round(span / step);
    if (n < 1.0 || std::abs(n * step - span) > 1e-12 * std::max(1.0, std::abs(span)))
        throw ConfigError(std::string("run.step does not divide ") + what + " exactly");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "shift" && section != "run" && section != "output")
                throw ConfigError("unknown section [" + section + "]", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no);
        const std::string full = section + "." + key;
        const auto it = key_table().find(full);
        if (it == key_table().end()) throw ConfigError("unknown key '" + full + "'", line_no);
        it->second.apply(cfg, value, line_no);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream out;
    out << "[model]\n";
    out << "kind = \"" << model.kind << "\"\n";
    out << "beta = " << fmt(model.beta) << "\n";
    out << "modes = " << model.modes << "\n";
    out << "tau = " << fmt(model.tau) << "\n";
    out << "drift = \"" << model.drift << "\"\n";
    out << "drift_scale = " << fmt(model.drift_scale) << "\n";
    out << "c1 = " << fmt(model.c1) << "\n";
    out << "c2 = " << fmt(model.c2) << "\n";
    out << "sigma0 = " << fmt(model.sigma0) << "\n";
    out << "a_plus = " << fmt(model.a_plus) << "\n";
    out << "nonlinearity = \"" << model.nonlinearity << "\"\n";
    out << "theta = " << fmt(model.theta) << "\n";
    out << "q0 = " << fmt(model.q0) << "\n";
    out << "\n[shift]\n";
    out << "profile = \"" << shift.profile << "\"\n";
    out << "scale = " << fmt(shift.scale) << "\n";
    out << "variant = \"" << shift.variant << "\"\n";
    out << "ramp = \"" << shift.ramp << "\"\n";
    out << "\n[run]\n";
    out << "T = " << fmt(run.T) << "\n";
    out << "step = " << fmt(run.step) << "\n";
    out << "n_paths = " << run.n_paths << "\n";
    out << "seed = " << run.seed << "\n";
    out << "p = " << fmt(run.p) << "\n";
    out << "r = " << fmt(run.r) << "\n";
    out << "c_psi = " << fmt(run.c_psi) << "\n";
    out << "jobs = " << run.jobs << "\n";
    out << "resolution = " << fmt(run.resolution) << "\n";
    out << "\n[output]\n";
    out << "directory = \"" << output.directory << "\"\n";
    out << "format = \"" << output.format << "\"\n";
    out << "dump_paths = " << (output.dump_paths ? "true" : "false") << "\n";
    return out.str();
}

void ExperimentConfig::validate() const {
    if (model.kind != "delay" && model.kind != "evolution")
        throw ConfigError("model.kind must be \"delay\" or \"evolution\"");
    if (model.drift != "zero" && model.drift != "linear" && model.drift != "bounded-smooth" &&
        model.drift != "modulus")
        throw ConfigError("model.drift must be zero | linear | bounded-smooth | modulus");
    if (model.nonlinearity != "zero" && model.nonlinearity != "burgers")
        throw ConfigError("model.nonlinearity must be zero | burgers");
    if (shift.profile != "zero" && shift.profile != "decay" && shift.profile != "constant" && shift.profile != "poly")
        throw ConfigError("shift.profile must be zero | decay | constant | poly");
    if (shift.variant != "gramian" && shift.variant != "ramp" && shift.variant != "general")
        throw ConfigError("shift.variant must be gramian | ramp | general");
    if (shift.ramp != "linear" && shift.ramp != "quadratic")
        throw ConfigError("shift.ramp must be linear | quadratic");
    if (output.format != "json" && output.format != "csv" && output.format != "both")
        throw ConfigError("output.format must be json | csv | both");

    if (model.modes < 1) throw ConfigError("model.modes must be >= 1");
    if (!(model.beta >= 1.0)) throw ConfigError("model.beta must be >= 1");
    if (!(model.tau > 0.0)) throw ConfigError("model.tau must be positive");
    if (!(model.sigma0 > 0.0)) throw ConfigError("model.sigma0 must be positive");
    if (model.a_plus < 0.0) throw ConfigError("model.a_plus must be nonnegative");
    if (!(model.theta > 0.0) || model.theta > 1.0) throw ConfigError("model.theta must lie in (0,1]");
    if (!(model.q0 > 0.0)) throw ConfigError("model.q0 must be positive");
    if (!(run.T > 0.0)) throw ConfigError("run.T must be positive");
    if (model.kind == "delay" && !(run.T > model.tau)) throw ConfigError("run.T must exceed model.tau");
    if (run.n_paths < 2) throw ConfigError("run.n_paths must be >= 2");
    if (!(run.p > 1.0)) throw ConfigError("run.p must exceed 1");
    if (!(run.r > 0.0)) throw ConfigError("run.r must be positive");
    if (!(run.c_psi > 0.0)) throw ConfigError("run.c_psi must be positive");
    if (run.jobs < 1) throw ConfigError("run.jobs must be >= 1");
    if (run.resolution < 0.0) throw ConfigError("run.resolution must be nonnegative");
    if (!(shift.scale >= 0.0)) throw ConfigError("shift.scale must be nonnegative");

    check_divides(run.T, run.step, "run.T");
    if (model.kind == "delay") {
        check_divides(model.tau, run.step, "model.tau");
        check_divides(run.T - model.tau, run.step, "run.T - model.tau");
    }
}

}  // namespace shiftlab

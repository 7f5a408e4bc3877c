#include "shiftlab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#ifndef SHIFTLAB_BUILD_ID
#define SHIFTLAB_BUILD_ID "unknown"
#endif

namespace shiftlab {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void hash_bytes(std::uint64_t& h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    h ^= '\x1f';
    h *= 0x100000001B3ull;
}

json check_to_json(const CheckReport& c) {
    json j;
    j["id"] = c.id;
    j["statement"] = c.statement;
    j["variant"] = c.variant;
    j["constant"] = c.constant;
    j["slack"] = c.slack;
    j["z"] = c.z;
    j["verdict"] = verdict_name(c.verdict);
    j["seed"] = c.seed;
    j["n_paths"] = c.n_paths;
    j["step"] = c.step;
    j["notes"] = c.notes;
    json est = json::array();
    for (const auto& e : c.estimates) est.push_back({{"name", e.name}, {"value", e.value}, {"stderr", e.stderr_}});
    j["estimates"] = est;
    return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::uint64_t determinism_hash(const SuiteResult& result) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    hash_bytes(h, result.suite);
    for (const auto& c : result.checks) {
        hash_bytes(h, c.id);
        hash_bytes(h, c.statement);
        hash_bytes(h, c.variant);
        hash_bytes(h, fmt(c.constant));
        hash_bytes(h, fmt(c.slack));
        hash_bytes(h, fmt(c.z));
        hash_bytes(h, verdict_name(c.verdict));
        hash_bytes(h, std::to_string(c.seed));
        hash_bytes(h, std::to_string(c.n_paths));
        hash_bytes(h, fmt(c.step));
        for (const auto& e : c.estimates) {
            hash_bytes(h, e.name);
            hash_bytes(h, fmt(e.value));
            hash_bytes(h, fmt(e.stderr_));
        }
    }
    return h;
}

std::string report_json(const SuiteResult& result, const ExperimentConfig& cfg) {
    json j;
    j["suite"] = result.suite;
    j["build"] = SHIFTLAB_BUILD_ID;
    j["seed"] = cfg.run.seed;
    j["config"] = cfg.serialize();
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(determinism_hash(result)));
    j["determinism_hash"] = hash_buf;

    json checks = json::array();
    double total = 0.0;
    json timing = json::object();
    for (const auto& c : result.checks) {
        checks.push_back(check_to_json(c));
        timing[c.id] = c.runtime_s;
        total += c.runtime_s;
    }
    j["checks"] = checks;
    // wall times live under their own key, excluded from the hash
    timing["total_s"] = total;
    j["timing"] = timing;
    return j.dump(2) + "\n";
}

std::string summary_csv(const SuiteResult& result) {
    std::string out = "id,statement,variant,verdict,slack,z,constant,n_paths,step,seed,runtime_s\n";
    for (const auto& c : result.checks) {
        out += csv_escape(c.id) + "," + csv_escape(c.statement) + "," + csv_escape(c.variant) + "," +
               verdict_name(c.verdict) + "," + fmt(c.slack) + "," + fmt(c.z) + "," + fmt(c.constant) + "," +
               std::to_string(c.n_paths) + "," + fmt(c.step) + "," + std::to_string(c.seed) + "," +
               fmt(c.runtime_s) + "\n";
    }
    return out;
}

std::string paths_csv(const PathDump& dump) {
    std::string out = "time";
    const std::size_t dim = dump.states.empty() ? 0 : dump.states.front().size();
    for (std::size_t k = 0; k < dim; ++k) out += ",mode" + std::to_string(k + 1);
    out += "\n";
    for (std::size_t i = 0; i < dump.times.size(); ++i) {
        out += fmt(dump.times[i]);
        for (double v : dump.states[i]) out += "," + fmt(v);
        out += "\n";
    }
    return out;
}

std::vector<std::string> emit_report(const SuiteResult& result, const ExperimentConfig& cfg) {
    if (result.checks.empty()) throw std::runtime_error("emit_report: refusing to write an empty report");
    namespace fs = std::filesystem;
    const fs::path dir = cfg.output.directory;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "'");

    std::vector<std::string> written;
    const bool want_json = cfg.output.format == "json" || cfg.output.format == "both";
    const bool want_csv = cfg.output.format == "csv" || cfg.output.format == "both";
    if (want_json) {
        const fs::path p = dir / "report.json";
        write_atomic(p, report_json(result, cfg));
        written.push_back(p.string());
    }
    if (want_csv) {
        const fs::path p = dir / "summary.csv";
        write_atomic(p, summary_csv(result));
        written.push_back(p.string());
    }
    if (cfg.output.dump_paths && result.has_path_dump) {
        const fs::path p = dir / "paths.csv";
        write_atomic(p, paths_csv(result.path_dump));
        written.push_back(p.string());
    }
    return written;
}

int aggregate_exit_code(const std::vector<CheckReport>& checks) {
    bool any_fail = false, any_inconclusive = false;
    for (const auto& c : checks) {
        if (c.verdict == Verdict::fail) any_fail = true;
        if (c.verdict == Verdict::inconclusive) any_inconclusive = true;
    }
    if (any_fail) return 1;
    if (any_inconclusive) return 3;
    return 0;
}

}  // namespace shiftlab

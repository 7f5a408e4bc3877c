#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "shiftlab/config.hpp"
#include "shiftlab/report.hpp"
#include "shiftlab/suites.hpp"

using namespace shiftlab;

TEST_CASE("defaults validate") {
    ExperimentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("round trip is idempotent") {
    ExperimentConfig cfg;
    cfg.model.kind = "evolution";
    cfg.model.modes = 12;
    cfg.run.step = 1.0 / 512.0;
    cfg.run.seed = 987654321;
    cfg.output.dump_paths = true;
    const std::string once = cfg.serialize();
    const ExperimentConfig parsed = ExperimentConfig::parse(once);
    CHECK(parsed.serialize() == once);
    const ExperimentConfig twice = ExperimentConfig::parse(parsed.serialize());
    CHECK(twice.serialize() == once);
}

TEST_CASE("comments and blank lines are tolerated") {
    const std::string text =
        "# experiment\n"
        "[run]\n"
        "seed = 9   # fixed\n"
        "\n"
        "[model]\n"
        "kind = \"delay\"\n";
    const ExperimentConfig cfg = ExperimentConfig::parse(text);
    CHECK(cfg.run.seed == 9);
}

TEST_CASE("unknown keys and sections are rejected with line numbers") {
    try {
        ExperimentConfig::parse("[run]\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(ExperimentConfig::parse("[nope]\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("seed = 1\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("[run]\nseed 1\n"), ConfigError);
}

TEST_CASE("grid divisibility is enforced") {
    ExperimentConfig cfg;
    cfg.run.step = 0.3;  // does not divide T = 1
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.run.step = 0.125;
    CHECK_NOTHROW(cfg.validate());
    cfg.model.tau = 0.2;  // 0.125 does not divide 0.2
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("p <= 1 is rejected before any simulation") {
    ExperimentConfig cfg;
    cfg.run.p = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("suite names") {
    CHECK(is_suite_name("all"));
    CHECK(is_suite_name("harnack-delay"));
    CHECK_FALSE(is_suite_name("bogus"));
    CHECK(suite_names().size() == 12);
}

TEST_CASE("exit code aggregation") {
    CheckReport pass;
    pass.verdict = Verdict::pass;
    CheckReport fail;
    fail.verdict = Verdict::fail;
    CheckReport inc;
    inc.verdict = Verdict::inconclusive;
    CHECK(aggregate_exit_code({pass, pass}) == 0);
    CHECK(aggregate_exit_code({pass, pass, fail}) == 1);
    CHECK(aggregate_exit_code({pass, inc}) == 3);
    CHECK(aggregate_exit_code({inc, fail}) == 1);
}

TEST_CASE("empty report refuses to serialize") {
    SuiteResult empty;
    empty.suite = "control";
    ExperimentConfig cfg;
    CHECK_THROWS(emit_report(empty, cfg));
}

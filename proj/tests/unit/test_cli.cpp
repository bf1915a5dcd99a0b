#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lazygp/cli.hpp"

using lazygp::CliConfig;
using lazygp::Subcommand;

namespace {

int run_cli_strings(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"lazygp"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return lazygp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace

TEST_CASE("parse_args understands the lazy 5-D run", "[cli]") {
    const CliConfig cfg = lazygp::parse_args(
        {"optimize", "--function", "levy", "--dim", "5", "--iterations", "1000", "--lag", "inf"});
    CHECK(cfg.subcommand == Subcommand::kOptimize);
    CHECK(cfg.function == "levy");
    CHECK(cfg.dim == 5);
    CHECK(cfg.iterations == 1000);
    CHECK(cfg.lag.is_infinite());
    CHECK(cfg.batch == 1);
    CHECK(cfg.seeds == 1);
}

TEST_CASE("parse_args applies the documented defaults", "[cli]") {
    const CliConfig cfg = lazygp::parse_args({"optimize"});
    CHECK(cfg.dim == 5);
    CHECK(cfg.iterations == 1000);
    CHECK(cfg.seeds == 1);
    CHECK(cfg.lag.is_infinite());
    CHECK(cfg.batch == 1);
    CHECK(cfg.xi == 0.01);
    CHECK(cfg.rng_seed == 42);
    CHECK(cfg.restarts == 0); // auto
    CHECK(cfg.format == lazygp::TraceFormat::kJsonl);
    CHECK(!cfg.no_timings);
}

TEST_CASE("parse_args rejects a zero lag by name", "[cli]") {
    try {
        lazygp::parse_args({"optimize", "--lag", "0"});
        FAIL("expected UsageError");
    } catch (const lazygp::UsageError& e) {
        CHECK(std::string(e.what()).find("--lag") != std::string::npos);
    }
}

TEST_CASE("parse_args rejects unknown flags and bad members", "[cli]") {
    CHECK_THROWS_AS(lazygp::parse_args({"optimize", "--bogus"}), lazygp::UsageError);
    CHECK_THROWS_AS(lazygp::parse_args({"optimize", "--function", "rosenbrock"}),
                    lazygp::UsageError);
    CHECK_THROWS_AS(lazygp::parse_args({"optimize", "--iterations", "0"}), lazygp::UsageError);
    CHECK_THROWS_AS(lazygp::parse_args({}), lazygp::UsageError);
}

TEST_CASE("parse_args handles the timing subcommand", "[cli]") {
    const CliConfig cfg = lazygp::parse_args({"timing", "--n-max", "2048", "--step", "256"});
    CHECK(cfg.subcommand == Subcommand::kTiming);
    CHECK(cfg.n_max == 2048);
    CHECK(cfg.step == 256);
    CHECK(cfg.timing_mode == "both");

    CHECK_THROWS_AS(lazygp::parse_args({"timing", "--n-max", "100", "--step", "64"}),
                    lazygp::UsageError);
}

TEST_CASE("levy1d implies one dimension", "[cli]") {
    CHECK(lazygp::parse_args({"optimize", "--function", "levy1d"}).dim == 1);
    CHECK(lazygp::parse_args({"optimize", "--function", "levy1d", "--dim", "1"}).dim == 1);
    CHECK_THROWS_AS(lazygp::parse_args({"optimize", "--function", "levy1d", "--dim", "3"}),
                    lazygp::UsageError);
}

TEST_CASE("selftest passes on a healthy build", "[cli]") {
    std::ostringstream out;
    CHECK(lazygp::selftest(out) == 0);
    const std::string text = out.str();
    CHECK(text.find("[PASS] factor-equivalence") != std::string::npos);
    CHECK(text.find("[PASS] posterior-oracle") != std::string::npos);
    CHECK(text.find("[PASS] ei-montecarlo") != std::string::npos);
    CHECK(text.find("[PASS] levy-optimum") != std::string::npos);
    CHECK(text.find("[FAIL]") == std::string::npos);
}

TEST_CASE("run_cli exit statuses", "[cli]") {
    std::ostringstream out, err;

    // Usage error -> 1, naming the flag on stderr.
    CHECK(run_cli_strings({"optimize", "--lag", "0"}, out, err) == 1);
    CHECK(err.str().find("--lag") != std::string::npos);

    // Help -> 0 and a listing that covers the flags.
    std::ostringstream help_out, help_err;
    CHECK(run_cli_strings({"--help"}, help_out, help_err) == 0);
    for (const char* flag : {"--function", "--lag", "--batch", "--n-max", "--rng-seed"})
        CHECK(help_out.str().find(flag) != std::string::npos);

    // A real (tiny) run -> 0 and a parseable trace on stdout.
    std::ostringstream run_out, run_err;
    const int code = run_cli_strings({"optimize", "--function", "levy1d", "--iterations", "3",
                                      "--seeds", "2", "--rng-seed", "5"},
                                     run_out, run_err);
    CHECK(code == 0);
    const std::string trace_text = run_out.str();
    CHECK(std::count(trace_text.begin(), trace_text.end(), '\n') == 2 + 3 + 1);
}

TEST_CASE("run_cli writes trace files", "[cli]") {
    const std::string path = "cli_test_trace.csv";
    std::remove(path.c_str());
    std::ostringstream out, err;
    const int code = run_cli_strings({"optimize", "--function", "levy1d", "--iterations", "2",
                                      "--seeds", "2", "--format", "csv", "--output", path},
                                     out, err);
    REQUIRE(code == 0);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,round,x0,y,best,t_factor_s,t_acq_s,refit");
    std::remove(path.c_str());
}

TEST_CASE("run_cli timing mode emits the csv table", "[cli]") {
    std::ostringstream out, err;
    const int code =
        run_cli_strings({"timing", "--n-max", "64", "--step", "32", "--mode", "lazy"}, out, err);
    REQUIRE(code == 0);
    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "n,mode,seconds");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.find("lazy") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 2);
}

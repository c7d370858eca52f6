#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "cwdmd/experiment.hpp"
#include "cwdmd/property_suite.hpp"

using namespace cwdmd;
using namespace cwdmd::cli;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("cwdmd_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + CWDMD_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

ExperimentConfig tiny_lti_config(const fs::path& out) {
    ExperimentConfig cfg = lti_default_config();
    cfg.ic_count = 2;
    cfg.horizon = 0.2;
    cfg.j_max = 160;
    cfg.output_dir = out.string();
    return cfg;
}

} // namespace

// ============================================================================
// Configuration
// ============================================================================

TEST_CASE("config serialization round-trips", "[experiment]") {
    for (const auto& cfg : {lti_default_config(), lorenz_default_config()}) {
        const auto j1 = config_to_json(cfg);
        const auto j2 = config_to_json(parse_config(j1));
        REQUIRE(j1.dump() == j2.dump());
    }
}

TEST_CASE("defaults reproduce the two experiment setups", "[experiment]") {
    const auto lti = lti_default_config();
    REQUIRE(lti.ic_count == 100);
    REQUIRE(lti.horizon == 2.0);
    REQUIRE(lti.dt == 1e-3);
    REQUIRE(lti.c_param == 32);
    REQUIRE(lti.j_max == 288);
    REQUIRE(lti.omega0 == 6.0);
    REQUIRE(std::get<dynsys::CircleRegion>(lti.ic_region).radius == 20.0);

    const auto lorenz = lorenz_default_config();
    REQUIRE(lorenz.ic_count == 40);
    REQUIRE(lorenz.horizon == 100.0);
    REQUIRE(lorenz.dt == 0.02);
    REQUIRE(lorenz.c_param == 20);
    REQUIRE(lorenz.j_max == 220);
    // default target is the reported resonance, stored in Hz
    REQUIRE_THAT(hz_to_rad(lorenz.target_frequencies_hz.front()), WithinAbs(8.17, 1e-12));
}

TEST_CASE("config validation rejects bad inputs", "[experiment]") {
    auto cfg = lti_default_config();
    cfg.horizon = 0.0015;  // not an integer multiple of dt? 1.5 steps
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigInvalid);
    cfg = lti_default_config();
    cfg.system = "van-der-pol";
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigInvalid);
    cfg = lti_default_config();
    cfg.truncation_tol = 1.5;
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigInvalid);
    cfg = lti_default_config();
    cfg.target_frequencies_hz = {-2.0};
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigInvalid);
    cfg = lti_default_config();
    cfg.lti_c.resize(3);
    cfg.lti_c.setZero();
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigInvalid);
    REQUIRE_THROWS_AS(parse_config(nlohmann::json{{"system", "unknown"}}), ConfigInvalid);
}

TEST_CASE("frequency unit conversion", "[experiment]") {
    REQUIRE(hz_to_rad(1.0) == 2.0 * std::numbers::pi);
    REQUIRE_THAT(hz_to_rad(79.54), WithinAbs(499.77, 0.01));
}

TEST_CASE("config hash is stable and content-sensitive", "[experiment]") {
    const auto cfg = lti_default_config();
    REQUIRE(config_hash(cfg) == config_hash(cfg));
    auto other = cfg;
    other.seed = 991;
    REQUIRE(config_hash(cfg) != config_hash(other));
}

// ============================================================================
// Experiment runners (downscaled)
// ============================================================================

TEST_CASE("a degenerate single-trajectory run completes with a warning", "[experiment]") {
    TempDir tmp("degenerate");
    ExperimentConfig cfg = lti_default_config();
    cfg.ic_count = 1;
    cfg.horizon = 0.01;
    cfg.output_dir = (tmp.path / "out").string();
    const auto report = run_lti_experiment(cfg);
    REQUIRE(report.degenerate_rank_warning);
    REQUIRE(report.retained_rank >= 1);
    for (const auto& name : report.files_written)
        REQUIRE(fs::exists(tmp.path / "out" / name));
}

TEST_CASE("manifest indexes the outputs with the config hash", "[experiment]") {
    TempDir tmp("manifest");
    const auto cfg = tiny_lti_config(tmp.path / "out");
    const auto report = run_lti_experiment(cfg);
    std::ifstream in(tmp.path / "out" / "manifest.json");
    nlohmann::json manifest;
    in >> manifest;
    REQUIRE(manifest.at("config_hash").get<std::string>() == config_hash(cfg));
    REQUIRE(manifest.at("library_version").get<std::string>() == kLibraryVersion);
    for (const auto& name : manifest.at("outputs"))
        REQUIRE(fs::exists(tmp.path / "out" / name.get<std::string>()));
    // every stage timed
    REQUIRE(!report.timings.empty());
    for (const auto& t : report.timings) REQUIRE(t.seconds >= 0.0);
}

TEST_CASE("lorenz field has one row per initial condition", "[experiment]") {
    TempDir tmp("lorenz");
    ExperimentConfig cfg = lorenz_default_config();
    cfg.ic_count = 3;
    cfg.horizon = 2.0;
    cfg.j_max = 60;
    cfg.output_dir = (tmp.path / "out").string();
    const auto report = run_lorenz_experiment(cfg);
    REQUIRE(report.observable_rows == 121);
    const auto field = io::read_csv((tmp.path / "out" / "field_cwdmd.csv").string());
    REQUIRE(field.rows.size() == 3);
    REQUIRE(field.header == std::vector<std::string>{"x1", "x2", "x3", "magnitude", "argument",
                                                     "re", "im"});
}

TEST_CASE("spectrum csv round-trips through the reader", "[experiment]") {
    TempDir tmp("spectrum");
    const auto cfg = tiny_lti_config(tmp.path / "out");
    (void)run_lti_experiment(cfg);
    const auto table = io::read_csv((tmp.path / "out" / "spectrum.csv").string());
    REQUIRE(table.header ==
            std::vector<std::string>{"re_mu", "im_mu", "re_lambda", "im_lambda", "flag"});
    REQUIRE(table.rows.size() == 321);  // 2J+1 modes
}

// ============================================================================
// Property suite
// ============================================================================

TEST_CASE("property suite passes on a clean build", "[experiment]") {
    const auto report = run_property_suite();
    for (const auto& r : report.results) {
        INFO(r.name << ": " << r.detail);
        CHECK(r.passed);
    }
    REQUIRE(report.all_passed);
}

TEST_CASE("a perturbed transform normalization is caught by the oracle check", "[experiment]") {
    PropertyOptions opt;
    opt.cwt_fault_scale = 1.01;
    const auto report = run_property_suite(opt);
    bool oracle_failed = false;
    for (const auto& r : report.results)
        if (r.name == "wavelet/cwt-oracle-equivalence") oracle_failed = !r.passed;
    REQUIRE(oracle_failed);
    REQUIRE(!report.all_passed);
}

// ============================================================================
// CLI binary
// ============================================================================

TEST_CASE("exit codes distinguish config, numerical and check failures", "[experiment]") {
    TempDir tmp("cli");

    SECTION("unknown flags and missing configs are config errors") {
        REQUIRE(run_cli("lti --config /nonexistent/config.json") == 1);
        REQUIRE(run_cli("frobnicate") == 1);
    }
    SECTION("a diverging system is a numerical failure") {
        nlohmann::json j;
        j["system"] = "lti";
        j["lti"]["a"] = {{1e8}};
        j["lti"]["c"] = {1.0};
        j["ic_region"] = {{"type", "box"}, {"bounds", {{1.0, 2.0}}}};
        j["ic_count"] = 1;
        j["horizon"] = 0.05;  // long enough for the state to overflow
        j["dt"] = 1e-3;
        j["output_dir"] = (tmp.path / "blowup").string();
        const auto path = tmp.path / "blowup.json";
        std::ofstream(path) << j.dump();
        REQUIRE(run_cli("lti --config \"" + path.string() + "\"") == 2);
    }
    SECTION("property-suite failures exit with code 3") {
        REQUIRE(run_cli("check --inject-cwt-fault 1.01") == 3);
    }
    SECTION("simulate succeeds on a small config") {
        nlohmann::json j;
        j["system"] = "lti";
        j["ic_count"] = 2;
        j["horizon"] = 0.05;
        j["output_dir"] = (tmp.path / "sim").string();
        const auto path = tmp.path / "sim.json";
        std::ofstream(path) << j.dump();
        REQUIRE(run_cli("simulate --config \"" + path.string() + "\"") == 0);
        REQUIRE(fs::exists(tmp.path / "sim" / "trajectory_000.csv"));
        REQUIRE(fs::exists(tmp.path / "sim" / "manifest.json"));
        const auto traj = io::read_csv((tmp.path / "sim" / "trajectory_000.csv").string());
        REQUIRE(traj.header == std::vector<std::string>{"t", "x1", "x2", "y"});
        REQUIRE(traj.rows.size() == 51);
    }
    SECTION("resolvent-sweep writes the Bode-style csv") {
        nlohmann::json j;
        j["system"] = "lti";
        j["ic_count"] = 2;
        j["horizon"] = 0.25;
        j["j_max"] = 160;
        j["output_dir"] = (tmp.path / "sweep").string();
        const auto path = tmp.path / "sweep.json";
        std::ofstream(path) << j.dump();
        REQUIRE(run_cli("resolvent-sweep --config \"" + path.string() + "\"") == 0);
        const auto table = io::read_csv((tmp.path / "sweep" / "resolvent_sweep.csv").string());
        REQUIRE(table.header == std::vector<std::string>{"re_s", "im_s", "magnitude"});
        REQUIRE(table.rows.size() == 801);
        for (const auto& row : table.rows) REQUIRE(row[0] == 1.0);  // Re(s) = 1 sweep line
    }
}

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cwdmd/dynsys.hpp"
#include "cwdmd/edmd.hpp"
#include "cwdmd/errors.hpp"
#include "cwdmd/io.hpp"
#include "cwdmd/observables.hpp"
#include "cwdmd/resolvent.hpp"
#include "cwdmd/wavelet.hpp"

namespace cwdmd::cli {

using json = nlohmann::json;

inline constexpr const char* kLibraryVersion = "1.0.0";

/// Config target frequencies are in Hz (Bode-plot axis units); internal math
/// is in rad per time unit.
inline double hz_to_rad(double hz) { return 2.0 * std::numbers::pi * hz; }

/// Fraction of each trajectory's shifts dropped at both ends wherever edge
/// effects matter: the least-squares fit, field comparisons and
/// reconstruction checks. Assembly itself keeps every shift.
inline constexpr double kInteriorTrimFraction = 0.10;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string system = "lti";  // lti | lorenz
    Eigen::MatrixXd lti_a;
    Eigen::VectorXd lti_c;
    double lorenz_alpha = 10.0;
    double lorenz_rho = 28.0;
    double lorenz_beta = 8.0 / 3.0;
    dynsys::SamplingRegion ic_region = dynsys::CircleRegion{20.0};
    int ic_count = 100;
    std::uint64_t seed = 1;
    double horizon = 2.0;
    double dt = 1e-3;
    double omega0 = 6.0;
    int c_param = 32;
    int j_max = 288;
    double truncation_tol = 1e-10;
    std::vector<double> target_frequencies_hz = {79.54};
    std::string output_dir = "out";

    int steps() const { return static_cast<int>(std::llround(horizon / dt)); }
};

inline ExperimentConfig lti_default_config() {
    ExperimentConfig cfg;
    cfg.system = "lti";
    cfg.lti_a.resize(2, 2);
    cfg.lti_a << -1.0, 500.0, -500.0, -1.0;
    cfg.lti_c.resize(2);
    cfg.lti_c << 1.0, 0.0;
    cfg.ic_region = dynsys::CircleRegion{20.0};
    cfg.ic_count = 100;
    cfg.horizon = 2.0;
    cfg.dt = 1e-3;
    cfg.c_param = 32;
    cfg.j_max = 288;
    cfg.target_frequencies_hz = {79.54};
    cfg.output_dir = "out_lti";
    return cfg;
}

inline ExperimentConfig lorenz_default_config() {
    ExperimentConfig cfg;
    cfg.system = "lorenz";
    cfg.ic_region = dynsys::BoxRegion{{{-20.0, 20.0}, {-30.0, 30.0}, {0.0, 50.0}}};
    cfg.ic_count = 40;
    cfg.horizon = 100.0;
    cfg.dt = 0.02;
    cfg.c_param = 20;
    cfg.j_max = 220;
    cfg.target_frequencies_hz = {8.17 / (2.0 * std::numbers::pi)};
    cfg.output_dir = "out_lorenz";
    return cfg;
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.system != "lti" && cfg.system != "lorenz")
        throw ConfigInvalid("config: system must be 'lti' or 'lorenz'");
    if (!(cfg.dt > 0.0)) throw ConfigInvalid("config: dt must be positive");
    if (!(cfg.horizon > 0.0)) throw ConfigInvalid("config: horizon must be positive");
    const double ratio = cfg.horizon / cfg.dt;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio) ||
        std::llround(ratio) < 1)
        throw ConfigInvalid("config: horizon must be a positive integer multiple of dt");
    if (!(cfg.omega0 > 0.0)) throw ConfigInvalid("config: omega0 must be positive");
    if (cfg.c_param < 1 || cfg.j_max < 1)
        throw ConfigInvalid("config: c_param and j_max must be >= 1");
    if (!(cfg.truncation_tol > 0.0 && cfg.truncation_tol < 1.0))
        throw ConfigInvalid("config: truncation_tol must lie in (0, 1)");
    if (cfg.ic_count < 1) throw ConfigInvalid("config: ic_count must be >= 1");
    if (cfg.target_frequencies_hz.empty())
        throw ConfigInvalid("config: at least one target frequency is required");
    for (double f : cfg.target_frequencies_hz)
        if (!(f > 0.0)) throw ConfigInvalid("config: target frequencies must be positive");
    if (cfg.system == "lti") {
        if (cfg.lti_a.rows() != cfg.lti_a.cols() || cfg.lti_a.rows() < 1)
            throw ConfigInvalid("config: lti.a must be a square matrix");
        if (cfg.lti_c.size() != cfg.lti_a.rows())
            throw ConfigInvalid("config: lti.c must match the order of lti.a");
    }
}

inline json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["system"] = cfg.system;
    if (cfg.lti_a.size() > 0) {
        json a = json::array();
        for (Eigen::Index r = 0; r < cfg.lti_a.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < cfg.lti_a.cols(); ++c) row.push_back(cfg.lti_a(r, c));
            a.push_back(row);
        }
        j["lti"]["a"] = a;
        j["lti"]["c"] = std::vector<double>(cfg.lti_c.data(), cfg.lti_c.data() + cfg.lti_c.size());
    }
    j["lorenz"] = {{"alpha", cfg.lorenz_alpha}, {"rho", cfg.lorenz_rho}, {"beta", cfg.lorenz_beta}};
    if (const auto* circle = std::get_if<dynsys::CircleRegion>(&cfg.ic_region)) {
        j["ic_region"] = {{"type", "circle"}, {"radius", circle->radius}};
    } else {
        const auto& box = std::get<dynsys::BoxRegion>(cfg.ic_region);
        json bounds = json::array();
        for (const auto& [lo, hi] : box.bounds) bounds.push_back({lo, hi});
        j["ic_region"] = {{"type", "box"}, {"bounds", bounds}};
    }
    j["ic_count"] = cfg.ic_count;
    j["seed"] = cfg.seed;
    j["horizon"] = cfg.horizon;
    j["dt"] = cfg.dt;
    j["omega0"] = cfg.omega0;
    j["c_param"] = cfg.c_param;
    j["j_max"] = cfg.j_max;
    j["truncation_tol"] = cfg.truncation_tol;
    j["target_frequencies_hz"] = cfg.target_frequencies_hz;
    j["output_dir"] = cfg.output_dir;
    return j;
}

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    try {
        const std::string system = j.value("system", "lti");
        cfg = (system == "lorenz") ? lorenz_default_config() : lti_default_config();
        cfg.system = system;  // keep unknown names so validation can reject them
        if (j.contains("lti")) {
            const auto& l = j.at("lti");
            const auto rows = l.at("a").size();
            cfg.lti_a.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
            for (size_t r = 0; r < rows; ++r) {
                const auto& row = l.at("a").at(r);
                if (row.size() != rows) throw ConfigInvalid("config: lti.a must be square");
                for (size_t c = 0; c < rows; ++c)
                    cfg.lti_a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        row.at(c).get<double>();
            }
            const auto cvec = l.at("c").get<std::vector<double>>();
            cfg.lti_c = Eigen::Map<const Eigen::VectorXd>(cvec.data(),
                                                          static_cast<Eigen::Index>(cvec.size()));
        }
        if (j.contains("lorenz")) {
            const auto& l = j.at("lorenz");
            if (l.contains("alpha")) cfg.lorenz_alpha = l.at("alpha").get<double>();
            if (l.contains("rho")) cfg.lorenz_rho = l.at("rho").get<double>();
            if (l.contains("beta")) cfg.lorenz_beta = l.at("beta").get<double>();
        }
        if (j.contains("ic_region")) {
            const auto& r = j.at("ic_region");
            const auto type = r.at("type").get<std::string>();
            if (type == "circle") {
                cfg.ic_region = dynsys::CircleRegion{r.at("radius").get<double>()};
            } else if (type == "box") {
                dynsys::BoxRegion box;
                for (const auto& b : r.at("bounds"))
                    box.bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
                cfg.ic_region = box;
            } else {
                throw ConfigInvalid("config: ic_region.type must be 'circle' or 'box'");
            }
        }
        if (j.contains("ic_count")) cfg.ic_count = j.at("ic_count").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<double>();
        if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
        if (j.contains("omega0")) cfg.omega0 = j.at("omega0").get<double>();
        if (j.contains("c_param")) cfg.c_param = j.at("c_param").get<int>();
        if (j.contains("j_max")) cfg.j_max = j.at("j_max").get<int>();
        if (j.contains("truncation_tol")) cfg.truncation_tol = j.at("truncation_tol").get<double>();
        if (j.contains("target_frequencies_hz"))
            cfg.target_frequencies_hz = j.at("target_frequencies_hz").get<std::vector<double>>();
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config: malformed JSON: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config: parse error: ") + e.what());
    }
    return parse_config(j);
}

/// FNV-1a over the canonical (key-sorted, compact) JSON form.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string canon = config_to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Field comparison metrics
// ---------------------------------------------------------------------------

/// Modulus of the normalized inner product; invariant under complex scaling
/// of either field, which is the guarantee the eigenfunction surrogate gives.
inline double complex_correlation(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::abs(a.dot(b)) / (na * nb);
}

/// ||ref - c*approx|| / ||ref|| minimized over the complex scalar c.
inline double optimal_scaling_rel_l2(const Eigen::VectorXcd& ref, const Eigen::VectorXcd& approx) {
    const double denom = approx.squaredNorm();
    if (denom == 0.0 || ref.norm() == 0.0) return 1.0;
    const std::complex<double> c = approx.dot(ref) / denom;
    return (ref - c * approx).norm() / ref.norm();
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct SelectedMode {
    double target_hz = 0.0;
    Eigen::Index mode_index = -1;
    std::complex<double> lambda;
    double distance = 0.0;
};

struct ExperimentReport {
    std::string system;
    int observable_rows = 0;
    int retained_rank = 0;
    bool degenerate_rank_warning = false;
    double c_gamma = 0.0;
    std::vector<std::complex<double>> top_modes;  // continuous eigenvalues by |mu|
    std::vector<SelectedMode> selected;
    bool has_reference = false;
    double complex_correlation_metric = 0.0;
    double interior_rel_l2 = 0.0;
    double bode_peak_rad = 0.0;
    std::vector<StageTiming> timings;
    std::string output_dir;
    std::vector<std::string> files_written;  // relative to output_dir
};

inline json report_to_json(const ExperimentReport& report) {
    json j;
    j["system"] = report.system;
    j["observable_rows"] = report.observable_rows;
    j["retained_rank"] = report.retained_rank;
    j["degenerate_rank_warning"] = report.degenerate_rank_warning;
    j["admissibility_constant"] = report.c_gamma;
    json modes = json::array();
    for (const auto& m : report.top_modes) modes.push_back({m.real(), m.imag()});
    j["top_modes_lambda"] = modes;
    json sel = json::array();
    for (const auto& s : report.selected)
        sel.push_back({{"target_hz", s.target_hz},
                       {"mode_index", s.mode_index},
                       {"lambda", {s.lambda.real(), s.lambda.imag()}},
                       {"distance", s.distance}});
    j["selected_modes"] = sel;
    if (report.has_reference) {
        j["metrics"] = {{"complex_correlation", report.complex_correlation_metric},
                        {"interior_rel_l2", report.interior_rel_l2},
                        {"bode_peak_rad", report.bode_peak_rad}};
    }
    json timings = json::array();
    for (const auto& t : report.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    j["timings"] = timings;
    j["files"] = report.files_written;
    return j;
}

namespace detail {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(&sink) {}
    void start(std::string stage) {
        stage_ = std::move(stage);
        t0_ = std::chrono::steady_clock::now();
    }
    void stop() {
        const auto t1 = std::chrono::steady_clock::now();
        sink_->push_back({stage_, std::chrono::duration<double>(t1 - t0_).count()});
    }

private:
    std::vector<StageTiming>* sink_;
    std::string stage_;
    std::chrono::steady_clock::time_point t0_;
};

inline dynsys::SystemSpec make_system(const ExperimentConfig& cfg) {
    if (cfg.system == "lti") return dynsys::lti_system(cfg.lti_a, cfg.lti_c);
    return dynsys::lorenz_system(cfg.lorenz_alpha, cfg.lorenz_rho, cfg.lorenz_beta);
}

/// Matrix exponential by scaling-and-squaring on a plain Taylor series; used
/// by the property suite as the integrator oracle.
inline Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& a) {
    int squarings = 0;
    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    const Eigen::MatrixXd b = a / std::exp2(static_cast<double>(squarings));
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = result;
    for (int k = 1; k <= 24; ++k) {
        term = (term * b) / static_cast<double>(k);
        result += term;
    }
    for (int k = 0; k < squarings; ++k) result = result * result;
    return result;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

/// Shared pipeline state after the cWDMD solve.
struct PipelineState {
    dynsys::OutputEnsemble ensemble;
    observables::ScaleGrid grid;
    observables::ObservableMatrices matrices;
    edmd::EdmdMatrix edmd_matrix;
    edmd::SpectralDecomposition spectrum;
};

inline PipelineState run_pipeline(const ExperimentConfig& cfg, const dynsys::SystemSpec& system,
                                  detail::StageClock& clock) {
    PipelineState state;

    clock.start("sample_ics");
    const auto ics =
        dynsys::sample_initial_conditions(cfg.ic_region, cfg.ic_count, cfg.seed, system.dimension);
    clock.stop();

    clock.start("integrate");
    state.ensemble = dynsys::simulate_ensemble(system, ics, cfg.dt, cfg.steps());
    clock.stop();

    clock.start("cwt");
    state.grid = observables::make_scale_grid(cfg.c_param, cfg.j_max);
    const auto kind = wavelet::WaveletKind::modulated_gaussian(cfg.omega0);
    auto evals = observables::evaluate_observables(state.ensemble, state.grid, kind);
    clock.stop();

    clock.start("assemble");
    state.matrices = observables::realify_and_assemble(evals, state.ensemble);
    evals.per_trajectory.clear();
    evals.per_trajectory.shrink_to_fit();
    clock.stop();

    clock.start("solve");
    state.edmd_matrix = edmd::solve_edmd(state.matrices, cfg.truncation_tol,
                                         edmd::LsRoute::Auto, kInteriorTrimFraction);
    clock.stop();

    clock.start("spectrum");
    state.spectrum = edmd::spectral_decomposition(state.edmd_matrix, cfg.dt);
    clock.stop();

    return state;
}

namespace detail {

inline void fill_report_spectrum(ExperimentReport& report, const ExperimentConfig& cfg,
                                 const PipelineState& state) {
    report.system = cfg.system;
    report.observable_rows = static_cast<int>(state.matrices.rows());
    report.retained_rank = state.edmd_matrix.svd_rank;
    report.degenerate_rank_warning = state.matrices.psi.cols() < state.matrices.psi.rows();
    // top modes by |mu|
    std::vector<Eigen::Index> order(static_cast<size_t>(state.spectrum.discrete_eigenvalues.size()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(state.spectrum.discrete_eigenvalues(a)) >
               std::abs(state.spectrum.discrete_eigenvalues(b));
    });
    const size_t n_top = std::min<size_t>(10, order.size());
    for (size_t i = 0; i < n_top; ++i)
        report.top_modes.push_back(state.spectrum.continuous_eigenvalues(order[i]));
}

/// Sampled states and their Psi column indices; interior shifts only when
/// trim_fraction > 0 (first and last trim_fraction of each trajectory's
/// column block are dropped).
struct FieldSupport {
    std::vector<Eigen::VectorXd> points;
    std::vector<Eigen::Index> columns;
};

inline FieldSupport sampled_state_support(const PipelineState& state, double trim_fraction) {
    FieldSupport support;
    const int steps = state.matrices.steps;
    const int k_count = state.matrices.n_trajectories;
    const int lo = static_cast<int>(std::ceil(trim_fraction * steps));
    const int hi = static_cast<int>(std::floor((1.0 - trim_fraction) * steps));
    for (int k = 0; k < k_count; ++k)
        for (int i = lo; i < hi; ++i) {
            support.points.push_back(state.ensemble.trajectories[static_cast<size_t>(k)]
                                         .states[static_cast<size_t>(i)]);
            support.columns.push_back(state.matrices.col_index(k, i));
        }
    return support;
}

inline FieldSupport initial_condition_support(const PipelineState& state) {
    FieldSupport support;
    for (int k = 0; k < state.matrices.n_trajectories; ++k) {
        support.points.push_back(state.ensemble.initial_conditions[static_cast<size_t>(k)]);
        support.columns.push_back(state.matrices.col_index(k, 0));
    }
    return support;
}

inline void verify_outputs(const std::string& dir, const std::vector<std::string>& files) {
    namespace fs = std::filesystem;
    for (const auto& name : files) {
        const fs::path path = fs::path(dir) / name;
        if (!fs::exists(path)) throw Error("report: declared output missing: " + path.string());
        if (path.extension() == ".csv") {
            (void)io::read_csv(path.string());
        } else if (path.extension() == ".json") {
            std::ifstream in(path);
            json j;
            in >> j;
        }
    }
}

inline void write_manifest(const std::string& dir, const ExperimentConfig& cfg,
                           std::vector<std::string> files) {
    json manifest;
    manifest["config_hash"] = config_hash(cfg);
    manifest["library_version"] = kLibraryVersion;
    files.push_back("manifest.json");
    manifest["outputs"] = files;
    std::ofstream out(std::filesystem::path(dir) / "manifest.json");
    out << manifest.dump(2) << '\n';
}

} // namespace detail

/// LTI experiment: simulate the output ensemble, run the cWDMD pipeline,
/// compare the selected eigenfunction field against the analytic resolvent
/// field, and emit the Bode sweep, both fields, the spectrum and metrics.
inline ExperimentReport run_lti_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.system != "lti") throw ConfigInvalid("run_lti_experiment: config.system must be 'lti'");
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    ExperimentReport report;
    report.output_dir = cfg.output_dir;
    detail::StageClock clock(report.timings);

    const auto system = detail::make_system(cfg);
    PipelineState state = run_pipeline(cfg, system, clock);
    detail::fill_report_spectrum(report, cfg, state);
    report.has_reference = true;
    report.c_gamma =
        wavelet::admissibility_constant(wavelet::WaveletKind::morlet(cfg.omega0), 4000);

    clock.start("fields");
    // mode selection per target frequency
    for (double f_hz : cfg.target_frequencies_hz) {
        const std::complex<double> target{0.0, hz_to_rad(f_hz)};
        const auto sel = edmd::select_eigenpair(state.spectrum, target);
        report.selected.push_back(
            {f_hz, sel.index, state.spectrum.continuous_eigenvalues(sel.index), sel.distance});
    }

    // fields for the first target: all sampled states, full and interior sets
    const std::complex<double> s0{0.0, hz_to_rad(cfg.target_frequencies_hz.front())};
    const auto full = detail::sampled_state_support(state, 0.0);
    const auto interior = detail::sampled_state_support(state, kInteriorTrimFraction);

    auto analytic_at = [&](const detail::FieldSupport& support) {
        edmd::ComplexField field;
        field.points = support.points;
        field.values.resize(static_cast<Eigen::Index>(support.points.size()));
        for (size_t p = 0; p < support.points.size(); ++p)
            field.values(static_cast<Eigen::Index>(p)) =
                dynsys::analytic_lti_resolvent(cfg.lti_a, cfg.lti_c, s0, support.points[p]);
        return field;
    };

    const edmd::ComplexField analytic_full = analytic_at(full);
    const edmd::ComplexField approx_full = edmd::eigenfunction_field(
        state.spectrum, report.selected.front().mode_index, state.matrices, full.points,
        full.columns);

    // anchor: point of maximum analytic magnitude
    Eigen::Index anchor = 0;
    analytic_full.values.cwiseAbs().maxCoeff(&anchor);
    const double anchor_arg = std::arg(analytic_full.values(anchor));
    const auto analytic_norm = edmd::normalize_field(analytic_full, anchor, anchor_arg);
    const auto approx_norm = edmd::normalize_field(approx_full, anchor, anchor_arg);

    // metrics on the interior subset
    const edmd::ComplexField analytic_interior = analytic_at(interior);
    const edmd::ComplexField approx_interior = edmd::eigenfunction_field(
        state.spectrum, report.selected.front().mode_index, state.matrices, interior.points,
        interior.columns);
    report.complex_correlation_metric =
        complex_correlation(analytic_interior.values, approx_interior.values);
    report.interior_rel_l2 =
        optimal_scaling_rel_l2(analytic_interior.values, approx_interior.values);
    clock.stop();

    clock.start("bode");
    // analytic Bode sweep over the scale grid's representable band
    const double omega_lo = cfg.omega0 / (state.grid.scales.back() * cfg.dt);
    const double omega_hi = cfg.omega0 / (state.grid.scales.front() * cfg.dt);
    const int n_sweep = 4001;
    std::vector<io::SweepPoint> bode;
    bode.reserve(static_cast<size_t>(n_sweep));
    double peak_mag = -1.0;
    for (int q = 0; q < n_sweep; ++q) {
        const double omega =
            omega_lo * std::pow(omega_hi / omega_lo, static_cast<double>(q) / (n_sweep - 1));
        const std::complex<double> s{0.0, omega};
        double sum_sq = 0.0;
        for (const auto& x0 : state.ensemble.initial_conditions)
            sum_sq += std::norm(dynsys::analytic_lti_resolvent(cfg.lti_a, cfg.lti_c, s, x0));
        const double mag = std::sqrt(sum_sq / static_cast<double>(cfg.ic_count));
        bode.push_back({s, mag});
        if (mag > peak_mag) {
            peak_mag = mag;
            report.bode_peak_rad = omega;
        }
    }
    clock.stop();

    clock.start("io");
    const fs::path dir(cfg.output_dir);
    io::write_sweep_csv((dir / "bode_analytic.csv").string(), bode);
    io::write_field_csv((dir / "field_analytic.csv").string(), analytic_norm);
    io::write_field_csv((dir / "field_cwdmd.csv").string(), approx_norm);
    io::write_spectrum_csv((dir / "spectrum.csv").string(), state.spectrum);
    report.files_written = {"bode_analytic.csv", "field_analytic.csv", "field_cwdmd.csv",
                            "spectrum.csv"};
    {
        std::ofstream out(dir / "metrics.json");
        out << report_to_json(report).dump(2) << '\n';
    }
    report.files_written.push_back("metrics.json");
    detail::write_manifest(cfg.output_dir, cfg, report.files_written);
    report.files_written.push_back("manifest.json");
    detail::verify_outputs(cfg.output_dir, report.files_written);
    clock.stop();
    return report;
}

/// Lorenz experiment: same pipeline; no analytic reference exists, so the
/// report carries the spectrum, the selected mode and the field at the
/// initial conditions.
inline ExperimentReport run_lorenz_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.system != "lorenz")
        throw ConfigInvalid("run_lorenz_experiment: config.system must be 'lorenz'");
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    ExperimentReport report;
    report.output_dir = cfg.output_dir;
    detail::StageClock clock(report.timings);

    const auto system = detail::make_system(cfg);
    PipelineState state = run_pipeline(cfg, system, clock);
    detail::fill_report_spectrum(report, cfg, state);
    report.c_gamma =
        wavelet::admissibility_constant(wavelet::WaveletKind::morlet(cfg.omega0), 4000);

    clock.start("fields");
    for (double f_hz : cfg.target_frequencies_hz) {
        const std::complex<double> target{0.0, hz_to_rad(f_hz)};
        const auto sel = edmd::select_eigenpair(state.spectrum, target);
        report.selected.push_back(
            {f_hz, sel.index, state.spectrum.continuous_eigenvalues(sel.index), sel.distance});
    }
    const auto ic_support = detail::initial_condition_support(state);
    const auto field = edmd::eigenfunction_field(state.spectrum,
                                                 report.selected.front().mode_index,
                                                 state.matrices, ic_support.points,
                                                 ic_support.columns);
    // anchor at the first sampled point; keep its argument
    const auto field_norm = edmd::normalize_field(field, 0, std::arg(field.values(0)));
    clock.stop();

    clock.start("io");
    const fs::path dir(cfg.output_dir);
    io::write_field_csv((dir / "field_cwdmd.csv").string(), field_norm);
    io::write_spectrum_csv((dir / "spectrum.csv").string(), state.spectrum);
    report.files_written = {"field_cwdmd.csv", "spectrum.csv"};
    {
        std::ofstream out(dir / "metrics.json");
        out << report_to_json(report).dump(2) << '\n';
    }
    report.files_written.push_back("metrics.json");
    detail::write_manifest(cfg.output_dir, cfg, report.files_written);
    report.files_written.push_back("manifest.json");
    detail::verify_outputs(cfg.output_dir, report.files_written);
    clock.stop();
    return report;
}

/// cWDMD resolvent sweep along Re(s) = re_s: RMS over the ensemble of the
/// quadrature resolvent built from observable values anchored at the middle
/// of each trajectory's window (an interior state; shift-0 coefficients are
/// boundary-contaminated). Scales within a factor 4 of the window length are
/// dropped first.
inline std::vector<io::SweepPoint> quadrature_resolvent_sweep(const ExperimentConfig& cfg,
                                                              const std::vector<double>& omegas,
                                                              double re_s = 1.0) {
    validate_config(cfg);
    const auto system = detail::make_system(cfg);
    const auto ics =
        dynsys::sample_initial_conditions(cfg.ic_region, cfg.ic_count, cfg.seed, system.dimension);
    const auto ensemble = dynsys::simulate_ensemble(system, ics, cfg.dt, cfg.steps());

    auto grid = observables::make_scale_grid(cfg.c_param, cfg.j_max);
    const double window_samples = cfg.steps() + 1.0;
    grid = observables::truncate_scale_grid(grid, window_samples / 4.0);

    const auto kind = wavelet::WaveletKind::modulated_gaussian(cfg.omega0);
    const auto evals = observables::evaluate_observables(ensemble, grid, kind);
    const double c_gamma =
        wavelet::admissibility_constant(wavelet::WaveletKind::morlet(cfg.omega0), 4000);
    const auto scheme = resolvent::make_quadrature_scheme(grid, cfg.omega0, cfg.dt, c_gamma);

    const Eigen::Index anchor = cfg.steps() / 2;
    std::vector<io::SweepPoint> sweep;
    sweep.reserve(omegas.size());
    for (double omega : omegas) {
        const std::complex<double> s{re_s, omega};
        double sum_sq = 0.0;
        for (const auto& w : evals.per_trajectory) {
            const Eigen::VectorXcd psi = w.col(anchor);
            sum_sq += std::norm(resolvent::resolvent_quadrature(psi, scheme, s));
        }
        sweep.push_back({s, std::sqrt(sum_sq / static_cast<double>(evals.per_trajectory.size()))});
    }
    return sweep;
}

} // namespace cwdmd::cli

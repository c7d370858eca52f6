#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cwdmd/dynsys.hpp"
#include "cwdmd/errors.hpp"
#include "cwdmd/wavelet.hpp"

namespace cwdmd::observables {

using dynsys::OutputEnsemble;
using wavelet::WaveletKind;

/// Dyadic scale grid sigma_j = 2^(j/C), j = 1..J, in sample units. The
/// continuous-time angular frequency associated with sigma_j is
/// omega0 / (sigma_j * dt).
struct ScaleGrid {
    int c_param = 1;
    int j_max = 1;
    std::vector<double> scales;
};

inline ScaleGrid make_scale_grid(int c_param, int j_max) {
    if (c_param < 1 || j_max < 1)
        throw Error("make_scale_grid: c_param and j_max must be >= 1");
    ScaleGrid grid;
    grid.c_param = c_param;
    grid.j_max = j_max;
    grid.scales.reserve(static_cast<size_t>(j_max));
    for (int j = 1; j <= j_max; ++j)
        grid.scales.push_back(std::exp2(static_cast<double>(j) / static_cast<double>(c_param)));
    return grid;
}

/// Keeps only scales <= max_scale (used to drop window-length scales before
/// field comparisons). The dyadic spacing is preserved.
inline ScaleGrid truncate_scale_grid(const ScaleGrid& grid, double max_scale) {
    ScaleGrid out;
    out.c_param = grid.c_param;
    for (double s : grid.scales)
        if (s <= max_scale) out.scales.push_back(s);
    out.j_max = static_cast<int>(out.scales.size());
    if (out.j_max == 0) throw EmptyScales("truncate_scale_grid: no scales left");
    return out;
}

/// Wavelet-based observable evaluations: per_trajectory[k](j, i) is the
/// transform of trajectory k's output at (sigma_j, i*dt), i.e. the semigroup
/// element K_{i*dt} applied to the scale-j observable at the k-th initial
/// condition. Column 0 holds the observables themselves (shift-0 values).
struct ObservableEvaluations {
    ScaleGrid grid;
    std::vector<Eigen::MatrixXcd> per_trajectory;
};

inline ObservableEvaluations evaluate_observables(const OutputEnsemble& ensemble,
                                                  const ScaleGrid& grid,
                                                  const WaveletKind& kind) {
    if (ensemble.trajectories.empty())
        throw Error("evaluate_observables: ensemble is empty");
    ObservableEvaluations evals;
    evals.grid = grid;
    evals.per_trajectory.reserve(ensemble.trajectories.size());
    for (const auto& traj : ensemble.trajectories) {
        wavelet::Signal signal{traj.dt, traj.outputs};
        evals.per_trajectory.push_back(
            std::move(wavelet::cwt_fft(signal, grid.scales, kind).coefficients));
    }
    return evals;
}

/// Realified EDMD data matrices. Each scale contributes a Re row and an Im
/// row; the final row holds the trajectory's own output mean, constant across
/// that trajectory's columns. Per trajectory, Psi takes shifts 0..N-1 and
/// Psi_plus takes 1..N; blocks are concatenated column-wise in trajectory
/// order, so column (k, i) sits at index k*N + i.
struct ObservableMatrices {
    Eigen::MatrixXd psi;       // (2J+1) x (N*K)
    Eigen::MatrixXd psi_plus;  // (2J+1) x (N*K)
    int j_max = 0;
    int n_trajectories = 0;
    int steps = 0;  // N

    Eigen::Index rows() const { return psi.rows(); }
    Eigen::Index col_index(int k, int i) const {
        return static_cast<Eigen::Index>(k) * steps + i;
    }
};

inline ObservableMatrices realify_and_assemble(const ObservableEvaluations& evals,
                                               const OutputEnsemble& ensemble) {
    const auto n_traj = evals.per_trajectory.size();
    if (n_traj != ensemble.trajectories.size() || n_traj == 0)
        throw LengthMismatch("realify_and_assemble: evaluations do not match ensemble");
    const Eigen::Index j_max = evals.per_trajectory.front().rows();
    const Eigen::Index n_samples = evals.per_trajectory.front().cols();
    if (n_samples < 2)
        throw LengthMismatch("realify_and_assemble: trajectories too short");
    for (size_t k = 0; k < n_traj; ++k) {
        if (evals.per_trajectory[k].rows() != j_max ||
            evals.per_trajectory[k].cols() != n_samples ||
            static_cast<Eigen::Index>(ensemble.trajectories[k].outputs.size()) != n_samples)
            throw LengthMismatch("realify_and_assemble: inconsistent trajectory lengths");
    }

    const Eigen::Index steps = n_samples - 1;  // N
    const Eigen::Index rows = 2 * j_max + 1;
    ObservableMatrices mats;
    mats.j_max = static_cast<int>(j_max);
    mats.n_trajectories = static_cast<int>(n_traj);
    mats.steps = static_cast<int>(steps);
    mats.psi.resize(rows, steps * static_cast<Eigen::Index>(n_traj));
    mats.psi_plus.resize(rows, steps * static_cast<Eigen::Index>(n_traj));

    for (size_t k = 0; k < n_traj; ++k) {
        const auto& w = evals.per_trajectory[k];
        const auto& outputs = ensemble.trajectories[k].outputs;
        const double mean = Eigen::Map<const Eigen::VectorXd>(
                                outputs.data(), static_cast<Eigen::Index>(outputs.size()))
                                .mean();
        const Eigen::Index col0 = static_cast<Eigen::Index>(k) * steps;
        for (Eigen::Index j = 0; j < j_max; ++j) {
            mats.psi.block(2 * j, col0, 1, steps) = w.row(j).head(steps).real();
            mats.psi.block(2 * j + 1, col0, 1, steps) = w.row(j).head(steps).imag();
            mats.psi_plus.block(2 * j, col0, 1, steps) = w.row(j).tail(steps).real();
            mats.psi_plus.block(2 * j + 1, col0, 1, steps) = w.row(j).tail(steps).imag();
        }
        mats.psi.block(rows - 1, col0, 1, steps).setConstant(mean);
        mats.psi_plus.block(rows - 1, col0, 1, steps).setConstant(mean);
    }
    return mats;
}

/// One residual/bound pair of the eigenfunction inequality at a given
/// time shift.
struct ResidualEntry {
    double delta_t = 0.0;
    double residual = 0.0;
    double bound = 0.0;
    bool within_bound = false;
};

struct ResidualReport {
    int trajectory = 0;
    double sigma_time = 0.0;
    double slack = 0.0;
    std::vector<ResidualEntry> entries;
    double loglog_slope = 0.0;  // fitted on entries with delta_t > 0
};

/// Additive slack on the residual bound, as a fraction of max|y|; covers the
/// quadrature error of the discrete transform (calibrated against the
/// cwt_direct oracle study).
inline constexpr double kResidualSlackFactor = 1e-4;

/// Checks the modulated-Gaussian eigenfunction inequality on sampled data.
/// For the state at the middle of each trajectory's window (the bound holds
/// for every state; an interior anchor keeps the transform clear of window
/// truncation), computes
///   r(dt) = |W(sigma, t0+dt) - exp(i*w0*dt/sigma - dt^2/(2*sigma^2)) W(sigma, t0)|
///   B(dt) = |sigma| sqrt(2*pi) (exp(dt^2/(2*sigma^2)) - 1) max_i |y(t_i)|
/// with all quantities in sample-time normalization (sigma in samples, shifts
/// in samples), which is the same inequality under rescaling of time. The
/// log-log slope of r against dt is fitted across dt_list.
inline std::vector<ResidualReport> check_eigen_residual_bound(const OutputEnsemble& ensemble,
                                                              double sigma, double omega0,
                                                              const std::vector<double>& dt_list) {
    if (!(sigma > 0.0)) throw ZeroScale("check_eigen_residual_bound: sigma must be positive");
    if (ensemble.trajectories.empty())
        throw Error("check_eigen_residual_bound: ensemble is empty");
    const double dt = ensemble.dt;
    const double sigma_s = sigma / dt;

    const auto n_samples = static_cast<Eigen::Index>(ensemble.trajectories.front().outputs.size());
    const Eigen::Index anchor = (n_samples - 1) / 2;
    std::vector<Eigen::Index> shifts;
    shifts.reserve(dt_list.size());
    for (double delta : dt_list) {
        const double m_real = delta / dt;
        const auto m = static_cast<Eigen::Index>(std::llround(m_real));
        if (std::abs(m_real - static_cast<double>(m)) > 1e-9 * std::max(1.0, std::abs(m_real)))
            throw DtNotOnGrid("check_eigen_residual_bound: delta_t is not a multiple of the sample interval");
        if (m < 0 || anchor + m >= n_samples)
            throw DtNotOnGrid("check_eigen_residual_bound: delta_t leaves the sampled window");
        shifts.push_back(m);
    }

    const WaveletKind kind = WaveletKind::modulated_gaussian(omega0);
    std::vector<ResidualReport> reports;
    reports.reserve(ensemble.trajectories.size());
    for (size_t k = 0; k < ensemble.trajectories.size(); ++k) {
        const auto& traj = ensemble.trajectories[k];
        wavelet::Signal signal{traj.dt, traj.outputs};
        const auto grid = wavelet::cwt_fft(signal, {sigma_s}, kind);
        const auto row = grid.coefficients.row(0);
        const double max_abs_y =
            Eigen::Map<const Eigen::VectorXd>(traj.outputs.data(), n_samples).cwiseAbs().maxCoeff();

        ResidualReport report;
        report.trajectory = static_cast<int>(k);
        report.sigma_time = sigma;
        report.slack = kResidualSlackFactor * max_abs_y;

        std::vector<double> log_dt, log_r;
        for (size_t q = 0; q < shifts.size(); ++q) {
            const double m = static_cast<double>(shifts[q]);
            const std::complex<double> factor =
                std::exp(std::complex<double>(-0.5 * m * m / (sigma_s * sigma_s),
                                              omega0 * m / sigma_s));
            const double r = std::abs(row(anchor + shifts[q]) - factor * row(anchor));
            const double bound = sigma_s * wavelet::kSqrt2Pi *
                                 std::expm1(0.5 * m * m / (sigma_s * sigma_s)) * max_abs_y;
            report.entries.push_back({dt_list[q], r, bound, r <= bound + report.slack});
            if (shifts[q] > 0 && r > 0.0) {
                log_dt.push_back(std::log(dt_list[q]));
                log_r.push_back(std::log(r));
            }
        }

        if (log_dt.size() >= 2) {
            const auto n = static_cast<double>(log_dt.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (size_t q = 0; q < log_dt.size(); ++q) {
                sx += log_dt[q];
                sy += log_r[q];
                sxx += log_dt[q] * log_dt[q];
                sxy += log_dt[q] * log_r[q];
            }
            report.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

} // namespace cwdmd::observables

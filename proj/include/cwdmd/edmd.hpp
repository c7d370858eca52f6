#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cwdmd/errors.hpp"
#include "cwdmd/observables.hpp"

namespace cwdmd::edmd {

using observables::ObservableMatrices;

/// Least-squares EDMD matrix with the retained SVD rank of the data matrix.
struct EdmdMatrix {
    Eigen::MatrixXd k_hat;
    int svd_rank = 0;
    double truncation_tol = 0.0;
};

enum class LsRoute {
    Auto,       // direct SVD up to kGramRouteMinCols columns, Gram route beyond
    DirectSvd,  // thin SVD of Psi
    GramEigen,  // eigendecomposition of Psi*Psi^T (same pseudoinverse, less memory)
};

/// Column count beyond which the Auto route switches from the direct thin SVD
/// to the Gram-matrix eigendecomposition. Both compute the SVD-truncated
/// pseudoinverse solution; the Gram route avoids factorizing the full data
/// matrix at experiment scale.
inline constexpr Eigen::Index kGramRouteMinCols = 10000;

/// Solves argmin_K ||Psi_plus - K Psi||_F via the SVD-truncated pseudoinverse:
/// singular values below truncation_tol * s_max are discarded and
/// K = Psi_plus V_r S_r^{-1} U_r^T. Rank-deficient data yields the
/// minimum-norm solution.
///
/// edge_trim_fraction > 0 restricts the fit to the interior columns of every
/// trajectory block (that fraction dropped at each end). The periodic
/// transform wraps each coefficient row, so edge columns regain the decay
/// lost across the window and bias the fitted one-step magnitudes toward 1;
/// the experiments fit on interior columns only. The full matrices are
/// untouched and remain available for field evaluation at any shift.
inline EdmdMatrix solve_edmd(const ObservableMatrices& matrices, double truncation_tol,
                             LsRoute route = LsRoute::Auto, double edge_trim_fraction = 0.0) {
    const Eigen::MatrixXd& psi = matrices.psi;
    const Eigen::MatrixXd& psi_plus = matrices.psi_plus;
    if (psi.rows() != psi_plus.rows() || psi.cols() != psi_plus.cols())
        throw ShapeMismatch("solve_edmd: psi and psi_plus must have identical shapes");
    if (!(truncation_tol > 0.0 && truncation_tol < 1.0))
        throw Error("solve_edmd: truncation_tol must lie in (0, 1)");
    if (!(edge_trim_fraction >= 0.0 && edge_trim_fraction < 0.5))
        throw Error("solve_edmd: edge_trim_fraction must lie in [0, 0.5)");

    // interior column ranges, one [start, start+count) per trajectory block
    std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;
    if (edge_trim_fraction > 0.0) {
        const Eigen::Index steps = matrices.steps;
        if (steps * static_cast<Eigen::Index>(matrices.n_trajectories) != psi.cols())
            throw ShapeMismatch("solve_edmd: trimming needs the block structure to match");
        const auto lo = static_cast<Eigen::Index>(std::ceil(edge_trim_fraction * steps));
        const auto hi = static_cast<Eigen::Index>(std::floor((1.0 - edge_trim_fraction) * steps));
        if (hi <= lo) throw Error("solve_edmd: trimming removed every column");
        for (int k = 0; k < matrices.n_trajectories; ++k)
            spans.emplace_back(static_cast<Eigen::Index>(k) * steps + lo, hi - lo);
    } else {
        spans.emplace_back(0, psi.cols());
    }

    if (route == LsRoute::Auto)
        route = psi.cols() > kGramRouteMinCols ? LsRoute::GramEigen : LsRoute::DirectSvd;

    EdmdMatrix result;
    result.truncation_tol = truncation_tol;

    if (route == LsRoute::DirectSvd) {
        Eigen::Index fit_cols = 0;
        for (const auto& [start, count] : spans) fit_cols += count;
        Eigen::MatrixXd psi_fit(psi.rows(), fit_cols), plus_fit(psi.rows(), fit_cols);
        Eigen::Index at = 0;
        for (const auto& [start, count] : spans) {
            psi_fit.middleCols(at, count) = psi.middleCols(start, count);
            plus_fit.middleCols(at, count) = psi_plus.middleCols(start, count);
            at += count;
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(psi_fit, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        const double cutoff = truncation_tol * s(0);
        int rank = 0;
        while (rank < s.size() && s(rank) > cutoff) ++rank;
        if (rank == 0)
            throw AllSingularValuesTruncated("solve_edmd: data matrix is numerically zero");
        const auto u = svd.matrixU().leftCols(rank);
        const auto v = svd.matrixV().leftCols(rank);
        const Eigen::VectorXd inv_s = s.head(rank).cwiseInverse();
        result.k_hat.noalias() = (plus_fit * v) * inv_s.asDiagonal() * u.transpose();
        result.svd_rank = rank;
        return result;
    }

    // Gram route: K = (Psi_plus Psi^T) (Psi Psi^T)^+ with the same truncation
    // applied to sqrt of the Gram eigenvalues.
    const Eigen::Index n = psi.rows();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [start, count] : spans) {
        gram.selfadjointView<Eigen::Lower>().rankUpdate(psi.middleCols(start, count));
        cross.noalias() += psi_plus.middleCols(start, count) * psi.middleCols(start, count).transpose();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success)
        throw EigenFailure("solve_edmd: Gram eigendecomposition failed");
    const auto& lambda = eig.eigenvalues();  // ascending
    const double lambda_max = lambda(n - 1);
    if (!(lambda_max > 0.0))
        throw AllSingularValuesTruncated("solve_edmd: data matrix is numerically zero");
    const double cutoff = truncation_tol * truncation_tol * lambda_max;
    Eigen::Index first = 0;
    while (first < n && !(lambda(first) > cutoff)) ++first;
    const Eigen::Index rank = n - first;
    if (rank == 0)
        throw AllSingularValuesTruncated("solve_edmd: all singular values truncated");
    const auto u = eig.eigenvectors().rightCols(rank);
    const Eigen::VectorXd inv_lambda = lambda.tail(rank).cwiseInverse();
    result.k_hat.noalias() = (cross * u) * inv_lambda.asDiagonal() * u.transpose();
    result.svd_rank = static_cast<int>(rank);
    return result;
}

inline constexpr double kSpuriousZeroThreshold = 1e-12;

// Mode flags carried per eigenvalue into exports.
inline constexpr int kFlagSpuriousZero = 1;  // |mu| below threshold (rank-truncation artifact)
inline constexpr int kFlagNyquistAliased = 2;  // |Im lambda| at the pi/dt limit

/// Eigenvalues of the EDMD matrix with left eigenvectors w_m satisfying
/// w_m^H K = mu_m w_m^H, plus the continuous-time map lambda = log(mu)/dt
/// (principal branch). lambda is set to zero for spurious-zero modes.
struct SpectralDecomposition {
    Eigen::VectorXcd discrete_eigenvalues;
    Eigen::VectorXcd continuous_eigenvalues;
    Eigen::MatrixXcd left_eigenvectors;  // columns, unit norm
    std::vector<int> flags;
    double dt = 0.0;
};

inline SpectralDecomposition spectral_decomposition(const EdmdMatrix& edmd, double dt) {
    if (!(dt > 0.0)) throw Error("spectral_decomposition: dt must be positive");
    // Right eigenvectors of K^T are conjugate left eigenvectors of K.
    Eigen::EigenSolver<Eigen::MatrixXd> solver(edmd.k_hat.transpose());
    if (solver.info() != Eigen::Success)
        throw EigenFailure("spectral_decomposition: eigensolver did not converge");

    SpectralDecomposition spec;
    spec.dt = dt;
    spec.discrete_eigenvalues = solver.eigenvalues();
    spec.left_eigenvectors = solver.eigenvectors().conjugate();
    const auto n = spec.discrete_eigenvalues.size();
    spec.continuous_eigenvalues.resize(n);
    spec.flags.assign(static_cast<size_t>(n), 0);

    const double nyquist = std::numbers::pi / dt;
    for (Eigen::Index m = 0; m < n; ++m) {
        spec.left_eigenvectors.col(m).normalize();
        const std::complex<double> mu = spec.discrete_eigenvalues(m);
        if (std::abs(mu) < kSpuriousZeroThreshold) {
            spec.flags[static_cast<size_t>(m)] |= kFlagSpuriousZero;
            spec.continuous_eigenvalues(m) = 0.0;
            continue;
        }
        const std::complex<double> lambda = std::log(mu) / dt;
        spec.continuous_eigenvalues(m) = lambda;
        if (std::abs(lambda.imag()) >= nyquist * (1.0 - 1e-9))
            spec.flags[static_cast<size_t>(m)] |= kFlagNyquistAliased;
    }
    return spec;
}

struct ModeSelection {
    Eigen::Index index = -1;
    double distance = 0.0;
};

/// Nearest non-spurious continuous eigenvalue to the target; ties break
/// toward the smaller index.
inline ModeSelection select_eigenpair(const SpectralDecomposition& spec,
                                      std::complex<double> target) {
    ModeSelection best;
    for (Eigen::Index m = 0; m < spec.continuous_eigenvalues.size(); ++m) {
        if (spec.flags[static_cast<size_t>(m)] & kFlagSpuriousZero) continue;
        const double d = std::abs(spec.continuous_eigenvalues(m) - target);
        if (best.index < 0 || d < best.distance) {
            best.index = m;
            best.distance = d;
        }
    }
    if (best.index < 0)
        throw EmptySpectrum("select_eigenpair: no non-spurious modes available");
    return best;
}

/// Complex values of an eigenfunction (or resolvent surrogate) attached to
/// sampled state points.
struct ComplexField {
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXcd values;
    bool normalized = false;
};

/// Left-eigenvector contraction of the observable columns: the value at a
/// point is w_mode^H (Psi column of that point), which propagates by mu per
/// step along trajectories up to the least-squares residual.
inline ComplexField eigenfunction_field(const SpectralDecomposition& spec, Eigen::Index mode,
                                        const ObservableMatrices& matrices,
                                        const std::vector<Eigen::VectorXd>& points,
                                        const std::vector<Eigen::Index>& columns) {
    if (mode < 0 || mode >= spec.discrete_eigenvalues.size())
        throw IndexOutOfRange("eigenfunction_field: mode index out of range");
    if (points.size() != columns.size())
        throw ColumnMappingMissing("eigenfunction_field: points and columns differ in length");
    if (spec.left_eigenvectors.rows() != matrices.psi.rows())
        throw ShapeMismatch("eigenfunction_field: decomposition does not match the data matrices");

    const Eigen::VectorXcd w = spec.left_eigenvectors.col(mode);
    ComplexField field;
    field.points = points;
    field.values.resize(static_cast<Eigen::Index>(points.size()));
    for (size_t p = 0; p < columns.size(); ++p) {
        const Eigen::Index col = columns[p];
        if (col < 0 || col >= matrices.psi.cols())
            throw IndexOutOfRange("eigenfunction_field: column index out of range");
        field.values(static_cast<Eigen::Index>(p)) =
            w.dot(matrices.psi.col(col).cast<std::complex<double>>());
    }
    return field;
}

/// Rescales by one complex scalar so the maximum modulus is 1 and the anchor
/// value's argument equals reference_argument. Invariant under pre-scaling of
/// the input by any nonzero complex constant.
inline ComplexField normalize_field(const ComplexField& field, Eigen::Index anchor,
                                    double reference_argument) {
    if (field.values.size() == 0) throw Error("normalize_field: empty field");
    if (anchor < 0 || anchor >= field.values.size())
        throw IndexOutOfRange("normalize_field: anchor out of range");
    const std::complex<double> va = field.values(anchor);
    if (std::abs(va) == 0.0)
        throw ZeroAnchor("normalize_field: field value at the anchor is zero");
    const double max_mod = field.values.cwiseAbs().maxCoeff();
    const std::complex<double> scale =
        std::polar(1.0 / max_mod, reference_argument - std::arg(va));
    ComplexField out;
    out.points = field.points;
    out.values = field.values * scale;
    out.normalized = true;
    return out;
}

} // namespace cwdmd::edmd

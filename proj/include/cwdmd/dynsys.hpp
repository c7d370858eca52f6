#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cwdmd/errors.hpp"

namespace cwdmd::dynsys {

/// A continuous-time vector field with a scalar output map. Both maps must be
/// total on the sampling region; integration aborts on NaN/Inf.
struct SystemSpec {
    int dimension = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> vector_field;
    std::function<double(const Eigen::VectorXd&)> output_map;
};

/// States and outputs on the fixed-step grid t_i = i*dt, i = 0..N. outputs[i]
/// is the output map evaluated at states[i] (same evaluation, never
/// recomputed from a re-integration).
struct TrajectoryGrid {
    double dt = 0.0;
    std::vector<Eigen::VectorXd> states;
    std::vector<double> outputs;

    int steps() const { return static_cast<int>(states.size()) - 1; }
};

/// A set of trajectories sharing dt and length, one per initial condition.
struct OutputEnsemble {
    double dt = 0.0;
    std::vector<Eigen::VectorXd> initial_conditions;
    std::vector<TrajectoryGrid> trajectories;
};

/// Classical fixed-step 4th-order Runge-Kutta. The sample grid and the
/// integration grid coincide, which is what the downstream transform needs.
inline TrajectoryGrid integrate_rk4(const SystemSpec& system, const Eigen::VectorXd& x0,
                                    double dt, int steps) {
    if (!(dt > 0.0)) throw Error("integrate_rk4: dt must be positive");
    if (steps < 1) throw Error("integrate_rk4: steps must be >= 1");
    if (x0.size() != system.dimension)
        throw DimensionMismatch("integrate_rk4: initial condition has wrong dimension");

    auto eval = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd d = system.vector_field(x);
        if (!d.allFinite())
            throw NonFiniteState("integrate_rk4: vector field produced NaN/Inf");
        return d;
    };
    auto output = [&](const Eigen::VectorXd& x) {
        const double y = system.output_map(x);
        if (!std::isfinite(y))
            throw NonFiniteState("integrate_rk4: output map produced NaN/Inf");
        return y;
    };

    TrajectoryGrid traj;
    traj.dt = dt;
    traj.states.reserve(static_cast<size_t>(steps) + 1);
    traj.outputs.reserve(static_cast<size_t>(steps) + 1);
    traj.states.push_back(x0);
    traj.outputs.push_back(output(x0));

    Eigen::VectorXd x = x0;
    for (int i = 0; i < steps; ++i) {
        const Eigen::VectorXd k1 = eval(x);
        const Eigen::VectorXd k2 = eval(x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = eval(x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = eval(x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite())
            throw NonFiniteState("integrate_rk4: state became non-finite");
        traj.states.push_back(x);
        traj.outputs.push_back(output(x));
    }
    return traj;
}

/// Linear system x' = A x with output y = c^T x.
inline SystemSpec lti_system(const Eigen::MatrixXd& a, const Eigen::VectorXd& c) {
    if (a.rows() != a.cols())
        throw DimensionMismatch("lti_system: A must be square");
    if (c.size() != a.rows())
        throw DimensionMismatch("lti_system: c length must match the order of A");
    SystemSpec spec;
    spec.dimension = static_cast<int>(a.rows());
    spec.vector_field = [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
    spec.output_map = [c](const Eigen::VectorXd& x) { return c.dot(x); };
    return spec;
}

/// Lorenz system with output tanh((x1*x2 - 5*x3)/10).
inline SystemSpec lorenz_system(double alpha, double rho, double beta) {
    SystemSpec spec;
    spec.dimension = 3;
    spec.vector_field = [alpha, rho, beta](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd d(3);
        d[0] = alpha * (x[1] - x[0]);
        d[1] = x[0] * (rho - x[2]) - x[1];
        d[2] = x[0] * x[1] - beta * x[2];
        return d;
    };
    spec.output_map = [](const Eigen::VectorXd& x) {
        return std::tanh((x[0] * x[1] - 5.0 * x[2]) / 10.0);
    };
    return spec;
}

struct CircleRegion { double radius = 1.0; };
struct BoxRegion { std::vector<std::pair<double, double>> bounds; };
using SamplingRegion = std::variant<CircleRegion, BoxRegion>;

namespace detail {

/// Uniform double in [0,1) from the top 53 bits of a mt19937_64 draw. The
/// generator's output sequence is pinned by the C++ standard, so samples are
/// reproducible bit-for-bit across platforms (std::uniform_real_distribution
/// is not, which is why it is avoided here).
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace detail

/// Seeded sampling of initial conditions: circle mode draws a uniform angle
/// on a radius-r circle (2D only); box mode draws each coordinate uniformly
/// in its interval. A pure function of (region, count, seed).
inline std::vector<Eigen::VectorXd> sample_initial_conditions(const SamplingRegion& region,
                                                              int count, std::uint64_t seed,
                                                              int dimension) {
    if (count < 1) throw Error("sample_initial_conditions: count must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Eigen::VectorXd> points;
    points.reserve(static_cast<size_t>(count));

    if (const auto* circle = std::get_if<CircleRegion>(&region)) {
        if (dimension != 2)
            throw UnsupportedDimension("sample_initial_conditions: circle region is 2D only");
        if (!(circle->radius > 0.0)) throw Error("sample_initial_conditions: radius must be positive");
        for (int k = 0; k < count; ++k) {
            const double angle = 2.0 * std::numbers::pi * detail::uniform01(rng);
            Eigen::VectorXd x(2);
            x << circle->radius * std::cos(angle), circle->radius * std::sin(angle);
            points.push_back(std::move(x));
        }
        return points;
    }

    const auto& box = std::get<BoxRegion>(region);
    if (static_cast<int>(box.bounds.size()) != dimension)
        throw DimensionMismatch("sample_initial_conditions: box bounds do not match dimension");
    for (const auto& [lo, hi] : box.bounds)
        if (!(lo < hi)) throw Error("sample_initial_conditions: box bounds must be ordered");
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd x(dimension);
        for (int d = 0; d < dimension; ++d) {
            const auto& [lo, hi] = box.bounds[static_cast<size_t>(d)];
            x[d] = lo + (hi - lo) * detail::uniform01(rng);
        }
        points.push_back(std::move(x));
    }
    return points;
}

/// Integrates one trajectory per initial condition; all share dt and length.
inline OutputEnsemble simulate_ensemble(const SystemSpec& system,
                                        const std::vector<Eigen::VectorXd>& initial_conditions,
                                        double dt, int steps) {
    OutputEnsemble ensemble;
    ensemble.dt = dt;
    ensemble.initial_conditions = initial_conditions;
    ensemble.trajectories.reserve(initial_conditions.size());
    for (const auto& x0 : initial_conditions)
        ensemble.trajectories.push_back(integrate_rk4(system, x0, dt, steps));
    return ensemble;
}

/// Ground-truth resolvent field of an LTI system: c^T (sI - A)^{-1} x via a
/// dense complex solve. Throws when sI - A is numerically singular.
inline std::complex<double> analytic_lti_resolvent(const Eigen::MatrixXd& a,
                                                   const Eigen::VectorXd& c,
                                                   std::complex<double> s,
                                                   const Eigen::VectorXd& x) {
    if (a.rows() != a.cols() || c.size() != a.rows() || x.size() != a.rows())
        throw DimensionMismatch("analytic_lti_resolvent: inconsistent dimensions");
    const auto n = a.rows();
    Eigen::MatrixXcd m = -a.cast<std::complex<double>>();
    m.diagonal().array() += s;

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(n - 1);
    if (!(smin > smax * 1e-13))
        throw SingularResolvent("analytic_lti_resolvent: sI - A is numerically singular");

    const Eigen::VectorXcd z = m.partialPivLu().solve(x.cast<std::complex<double>>());
    return c.cast<std::complex<double>>().dot(z);  // dot conjugates, but c is real
}

} // namespace cwdmd::dynsys

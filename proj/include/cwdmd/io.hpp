#pragma once

#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cwdmd/dynsys.hpp"
#include "cwdmd/edmd.hpp"
#include "cwdmd/errors.hpp"
#include "cwdmd/observables.hpp"
#include "cwdmd/wavelet.hpp"

namespace cwdmd::io {

/// All floating-point output carries 17 significant digits, enough to
/// round-trip an IEEE double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io: cannot open for writing: " + path);
    return out;
}

inline void write_row(std::ofstream& out, const std::vector<double>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << format_double(row[i]);
    }
    out << '\n';
}

} // namespace detail

/// Header t,x1,...,xn,y; one row per sample.
inline void write_trajectory_csv(const std::string& path, const dynsys::TrajectoryGrid& traj) {
    auto out = detail::open_out(path);
    const auto n = traj.states.empty() ? 0 : traj.states.front().size();
    out << "t";
    for (Eigen::Index d = 0; d < n; ++d) out << ",x" << (d + 1);
    out << ",y\n";
    for (size_t i = 0; i < traj.states.size(); ++i) {
        std::vector<double> row;
        row.reserve(static_cast<size_t>(n) + 2);
        row.push_back(static_cast<double>(i) * traj.dt);
        for (Eigen::Index d = 0; d < n; ++d) row.push_back(traj.states[i](d));
        row.push_back(traj.outputs[i]);
        detail::write_row(out, row);
    }
}

/// One row per (scale, shift): sigma,tau,re,im.
inline void write_cwt_grid_csv(const std::string& path, const wavelet::CwtGrid& grid) {
    auto out = detail::open_out(path);
    out << "sigma,tau,re,im\n";
    for (Eigen::Index j = 0; j < grid.coefficients.rows(); ++j)
        for (Eigen::Index i = 0; i < grid.coefficients.cols(); ++i) {
            const auto c = grid.coefficients(j, i);
            detail::write_row(out, {grid.scales[static_cast<size_t>(j)],
                                    static_cast<double>(i) * grid.dt, c.real(), c.imag()});
        }
}

/// One matrix per file; columns are the named observables re_s{j}, im_s{j},
/// mean, rows are data snapshots.
inline void write_observable_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix,
                                        int j_max) {
    if (matrix.rows() != 2 * static_cast<Eigen::Index>(j_max) + 1)
        throw ShapeMismatch("write_observable_matrix_csv: row count does not match j_max");
    auto out = detail::open_out(path);
    for (int j = 1; j <= j_max; ++j) {
        if (j > 1) out << ',';
        out << "re_s" << j << ",im_s" << j;
    }
    out << ",mean\n";
    for (Eigen::Index col = 0; col < matrix.cols(); ++col) {
        std::vector<double> row(static_cast<size_t>(matrix.rows()));
        for (Eigen::Index r = 0; r < matrix.rows(); ++r)
            row[static_cast<size_t>(r)] = matrix(r, col);
        detail::write_row(out, row);
    }
}

/// re_mu,im_mu,re_lambda,im_lambda,flag — flag 0 is a regular mode, bit 1
/// marks spurious-zero modes, bit 2 marks Nyquist-aliased imaginary parts.
inline void write_spectrum_csv(const std::string& path, const edmd::SpectralDecomposition& spec) {
    auto out = detail::open_out(path);
    out << "re_mu,im_mu,re_lambda,im_lambda,flag\n";
    for (Eigen::Index m = 0; m < spec.discrete_eigenvalues.size(); ++m) {
        const auto mu = spec.discrete_eigenvalues(m);
        const auto lambda = spec.continuous_eigenvalues(m);
        out << format_double(mu.real()) << ',' << format_double(mu.imag()) << ','
            << format_double(lambda.real()) << ',' << format_double(lambda.imag()) << ','
            << spec.flags[static_cast<size_t>(m)] << '\n';
    }
}

/// x1,...,xn,magnitude,argument,re,im — one row per sampled point.
inline void write_field_csv(const std::string& path, const edmd::ComplexField& field) {
    auto out = detail::open_out(path);
    const auto n = field.points.empty() ? 0 : field.points.front().size();
    for (Eigen::Index d = 0; d < n; ++d) out << 'x' << (d + 1) << ',';
    out << "magnitude,argument,re,im\n";
    for (size_t p = 0; p < field.points.size(); ++p) {
        std::vector<double> row;
        row.reserve(static_cast<size_t>(n) + 4);
        for (Eigen::Index d = 0; d < n; ++d) row.push_back(field.points[p](d));
        const auto v = field.values(static_cast<Eigen::Index>(p));
        row.push_back(std::abs(v));
        row.push_back(std::arg(v));
        row.push_back(v.real());
        row.push_back(v.imag());
        detail::write_row(out, row);
    }
}

/// Bode-style sweep: re_s,im_s,magnitude.
struct SweepPoint {
    std::complex<double> s;
    double magnitude = 0.0;
};

inline void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& sweep) {
    auto out = detail::open_out(path);
    out << "re_s,im_s,magnitude\n";
    for (const auto& pt : sweep)
        detail::write_row(out, {pt.s.real(), pt.s.imag(), pt.magnitude});
}

/// Minimal CSV reader used for parse-back verification and tests.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io: cannot open for reading: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error("io: empty file: " + path);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            // strtod instead of stod: subnormal cells (tiny spurious
            // eigenvalues) set ERANGE, which stod turns into an exception
            const char* begin = cell.c_str();
            char* end = nullptr;
            const double value = std::strtod(begin, &end);
            if (end == begin) throw Error("io: non-numeric cell in " + path);
            row.push_back(value);
        }
        if (row.size() != table.header.size())
            throw Error("io: ragged row in " + path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace cwdmd::io

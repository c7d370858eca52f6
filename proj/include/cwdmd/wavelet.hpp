#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "cwdmd/errors.hpp"

namespace cwdmd::wavelet {

using std::complex;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2Pi = 2.5066282746310005024;

/// Single scalar normalization of the FFT-based transform. It absorbs the
/// DFT/quadrature prefactors so that cwt_fft agrees in value with the
/// trapezoid oracle cwt_direct (unitary Fourier convention, L1-normalized
/// wavelet). Fixed once against the oracle on a band-limited calibration
/// signal; see tests/test_wavelet.cpp.
inline constexpr double kCwtFftNormalization = kSqrt2Pi;

enum class WaveletFamily { ModulatedGaussian, Morlet };

/// Analyzing wavelet: a modulated Gaussian exp(i*w0*t)*exp(-t^2/2) or the
/// zero-mean complex Morlet (exp(i*w0*t) - kappa)*exp(-t^2/2) with
/// kappa = exp(-w0^2/2). kappa is stored at construction and reused.
struct WaveletKind {
    WaveletFamily family = WaveletFamily::Morlet;
    double omega0 = 6.0;
    double kappa = 0.0;

    static WaveletKind modulated_gaussian(double omega0) {
        return {WaveletFamily::ModulatedGaussian, omega0, std::exp(-0.5 * omega0 * omega0)};
    }
    static WaveletKind morlet(double omega0) {
        return {WaveletFamily::Morlet, omega0, std::exp(-0.5 * omega0 * omega0)};
    }
};

/// Uniformly sampled real signal; samples[i] is taken at t = i*dt.
struct Signal {
    double dt = 1.0;
    std::vector<double> samples;
};

/// Complex wavelet coefficients over (scale, shift). Scales are expressed in
/// units of the sampling interval; the shift grid is tau_i = i*dt. Row j of
/// the coefficient matrix holds the transform at scales[j].
struct CwtGrid {
    double dt = 1.0;
    std::vector<double> scales;
    Eigen::MatrixXcd coefficients;  // scales.size() x samples.size()
};

/// Time-domain wavelet value.
inline complex<double> wavelet_time(const WaveletKind& kind, double t) {
    const double envelope = std::exp(-0.5 * t * t);
    const complex<double> carrier = std::polar(1.0, kind.omega0 * t);
    if (kind.family == WaveletFamily::Morlet)
        return (carrier - kind.kappa) * envelope;
    return carrier * envelope;
}

/// Fourier-domain wavelet value under the unitary transform convention
/// (1/sqrt(2*pi)) * integral Gamma(t) exp(-i*w*t) dt. Real-valued for both
/// families, returned as complex for uniformity.
inline complex<double> wavelet_fourier(const WaveletKind& kind, double omega) {
    const double d = omega - kind.omega0;
    const double main = std::exp(-0.5 * d * d);
    if (kind.family == WaveletFamily::Morlet)
        return {main - kind.kappa * std::exp(-0.5 * omega * omega), 0.0};
    return {main, 0.0};
}

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw Error(msg);
}

/// FFTW c2c plan pair of a fixed length with owned aligned buffers.
class FftPlan {
public:
    explicit FftPlan(int n) : n_(n) {
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    int size() const { return n_; }
    complex<double>* buffer() { return reinterpret_cast<complex<double>*>(buf_); }
    void forward() { fftw_execute(fwd_); }
    void backward() { fftw_execute(bwd_); }  // unnormalized

private:
    int n_;
    fftw_complex* buf_;
    fftw_plan fwd_, bwd_;
};

/// Standard DFT angular frequency of bin i for length n (negative half
/// mapped to (-pi, 0)).
inline double dft_angular_frequency(int i, int n) {
    const int k = (2 * i <= n) ? i : i - n;
    return 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
}

} // namespace detail

/// Trapezoid-rule wavelet transform at a single (scale, shift); the signal is
/// treated as zero outside its sampled window. Slow reference oracle for
/// cwt_fft. sigma is in sample units and may be negative; tau is in time
/// units and need not lie on the sample grid.
inline complex<double> cwt_direct(const Signal& signal, const WaveletKind& kind,
                                  double sigma, double tau) {
    if (sigma == 0.0) throw ZeroScale("cwt_direct: sigma must be nonzero");
    if (signal.samples.size() < 2) throw SignalTooShort("cwt_direct: need at least 2 samples");
    const auto n = static_cast<Eigen::Index>(signal.samples.size());
    const double tau_s = tau / signal.dt;
    const double inv_abs_sigma = 1.0 / std::abs(sigma);
    complex<double> acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        const double u = (static_cast<double>(i) - tau_s) / sigma;
        acc += w * signal.samples[static_cast<size_t>(i)] * std::conj(wavelet_time(kind, u));
    }
    return acc * inv_abs_sigma;
}

/// FFT-based wavelet transform over a set of scales (sample units). The DFT
/// treats the signal as periodic; coefficients near the window edges are
/// contaminated and downstream consumers trim them. Bin i of the spectrum is
/// scaled by conj(Gamma_hat(sigma_j * theta_i)) per scale and inverse
/// transformed. normalization_scale is a diagnostic hook (default 1) used by
/// the property suite to verify the oracle-equivalence check is sensitive.
inline CwtGrid cwt_fft(const Signal& signal, const std::vector<double>& scales,
                       const WaveletKind& kind, double normalization_scale = 1.0) {
    if (scales.empty()) throw EmptyScales("cwt_fft: no scales given");
    for (double s : scales)
        if (!(s > 0.0)) throw ZeroScale("cwt_fft: scales must be positive");
    const auto m = static_cast<int>(signal.samples.size());
    if (m < 2) throw SignalTooShort("cwt_fft: need at least 2 samples");

    detail::FftPlan plan(m);
    std::vector<complex<double>> spectrum(static_cast<size_t>(m));
    {
        auto* buf = plan.buffer();
        for (int i = 0; i < m; ++i) buf[i] = signal.samples[static_cast<size_t>(i)];
        plan.forward();
        for (int i = 0; i < m; ++i) spectrum[static_cast<size_t>(i)] = buf[i];
    }

    CwtGrid grid;
    grid.dt = signal.dt;
    grid.scales = scales;
    grid.coefficients.resize(static_cast<Eigen::Index>(scales.size()), m);

    const double norm = kCwtFftNormalization * normalization_scale / static_cast<double>(m);
    for (size_t j = 0; j < scales.size(); ++j) {
        auto* buf = plan.buffer();
        for (int i = 0; i < m; ++i) {
            const double theta = detail::dft_angular_frequency(i, m);
            buf[i] = spectrum[static_cast<size_t>(i)] *
                     std::conj(wavelet_fourier(kind, scales[j] * theta));
        }
        plan.backward();
        for (int i = 0; i < m; ++i)
            grid.coefficients(static_cast<Eigen::Index>(j), i) = buf[i] * norm;
    }
    return grid;
}

/// Admissibility constant C_Gamma = 2*pi * integral |Gamma_hat(theta)|^2 / |theta| d(theta),
/// by composite Simpson quadrature over |theta| in [1e-8, omega0 + 12]; the
/// integrand is below 1e-30 outside that range. Only zero-mean wavelets are
/// admissible: the modulated Gaussian has Gamma_hat(0) != 0 and the integral
/// diverges logarithmically.
inline double admissibility_constant(const WaveletKind& kind, int quad_points,
                                     double truncation_radius = -1.0) {
    if (kind.family != WaveletFamily::Morlet)
        throw NotAdmissible("admissibility_constant: wavelet does not have zero mean");
    detail::require(quad_points >= 100, "admissibility_constant: quad_points must be >= 100");

    const double lo = 1e-8;
    const double hi = truncation_radius > 0.0 ? truncation_radius : kind.omega0 + 12.0;
    const int n = quad_points + (quad_points % 2);  // Simpson needs an even count
    const double h = (hi - lo) / n;

    auto integrand = [&](double theta) {
        const double gp = wavelet_fourier(kind, theta).real();
        const double gm = wavelet_fourier(kind, -theta).real();
        return (gp * gp + gm * gm) / theta;
    };
    double sum = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i)
        sum += integrand(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
    return 2.0 * kPi * sum * h / 3.0;
}

/// Midpoint weights in log(sigma) for the measure d(sigma)/|sigma| on a
/// log-spaced grid; constant log(2)/C when sigma_j = 2^(j/C).
inline std::vector<double> log_scale_weights(const std::vector<double>& scales) {
    if (scales.size() < 2)
        throw EmptyScales("log_scale_weights: need at least two scales");
    const size_t j_max = scales.size();
    std::vector<double> w(j_max);
    w.front() = std::log(scales[1] / scales[0]);
    w.back() = std::log(scales[j_max - 1] / scales[j_max - 2]);
    for (size_t j = 1; j + 1 < j_max; ++j)
        w[j] = 0.5 * std::log(scales[j + 1] / scales[j - 1]);
    return w;
}

/// Pointwise inverse wavelet transform
///   h(t) ~= (1/C_Gamma) * integral W[h](sigma,tau) Gamma_{sigma,tau}(t) d(tau) d(sigma)/|sigma|
/// by trapezoid in tau over the grid's shifts and midpoint-in-log(sigma) over
/// its scales. Negative scales enter through the conjugate term, which for
/// real signals equals the -sigma contribution exactly.
inline double inverse_cwt_pointwise(const CwtGrid& grid, const WaveletKind& kind,
                                    double t, double c_gamma) {
    if (kind.family != WaveletFamily::Morlet)
        throw NotAdmissible("inverse_cwt_pointwise: wavelet must be admissible");
    detail::require(c_gamma > 0.0, "inverse_cwt_pointwise: c_gamma must be positive");
    const auto m = grid.coefficients.cols();
    const double t_s = t / grid.dt;
    if (t_s < 0.0 || t_s > static_cast<double>(m - 1))
        throw OutOfWindow("inverse_cwt_pointwise: t outside the sampled window");

    const std::vector<double> scale_w = log_scale_weights(grid.scales);
    double acc = 0.0;
    for (size_t j = 0; j < grid.scales.size(); ++j) {
        const double sigma = grid.scales[j];
        complex<double> shift_sum{0.0, 0.0};
        for (Eigen::Index i = 0; i < m; ++i) {
            const double w = (i == 0 || i == m - 1) ? 0.5 : 1.0;
            const double u = (t_s - static_cast<double>(i)) / sigma;
            shift_sum += w * grid.coefficients(static_cast<Eigen::Index>(j), i) *
                         wavelet_time(kind, u);
        }
        // both scale signs: conjugate pair doubles the real part
        acc += scale_w[j] * 2.0 * shift_sum.real() / sigma;
    }
    return acc / c_gamma;
}

} // namespace cwdmd::wavelet

#include "ctperf/deconv.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace ctperf {

namespace {

void validate_inputs(const CtpSeries& series, const Curve& aif, double lambda_rel,
                     int pad_factor) {
    validate_curve(aif);
    if (!(series.grid == aif.grid))
        throw std::invalid_argument("deconvolve: series grid does not match AIF grid");
    if (!(lambda_rel >= 0.0 && lambda_rel < 1.0))
        throw std::invalid_argument("deconvolve: lambda_rel must lie in [0, 1), got " +
                                    std::to_string(lambda_rel));
    if (pad_factor < 2)
        throw std::invalid_argument("deconvolve: pad_factor must be >= 2");
    const auto [lo, hi] = std::minmax_element(aif.samples.begin(), aif.samples.end());
    if (!(*hi > 0.0) || *hi == *lo)
        throw std::invalid_argument("deconvolve: flat AIF has no usable spectrum");
}

IrfMap deconvolve_ssvd(const CtpSeries& series, const Curve& aif, double lambda_rel) {
    const int n = series.grid.n_samples;
    const double dt = series.grid.dt;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) A(i, j) = aif.samples[i - j] * dt;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& S = svd.singularValues();
    Eigen::VectorXd Sinv = Eigen::VectorXd::Zero(n);
    const double smax = S(0);
    for (int i = 0; i < n; ++i)
        if (S(i) >= lambda_rel * smax && S(i) > 0.0) Sinv(i) = 1.0 / S(i);

    // truncated pseudo-inverse, applied to every voxel curve
    const Eigen::MatrixXd P = svd.matrixV() * Sinv.asDiagonal() * svd.matrixU().transpose();

    IrfMap irf;
    irf.grid = series.grid;
    irf.method = DeconvMethod::ssvd;
    irf.lambda_rel = lambda_rel;
    irf.data = Volume4<double>(series.data.shape, n, 0.0);

    const std::size_t nvox = series.data.voxels();
    Eigen::VectorXd tcc(n), sol(n);
    for (std::size_t v = 0; v < nvox; ++v) {
        for (int t = 0; t < n; ++t)
            tcc(t) = series.data.data[static_cast<std::size_t>(t) * nvox + v];
        sol.noalias() = P * tcc;
        for (int t = 0; t < n; ++t)
            irf.data.data[static_cast<std::size_t>(t) * nvox + v] = sol(t);
    }
    return irf;
}

IrfMap deconvolve_csvd(const CtpSeries& series, const Curve& aif, double lambda_rel,
                       int pad_factor) {
    const int n = series.grid.n_samples;
    const int N = pad_factor * n;
    const double dt = series.grid.dt;
    using cplx = std::complex<double>;

    Eigen::FFT<double> fft;
    std::vector<cplx> buf(N, cplx(0.0, 0.0)), freq(N);
    for (int k = 0; k < n; ++k) buf[k] = aif.samples[k];
    fft.fwd(freq, buf);

    // Fourier coefficients of the circulant operator; their magnitudes are
    // its singular values, so the truncation rule applies to |lambda_k|.
    double amax = 0.0;
    for (const cplx& l : freq) amax = std::max(amax, std::abs(dt * l));
    std::vector<cplx> gain(N, cplx(0.0, 0.0));
    for (int k = 0; k < N; ++k) {
        const cplx lk = dt * freq[k];
        const double mag = std::abs(lk);
        if (mag >= lambda_rel * amax && mag > 0.0) gain[k] = 1.0 / lk;
    }

    IrfMap irf;
    irf.grid = TimeGrid{series.grid.t_start, dt, N};
    irf.method = DeconvMethod::csvd;
    irf.lambda_rel = lambda_rel;
    irf.data = Volume4<double>(series.data.shape, N, 0.0);

    const std::size_t nvox = series.data.voxels();
    std::vector<cplx> sol(N);
    for (std::size_t v = 0; v < nvox; ++v) {
        std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
        for (int t = 0; t < n; ++t)
            buf[t] = series.data.data[static_cast<std::size_t>(t) * nvox + v];
        fft.fwd(freq, buf);
        for (int k = 0; k < N; ++k) freq[k] *= gain[k];
        fft.inv(sol, freq);
        for (int t = 0; t < N; ++t)
            irf.data.data[static_cast<std::size_t>(t) * nvox + v] = sol[t].real();
    }
    return irf;
}

// score one candidate curve; nullopt = not a plausible AIF (flat, no mass,
// or degenerate width)
std::optional<double> aif_score(const std::vector<double>& s, const TimeGrid& grid) {
    const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
    const double peak = *hi_it;
    if (!(peak > 0.0) || peak == *lo_it) return std::nullopt;

    double mass = 0.0, moment = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double w = std::max(s[k], 0.0);  // negative samples carry no mass
        mass += w;
        moment += w * (k * grid.dt);
    }
    if (!(mass > 0.0)) return std::nullopt;
    const double first_moment = moment / mass;

    // FWHM via linear interpolation around the first/last half-max crossings
    const double half = 0.5 * peak;
    const int n = static_cast<int>(s.size());
    int i = 0;
    while (s[i] < half) ++i;  // terminates: the peak itself is >= half
    double t_rise = i * grid.dt;
    if (i > 0) t_rise = (i - 1) * grid.dt + grid.dt * (half - s[i - 1]) / (s[i] - s[i - 1]);
    int j = n - 1;
    while (s[j] < half) --j;
    double t_fall = j * grid.dt;
    if (j < n - 1) t_fall = j * grid.dt + grid.dt * (s[j] - half) / (s[j] - s[j + 1]);

    const double fwhm = t_fall - t_rise;
    if (!(fwhm > 0.0) || !(first_moment > 0.0)) return std::nullopt;
    return peak / (first_moment * fwhm);
}

}  // namespace

std::string to_string(DeconvMethod method) {
    return method == DeconvMethod::ssvd ? "ssvd" : "csvd";
}

DeconvMethod parse_method(const std::string& text) {
    if (text == "ssvd") return DeconvMethod::ssvd;
    if (text == "csvd") return DeconvMethod::csvd;
    throw std::invalid_argument("method: '" + text + "' is not one of ssvd, csvd");
}

IrfMap deconvolve(const CtpSeries& series, const Curve& aif, DeconvMethod method,
                  double lambda_rel, int pad_factor) {
    validate_inputs(series, aif, lambda_rel, pad_factor);
    return method == DeconvMethod::ssvd ? deconvolve_ssvd(series, aif, lambda_rel)
                                        : deconvolve_csvd(series, aif, lambda_rel, pad_factor);
}

Curve pad_curve(const Curve& curve, int factor) {
    validate_curve(curve);
    if (factor < 2) throw std::invalid_argument("pad_curve: factor must be >= 2");
    Curve out = curve;
    out.grid.n_samples = factor * curve.grid.n_samples;
    out.samples.resize(out.grid.n_samples, 0.0);
    return out;
}

Curve select_aif(const CtpSeries& series, const Mask3* candidate_mask) {
    if (series.data.empty()) throw std::invalid_argument("select_aif: empty series");
    const std::size_t nvox = series.data.voxels();
    if (candidate_mask) {
        if (candidate_mask->shape != series.data.shape)
            throw std::invalid_argument("select_aif: mask shape does not match series");
        if (std::all_of(candidate_mask->data.begin(), candidate_mask->data.end(),
                        [](std::uint8_t m) { return m == 0; }))
            throw std::invalid_argument("select_aif: empty candidate mask");
    }

    const int n = series.grid.n_samples;
    std::vector<double> curve(n);
    double best_score = 0.0;
    std::size_t best_voxel = 0;
    bool found = false;
    for (std::size_t v = 0; v < nvox; ++v) {
        if (candidate_mask && candidate_mask->data[v] == 0) continue;
        for (int t = 0; t < n; ++t)
            curve[t] = series.data.data[static_cast<std::size_t>(t) * nvox + v];
        const auto score = aif_score(curve, series.grid);
        if (!score) continue;
        if (!found || *score > best_score) {  // strict >: earlier voxel wins ties
            best_score = *score;
            best_voxel = v;
            found = true;
        }
    }
    if (!found)
        throw std::invalid_argument("select_aif: all candidate curves are flat");

    Curve out;
    out.grid = series.grid;
    out.samples.resize(n);
    for (int t = 0; t < n; ++t)
        out.samples[t] = series.data.data[static_cast<std::size_t>(t) * nvox + best_voxel];
    return out;
}

}  // namespace ctperf

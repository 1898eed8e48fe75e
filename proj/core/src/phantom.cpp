#include "ctperf/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ctperf {

namespace {

constexpr double kBrainSemiAxisScale = 0.45;  // of each half-extent
constexpr double kWhiteInnerScale = 0.62;     // white/gray ellipsoid ratio
constexpr double kCbfUnitDivisor = 6000.0;    // ml/100g/min -> 1/s

// Cumulative integral of the piecewise-linear interpolant of a sampled
// curve; the interpolant is zero outside the sampled window.
class PwCum {
  public:
    explicit PwCum(const Curve& c)
        : t0_(c.grid.t_start), dt_(c.grid.dt), s_(c.samples) {
        node_.resize(s_.size(), 0.0);
        for (std::size_t k = 1; k < s_.size(); ++k)
            node_[k] = node_[k - 1] + 0.5 * (s_[k - 1] + s_[k]) * dt_;
    }

    double operator()(double tau) const {
        const double rel = (tau - t0_) / dt_;
        if (rel <= 0.0) return 0.0;
        if (rel >= static_cast<double>(s_.size() - 1)) return node_.back();
        const int k = static_cast<int>(rel);
        const double frac = tau - (t0_ + k * dt_);
        const double slope = (s_[k + 1] - s_[k]) / dt_;
        return node_[k] + s_[k] * frac + 0.5 * slope * frac * frac;
    }

  private:
    double t0_, dt_;
    std::vector<double> s_;
    std::vector<double> node_;
};

// integral over one linear segment (a1 at the left edge, a2 at the right,
// width h) against exp(-(h-x)/m): closed form of int_0^h A(x)e^{-(h-x)/m}dx
double exp_cell(double a1, double a2, double h, double m) {
    const double em = std::exp(-h / m);
    return a1 * m * (1.0 - em) + (a2 - a1) / h * m * (h - m * (1.0 - em));
}

// G(tau) = int_{-inf}^{tau} A(u) exp(-(tau-u)/m) du for the interpolant A
double exp_conv(const Curve& aif, double tau, double m) {
    const double t0 = aif.grid.t_start;
    const double dt = aif.grid.dt;
    const auto& s = aif.samples;
    const int n = static_cast<int>(s.size());
    const double rel = (tau - t0) / dt;
    if (rel <= 0.0) return 0.0;

    const int full = std::min(static_cast<int>(rel), n - 1);
    const double decay = std::exp(-dt / m);
    double g = 0.0;
    for (int j = 0; j < full; ++j)
        g = g * decay + exp_cell(s[j], s[j + 1], dt, m);

    if (rel < static_cast<double>(n - 1)) {
        const double h = tau - (t0 + full * dt);
        if (h > 0.0) {
            const double slope = (s[full + 1] - s[full]) / dt;
            g = g * std::exp(-h / m) + exp_cell(s[full], s[full] + slope * h, h, m);
        }
    } else {
        g *= std::exp(-(tau - (t0 + (n - 1) * dt)) / m);
    }
    return g;
}

std::vector<double> label_tcc(const HemoParams& p, const Curve& aif, const TimeGrid& grid) {
    std::vector<double> out(grid.n_samples, 0.0);
    if (p.cbf <= 0.0) return out;  // zero flow, zero signal

    const double mtt = p.mtt();
    const double scale = p.cbf / kCbfUnitDivisor;
    if (p.residue_shape == ResidueShape::boxcar) {
        const PwCum cum(aif);
        for (int k = 0; k < grid.n_samples; ++k) {
            const double tau = grid.time(k) - p.delay;
            out[k] = scale * (cum(tau) - cum(tau - mtt));
        }
    } else {
        for (int k = 0; k < grid.n_samples; ++k) {
            const double tau = grid.time(k) - p.delay;
            out[k] = scale * exp_conv(aif, tau, mtt);
        }
    }
    return out;
}

bool inside_ellipsoid(int x, int y, int z, const Vec3& center, const Vec3& semi) {
    const double dx = (x - center[0]) / semi[0];
    const double dy = (y - center[1]) / semi[1];
    const double dz = (z - center[2]) / semi[2];
    return dx * dx + dy * dy + dz * dz <= 1.0;
}

void validate_params_entry(Label label, const HemoParams& p) {
    const std::string name = "label " + std::to_string(static_cast<int>(label));
    if (p.cbf < 0.0) throw std::invalid_argument(name + ": cbf must be >= 0");
    if (p.cbv < 0.0) throw std::invalid_argument(name + ": cbv must be >= 0");
    if (p.delay < 0.0) throw std::invalid_argument(name + ": delay must be >= 0");
    if (p.cbf > 0.0 && !(p.cbv > 0.0))
        throw std::invalid_argument(name + ": cbf > 0 requires cbv > 0 (mtt would be 0)");
}

}  // namespace

double HemoParams::mtt() const {
    if (!(cbf > 0.0)) throw std::invalid_argument("mtt undefined: cbf must be > 0");
    return 60.0 * cbv / cbf;
}

GroundTruthPhantom make_phantom(Shape3 shape, const std::optional<LesionSpec>& lesion,
                                const std::map<Label, HemoParams>& params, Vec3 voxel_size) {
    for (int i = 0; i < 3; ++i) {
        if (shape[i] < 8)
            throw std::invalid_argument("phantom shape components must be >= 8, got " +
                                        std::to_string(shape[i]));
        if (!(voxel_size[i] > 0.0))
            throw std::invalid_argument("voxel_size components must be > 0");
    }

    const Vec3 center{(shape[0] - 1) / 2.0, (shape[1] - 1) / 2.0, (shape[2] - 1) / 2.0};
    const Vec3 brain_semi{kBrainSemiAxisScale * (shape[0] - 1),
                          kBrainSemiAxisScale * (shape[1] - 1),
                          kBrainSemiAxisScale * (shape[2] - 1)};
    const Vec3 white_semi{kWhiteInnerScale * brain_semi[0], kWhiteInnerScale * brain_semi[1],
                          kWhiteInnerScale * brain_semi[2]};

    GroundTruthPhantom phantom;
    phantom.labels = Volume3<std::uint8_t>(shape, static_cast<std::uint8_t>(Label::background));
    phantom.voxel_size = voxel_size;

    for (int z = 0; z < shape[2]; ++z)
        for (int y = 0; y < shape[1]; ++y)
            for (int x = 0; x < shape[0]; ++x) {
                if (!inside_ellipsoid(x, y, z, center, brain_semi)) continue;
                phantom.labels.at(x, y, z) = static_cast<std::uint8_t>(
                    inside_ellipsoid(x, y, z, center, white_semi) ? Label::white : Label::gray);
            }

    bool has_lesion = false;
    if (lesion && (lesion->core_radius > 0.0 || lesion->penumbra_radius > 0.0)) {
        has_lesion = true;
        if (!(lesion->core_radius > 0.0) || !(lesion->core_radius < lesion->penumbra_radius))
            throw std::invalid_argument(
                "lesion: need 0 < core_radius < penumbra_radius, got core " +
                std::to_string(lesion->core_radius) + " penumbra " +
                std::to_string(lesion->penumbra_radius));

        const double rp = lesion->penumbra_radius;
        const double rc = lesion->core_radius;
        for (int z = 0; z < shape[2]; ++z)
            for (int y = 0; y < shape[1]; ++y)
                for (int x = 0; x < shape[0]; ++x) {
                    const double dx = x - lesion->center[0];
                    const double dy = y - lesion->center[1];
                    const double dz = z - lesion->center[2];
                    const double d2 = dx * dx + dy * dy + dz * dz;
                    if (d2 > rp * rp) continue;
                    if (phantom.labels.at(x, y, z) ==
                        static_cast<std::uint8_t>(Label::background))
                        throw std::invalid_argument(
                            "lesion does not fit inside the brain tissue (penumbra sphere "
                            "reaches background at voxel " + std::to_string(x) + "," +
                            std::to_string(y) + "," + std::to_string(z) + ")");
                    phantom.labels.at(x, y, z) = static_cast<std::uint8_t>(
                        d2 <= rc * rc ? Label::core : Label::penumbra);
                }
    }

    const Label required_any[] = {Label::white, Label::gray};
    for (Label l : required_any)
        if (!params.count(l))
            throw std::invalid_argument("params missing entry for tissue label " +
                                        std::to_string(static_cast<int>(l)));
    if (has_lesion)
        for (Label l : {Label::penumbra, Label::core})
            if (!params.count(l))
                throw std::invalid_argument("params missing entry for lesion label " +
                                            std::to_string(static_cast<int>(l)));
    for (const auto& [label, p] : params) validate_params_entry(label, p);

    phantom.params_per_label = params;
    return phantom;
}

Curve gamma_variate_aif(double t0, double alpha, double beta, double amplitude,
                        const TimeGrid& grid) {
    validate_grid(grid);
    if (!(alpha > 0.0) || !(beta > 0.0) || !(amplitude > 0.0))
        throw std::invalid_argument("gamma AIF: alpha, beta and amplitude must be > 0");
    if (t0 < grid.t_start)
        throw std::invalid_argument("gamma AIF: t0 must be >= grid.t_start");

    const double peak_offset = alpha * beta;
    Curve c;
    c.grid = grid;
    c.samples.resize(grid.n_samples, 0.0);
    for (int k = 0; k < grid.n_samples; ++k) {
        const double u = (grid.time(k) - t0) / peak_offset;
        if (u > 0.0) c.samples[k] = amplitude * std::pow(u, alpha) * std::exp(alpha * (1.0 - u));
    }
    return c;
}

Curve residue_curve(const HemoParams& params, const TimeGrid& grid) {
    validate_grid(grid);
    const double mtt = params.mtt();  // throws when cbf == 0
    if (!(mtt > 0.0)) throw std::invalid_argument("residue: mtt must be > 0");

    Curve r;
    r.grid = grid;
    r.samples.resize(grid.n_samples, 0.0);
    for (int k = 0; k < grid.n_samples; ++k) {
        const double t = k * grid.dt;  // lag axis starts at zero
        r.samples[k] = params.residue_shape == ResidueShape::boxcar
                           ? (t < mtt ? 1.0 : 0.0)
                           : std::exp(-t / mtt);
    }
    return r;
}

CtpSeries forward_model(const GroundTruthPhantom& phantom, const Curve& aif,
                        const TimeGrid& grid) {
    validate_curve(aif);
    if (!(aif.grid == grid))
        throw std::invalid_argument("forward model: AIF grid does not match the output grid");

    // every label present in the volume needs parameters
    std::array<bool, 5> seen{};
    for (std::uint8_t l : phantom.labels.data)
        if (l < seen.size()) seen[l] = true;
    std::array<std::vector<double>, 5> curve_for_label;
    for (std::size_t l = 1; l < seen.size(); ++l) {
        if (!seen[l]) continue;
        const auto it = phantom.params_per_label.find(static_cast<Label>(l));
        if (it == phantom.params_per_label.end())
            throw std::invalid_argument("forward model: no params for label " + std::to_string(l));
        curve_for_label[l] = label_tcc(it->second, aif, grid);
    }

    CtpSeries series;
    series.grid = grid;
    series.voxel_size = phantom.voxel_size;
    series.data = Volume4<double>(phantom.labels.shape, grid.n_samples, 0.0);

    const std::size_t nvox = series.data.voxels();
    for (std::size_t v = 0; v < nvox; ++v) {
        const std::uint8_t l = phantom.labels.data[v];
        if (l == 0) continue;
        const auto& tcc = curve_for_label[l];
        for (int t = 0; t < grid.n_samples; ++t)
            series.data.data[static_cast<std::size_t>(t) * nvox + v] = tcc[t];
    }
    return series;
}

CtpSeries add_noise(const CtpSeries& series, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be >= 0");
    CtpSeries out = series;
    if (sigma == 0.0) return out;

    std::mt19937_64 rng(seed);
    const auto unit = [&rng]() {  // 53-bit uniform in [0, 1)
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    constexpr double two_pi = 6.283185307179586476925286766559;

    bool have_spare = false;
    double spare = 0.0;
    for (double& x : out.data.data) {
        double z;
        if (have_spare) {
            z = spare;
            have_spare = false;
        } else {
            const double r = std::sqrt(-2.0 * std::log(1.0 - unit()));
            const double a = two_pi * unit();
            z = r * std::cos(a);
            spare = r * std::sin(a);
            have_spare = true;
        }
        x += sigma * z;
    }
    return out;
}

Mask3 brain_mask(const GroundTruthPhantom& phantom) {
    Mask3 m(phantom.labels.shape, 0);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data[i] = phantom.labels.data[i] != static_cast<std::uint8_t>(Label::background);
    return m;
}

Mask3 label_mask(const GroundTruthPhantom& phantom, Label label) {
    Mask3 m(phantom.labels.shape, 0);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data[i] = phantom.labels.data[i] == static_cast<std::uint8_t>(label);
    return m;
}

}  // namespace ctperf

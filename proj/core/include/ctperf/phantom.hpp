#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "ctperf/types.hpp"

namespace ctperf {

enum class Label : std::uint8_t {
    background = 0,
    white = 1,
    gray = 2,
    penumbra = 3,
    core = 4,
};

enum class ResidueShape { boxcar, exponential };

// Per-tissue hemodynamics. MTT is derived, never stored: mtt = 60*cbv/cbf.
struct HemoParams {
    double cbf = 0.0;    // ml/100g/min
    double cbv = 0.0;    // ml/100g
    double delay = 0.0;  // seconds
    ResidueShape residue_shape = ResidueShape::boxcar;

    double mtt() const;  // seconds; requires cbf > 0
};

// Core/penumbra geometry: concentric spheres in voxel-index space, the core
// strictly inside the penumbra. Radii of 0 mean no lesion.
struct LesionSpec {
    Vec3 center{0.0, 0.0, 0.0};    // voxel coordinates
    double core_radius = 0.0;      // voxels
    double penumbra_radius = 0.0;  // voxels
};

struct GroundTruthPhantom {
    Volume3<std::uint8_t> labels;
    std::map<Label, HemoParams> params_per_label;
    Vec3 voxel_size{2.0, 2.0, 2.0};  // mm
};

// Simulated (or measured) CTP acquisition: concentration over (x, y, z, t).
struct CtpSeries {
    Volume4<double> data;
    TimeGrid grid;
    Vec3 voxel_size{2.0, 2.0, 2.0};
};

// Brain = ellipsoid centered in the volume (semi-axes 0.45 of each extent),
// white matter inside the 0.62-scaled inner ellipsoid, gray outside it.
// Lesion spheres overwrite tissue labels and must fit inside the brain.
GroundTruthPhantom make_phantom(Shape3 shape, const std::optional<LesionSpec>& lesion,
                                const std::map<Label, HemoParams>& params,
                                Vec3 voxel_size = {2.0, 2.0, 2.0});

// c(t) = amplitude * u^alpha * exp(alpha*(1-u)), u = (t-t0)/(alpha*beta), for
// t > t0, else 0. Peak value is exactly `amplitude`, reached at t0+alpha*beta.
Curve gamma_variate_aif(double t0, double alpha, double beta, double amplitude,
                        const TimeGrid& grid);

// R(k*dt) for the label's residue family. boxcar: 1 while t < mtt, else 0;
// exponential: exp(-t/mtt). R(0)=1, non-increasing, integral mtt.
Curve residue_curve(const HemoParams& params, const TimeGrid& grid);

// TCC_v(t) = cbf_v/6000 * (AIF (*) R_v)(t - delay_v). The convolution is the
// exact integral of the AIF's piecewise-linear interpolant against the
// continuous residue, so mass conservation int(TCC)/int(AIF) = cbv/100 holds
// to quadrature accuracy for every residue family and mtt.
CtpSeries forward_model(const GroundTruthPhantom& phantom, const Curve& aif,
                        const TimeGrid& grid);

// Adds zero-mean Gaussian noise, sd sigma, independently per sample.
// Bit-reproducible for a fixed seed (own Box-Muller over mt19937_64 draws,
// no implementation-defined library distributions).
CtpSeries add_noise(const CtpSeries& series, double sigma, std::uint64_t seed);

Mask3 brain_mask(const GroundTruthPhantom& phantom);  // labels > background
Mask3 label_mask(const GroundTruthPhantom& phantom, Label label);

}  // namespace ctperf

#pragma once

#include <vector>

#include "ctperf/deconv.hpp"
#include "ctperf/types.hpp"

namespace ctperf {

/// Voxel-wise hemodynamic maps derived from one deconvolved study.
///
/// Units: cbf ml/100g/min, cbv ml/100g, mtt s, tmax s, delay_time s.
/// rcbf and rcbv are unitless ratios against the median over the
/// reference mask. mtt_valid flags voxels where cbf was large enough
/// for the ratio mtt = 60*cbv/cbf to be meaningful; elsewhere mtt is 0.
struct PerfusionMaps {
    Volume3<double> cbf;
    Volume3<double> cbv;
    Volume3<double> mtt;
    Mask3 mtt_valid;
    Volume3<double> tmax;
    Volume3<double> rcbf;
    Volume3<double> rcbv;
    Volume3<double> delay_time;
    Vec3 voxel_size{2.0, 2.0, 2.0};
};

struct MttResult {
    Volume3<double> mtt;
    Mask3 valid;
};

/// Time of the impulse-response peak per voxel. Samples within 5% of the
/// peak magnitude count as ties and the earliest one wins, so plateaus
/// produced by boxcar residues resolve to their leading edge.
Volume3<double> tmax_map(const IrfMap& irf);

/// Flow from the impulse-response peak height, scaled to ml/100g/min.
/// Negative estimates clamp to zero.
Volume3<double> cbf_map(const IrfMap& irf);

/// Blood volume from the ratio of tissue to arterial areas (trapezoid),
/// scaled to ml/100g. Negative estimates clamp to zero.
Volume3<double> cbv_map(const CtpSeries& series, const Curve& aif);

/// Central volume ratio mtt = 60*cbv/cbf in seconds. Voxels with
/// cbf <= cbf_floor get mtt = 0 and valid = 0.
MttResult mtt_map(const Volume3<double>& cbf, const Volume3<double>& cbv,
                  double cbf_floor = 0.01);

/// Map divided by its median over the reference mask (even count:
/// mean of the two middle values). Throws if the mask is empty or the
/// median is not positive.
Volume3<double> relative_map(const Volume3<double>& map, const Mask3& reference_mask);

/// Bolus arrival: time of the first sample exceeding 5% of the peak.
double aif_arrival_time(const Curve& aif);

/// delay = tmax - arrival. Deconvolved tmax is referenced to injection
/// rather than to the arterial bolus, so values are routinely negative.
Volume3<double> delay_time_map(const Volume3<double>& tmax, double aif_arrival);

/// All maps from one study. The reference mask defines the normal-tissue
/// median for rcbf/rcbv.
PerfusionMaps compute_maps(const CtpSeries& series, const Curve& aif, const IrfMap& irf,
                           const Mask3& reference_mask);

}  // namespace ctperf

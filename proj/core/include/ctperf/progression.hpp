#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ctperf/triage.hpp"
#include "ctperf/types.hpp"

namespace ctperf {

/// Voxel survival budget as a function of CBF: immortal at or above
/// cbf_upper, t_lower minutes at or below cbf_lower, log-linear between.
struct SurvivalModel {
    double cbf_upper = 15.0;  // ml/100g/min
    double cbf_lower = 10.0;
    double t_lower = 30.0;  // minutes
    double t_upper = 150.0;
};

void validate_model(const SurvivalModel& model);

/// Minutes a voxel at the given CBF survives; +inf for cbf >= cbf_upper.
/// Finite as cbf approaches cbf_upper from below, then jumps to +inf.
double survival_time(double cbf, const SurvivalModel& model = {});

std::map<Mtici, double> default_reperfusion_fractions();

/// Recanalization at minute ttt: each surviving voxel's flow moves toward
/// its normal value by the fraction assigned to the achieved grade.
struct TreatmentEvent {
    double ttt = 0.0;  // minutes since onset
    Mtici mtici = Mtici::grade0;
    std::map<Mtici, double> reperfusion_fraction = default_reperfusion_fractions();
};

/// Checks ttt >= 0 and that the fraction table covers every grade with
/// values in [0, 1], non-decreasing along the scale.
void validate_event(const TreatmentEvent& event);

struct ProgressionState {
    Mask3 core_mask;
    double t = 0.0;  // minutes since onset
};

/// Core at minute t. A voxel dies once its accumulated fraction of
/// survival budget reaches 1; after the event, surviving voxels age under
/// the restored flow with whatever budget fraction remains. Dead voxels
/// never recover. An event requires event.ttt <= t.
ProgressionState evolve(const Volume3<double>& cbf_map, const SurvivalModel& model, double t,
                        const std::optional<TreatmentEvent>& event,
                        const Volume3<double>& normal_cbf_map);

/// reperfused: the lesion recovers, final infarct = acute core alone;
/// otherwise the whole perfusion lesion infarcts.
Mask3 final_infarct(const Mask3& acute_core, const Mask3& acute_lesion, bool reperfused);

struct TrajectoryPoint {
    double t_min = 0.0;
    double core_ml = 0.0;
};

/// The sampling ladder 0, step, 2*step, ... with the horizon appended as
/// the final entry (a bare {0} when horizon is 0).
std::vector<double> trajectory_times(double horizon_min, double step_min);

/// Core volume sampled at 0, step, 2*step, ... up to horizon (inclusive,
/// with a final point at the horizon itself). An event must occur within
/// the horizon.
std::vector<TrajectoryPoint> progression_trajectory(
    const Volume3<double>& cbf_map, const SurvivalModel& model, double horizon_min,
    double step_min, const std::optional<TreatmentEvent>& event,
    const Volume3<double>& normal_cbf_map, Vec3 voxel_size);

}  // namespace ctperf

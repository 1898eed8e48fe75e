#include "ctperf/progression.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ctperf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// fraction of the survival budget consumed by `minutes` at flow `cbf`;
// zero for immortal voxels (duration / inf)
double damage(double minutes, double cbf, const SurvivalModel& model) {
    return minutes / survival_time(cbf, model);
}

}  // namespace

void validate_model(const SurvivalModel& model) {
    if (!(model.cbf_lower < model.cbf_upper))
        throw std::invalid_argument("survival model: cbf_lower must be below cbf_upper");
    if (!(model.t_lower > 0.0 && model.t_lower < model.t_upper))
        throw std::invalid_argument("survival model: need 0 < t_lower < t_upper");
}

double survival_time(double cbf, const SurvivalModel& model) {
    validate_model(model);
    if (!(cbf >= 0.0))
        throw std::invalid_argument("survival_time: cbf must be >= 0, got " +
                                    std::to_string(cbf));
    if (cbf >= model.cbf_upper) return kInf;
    if (cbf <= model.cbf_lower) return model.t_lower;
    const double s = (cbf - model.cbf_lower) / (model.cbf_upper - model.cbf_lower);
    return std::exp(std::log(model.t_lower) +
                    s * (std::log(model.t_upper) - std::log(model.t_lower)));
}

std::map<Mtici, double> default_reperfusion_fractions() {
    return {{Mtici::grade0, 0.0},  {Mtici::grade1, 0.1},  {Mtici::grade2a, 0.4},
            {Mtici::grade2b, 0.7}, {Mtici::grade2c, 0.9}, {Mtici::grade3, 1.0}};
}

void validate_event(const TreatmentEvent& event) {
    if (!(event.ttt >= 0.0))
        throw std::invalid_argument("treatment event: ttt must be >= 0");
    double prev = -1.0;
    for (Mtici g : {Mtici::grade0, Mtici::grade1, Mtici::grade2a, Mtici::grade2b,
                    Mtici::grade2c, Mtici::grade3}) {
        const auto it = event.reperfusion_fraction.find(g);
        if (it == event.reperfusion_fraction.end())
            throw std::invalid_argument("treatment event: no reperfusion fraction for grade " +
                                        to_string(g));
        if (!(it->second >= 0.0 && it->second <= 1.0))
            throw std::invalid_argument("treatment event: fraction for grade " + to_string(g) +
                                        " outside [0, 1]");
        if (it->second < prev)
            throw std::invalid_argument(
                "treatment event: fractions must be non-decreasing along the grade scale");
        prev = it->second;
    }
}

ProgressionState evolve(const Volume3<double>& cbf_map, const SurvivalModel& model, double t,
                        const std::optional<TreatmentEvent>& event,
                        const Volume3<double>& normal_cbf_map) {
    validate_model(model);
    if (!(t >= 0.0)) throw std::invalid_argument("evolve: t must be >= 0");
    if (cbf_map.shape != normal_cbf_map.shape)
        throw std::invalid_argument("evolve: cbf and normal-cbf shapes differ");
    double fraction = 0.0;
    if (event) {
        validate_event(*event);
        if (event->ttt > t)
            throw std::invalid_argument("evolve: event at t=" + std::to_string(event->ttt) +
                                        " min lies after the evaluation time " +
                                        std::to_string(t) + " min");
        fraction = event->reperfusion_fraction.at(event->mtici);
    }

    ProgressionState state;
    state.t = t;
    state.core_mask = Mask3(cbf_map.shape, 0);
    for (std::size_t v = 0; v < cbf_map.size(); ++v) {
        const double cbf = cbf_map.data[v];
        double d;
        if (!event) {
            d = damage(t, cbf, model);
        } else {
            d = damage(event->ttt, cbf, model);
            if (d < 1.0) {
                const double restored = cbf + fraction * (normal_cbf_map.data[v] - cbf);
                d += damage(t - event->ttt, restored, model);
            }
        }
        state.core_mask.data[v] = d >= 1.0 ? 1 : 0;
    }
    return state;
}

Mask3 final_infarct(const Mask3& acute_core, const Mask3& acute_lesion, bool reperfused) {
    if (acute_core.shape != acute_lesion.shape)
        throw std::invalid_argument("final_infarct: mask shapes differ");
    if (reperfused) return acute_core;
    Mask3 out = acute_core;
    for (std::size_t v = 0; v < out.size(); ++v)
        if (acute_lesion.data[v] != 0) out.data[v] = 1;
    return out;
}

std::vector<double> trajectory_times(double horizon_min, double step_min) {
    if (!(horizon_min >= 0.0))
        throw std::invalid_argument("trajectory: horizon must be >= 0");
    if (!(step_min > 0.0)) throw std::invalid_argument("trajectory: step must be > 0");
    std::vector<double> times;
    for (int k = 0; k * step_min < horizon_min - 1e-9 * step_min; ++k)
        times.push_back(k * step_min);
    times.push_back(horizon_min);
    return times;
}

std::vector<TrajectoryPoint> progression_trajectory(
    const Volume3<double>& cbf_map, const SurvivalModel& model, double horizon_min,
    double step_min, const std::optional<TreatmentEvent>& event,
    const Volume3<double>& normal_cbf_map, Vec3 voxel_size) {
    if (event) {
        validate_event(*event);
        if (event->ttt > horizon_min)
            throw std::invalid_argument(
                "progression_trajectory: event at t=" + std::to_string(event->ttt) +
                " min lies beyond the horizon " + std::to_string(horizon_min) + " min");
    }

    std::vector<TrajectoryPoint> rows;
    for (double t : trajectory_times(horizon_min, step_min)) {
        const std::optional<TreatmentEvent> ev =
            (event && event->ttt <= t) ? event : std::nullopt;
        const auto state = evolve(cbf_map, model, t, ev, normal_cbf_map);
        rows.push_back({t, volume_ml(state.core_mask, voxel_size)});
    }
    return rows;
}

}  // namespace ctperf

#include "ctperf/perfmaps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctperf {

namespace {

constexpr double kFlowUnit = 6000.0;   // (ml/100g/min) per (1/s)
constexpr double kVolumeUnit = 100.0;  // ml/100g per unit area ratio

void check_same_shape(const Shape3& a, const Shape3& b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

Volume3<double> tmax_map(const IrfMap& irf) {
    const std::size_t nvox = irf.data.voxels();
    const int n = irf.data.n_t;
    Volume3<double> out(irf.data.shape, 0.0);
    for (std::size_t v = 0; v < nvox; ++v) {
        double vmax = irf.data.data[v];
        for (int t = 1; t < n; ++t)
            vmax = std::max(vmax, irf.data.data[static_cast<std::size_t>(t) * nvox + v]);
        const double thr = vmax - 0.05 * std::abs(vmax);
        int arg = 0;
        for (int t = 0; t < n; ++t) {
            if (irf.data.data[static_cast<std::size_t>(t) * nvox + v] >= thr) {
                arg = t;
                break;
            }
        }
        out.data[v] = irf.grid.t_start + arg * irf.grid.dt;
    }
    return out;
}

Volume3<double> cbf_map(const IrfMap& irf) {
    const std::size_t nvox = irf.data.voxels();
    const int n = irf.data.n_t;
    Volume3<double> out(irf.data.shape, 0.0);
    for (std::size_t v = 0; v < nvox; ++v) {
        double vmax = irf.data.data[v];
        for (int t = 1; t < n; ++t)
            vmax = std::max(vmax, irf.data.data[static_cast<std::size_t>(t) * nvox + v]);
        out.data[v] = kFlowUnit * std::max(vmax, 0.0);
    }
    return out;
}

Volume3<double> cbv_map(const CtpSeries& series, const Curve& aif) {
    validate_curve(aif);
    if (!(series.grid == aif.grid))
        throw std::invalid_argument("cbv_map: series grid does not match AIF grid");
    const double aif_area = trapezoid_integral(aif.samples, aif.grid.dt);
    if (!(aif_area > 0.0))
        throw std::invalid_argument("cbv_map: AIF area must be positive");

    const std::size_t nvox = series.data.voxels();
    const int n = series.grid.n_samples;
    const double dt = series.grid.dt;
    Volume3<double> out(series.data.shape, 0.0);
    for (std::size_t v = 0; v < nvox; ++v) {
        double area = 0.0;
        for (int t = 0; t + 1 < n; ++t) {
            const double a = series.data.data[static_cast<std::size_t>(t) * nvox + v];
            const double b = series.data.data[static_cast<std::size_t>(t + 1) * nvox + v];
            area += 0.5 * (a + b) * dt;
        }
        out.data[v] = kVolumeUnit * std::max(area / aif_area, 0.0);
    }
    return out;
}

MttResult mtt_map(const Volume3<double>& cbf, const Volume3<double>& cbv, double cbf_floor) {
    check_same_shape(cbf.shape, cbv.shape, "mtt_map");
    MttResult r;
    r.mtt = Volume3<double>(cbf.shape, 0.0);
    r.valid = Mask3(cbf.shape, 0);
    for (std::size_t v = 0; v < cbf.size(); ++v) {
        if (cbf.data[v] > cbf_floor) {
            r.mtt.data[v] = 60.0 * cbv.data[v] / cbf.data[v];
            r.valid.data[v] = 1;
        }
    }
    return r;
}

Volume3<double> relative_map(const Volume3<double>& map, const Mask3& reference_mask) {
    check_same_shape(map.shape, reference_mask.shape, "relative_map");
    std::vector<double> ref;
    ref.reserve(map.size());
    for (std::size_t v = 0; v < map.size(); ++v)
        if (reference_mask.data[v] != 0) ref.push_back(map.data[v]);
    if (ref.empty())
        throw std::invalid_argument("relative_map: reference mask selects no voxels");

    std::sort(ref.begin(), ref.end());
    const std::size_t n = ref.size();
    const double median =
        (n % 2 == 1) ? ref[n / 2] : 0.5 * (ref[n / 2 - 1] + ref[n / 2]);
    if (!(median > 0.0))
        throw std::invalid_argument("relative_map: reference median must be positive");

    Volume3<double> out(map.shape, 0.0);
    for (std::size_t v = 0; v < map.size(); ++v) out.data[v] = map.data[v] / median;
    return out;
}

double aif_arrival_time(const Curve& aif) {
    validate_curve(aif);
    const double peak = *std::max_element(aif.samples.begin(), aif.samples.end());
    if (!(peak > 0.0))
        throw std::invalid_argument("aif_arrival_time: AIF peak must be positive");
    const double thr = 0.05 * peak;
    for (int k = 0; k < aif.grid.n_samples; ++k)
        if (aif.samples[k] > thr) return aif.grid.time(k);
    throw std::invalid_argument("aif_arrival_time: no sample exceeds 5% of peak");
}

Volume3<double> delay_time_map(const Volume3<double>& tmax, double aif_arrival) {
    Volume3<double> out(tmax.shape, 0.0);
    for (std::size_t v = 0; v < tmax.size(); ++v) out.data[v] = tmax.data[v] - aif_arrival;
    return out;
}

PerfusionMaps compute_maps(const CtpSeries& series, const Curve& aif, const IrfMap& irf,
                           const Mask3& reference_mask) {
    check_same_shape(series.data.shape, irf.data.shape, "compute_maps");
    PerfusionMaps m;
    m.voxel_size = series.voxel_size;
    m.cbf = cbf_map(irf);
    m.cbv = cbv_map(series, aif);
    auto mtt = mtt_map(m.cbf, m.cbv);
    m.mtt = std::move(mtt.mtt);
    m.mtt_valid = std::move(mtt.valid);
    m.tmax = tmax_map(irf);
    m.rcbf = relative_map(m.cbf, reference_mask);
    m.rcbv = relative_map(m.cbv, reference_mask);
    m.delay_time = delay_time_map(m.tmax, aif_arrival_time(aif));
    return m;
}

}  // namespace ctperf

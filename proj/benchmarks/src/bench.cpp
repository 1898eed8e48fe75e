#include <benchmark/benchmark.h>

#include <cstdint>
#include <map>
#include <optional>
#include <random>

#include "ctperf/deconv.hpp"
#include "ctperf/perfmaps.hpp"
#include "ctperf/phantom.hpp"
#include "ctperf/progression.hpp"

using namespace ctperf;

namespace {

const TimeGrid kGrid{0.0, 2.0, 30};

std::map<Label, HemoParams> stroke_params() {
    return {
        {Label::white, {20.0, 2.0, 0.0, ResidueShape::boxcar}},
        {Label::gray, {50.0, 5.0, 0.0, ResidueShape::boxcar}},
        {Label::penumbra, {12.0, 1.6, 8.0, ResidueShape::boxcar}},
        {Label::core, {5.0, 1.0, 10.0, ResidueShape::boxcar}},
    };
}

struct Study {
    GroundTruthPhantom phantom;
    Curve aif;
    CtpSeries series;
    IrfMap irf;
    Mask3 white;
};

// built once; every benchmark below reuses it
const Study& study() {
    static const Study s = [] {
        Study st;
        st.phantom = make_phantom({32, 32, 32}, LesionSpec{{19.0, 16.0, 16.0}, 4.0, 8.0},
                                  stroke_params());
        st.aif = gamma_variate_aif(10.0, 3.0, 1.5, 1.0, kGrid);
        st.series = forward_model(st.phantom, st.aif, kGrid);
        st.irf = deconvolve(st.series, st.aif, DeconvMethod::csvd, 0.01);
        st.white = label_mask(st.phantom, Label::white);
        return st;
    }();
    return s;
}

void BM_forward_model(benchmark::State& state) {
    const auto& s = study();
    for (auto _ : state)
        benchmark::DoNotOptimize(forward_model(s.phantom, s.aif, kGrid));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.phantom.labels.size()));
}
BENCHMARK(BM_forward_model)->Unit(benchmark::kMillisecond);

void BM_deconvolve_csvd(benchmark::State& state) {
    const auto& s = study();
    for (auto _ : state)
        benchmark::DoNotOptimize(deconvolve(s.series, s.aif, DeconvMethod::csvd, 0.01));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.series.data.voxels()));
}
BENCHMARK(BM_deconvolve_csvd)->Unit(benchmark::kMillisecond);

void BM_deconvolve_ssvd(benchmark::State& state) {
    const auto& s = study();
    for (auto _ : state)
        benchmark::DoNotOptimize(deconvolve(s.series, s.aif, DeconvMethod::ssvd, 0.01));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.series.data.voxels()));
}
BENCHMARK(BM_deconvolve_ssvd)->Unit(benchmark::kMillisecond);

void BM_compute_maps(benchmark::State& state) {
    const auto& s = study();
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_maps(s.series, s.aif, s.irf, s.white));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.series.data.voxels()));
}
BENCHMARK(BM_compute_maps)->Unit(benchmark::kMillisecond);

void BM_select_aif(benchmark::State& state) {
    const auto& s = study();
    for (auto _ : state) benchmark::DoNotOptimize(select_aif(s.series));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.series.data.voxels()));
}
BENCHMARK(BM_select_aif)->Unit(benchmark::kMillisecond);

void BM_evolve(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> cbf_d(2.0, 60.0);
    Volume3<double> cbf({64, 64, 32});
    for (double& x : cbf.data) x = cbf_d(rng);
    const Volume3<double> normal(cbf.shape, 50.0);
    const TreatmentEvent event{45.0, Mtici::grade2b};
    for (auto _ : state)
        benchmark::DoNotOptimize(evolve(cbf, SurvivalModel{}, 90.0, event, normal));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cbf.size()));
}
BENCHMARK(BM_evolve)->Unit(benchmark::kMillisecond);

}  // namespace

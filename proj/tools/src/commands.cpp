#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ctperf/perfmaps.hpp"
#include "ctperf/volume_io.hpp"

namespace ctperf::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kInjectedAifScale = 5.0;  // arterial voxels outshine tissue

void note(const PipelineConfig& cfg, const std::string& line) {
    if (!cfg.quiet) std::cout << line << "\n";
}

fs::path fresh_dir(const fs::path& base, const char* name) {
    const fs::path dir = base / name;
    fs::create_directories(dir);
    return dir;
}

Curve build_aif(const PipelineConfig& cfg) {
    return gamma_variate_aif(cfg.phantom.aif_t0, cfg.phantom.aif_alpha, cfg.phantom.aif_beta,
                             cfg.phantom.aif_amplitude, cfg.grid);
}

Mask3 label_equals(const GroundTruthPhantom& phantom, Label label) {
    Mask3 m(phantom.labels.shape, 0);
    for (std::size_t v = 0; v < m.size(); ++v)
        m.data[v] = phantom.labels.data[v] == static_cast<std::uint8_t>(label) ? 1 : 0;
    return m;
}

Mask3 mask_or(const Mask3& a, const Mask3& b) {
    Mask3 m = a;
    for (std::size_t v = 0; v < m.size(); ++v)
        if (b.data[v] != 0) m.data[v] = 1;
    return m;
}

Mask3 mask_and(const Mask3& a, const Mask3& b) {
    Mask3 m = a;
    for (std::size_t v = 0; v < m.size(); ++v)
        if (b.data[v] == 0) m.data[v] = 0;
    return m;
}

// the ratio field may be infinite or undefined, which JSON numbers cannot
// carry; non-finite values are emitted as the strings "inf" / "nan"
ordered_json json_ratio(double ratio) {
    if (std::isfinite(ratio)) return ratio;
    return std::isnan(ratio) ? "nan" : "inf";
}

ordered_json criteria_json(const std::vector<MismatchCriterion>& criteria) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : criteria)
        arr.push_back({{"name", c.name},
                       {"min_diff_ml", c.min_diff_ml},
                       {"min_ratio", c.min_ratio},
                       {"max_core_ml", c.max_core_ml}});
    return arr;
}

void write_mismatch_report(const fs::path& dir, const MismatchReport& report,
                           const std::vector<MismatchCriterion>& criteria) {
    ordered_json j;
    j["core_ml"] = report.core_ml;
    j["lesion_ml"] = report.lesion_ml;
    j["penumbra_ml"] = report.penumbra_ml;
    j["diff_ml"] = report.diff_ml;
    j["ratio"] = json_ratio(report.ratio);
    j["core_outside_lesion"] = report.core_outside_lesion;
    ordered_json verdicts;
    for (const auto& c : criteria) verdicts[c.name] = report.verdicts.at(c.name);
    j["verdicts"] = verdicts;
    write_file_atomic(dir / "mismatch.json", j.dump(2) + "\n");

    std::string head = "core_ml,lesion_ml,penumbra_ml,diff_ml,ratio,core_outside_lesion";
    std::string row = format_double(report.core_ml) + "," + format_double(report.lesion_ml) +
                      "," + format_double(report.penumbra_ml) + "," +
                      format_double(report.diff_ml) + "," + format_double(report.ratio) + "," +
                      std::to_string(report.core_outside_lesion);
    for (const auto& c : criteria) {
        head += "," + c.name;
        row += report.verdicts.at(c.name) ? ",1" : ",0";
    }
    write_file_atomic(dir / "mismatch.csv", head + "\n" + row + "\n");
}

void write_scaled_slice(const fs::path& path, const Volume3<double>& map) {
    const int z = map.shape[2] / 2;
    double lo = map.at(0, 0, z), hi = lo;
    for (int y = 0; y < map.shape[1]; ++y)
        for (int x = 0; x < map.shape[0]; ++x) {
            lo = std::min(lo, map.at(x, y, z));
            hi = std::max(hi, map.at(x, y, z));
        }
    write_pgm_slice(path, map, z, lo, hi);
}

struct PhantomArtifacts {
    fs::path series;
    fs::path aif_csv;
    fs::path white;
    fs::path brain;
    fs::path gt_core;
    fs::path gt_lesion;
};

PhantomArtifacts run_phantom(const PipelineConfig& cfg) {
    const fs::path dir = fresh_dir(cfg.out_dir, "phantom");
    const auto phantom =
        make_phantom(cfg.phantom.shape, cfg.phantom.lesion, cfg.phantom.params,
                     cfg.phantom.voxel_size);
    const Curve aif = build_aif(cfg);
    CtpSeries series = forward_model(phantom, aif, cfg.grid);

    if (cfg.phantom.inject_aif_voxel) {
        // synthetic arterial sample in the background corner, pre-noise
        for (int t = 0; t < cfg.grid.n_samples; ++t)
            series.data.at(1, 1, 1, t) = kInjectedAifScale * aif.samples[t];
    }
    if (cfg.noise_sigma > 0.0) series = add_noise(series, cfg.noise_sigma, *cfg.seed);

    const Vec3 vs = phantom.voxel_size;
    write_mask(dir / "labels.json", phantom.labels, vs);

    const Mask3 brain = brain_mask(phantom);
    const Mask3 white = label_equals(phantom, Label::white);
    const Mask3 gray = label_equals(phantom, Label::gray);
    const Mask3 gt_core = label_equals(phantom, Label::core);
    const Mask3 gt_penumbra = label_equals(phantom, Label::penumbra);
    write_mask(dir / "brain.json", brain, vs);
    write_mask(dir / "white.json", white, vs);
    write_mask(dir / "gray.json", gray, vs);
    write_mask(dir / "gt_core.json", gt_core, vs);
    write_mask(dir / "gt_penumbra.json", gt_penumbra, vs);
    write_mask(dir / "gt_lesion.json", mask_or(gt_core, gt_penumbra), vs);

    Volume3<double> cbf_gt(phantom.labels.shape, 0.0);
    Volume3<double> cbv_gt(phantom.labels.shape, 0.0);
    Volume3<double> delay_gt(phantom.labels.shape, 0.0);
    for (std::size_t v = 0; v < phantom.labels.size(); ++v) {
        const auto it =
            phantom.params_per_label.find(static_cast<Label>(phantom.labels.data[v]));
        if (it == phantom.params_per_label.end()) continue;
        cbf_gt.data[v] = it->second.cbf;
        cbv_gt.data[v] = it->second.cbv;
        delay_gt.data[v] = it->second.delay;
    }
    write_volume(dir / "cbf_gt.json", cbf_gt, vs);
    write_volume(dir / "cbv_gt.json", cbv_gt, vs);
    write_volume(dir / "delay_gt.json", delay_gt, vs);

    write_curve_csv(dir / "aif.csv", aif);
    write_series(dir / "series.json", series);

    note(cfg, "phantom: wrote " + dir.string());
    return {dir / "series.json", dir / "aif.csv",     dir / "white.json",
            dir / "brain.json",  dir / "gt_core.json", dir / "gt_lesion.json"};
}

struct AnalyzeArtifacts {
    fs::path cbf;
    fs::path brain;
    fs::path core;
    fs::path lesion;
};

AnalyzeArtifacts run_analyze(const PipelineConfig& cfg, const AnalyzeOptions& opt) {
    const fs::path dir = fresh_dir(cfg.out_dir, "analyze");
    const CtpSeries series = read_series(opt.series_path);
    const Vec3 vs = series.voxel_size;

    const Curve aif = opt.aif_csv ? read_curve_csv(*opt.aif_csv) : select_aif(series);

    if (!opt.reference_mask)
        throw std::runtime_error(
            "analyze: a reference mask is required (--reference-mask) to normalize "
            "rcbf/rcbv");
    const Mask3 reference = read_mask(*opt.reference_mask);

    const IrfMap irf = deconvolve(series, aif, cfg.method, cfg.lambda_rel, cfg.pad_factor);
    const PerfusionMaps maps = compute_maps(series, aif, irf, reference);

    Mask3 brain;
    if (opt.brain_mask) {
        brain = read_mask(*opt.brain_mask);
        if (brain.shape != series.data.shape)
            throw std::runtime_error("analyze: brain mask shape does not match the series");
    } else {
        brain = derive_brain_mask(maps);
    }

    const Mask3 core = segment_core(maps, cfg.rcbf_core_threshold, &brain);
    const Mask3 lesion = segment_perfusion_lesion(maps, cfg.lesion_rule, &brain);
    const LesionMasks lm = make_lesion_masks(core, lesion, vs);
    const MismatchReport report = evaluate_mismatch(lm, cfg.criteria);

    write_irf(dir / "irf.json", irf, vs);
    write_volume(dir / "cbf.json", maps.cbf, vs);
    write_volume(dir / "cbv.json", maps.cbv, vs);
    write_volume(dir / "mtt.json", maps.mtt, vs);
    write_mask(dir / "mtt_valid.json", maps.mtt_valid, vs);
    write_volume(dir / "tmax.json", maps.tmax, vs);
    write_volume(dir / "rcbf.json", maps.rcbf, vs);
    write_volume(dir / "rcbv.json", maps.rcbv, vs);
    write_volume(dir / "delay_time.json", maps.delay_time, vs);
    write_mask(dir / "brain.json", brain, vs);
    write_mask(dir / "core.json", lm.core, vs);
    write_mask(dir / "lesion.json", lm.perfusion_lesion, vs);
    write_mask(dir / "penumbra.json", lm.penumbra, vs);

    write_mismatch_report(dir, report, cfg.criteria);

    ordered_json manifest;
    manifest["method"] = to_string(cfg.method);
    manifest["lambda_rel"] = cfg.lambda_rel;
    manifest["reference_mask_digest"] =
        fnv1a64_hex(reference.data.data(), reference.data.size());
    manifest["unit_constant"] = 6000.0;
    write_file_atomic(dir / "maps_manifest.json", manifest.dump(2) + "\n");

    write_scaled_slice(dir / "slice_tmax.pgm", maps.tmax);
    write_scaled_slice(dir / "slice_cbf.pgm", maps.cbf);
    write_pgm_slice(dir / "slice_core.pgm", lm.core, lm.core.shape[2] / 2);
    write_pgm_slice(dir / "slice_lesion.pgm", lm.perfusion_lesion,
                    lm.perfusion_lesion.shape[2] / 2);

    note(cfg, "analyze: wrote " + dir.string());
    return {dir / "cbf.json", dir / "brain.json", dir / "core.json", dir / "lesion.json"};
}

void run_progress(const PipelineConfig& cfg, const ProgressOptions& opt) {
    const fs::path dir = fresh_dir(cfg.out_dir, "progress");
    const ProgressionConfig& pc = cfg.progression;

    Vec3 vs{};
    const Volume3<double> cbf = read_volume(opt.cbf_map_path, &vs);
    std::optional<Mask3> tissue;
    if (opt.tissue_mask) {
        tissue = read_mask(*opt.tissue_mask);
        if (tissue->shape != cbf.shape)
            throw std::runtime_error("progress: tissue mask shape does not match the CBF map");
    }
    if (pc.event && pc.event->ttt > pc.horizon_min)
        throw std::runtime_error("progress: event at t=" + format_double(pc.event->ttt) +
                                 " min lies beyond the horizon " +
                                 format_double(pc.horizon_min) + " min");

    const Volume3<double> normal(cbf.shape, pc.normal_cbf);
    auto core_at = [&](double t) {
        const std::optional<TreatmentEvent> ev =
            (pc.event && pc.event->ttt <= t) ? pc.event : std::nullopt;
        Mask3 core = evolve(cbf, pc.model, t, ev, normal).core_mask;
        if (tissue) core = mask_and(core, *tissue);
        return core;
    };

    std::string csv = "t_min,core_ml\n";
    for (double t : trajectory_times(pc.horizon_min, pc.step_min))
        csv += format_double(t) + "," + format_double(volume_ml(core_at(t), vs)) + "\n";
    write_file_atomic(dir / "trajectory.csv", csv);

    std::set<double> snapshot_times(pc.snapshots_min.begin(), pc.snapshots_min.end());
    if (snapshot_times.empty()) snapshot_times = {0.0, pc.horizon_min};
    for (double t : snapshot_times) {
        if (t < 0.0 || t > pc.horizon_min)
            throw std::runtime_error("progress: snapshot time " + format_double(t) +
                                     " min lies outside [0, horizon]");
        write_mask(dir / ("snapshot_t" + format_double(t) + ".json"), core_at(t), vs);
    }

    if (opt.acute_core.has_value() != opt.acute_lesion.has_value())
        throw std::runtime_error(
            "progress: --acute-core and --acute-lesion are required together");
    if (opt.acute_core) {
        const Mask3 acute_core = read_mask(*opt.acute_core);
        const Mask3 acute_lesion = read_mask(*opt.acute_lesion);
        write_mask(dir / "final_infarct_reperfused.json",
                   final_infarct(acute_core, acute_lesion, true), vs);
        write_mask(dir / "final_infarct_nonreperfused.json",
                   final_infarct(acute_core, acute_lesion, false), vs);
    }

    note(cfg, "progress: wrote " + dir.string());
}

}  // namespace

void cmd_phantom(const PipelineConfig& cfg) { run_phantom(cfg); }

void cmd_analyze(const PipelineConfig& cfg, const AnalyzeOptions& opt) {
    run_analyze(cfg, opt);
}

void cmd_progress(const PipelineConfig& cfg, const ProgressOptions& opt) {
    run_progress(cfg, opt);
}

void cmd_pipeline(const PipelineConfig& cfg) {
    const PhantomArtifacts ph = run_phantom(cfg);

    AnalyzeOptions an;
    an.series_path = ph.series;
    if (cfg.aif_source == AifSource::file) an.aif_csv = ph.aif_csv;
    an.reference_mask = ph.white;  // phantom ground truth stands in for normal tissue
    an.brain_mask = ph.brain;
    const AnalyzeArtifacts az = run_analyze(cfg, an);

    ProgressOptions pr;
    pr.cbf_map_path = az.cbf;
    pr.tissue_mask = az.brain;
    pr.acute_core = az.core;
    pr.acute_lesion = az.lesion;
    run_progress(cfg, pr);
}

void cmd_criteria(const PipelineConfig& cfg) {
    std::cout << criteria_json(cfg.criteria).dump(2) << "\n";
}

}  // namespace ctperf::cli

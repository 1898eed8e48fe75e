#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

using ctperf::cli::PipelineConfig;
using nlohmann::ordered_json;

struct CommonFlags {
    std::optional<std::string> config;
    std::optional<std::int64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> method;
    std::optional<double> lambda;
    std::optional<double> core_rule;
    std::optional<std::string> lesion_rule;
    std::optional<std::string> criteria;
    bool quiet = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file merged over built-in defaults");
    cmd->add_option("--seed", f.seed, "RNG seed; required whenever noise_sigma > 0");
    cmd->add_option("--out", f.out, "output directory (default: out)");
    cmd->add_option("--method", f.method, "deconvolution method")
        ->check(CLI::IsMember({"ssvd", "csvd"}));
    cmd->add_option("--lambda", f.lambda,
                    "relative singular-value cutoff, in [0, 1)");
    cmd->add_option("--core-rule", f.core_rule,
                    "core segmentation: rcbf threshold in (0, 1), strictly-below");
    cmd->add_option("--lesion-rule", f.lesion_rule, "perfusion-lesion rule")
        ->check(CLI::IsMember({"tmax6", "rcbv", "delay"}));
    cmd->add_option("--criteria", f.criteria, "mismatch criteria registry JSON file");
    cmd->add_flag("--quiet", f.quiet, "suppress per-command progress lines");
}

PipelineConfig resolve_config(const CommonFlags& f) {
    ordered_json overrides = ordered_json::object();
    if (f.seed) overrides["seed"] = *f.seed;
    if (f.out) overrides["out_dir"] = *f.out;
    if (f.method) overrides["deconv"]["method"] = *f.method;
    if (f.lambda) overrides["deconv"]["lambda_rel"] = *f.lambda;
    if (f.core_rule) overrides["segmentation"]["rcbf_core_threshold"] = *f.core_rule;
    if (f.lesion_rule) overrides["segmentation"]["lesion_rule"] = *f.lesion_rule;
    if (f.quiet) overrides["quiet"] = true;

    std::optional<std::filesystem::path> config_path;
    if (f.config) config_path = *f.config;
    PipelineConfig cfg = ctperf::cli::load_config(config_path, overrides);
    if (f.criteria) cfg.criteria = ctperf::load_criteria(*f.criteria);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CT perfusion toolkit: phantom simulation, SVD deconvolution, "
                 "core/penumbra triage, and infarct progression"};
    app.require_subcommand(1);

    CommonFlags phantom_flags, analyze_flags, progress_flags, pipeline_flags, criteria_flags;

    CLI::App* phantom = app.add_subcommand("phantom", "simulate a ground-truth study");
    add_common_flags(phantom, phantom_flags);

    CLI::App* analyze =
        app.add_subcommand("analyze", "deconvolve a series and segment core/penumbra");
    add_common_flags(analyze, analyze_flags);
    std::string series_path;
    std::string aif_spec;
    std::string reference_mask, brain_mask;
    analyze->add_option("series", series_path, "CTP series volume header (.json)")
        ->required();
    analyze->add_option("--aif", aif_spec,
                        "AIF curve CSV, or 'auto' to pick the best voxel curve");
    analyze->add_option("--reference-mask", reference_mask,
                        "normal-tissue mask header for rcbf/rcbv normalization");
    analyze->add_option("--brain-mask", brain_mask,
                        "brain mask header (default: derived from cbv)");

    CLI::App* progress =
        app.add_subcommand("progress", "evolve infarct growth over a CBF map");
    add_common_flags(progress, progress_flags);
    std::string cbf_path, tissue_mask, acute_core, acute_lesion;
    progress->add_option("cbf_map", cbf_path, "CBF volume header (.json)")->required();
    progress->add_option("--tissue-mask", tissue_mask,
                         "restrict evolution and volumes to this mask");
    progress->add_option("--acute-core", acute_core,
                         "acute core mask; enables final-infarct outputs");
    progress->add_option("--acute-lesion", acute_lesion,
                         "acute perfusion-lesion mask; enables final-infarct outputs");

    CLI::App* pipeline =
        app.add_subcommand("pipeline", "phantom, analyze and progress in sequence");
    add_common_flags(pipeline, pipeline_flags);

    CLI::App* criteria = app.add_subcommand("criteria", "print the mismatch registry");
    add_common_flags(criteria, criteria_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (phantom->parsed()) {
            ctperf::cli::cmd_phantom(resolve_config(phantom_flags));
        } else if (analyze->parsed()) {
            const PipelineConfig cfg = resolve_config(analyze_flags);
            ctperf::cli::AnalyzeOptions opt;
            opt.series_path = series_path;
            const bool auto_aif =
                aif_spec == "auto" ||
                (aif_spec.empty() && cfg.aif_source == ctperf::cli::AifSource::autoselect);
            if (!auto_aif) {
                if (aif_spec.empty())
                    throw std::runtime_error(
                        "analyze: --aif <curve.csv|auto> is required (or set "
                        "analyze.aif_source to \"auto\" in the config)");
                opt.aif_csv = aif_spec;
            }
            if (!reference_mask.empty()) opt.reference_mask = reference_mask;
            if (!brain_mask.empty()) opt.brain_mask = brain_mask;
            ctperf::cli::cmd_analyze(cfg, opt);
        } else if (progress->parsed()) {
            ctperf::cli::ProgressOptions opt;
            opt.cbf_map_path = cbf_path;
            if (!tissue_mask.empty()) opt.tissue_mask = tissue_mask;
            if (!acute_core.empty()) opt.acute_core = acute_core;
            if (!acute_lesion.empty()) opt.acute_lesion = acute_lesion;
            ctperf::cli::cmd_progress(resolve_config(progress_flags), opt);
        } else if (pipeline->parsed()) {
            ctperf::cli::cmd_pipeline(resolve_config(pipeline_flags));
        } else if (criteria->parsed()) {
            ctperf::cli::cmd_criteria(resolve_config(criteria_flags));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

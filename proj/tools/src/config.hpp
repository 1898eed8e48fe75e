#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctperf/deconv.hpp"
#include "ctperf/phantom.hpp"
#include "ctperf/progression.hpp"
#include "ctperf/triage.hpp"

namespace ctperf::cli {

struct PhantomSpec {
    Shape3 shape{32, 32, 32};
    Vec3 voxel_size{2.0, 2.0, 2.0};
    std::optional<LesionSpec> lesion;
    std::map<Label, HemoParams> params;
    double aif_t0 = 10.0;
    double aif_alpha = 3.0;
    double aif_beta = 1.5;
    double aif_amplitude = 1.0;
    bool inject_aif_voxel = true;
};

enum class AifSource { file, autoselect };

struct ProgressionConfig {
    SurvivalModel model;
    double horizon_min = 120.0;
    double step_min = 10.0;
    double normal_cbf = 50.0;
    std::vector<double> snapshots_min;  // empty: {0, horizon}
    std::optional<TreatmentEvent> event;
};

/// Everything one run needs. Constructed by merging the built-in defaults,
/// then the --config file, then individual flag overrides; the merged JSON
/// is validated once at the end (the seed rule lives here because only the
/// final state knows whether noise is on).
struct PipelineConfig {
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    PhantomSpec phantom;
    TimeGrid grid{0.0, 2.0, 30};
    double noise_sigma = 0.0;
    DeconvMethod method = DeconvMethod::csvd;
    double lambda_rel = 0.01;
    int pad_factor = 2;
    double rcbf_core_threshold = 0.30;
    LesionRule lesion_rule = LesionRule::tmax6;
    std::vector<MismatchCriterion> criteria;
    AifSource aif_source = AifSource::file;
    ProgressionConfig progression;
};

nlohmann::ordered_json default_config_json();

/// defaults <- config file (if any) <- overrides, then parse + validate.
PipelineConfig load_config(const std::optional<std::filesystem::path>& config_file,
                           const nlohmann::ordered_json& overrides);

LesionRule parse_lesion_rule(const std::string& text);
std::string to_string(LesionRule rule);

}  // namespace ctperf::cli

#pragma once

#include <filesystem>
#include <optional>

#include "config.hpp"

namespace ctperf::cli {

struct AnalyzeOptions {
    std::filesystem::path series_path;
    std::optional<std::filesystem::path> aif_csv;  // nullopt: auto-select from the series
    std::optional<std::filesystem::path> reference_mask;
    std::optional<std::filesystem::path> brain_mask;
};

struct ProgressOptions {
    std::filesystem::path cbf_map_path;
    std::optional<std::filesystem::path> tissue_mask;
    std::optional<std::filesystem::path> acute_core;
    std::optional<std::filesystem::path> acute_lesion;
};

/// Each command writes its artifact set under <out_dir>/<command>/ and
/// throws on the first failure, so a zero exit means every artifact landed.
void cmd_phantom(const PipelineConfig& cfg);
void cmd_analyze(const PipelineConfig& cfg, const AnalyzeOptions& opt);
void cmd_progress(const PipelineConfig& cfg, const ProgressOptions& opt);
void cmd_pipeline(const PipelineConfig& cfg);
void cmd_criteria(const PipelineConfig& cfg);

}  // namespace ctperf::cli

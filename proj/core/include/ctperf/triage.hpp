#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctperf/perfmaps.hpp"
#include "ctperf/types.hpp"

namespace ctperf {

/// Core / perfusion-lesion / penumbra masks of one study.
/// Invariant after make_lesion_masks: core is a subset of perfusion_lesion
/// and penumbra = perfusion_lesion minus core. core_outside_lesion counts
/// the voxels the union had to add to keep that decomposition.
struct LesionMasks {
    Mask3 core;
    Mask3 perfusion_lesion;
    Mask3 penumbra;
    Vec3 voxel_size{2.0, 2.0, 2.0};
    std::size_t core_outside_lesion = 0;
};

struct MismatchCriterion {
    std::string name;
    double min_diff_ml = 0.0;
    double min_ratio = 1.0;
    double max_core_ml = 0.0;
};

void validate_criterion(const MismatchCriterion& c);

/// ratio is lesion/core for core > 0, +inf for core = 0 with a lesion,
/// and NaN when both volumes are zero (every ratio test then fails).
struct MismatchReport {
    double core_ml = 0.0;
    double lesion_ml = 0.0;
    double penumbra_ml = 0.0;
    double diff_ml = 0.0;
    double ratio = 0.0;
    std::size_t core_outside_lesion = 0;
    std::map<std::string, bool> verdicts;
};

enum class Mtici { grade0, grade1, grade2a, grade2b, grade2c, grade3 };

Mtici parse_mtici(const std::string& text);
std::string to_string(Mtici grade);

struct ClinicalScores {
    int mrs = 0;     // 0 best, 6 dead
    int nihss = 0;   // 0..42, higher is worse
    int aspects = 10;  // 10 best, 0 worst
    Mtici mtici = Mtici::grade0;
};

/// Range-checks each scale and parses the reperfusion grade; the error
/// message names the offending field.
ClinicalScores validate_scores(int mrs, int nihss, int aspects, const std::string& mtici);

/// Fallback brain mask when no explicit one is supplied: voxels with any
/// measured blood volume (cbv > 0 up to float fuzz).
Mask3 derive_brain_mask(const PerfusionMaps& maps);

/// Voxels with rcbf strictly below the threshold, restricted to brain.
/// brain = nullptr derives the brain mask from cbv.
Mask3 segment_core(const PerfusionMaps& maps, double rcbf_threshold = 0.30,
                   const Mask3* brain = nullptr);

/// Threshold rule for the perfusion lesion. tmax6 is inclusive (>= 6 s);
/// rcbv (< 0.60) and delay (< 3 s) are strict.
enum class LesionRule { tmax6, rcbv, delay };

Mask3 segment_perfusion_lesion(const PerfusionMaps& maps, LesionRule rule,
                               const Mask3* brain = nullptr);

/// Couples a core and lesion mask: core voxels outside the lesion are
/// force-added to it (count reported) so the core + penumbra = lesion
/// decomposition always holds.
LesionMasks make_lesion_masks(const Mask3& core, const Mask3& perfusion_lesion,
                              Vec3 voxel_size);

double volume_ml(const Mask3& mask, Vec3 voxel_size);

/// "DAWN/DEFUSE3" (15, 1.8, 70), "EXTEND-strict" (10, 1.2, 70),
/// "EXTEND-lenient" (20, 1.2, 100), "DWI-PWI" (10, 1.2, uncapped).
std::vector<MismatchCriterion> builtin_criteria();

/// JSON array of {"name", "min_diff_ml", "min_ratio", "max_core_ml"}.
std::vector<MismatchCriterion> load_criteria(const std::filesystem::path& path);

MismatchReport evaluate_mismatch(const LesionMasks& masks,
                                 const std::vector<MismatchCriterion>& criteria);

/// Volume-level variant; penumbra_ml clamps to zero when core exceeds lesion.
MismatchReport evaluate_mismatch(double core_ml, double lesion_ml,
                                 const std::vector<MismatchCriterion>& criteria);

}  // namespace ctperf

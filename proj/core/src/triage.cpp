#include "ctperf/triage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ctperf {

namespace {

constexpr double kTmaxLesionSeconds = 6.0;
constexpr double kRcbvLesionThreshold = 0.60;
constexpr double kDelayLesionSeconds = 3.0;
constexpr double kCbvBrainFloor = 1e-9;
constexpr double kUncappedCoreMl = 1e9;

Mask3 threshold_mask(const Volume3<double>& map, const Mask3& brain, bool below,
                     double threshold, bool inclusive) {
    if (map.shape != brain.shape)
        throw std::invalid_argument("segmentation: brain mask shape does not match maps");
    Mask3 out(map.shape, 0);
    for (std::size_t v = 0; v < map.size(); ++v) {
        if (brain.data[v] == 0) continue;
        const double x = map.data[v];
        const bool hit = below ? (x < threshold) : (inclusive ? x >= threshold : x > threshold);
        out.data[v] = hit ? 1 : 0;
    }
    return out;
}

}  // namespace

Mask3 derive_brain_mask(const PerfusionMaps& maps) {
    if (maps.cbv.empty())
        throw std::invalid_argument("segmentation: cbv map required to derive a brain mask");
    Mask3 brain(maps.cbv.shape, 0);
    for (std::size_t v = 0; v < maps.cbv.size(); ++v)
        brain.data[v] = maps.cbv.data[v] > kCbvBrainFloor ? 1 : 0;
    return brain;
}

void validate_criterion(const MismatchCriterion& c) {
    if (c.name.empty())
        throw std::invalid_argument("mismatch criterion: name must be non-empty");
    if (!(c.min_diff_ml >= 0.0))
        throw std::invalid_argument("mismatch criterion '" + c.name +
                                    "': min_diff_ml must be >= 0");
    if (!(c.min_ratio >= 1.0))
        throw std::invalid_argument("mismatch criterion '" + c.name +
                                    "': min_ratio must be >= 1");
    if (!(c.max_core_ml > 0.0))
        throw std::invalid_argument("mismatch criterion '" + c.name +
                                    "': max_core_ml must be > 0");
}

Mtici parse_mtici(const std::string& text) {
    if (text == "0") return Mtici::grade0;
    if (text == "1") return Mtici::grade1;
    if (text == "2a") return Mtici::grade2a;
    if (text == "2b") return Mtici::grade2b;
    if (text == "2c") return Mtici::grade2c;
    if (text == "3") return Mtici::grade3;
    throw std::invalid_argument("mtici: '" + text + "' is not one of 0, 1, 2a, 2b, 2c, 3");
}

std::string to_string(Mtici grade) {
    switch (grade) {
        case Mtici::grade0: return "0";
        case Mtici::grade1: return "1";
        case Mtici::grade2a: return "2a";
        case Mtici::grade2b: return "2b";
        case Mtici::grade2c: return "2c";
        case Mtici::grade3: return "3";
    }
    throw std::invalid_argument("mtici: invalid enum value");
}

ClinicalScores validate_scores(int mrs, int nihss, int aspects, const std::string& mtici) {
    if (mrs < 0 || mrs > 6)
        throw std::invalid_argument("mrs: " + std::to_string(mrs) + " outside [0, 6]");
    if (nihss < 0 || nihss > 42)
        throw std::invalid_argument("nihss: " + std::to_string(nihss) + " outside [0, 42]");
    if (aspects < 0 || aspects > 10)
        throw std::invalid_argument("aspects: " + std::to_string(aspects) + " outside [0, 10]");
    return ClinicalScores{mrs, nihss, aspects, parse_mtici(mtici)};
}

Mask3 segment_core(const PerfusionMaps& maps, double rcbf_threshold, const Mask3* brain) {
    if (maps.rcbf.empty())
        throw std::invalid_argument("segment_core: rcbf map missing");
    if (!(rcbf_threshold > 0.0 && rcbf_threshold < 1.0))
        throw std::invalid_argument("segment_core: rcbf_threshold must lie in (0, 1)");
    const Mask3 derived = brain ? Mask3{} : derive_brain_mask(maps);
    return threshold_mask(maps.rcbf, brain ? *brain : derived, true, rcbf_threshold, false);
}

Mask3 segment_perfusion_lesion(const PerfusionMaps& maps, LesionRule rule,
                               const Mask3* brain) {
    const Volume3<double>* map = nullptr;
    bool below = false;
    double threshold = 0.0;
    bool inclusive = false;
    switch (rule) {
        case LesionRule::tmax6:
            map = &maps.tmax;
            threshold = kTmaxLesionSeconds;
            inclusive = true;
            break;
        case LesionRule::rcbv:
            map = &maps.rcbv;
            below = true;
            threshold = kRcbvLesionThreshold;
            break;
        case LesionRule::delay:
            map = &maps.delay_time;
            below = true;
            threshold = kDelayLesionSeconds;
            break;
    }
    if (map->empty())
        throw std::invalid_argument("segment_perfusion_lesion: required map missing");
    const Mask3 derived = brain ? Mask3{} : derive_brain_mask(maps);
    return threshold_mask(*map, brain ? *brain : derived, below, threshold, inclusive);
}

LesionMasks make_lesion_masks(const Mask3& core, const Mask3& perfusion_lesion,
                              Vec3 voxel_size) {
    if (core.shape != perfusion_lesion.shape)
        throw std::invalid_argument("make_lesion_masks: mask shapes differ");
    LesionMasks m;
    m.core = core;
    m.perfusion_lesion = perfusion_lesion;
    m.penumbra = Mask3(core.shape, 0);
    m.voxel_size = voxel_size;
    for (std::size_t v = 0; v < core.size(); ++v) {
        if (core.data[v] != 0 && perfusion_lesion.data[v] == 0) {
            ++m.core_outside_lesion;
            m.perfusion_lesion.data[v] = 1;
        }
        m.penumbra.data[v] = (m.perfusion_lesion.data[v] != 0 && core.data[v] == 0) ? 1 : 0;
    }
    return m;
}

double volume_ml(const Mask3& mask, Vec3 voxel_size) {
    for (double s : voxel_size)
        if (!(s > 0.0)) throw std::invalid_argument("volume_ml: voxel_size must be positive");
    const auto count = std::count_if(mask.data.begin(), mask.data.end(),
                                     [](std::uint8_t m) { return m != 0; });
    return static_cast<double>(count) * voxel_size[0] * voxel_size[1] * voxel_size[2] / 1000.0;
}

std::vector<MismatchCriterion> builtin_criteria() {
    return {
        {"DAWN/DEFUSE3", 15.0, 1.8, 70.0},
        {"EXTEND-strict", 10.0, 1.2, 70.0},
        {"EXTEND-lenient", 20.0, 1.2, 100.0},
        {"DWI-PWI", 10.0, 1.2, kUncappedCoreMl},
    };
}

std::vector<MismatchCriterion> load_criteria(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("criteria file: cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("criteria file: invalid JSON in " + path.string() + ": " +
                                 e.what());
    }
    if (!doc.is_array())
        throw std::runtime_error("criteria file: top-level value must be an array");
    std::vector<MismatchCriterion> out;
    for (const auto& item : doc) {
        for (const char* key : {"name", "min_diff_ml", "min_ratio", "max_core_ml"})
            if (!item.contains(key))
                throw std::runtime_error(std::string("criteria file: entry missing field '") +
                                         key + "'");
        MismatchCriterion c;
        c.name = item.at("name").get<std::string>();
        c.min_diff_ml = item.at("min_diff_ml").get<double>();
        c.min_ratio = item.at("min_ratio").get<double>();
        c.max_core_ml = item.at("max_core_ml").get<double>();
        validate_criterion(c);
        out.push_back(std::move(c));
    }
    return out;
}

MismatchReport evaluate_mismatch(double core_ml, double lesion_ml,
                                 const std::vector<MismatchCriterion>& criteria) {
    MismatchReport r;
    r.core_ml = core_ml;
    r.lesion_ml = lesion_ml;
    r.penumbra_ml = std::max(lesion_ml - core_ml, 0.0);
    r.diff_ml = lesion_ml - core_ml;
    if (core_ml > 0.0)
        r.ratio = lesion_ml / core_ml;
    else if (lesion_ml > 0.0)
        r.ratio = std::numeric_limits<double>::infinity();
    else
        r.ratio = std::numeric_limits<double>::quiet_NaN();  // no lesion at all
    for (const auto& c : criteria) {
        validate_criterion(c);
        // NaN ratio fails the comparison, so the empty-study verdict is false
        r.verdicts[c.name] =
            r.diff_ml > c.min_diff_ml && r.ratio > c.min_ratio && r.core_ml < c.max_core_ml;
    }
    return r;
}

MismatchReport evaluate_mismatch(const LesionMasks& masks,
                                 const std::vector<MismatchCriterion>& criteria) {
    MismatchReport r = evaluate_mismatch(volume_ml(masks.core, masks.voxel_size),
                                         volume_ml(masks.perfusion_lesion, masks.voxel_size),
                                         criteria);
    r.penumbra_ml = volume_ml(masks.penumbra, masks.voxel_size);
    r.core_outside_lesion = masks.core_outside_lesion;
    return r;
}

}  // namespace ctperf

#include "config.hpp"

#include <fstream>
#include <stdexcept>

namespace ctperf::cli {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
    throw std::runtime_error("config: " + what);
}

double get_number(const ordered_json& j, const std::string& where) {
    if (!j.is_number()) config_error("'" + where + "' must be a number");
    return j.get<double>();
}

const ordered_json& get_field(const ordered_json& j, const char* key,
                              const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) config_error("'" + where + "." + key + "' is missing");
    return *it;
}

Label parse_label(const std::string& name) {
    if (name == "white") return Label::white;
    if (name == "gray") return Label::gray;
    if (name == "penumbra") return Label::penumbra;
    if (name == "core") return Label::core;
    config_error("unknown tissue label '" + name + "'");
}

ResidueShape parse_residue(const std::string& name) {
    if (name == "boxcar") return ResidueShape::boxcar;
    if (name == "exponential") return ResidueShape::exponential;
    config_error("unknown residue shape '" + name + "' (want boxcar or exponential)");
}

Mtici parse_mtici_checked(const ordered_json& j, const std::string& where) {
    if (!j.is_string()) config_error("'" + where + "' must be a string grade");
    return parse_mtici(j.get<std::string>());
}

std::array<double, 3> get_triple(const ordered_json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) config_error("'" + where + "' must have 3 entries");
    return {get_number(j[0], where), get_number(j[1], where), get_number(j[2], where)};
}

PhantomSpec parse_phantom(const ordered_json& p) {
    PhantomSpec spec;
    const auto shape = get_triple(get_field(p, "shape", "phantom"), "phantom.shape");
    for (int i = 0; i < 3; ++i) {
        spec.shape[i] = static_cast<int>(shape[i]);
        if (spec.shape[i] != shape[i] || spec.shape[i] <= 0)
            config_error("'phantom.shape' entries must be positive integers");
    }
    spec.voxel_size =
        get_triple(get_field(p, "voxel_size_mm", "phantom"), "phantom.voxel_size_mm");

    const auto& lesion = get_field(p, "lesion", "phantom");
    if (!lesion.is_null()) {
        LesionSpec l;
        l.center = get_triple(get_field(lesion, "center", "phantom.lesion"),
                              "phantom.lesion.center");
        l.core_radius =
            get_number(get_field(lesion, "core_radius", "phantom.lesion"),
                       "phantom.lesion.core_radius");
        l.penumbra_radius =
            get_number(get_field(lesion, "penumbra_radius", "phantom.lesion"),
                       "phantom.lesion.penumbra_radius");
        spec.lesion = l;
    }

    const auto& params = get_field(p, "params", "phantom");
    if (!params.is_object() || params.empty())
        config_error("'phantom.params' must be a non-empty object");
    for (const auto& [name, entry] : params.items()) {
        HemoParams hp;
        const std::string where = "phantom.params." + name;
        hp.cbf = get_number(get_field(entry, "cbf", where), where + ".cbf");
        hp.cbv = get_number(get_field(entry, "cbv", where), where + ".cbv");
        hp.delay = get_number(get_field(entry, "delay_s", where), where + ".delay_s");
        const auto& res = get_field(entry, "residue", where);
        if (!res.is_string()) config_error("'" + where + ".residue' must be a string");
        hp.residue_shape = parse_residue(res.get<std::string>());
        spec.params[parse_label(name)] = hp;
    }

    const auto& aif = get_field(p, "aif", "phantom");
    spec.aif_t0 = get_number(get_field(aif, "t0_s", "phantom.aif"), "phantom.aif.t0_s");
    spec.aif_alpha = get_number(get_field(aif, "alpha", "phantom.aif"), "phantom.aif.alpha");
    spec.aif_beta = get_number(get_field(aif, "beta_s", "phantom.aif"), "phantom.aif.beta_s");
    spec.aif_amplitude =
        get_number(get_field(aif, "amplitude", "phantom.aif"), "phantom.aif.amplitude");

    const auto& inject = get_field(p, "inject_aif_voxel", "phantom");
    if (!inject.is_boolean()) config_error("'phantom.inject_aif_voxel' must be a boolean");
    spec.inject_aif_voxel = inject.get<bool>();
    return spec;
}

ProgressionConfig parse_progression(const ordered_json& p) {
    ProgressionConfig cfg;
    const auto& model = get_field(p, "model", "progression");
    cfg.model.cbf_upper =
        get_number(get_field(model, "cbf_upper", "progression.model"), "cbf_upper");
    cfg.model.cbf_lower =
        get_number(get_field(model, "cbf_lower", "progression.model"), "cbf_lower");
    cfg.model.t_lower =
        get_number(get_field(model, "t_lower_min", "progression.model"), "t_lower_min");
    cfg.model.t_upper =
        get_number(get_field(model, "t_upper_min", "progression.model"), "t_upper_min");
    validate_model(cfg.model);

    cfg.horizon_min =
        get_number(get_field(p, "horizon_min", "progression"), "progression.horizon_min");
    cfg.step_min = get_number(get_field(p, "step_min", "progression"), "progression.step_min");
    cfg.normal_cbf =
        get_number(get_field(p, "normal_cbf", "progression"), "progression.normal_cbf");
    if (!(cfg.horizon_min >= 0.0)) config_error("'progression.horizon_min' must be >= 0");
    if (!(cfg.step_min > 0.0)) config_error("'progression.step_min' must be > 0");
    if (!(cfg.normal_cbf >= 0.0)) config_error("'progression.normal_cbf' must be >= 0");

    const auto& snaps = get_field(p, "snapshots_min", "progression");
    if (!snaps.is_null()) {
        if (!snaps.is_array()) config_error("'progression.snapshots_min' must be an array");
        for (const auto& s : snaps)
            cfg.snapshots_min.push_back(get_number(s, "progression.snapshots_min"));
    }

    const auto& event = get_field(p, "event", "progression");
    if (!event.is_null()) {
        TreatmentEvent ev;
        ev.ttt = get_number(get_field(event, "ttt_min", "progression.event"),
                            "progression.event.ttt_min");
        ev.mtici = parse_mtici_checked(get_field(event, "mtici", "progression.event"),
                                       "progression.event.mtici");
        if (event.contains("reperfusion_fraction")) {
            const auto& table = event["reperfusion_fraction"];
            if (!table.is_object())
                config_error("'progression.event.reperfusion_fraction' must be an object");
            ev.reperfusion_fraction.clear();
            for (const auto& [grade, frac] : table.items())
                ev.reperfusion_fraction[parse_mtici(grade)] =
                    get_number(frac, "progression.event.reperfusion_fraction");
        }
        validate_event(ev);
        cfg.event = ev;
    }
    return cfg;
}

std::vector<MismatchCriterion> parse_criteria(const ordered_json& j) {
    if (j.is_null()) return builtin_criteria();
    if (!j.is_array()) config_error("'criteria' must be null or an array");
    std::vector<MismatchCriterion> out;
    for (const auto& item : j) {
        MismatchCriterion c;
        c.name = get_field(item, "name", "criteria").get<std::string>();
        c.min_diff_ml = get_number(get_field(item, "min_diff_ml", "criteria"), "min_diff_ml");
        c.min_ratio = get_number(get_field(item, "min_ratio", "criteria"), "min_ratio");
        c.max_core_ml = get_number(get_field(item, "max_core_ml", "criteria"), "max_core_ml");
        validate_criterion(c);
        out.push_back(std::move(c));
    }
    if (out.empty()) config_error("'criteria' must not be an empty array");
    return out;
}

}  // namespace

LesionRule parse_lesion_rule(const std::string& text) {
    if (text == "tmax6") return LesionRule::tmax6;
    if (text == "rcbv") return LesionRule::rcbv;
    if (text == "delay") return LesionRule::delay;
    config_error("unknown lesion rule '" + text + "' (want tmax6, rcbv, or delay)");
}

std::string to_string(LesionRule rule) {
    switch (rule) {
        case LesionRule::tmax6: return "tmax6";
        case LesionRule::rcbv: return "rcbv";
        case LesionRule::delay: return "delay";
    }
    config_error("invalid lesion rule value");
}

nlohmann::ordered_json default_config_json() {
    return ordered_json{
        {"out_dir", "out"},
        {"seed", nullptr},
        {"quiet", false},
        {"phantom",
         {{"shape", {32, 32, 32}},
          {"voxel_size_mm", {2.0, 2.0, 2.0}},
          {"lesion",
           {{"center", {19.0, 16.0, 16.0}}, {"core_radius", 4.0}, {"penumbra_radius", 8.0}}},
          {"params",
           {{"white",
             {{"cbf", 20.0}, {"cbv", 2.0}, {"delay_s", 0.0}, {"residue", "boxcar"}}},
            {"gray", {{"cbf", 50.0}, {"cbv", 5.0}, {"delay_s", 0.0}, {"residue", "boxcar"}}},
            {"penumbra",
             {{"cbf", 12.0}, {"cbv", 1.6}, {"delay_s", 8.0}, {"residue", "boxcar"}}},
            {"core",
             {{"cbf", 5.0}, {"cbv", 1.0}, {"delay_s", 10.0}, {"residue", "boxcar"}}}}},
          {"aif", {{"t0_s", 10.0}, {"alpha", 3.0}, {"beta_s", 1.5}, {"amplitude", 1.0}}},
          {"inject_aif_voxel", true}}},
        {"grid", {{"t_start_s", 0.0}, {"dt_s", 2.0}, {"n_samples", 30}}},
        {"noise_sigma", 0.0},
        {"deconv", {{"method", "csvd"}, {"lambda_rel", 0.01}, {"pad_factor", 2}}},
        {"segmentation", {{"rcbf_core_threshold", 0.30}, {"lesion_rule", "tmax6"}}},
        {"criteria", nullptr},
        {"analyze", {{"aif_source", "file"}}},
        {"progression",
         {{"model",
           {{"cbf_upper", 15.0},
            {"cbf_lower", 10.0},
            {"t_lower_min", 30.0},
            {"t_upper_min", 150.0}}},
          {"horizon_min", 120.0},
          {"step_min", 10.0},
          {"normal_cbf", 50.0},
          {"snapshots_min", nullptr},
          {"event", nullptr}}},
    };
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& config_file,
                           const ordered_json& overrides) {
    ordered_json merged = default_config_json();
    if (config_file) {
        std::ifstream in(*config_file);
        if (!in) config_error("cannot open " + config_file->string());
        ordered_json file_json;
        try {
            in >> file_json;
        } catch (const nlohmann::json::exception& e) {
            config_error("invalid JSON in " + config_file->string() + ": " + e.what());
        }
        if (!file_json.is_object()) config_error("top-level value must be an object");
        merged.update(file_json, true);
    }
    merged.update(overrides, true);

    PipelineConfig cfg;
    const auto& out_dir = get_field(merged, "out_dir", "config");
    if (!out_dir.is_string()) config_error("'out_dir' must be a string");
    cfg.out_dir = out_dir.get<std::string>();

    const auto& seed = get_field(merged, "seed", "config");
    if (!seed.is_null()) {
        if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0)
            config_error("'seed' must be a non-negative integer or null");
        cfg.seed = seed.get<std::uint64_t>();
    }

    const auto& quiet = get_field(merged, "quiet", "config");
    if (!quiet.is_boolean()) config_error("'quiet' must be a boolean");
    cfg.quiet = quiet.get<bool>();

    cfg.phantom = parse_phantom(get_field(merged, "phantom", "config"));

    const auto& grid = get_field(merged, "grid", "config");
    cfg.grid.t_start = get_number(get_field(grid, "t_start_s", "grid"), "grid.t_start_s");
    cfg.grid.dt = get_number(get_field(grid, "dt_s", "grid"), "grid.dt_s");
    const double n = get_number(get_field(grid, "n_samples", "grid"), "grid.n_samples");
    cfg.grid.n_samples = static_cast<int>(n);
    if (cfg.grid.n_samples != n) config_error("'grid.n_samples' must be an integer");
    validate_grid(cfg.grid);

    cfg.noise_sigma = get_number(get_field(merged, "noise_sigma", "config"), "noise_sigma");
    if (!(cfg.noise_sigma >= 0.0)) config_error("'noise_sigma' must be >= 0");
    if (cfg.noise_sigma > 0.0 && !cfg.seed)
        config_error("'seed' is required whenever noise_sigma > 0");

    const auto& deconv = get_field(merged, "deconv", "config");
    const auto& method = get_field(deconv, "method", "deconv");
    if (!method.is_string()) config_error("'deconv.method' must be a string");
    cfg.method = parse_method(method.get<std::string>());
    cfg.lambda_rel = get_number(get_field(deconv, "lambda_rel", "deconv"), "deconv.lambda_rel");
    if (!(cfg.lambda_rel >= 0.0 && cfg.lambda_rel < 1.0))
        config_error("'deconv.lambda_rel' must lie in [0, 1)");
    const double pad = get_number(get_field(deconv, "pad_factor", "deconv"), "pad_factor");
    cfg.pad_factor = static_cast<int>(pad);
    if (cfg.pad_factor != pad || cfg.pad_factor < 2)
        config_error("'deconv.pad_factor' must be an integer >= 2");

    const auto& seg = get_field(merged, "segmentation", "config");
    cfg.rcbf_core_threshold =
        get_number(get_field(seg, "rcbf_core_threshold", "segmentation"),
                   "segmentation.rcbf_core_threshold");
    if (!(cfg.rcbf_core_threshold > 0.0 && cfg.rcbf_core_threshold < 1.0))
        config_error("'segmentation.rcbf_core_threshold' must lie in (0, 1)");
    const auto& rule = get_field(seg, "lesion_rule", "segmentation");
    if (!rule.is_string()) config_error("'segmentation.lesion_rule' must be a string");
    cfg.lesion_rule = parse_lesion_rule(rule.get<std::string>());

    cfg.criteria = parse_criteria(get_field(merged, "criteria", "config"));

    const auto& analyze = get_field(merged, "analyze", "config");
    const auto& source = get_field(analyze, "aif_source", "analyze");
    if (!source.is_string()) config_error("'analyze.aif_source' must be a string");
    const std::string source_name = source.get<std::string>();
    if (source_name == "file")
        cfg.aif_source = AifSource::file;
    else if (source_name == "auto")
        cfg.aif_source = AifSource::autoselect;
    else
        config_error("'analyze.aif_source' must be \"file\" or \"auto\"");

    cfg.progression = parse_progression(get_field(merged, "progression", "config"));
    return cfg;
}

}  // namespace ctperf::cli

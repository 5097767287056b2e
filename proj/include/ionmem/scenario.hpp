#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ionmem/config.hpp"
#include "ionmem/core.hpp"
#include "ionmem/dfs.hpp"
#include "ionmem/dynamics.hpp"
#include "ionmem/hyperfine.hpp"
#include "ionmem/noise.hpp"

namespace ionmem::harness {

// ---------------------------------------------------------------------------
// A Scenario is a fully serializable experiment description; re-running a
// serialized scenario with the same seed reproduces outputs byte for byte.
// ---------------------------------------------------------------------------

enum class ScenarioKind { clock_scan, ramsey, dfs, parabola };

inline const char* kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::clock_scan: return "clock-scan";
        case ScenarioKind::ramsey: return "ramsey";
        case ScenarioKind::dfs: return "dfs";
        case ScenarioKind::parabola: return "parabola";
    }
    return "?";
}

/// Operating field: either a literal value or "clock:<lo>,<hi>", which
/// resolves to the field-independent point inside the bracket at run time.
struct FieldSpec {
    bool solve_clock = false;
    double value_t = 0.0;
    double clock_lo_t = 0.0;
    double clock_hi_t = 0.0;

    std::string serialize() const {
        if (solve_clock)
            return "clock:" + format_double(clock_lo_t) + "," + format_double(clock_hi_t);
        return format_double(value_t);
    }
};

struct AtomConfig {
    std::string constants_path; // as written in the config file
    hyperfine::HyperfineConstants constants;
    bool has_transition = false;
    hyperfine::LevelLabel lower;
    hyperfine::LevelLabel upper;
    FieldSpec field;
    double sensitivity_step_t = hyperfine::default_sensitivity_step_t;
};

struct RamseyConfig {
    dynamics::ScanMode mode = dynamics::ScanMode::per_shot;
    std::vector<double> t_r_list_s;
    long phase_count = 0;                  // 0 when an explicit list is given
    std::vector<double> phase_list_rad;    // empty when phase_count is used
    long shots_per_phase = 0;
    double detuning_offset_hz = 0.0;
    std::vector<double> echo_times_s;
    double dead_time_s = 0.0;
    double trace_dt_s = 0.0;
    double fringe_contrast = 1.0;
    noise::NoiseSpec noise;
    std::vector<std::string> noise_text; // component strings as written
};

struct DfsConfig {
    double static_rate_hz = 0.0;
    double ou_rate_rms_hz = 0.0;
    double ou_rate_tau_s = 1.0;
    noise::NoiseSpec common;
    std::vector<std::string> common_text;
    std::vector<double> windows_s;
    double window_half_width_s = 0.0;
    double window_step_s = 0.0;
    long shots_per_point = 0;
    dfs::DetectionModel detection;
    double initial_contrast = 1.0;
    double extra_decay_rate_hz = 0.0;
    double trace_dt_s = 0.0;
};

struct ParabolaConfig {
    double halfspan_t = 0.0;
    long points = 0;
    long measured_points = 0;
    double sigma_b_t = 0.0;
    double sigma_nu_hz = 0.0;
};

struct ClockScanConfig {
    double b_min_t = 0.0;
    double b_max_t = 0.0;
    double grid_step_t = 0.0;
};

struct Scenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::ramsey;
    std::uint64_t master_seed = 0;
    AtomConfig atom;
    RamseyConfig ramsey;
    DfsConfig dfs_cfg;
    ParabolaConfig parabola;
    ClockScanConfig clock_scan;
    std::string output_dir = "out";
};

// ---------------------------------------------------------------------------
// Noise component strings: "type: key=value, key=value".
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, double> parse_kv_args(const std::string& text,
                                                   const std::string& context) {
    std::map<std::string, double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = config::ConfigFile::trim(item);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(context + ": expected key=value, got '" + t + "'");
        const std::string key = config::ConfigFile::trim(t.substr(0, eq));
        const std::string value = config::ConfigFile::trim(t.substr(eq + 1));
        char* end = nullptr;
        const double v = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size())
            throw ConfigError(context + ": bad number '" + value + "' for '" + key + "'");
        if (out.count(key)) throw ConfigError(context + ": duplicate argument '" + key + "'");
        out[key] = v;
    }
    return out;
}

inline double take_arg(std::map<std::string, double>& args, const std::string& key,
                       const std::string& context) {
    auto it = args.find(key);
    if (it == args.end()) throw ConfigError(context + ": missing argument '" + key + "'");
    const double v = it->second;
    args.erase(it);
    return v;
}

inline double take_arg_or(std::map<std::string, double>& args, const std::string& key,
                          double fallback) {
    auto it = args.find(key);
    if (it == args.end()) return fallback;
    const double v = it->second;
    args.erase(it);
    return v;
}

} // namespace detail

inline noise::NoiseComponent parse_noise_component(const std::string& text) {
    const auto colon = text.find(':');
    const std::string type =
        config::ConfigFile::trim(colon == std::string::npos ? text : text.substr(0, colon));
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    const std::string context = "noise component '" + type + "'";
    auto args = detail::parse_kv_args(rest, context);
    noise::NoiseComponent out;
    if (type == "constant") {
        out = noise::ConstantOffset{detail::take_arg(args, "offset_t", context)};
    } else if (type == "drift") {
        out = noise::LinearDrift{detail::take_arg(args, "rate_t_per_s", context)};
    } else if (type == "random_walk") {
        out = noise::RandomWalk{detail::take_arg(args, "diffusion_t2_per_s", context)};
    } else if (type == "ou") {
        noise::OrnsteinUhlenbeck ou;
        ou.rms_t = detail::take_arg(args, "rms_t", context);
        ou.correlation_time_s = detail::take_arg(args, "tau_s", context);
        out = ou;
    } else if (type == "sinusoid") {
        noise::Sinusoid sin;
        sin.amplitude_t = detail::take_arg(args, "amplitude_t", context);
        sin.frequency_hz = detail::take_arg(args, "frequency_hz", context);
        sin.phase_rad = detail::take_arg_or(args, "phase_rad", 0.0);
        out = sin;
    } else if (type == "white") {
        out = noise::WhiteNoise{detail::take_arg(args, "rms_t", context)};
    } else {
        throw ConfigError("unknown noise component type '" + type + "'");
    }
    if (!args.empty())
        throw ConfigError(context + ": unknown argument '" + args.begin()->first + "'");
    return out;
}

inline std::string serialize_noise_component(const noise::NoiseComponent& comp) {
    using namespace noise;
    return std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ConstantOffset>)
                return "constant: offset_t=" + format_double(c.offset_t);
            else if constexpr (std::is_same_v<T, LinearDrift>)
                return "drift: rate_t_per_s=" + format_double(c.rate_t_per_s);
            else if constexpr (std::is_same_v<T, RandomWalk>)
                return "random_walk: diffusion_t2_per_s=" + format_double(c.diffusion_t2_per_s);
            else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>)
                return "ou: rms_t=" + format_double(c.rms_t) +
                       ", tau_s=" + format_double(c.correlation_time_s);
            else if constexpr (std::is_same_v<T, Sinusoid>)
                return "sinusoid: amplitude_t=" + format_double(c.amplitude_t) +
                       ", frequency_hz=" + format_double(c.frequency_hz) +
                       ", phase_rad=" + format_double(c.phase_rad);
            else
                return "white: rms_t=" + format_double(c.rms_per_sample_t);
        },
        comp);
}

// ---------------------------------------------------------------------------
// Scenario parsing.
// ---------------------------------------------------------------------------

namespace detail {

inline hyperfine::LevelLabel parse_label(const std::string& text, const std::string& origin) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw ConfigError(origin + ": level label must be 'F,mF', got '" + text + "'");
    hyperfine::LevelLabel l;
    l.f = parse_qn(config::ConfigFile::trim(text.substr(0, comma)));
    l.mf = parse_qn(config::ConfigFile::trim(text.substr(comma + 1)));
    return l;
}

inline FieldSpec parse_field_spec(const std::string& text, const std::string& origin) {
    FieldSpec f;
    if (text.rfind("clock:", 0) == 0) {
        f.solve_clock = true;
        const std::string rest = text.substr(6);
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw ConfigError(origin + ": field spec 'clock:' needs 'lo,hi'");
        auto num = [&](const std::string& s) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || end != s.c_str() + s.size())
                throw ConfigError(origin + ": bad number in field spec '" + text + "'");
            return v;
        };
        f.clock_lo_t = num(config::ConfigFile::trim(rest.substr(0, comma)));
        f.clock_hi_t = num(config::ConfigFile::trim(rest.substr(comma + 1)));
    } else {
        char* end = nullptr;
        f.value_t = std::strtod(text.c_str(), &end);
        if (text.empty() || end != text.c_str() + text.size())
            throw ConfigError(origin + ": bad field value '" + text + "'");
    }
    return f;
}

inline std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (text.empty() || end != text.c_str() + text.size())
        throw ConfigError(origin + ": bad master_seed '" + text + "'");
    return v;
}

} // namespace detail

inline Scenario parse_scenario(const config::ConfigFile& cfg, const std::string& base_dir) {
    Scenario s;
    const std::string& origin = cfg.origin();
    s.name = cfg.require("scenario", "name");
    const std::string kind = cfg.require("scenario", "kind");
    if (kind == "clock-scan") s.kind = ScenarioKind::clock_scan;
    else if (kind == "ramsey") s.kind = ScenarioKind::ramsey;
    else if (kind == "dfs") s.kind = ScenarioKind::dfs;
    else if (kind == "parabola") s.kind = ScenarioKind::parabola;
    else throw ConfigError(origin + ": unknown scenario kind '" + kind + "'");
    s.master_seed = detail::parse_seed(cfg.require("scenario", "master_seed"), origin);

    s.atom.constants_path = cfg.require("atom", "constants_file");
    const std::filesystem::path resolved =
        std::filesystem::path(s.atom.constants_path).is_absolute()
            ? std::filesystem::path(s.atom.constants_path)
            : std::filesystem::path(base_dir) / s.atom.constants_path;
    s.atom.constants = hyperfine::load_constants_file(resolved.string());
    s.atom.sensitivity_step_t = cfg.optional_number("atom", "sensitivity_step_t",
                                                    hyperfine::default_sensitivity_step_t);
    if (cfg.has("atom", "lower") || cfg.has("atom", "upper") || cfg.has("atom", "field_t")) {
        s.atom.has_transition = true;
        s.atom.lower = detail::parse_label(cfg.require("atom", "lower"), origin);
        s.atom.upper = detail::parse_label(cfg.require("atom", "upper"), origin);
        hyperfine::require_label(s.atom.constants, s.atom.lower);
        hyperfine::require_label(s.atom.constants, s.atom.upper);
        s.atom.field = detail::parse_field_spec(cfg.require("atom", "field_t"), origin);
    }

    s.output_dir = cfg.optional("output", "dir", "out");

    switch (s.kind) {
        case ScenarioKind::clock_scan: {
            s.clock_scan.b_min_t = cfg.require_number("clock_scan", "b_min_t");
            s.clock_scan.b_max_t = cfg.require_number("clock_scan", "b_max_t");
            s.clock_scan.grid_step_t = cfg.require_number("clock_scan", "grid_step_t");
            break;
        }
        case ScenarioKind::ramsey: {
            if (!s.atom.has_transition)
                throw ConfigError(origin + ": ramsey scenarios need an [atom] transition");
            const std::string mode = cfg.optional("sequence", "mode", "per-shot");
            if (mode == "per-shot") s.ramsey.mode = dynamics::ScanMode::per_shot;
            else if (mode == "sequential-drift")
                s.ramsey.mode = dynamics::ScanMode::sequential_drift;
            else throw ConfigError(origin + ": unknown sequence mode '" + mode + "'");
            s.ramsey.t_r_list_s = cfg.number_list("sequence", "t_r_list_s", true);
            if (s.ramsey.t_r_list_s.empty())
                throw ConfigError(origin + ": t_r_list_s must not be empty");
            if (cfg.has("sequence", "phase_list_rad")) {
                s.ramsey.phase_list_rad = cfg.number_list("sequence", "phase_list_rad", true);
            } else {
                s.ramsey.phase_count = cfg.optional_integer("sequence", "phases", 16);
                if (s.ramsey.phase_count < 1)
                    throw ConfigError(origin + ": phases must be >= 1");
            }
            s.ramsey.shots_per_phase = cfg.optional_integer("sequence", "shots_per_phase", 100);
            s.ramsey.detuning_offset_hz =
                cfg.optional_number("sequence", "detuning_offset_hz", 0.0);
            s.ramsey.echo_times_s = cfg.number_list("sequence", "echo_times_s", false);
            s.ramsey.dead_time_s = cfg.optional_number("sequence", "dead_time_s", 0.0);
            s.ramsey.trace_dt_s = cfg.optional_number("sequence", "trace_dt_s", 0.0);
            s.ramsey.fringe_contrast = cfg.optional_number("sequence", "fringe_contrast", 1.0);
            s.ramsey.noise_text = cfg.repeated("noise", "component");
            for (const auto& text : s.ramsey.noise_text)
                s.ramsey.noise.components.push_back(parse_noise_component(text));
            s.ramsey.noise.validate();
            break;
        }
        case ScenarioKind::dfs: {
            if (!s.atom.has_transition)
                throw ConfigError(origin + ": dfs scenarios need an [atom] transition");
            s.dfs_cfg.static_rate_hz = cfg.require_number("gradient", "static_rate_hz");
            s.dfs_cfg.ou_rate_rms_hz = cfg.optional_number("gradient", "ou_rate_rms_hz", 0.0);
            s.dfs_cfg.ou_rate_tau_s = cfg.optional_number("gradient", "ou_rate_tau_s", 1.0);
            s.dfs_cfg.common_text = cfg.repeated("gradient", "common_component");
            for (const auto& text : s.dfs_cfg.common_text)
                s.dfs_cfg.common.components.push_back(parse_noise_component(text));
            s.dfs_cfg.common.validate();
            s.dfs_cfg.windows_s = cfg.number_list("dfs_sequence", "windows_s", true);
            s.dfs_cfg.window_half_width_s =
                cfg.require_number("dfs_sequence", "window_half_width_s");
            s.dfs_cfg.window_step_s = cfg.require_number("dfs_sequence", "window_step_s");
            s.dfs_cfg.shots_per_point = cfg.optional_integer("dfs_sequence", "shots_per_point", 200);
            const std::string det = cfg.optional("dfs_sequence", "detection", "ideal");
            if (det == "ideal") s.dfs_cfg.detection.mode = dfs::DetectionModel::Mode::ideal;
            else if (det == "poisson") s.dfs_cfg.detection.mode = dfs::DetectionModel::Mode::poisson;
            else throw ConfigError(origin + ": unknown detection mode '" + det + "'");
            s.dfs_cfg.detection.lambda_bright =
                cfg.optional_number("dfs_sequence", "lambda_bright", 30.0);
            s.dfs_cfg.detection.lambda_background =
                cfg.optional_number("dfs_sequence", "lambda_background", 2.0);
            s.dfs_cfg.initial_contrast =
                cfg.optional_number("dfs_sequence", "initial_contrast", 1.0);
            s.dfs_cfg.extra_decay_rate_hz =
                cfg.optional_number("dfs_sequence", "extra_decay_rate_hz", 0.0);
            s.dfs_cfg.trace_dt_s = cfg.optional_number("dfs_sequence", "trace_dt_s", 0.0);
            if (s.dfs_cfg.windows_s.empty())
                throw ConfigError(origin + ": windows_s must not be empty");
            if (!(s.dfs_cfg.window_step_s > 0.0) || !(s.dfs_cfg.window_half_width_s >= 0.0))
                throw ConfigError(origin + ": bad dfs window geometry");
            break;
        }
        case ScenarioKind::parabola: {
            if (!s.atom.has_transition)
                throw ConfigError(origin + ": parabola scenarios need an [atom] transition");
            s.parabola.halfspan_t = cfg.require_number("parabola", "b_halfspan_t");
            s.parabola.points = cfg.optional_integer("parabola", "points", 61);
            s.parabola.measured_points = cfg.optional_integer("parabola", "measured_points", 0);
            s.parabola.sigma_b_t = cfg.optional_number("parabola", "sigma_b_t", 3e-9);
            s.parabola.sigma_nu_hz = cfg.optional_number("parabola", "sigma_nu_hz", 0.3);
            if (s.parabola.points < 1 || !(s.parabola.halfspan_t > 0.0))
                throw ConfigError(origin + ": bad parabola grid");
            break;
        }
    }

    cfg.reject_unconsumed();
    return s;
}

inline Scenario load_scenario_file(const std::string& path) {
    const auto cfg = config::ConfigFile::parse_file(path);
    const std::string base = std::filesystem::path(path).parent_path().string();
    return parse_scenario(cfg, base.empty() ? "." : base);
}

/// Canonical serialization; parsing it back yields an identical scenario.
inline std::string serialize_scenario(const Scenario& s) {
    std::string out;
    out += "[scenario]\n";
    out += "name = " + s.name + "\n";
    out += "kind = " + std::string(kind_name(s.kind)) + "\n";
    out += "master_seed = " + format_u64(s.master_seed) + "\n";
    out += "\n[atom]\n";
    out += "constants_file = " + s.atom.constants_path + "\n";
    out += "sensitivity_step_t = " + format_double(s.atom.sensitivity_step_t) + "\n";
    if (s.atom.has_transition) {
        out += "lower = " + format_qn(s.atom.lower.f) + "," + format_qn(s.atom.lower.mf) + "\n";
        out += "upper = " + format_qn(s.atom.upper.f) + "," + format_qn(s.atom.upper.mf) + "\n";
        out += "field_t = " + s.atom.field.serialize() + "\n";
    }
    auto join = [](const std::vector<double>& xs) {
        std::string t;
        for (std::size_t i = 0; i < xs.size(); ++i)
            t += (i ? "," : "") + format_double(xs[i]);
        return t;
    };
    switch (s.kind) {
        case ScenarioKind::clock_scan:
            out += "\n[clock_scan]\n";
            out += "b_min_t = " + format_double(s.clock_scan.b_min_t) + "\n";
            out += "b_max_t = " + format_double(s.clock_scan.b_max_t) + "\n";
            out += "grid_step_t = " + format_double(s.clock_scan.grid_step_t) + "\n";
            break;
        case ScenarioKind::ramsey: {
            out += "\n[noise]\n";
            for (const auto& c : s.ramsey.noise.components)
                out += "component = " + serialize_noise_component(c) + "\n";
            out += "\n[sequence]\n";
            out += std::string("mode = ") +
                   (s.ramsey.mode == dynamics::ScanMode::per_shot ? "per-shot"
                                                                  : "sequential-drift") +
                   "\n";
            out += "t_r_list_s = " + join(s.ramsey.t_r_list_s) + "\n";
            if (!s.ramsey.phase_list_rad.empty())
                out += "phase_list_rad = " + join(s.ramsey.phase_list_rad) + "\n";
            else
                out += "phases = " + std::to_string(s.ramsey.phase_count) + "\n";
            out += "shots_per_phase = " + std::to_string(s.ramsey.shots_per_phase) + "\n";
            out += "detuning_offset_hz = " + format_double(s.ramsey.detuning_offset_hz) + "\n";
            if (!s.ramsey.echo_times_s.empty())
                out += "echo_times_s = " + join(s.ramsey.echo_times_s) + "\n";
            out += "dead_time_s = " + format_double(s.ramsey.dead_time_s) + "\n";
            out += "trace_dt_s = " + format_double(s.ramsey.trace_dt_s) + "\n";
            out += "fringe_contrast = " + format_double(s.ramsey.fringe_contrast) + "\n";
            break;
        }
        case ScenarioKind::dfs: {
            out += "\n[gradient]\n";
            out += "static_rate_hz = " + format_double(s.dfs_cfg.static_rate_hz) + "\n";
            out += "ou_rate_rms_hz = " + format_double(s.dfs_cfg.ou_rate_rms_hz) + "\n";
            out += "ou_rate_tau_s = " + format_double(s.dfs_cfg.ou_rate_tau_s) + "\n";
            for (const auto& c : s.dfs_cfg.common.components)
                out += "common_component = " + serialize_noise_component(c) + "\n";
            out += "\n[dfs_sequence]\n";
            out += "windows_s = " + join(s.dfs_cfg.windows_s) + "\n";
            out += "window_half_width_s = " + format_double(s.dfs_cfg.window_half_width_s) + "\n";
            out += "window_step_s = " + format_double(s.dfs_cfg.window_step_s) + "\n";
            out += "shots_per_point = " + std::to_string(s.dfs_cfg.shots_per_point) + "\n";
            out += std::string("detection = ") +
                   (s.dfs_cfg.detection.mode == dfs::DetectionModel::Mode::ideal ? "ideal"
                                                                                 : "poisson") +
                   "\n";
            out += "lambda_bright = " + format_double(s.dfs_cfg.detection.lambda_bright) + "\n";
            out += "lambda_background = " +
                   format_double(s.dfs_cfg.detection.lambda_background) + "\n";
            out += "initial_contrast = " + format_double(s.dfs_cfg.initial_contrast) + "\n";
            out += "extra_decay_rate_hz = " + format_double(s.dfs_cfg.extra_decay_rate_hz) + "\n";
            out += "trace_dt_s = " + format_double(s.dfs_cfg.trace_dt_s) + "\n";
            break;
        }
        case ScenarioKind::parabola:
            out += "\n[parabola]\n";
            out += "b_halfspan_t = " + format_double(s.parabola.halfspan_t) + "\n";
            out += "points = " + std::to_string(s.parabola.points) + "\n";
            out += "measured_points = " + std::to_string(s.parabola.measured_points) + "\n";
            out += "sigma_b_t = " + format_double(s.parabola.sigma_b_t) + "\n";
            out += "sigma_nu_hz = " + format_double(s.parabola.sigma_nu_hz) + "\n";
            break;
    }
    out += "\n[output]\n";
    out += "dir = " + s.output_dir + "\n";
    return out;
}

inline std::uint64_t scenario_hash(const Scenario& s) { return fnv1a64(serialize_scenario(s)); }

} // namespace ionmem::harness

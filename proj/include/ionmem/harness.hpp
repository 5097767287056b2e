#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ionmem/core.hpp"
#include "ionmem/dfs.hpp"
#include "ionmem/dynamics.hpp"
#include "ionmem/estimation.hpp"
#include "ionmem/hyperfine.hpp"
#include "ionmem/noise.hpp"
#include "ionmem/rng.hpp"
#include "ionmem/scenario.hpp"

namespace ionmem::harness {

// ---------------------------------------------------------------------------
// Output plumbing: every run emits its data files plus a manifest with the
// scenario hash and a checksum per output.
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string scenario_name;
    std::uint64_t scenario_hash = 0;
    std::string code_version = version_string;
    std::uint64_t master_seed = 0;
    double wall_time_s = 0.0;
    std::vector<std::pair<std::string, std::uint64_t>> checksums;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace detail

inline std::string manifest_text(const RunManifest& m) {
    std::string out;
    out += "scenario = " + m.scenario_name + "\n";
    out += "scenario_hash = " + detail::hex64(m.scenario_hash) + "\n";
    out += "code_version = " + m.code_version + "\n";
    out += "master_seed = " + format_u64(m.master_seed) + "\n";
    out += "wall_time_s = " + format_double(m.wall_time_s) + "\n";
    for (const auto& [file, sum] : m.checksums)
        out += "checksum " + file + " = " + detail::hex64(sum) + "\n";
    return out;
}

class OutputWriter {
  public:
    explicit OutputWriter(std::string dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& filename, const std::string& content) {
        std::ofstream out(std::filesystem::path(dir_) / filename,
                          std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write output file '" + filename + "' in " + dir_);
        out << content;
        checksums_.emplace_back(filename, fnv1a64(content));
    }

    void finish(const Scenario& s, double wall_time_s) {
        RunManifest m;
        m.scenario_name = s.name;
        m.scenario_hash = scenario_hash(s);
        m.master_seed = s.master_seed;
        m.wall_time_s = wall_time_s;
        m.checksums = checksums_;
        std::ofstream out(std::filesystem::path(dir_) / "manifest.txt",
                          std::ios::binary | std::ios::trunc);
        out << manifest_text(m);
    }

    const std::string& dir() const { return dir_; }

  private:
    std::string dir_;
    std::vector<std::pair<std::string, std::uint64_t>> checksums_;
};

/// Resolves the scenario operating field, solving for the clock point when
/// the config says "clock:lo,hi".
inline double resolve_field(const Scenario& s) {
    if (!s.atom.has_transition) throw ValidationError("scenario has no [atom] transition");
    if (!s.atom.field.solve_clock) return s.atom.field.value_t;
    hyperfine::ClockSearchOptions opts;
    opts.step_t = s.atom.sensitivity_step_t;
    const auto clock = hyperfine::find_clock_field(s.atom.constants, s.atom.lower, s.atom.upper,
                                                   s.atom.field.clock_lo_t,
                                                   s.atom.field.clock_hi_t, opts);
    return clock.field_t;
}

// ---------------------------------------------------------------------------
// clock-scan
// ---------------------------------------------------------------------------

struct ClockScanOutput {
    std::vector<hyperfine::ClockFieldResult> points;
};

inline std::string clock_points_csv(const std::vector<hyperfine::ClockFieldResult>& points) {
    std::string out = "lowerF,lowerMF,upperF,upperMF,clock_field_T,f0_hz,d2_hz_per_t2\n";
    for (const auto& p : points) {
        out += format_qn(p.lower.f) + ',' + format_qn(p.lower.mf) + ',';
        out += format_qn(p.upper.f) + ',' + format_qn(p.upper.mf) + ',';
        out += format_double(p.field_t) + ',';
        out += format_double(p.sensitivity.f0_hz) + ',';
        out += format_double(p.sensitivity.d2_hz_per_t2) + '\n';
    }
    return out;
}

inline ClockScanOutput run_clock_scan(const Scenario& s, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    if (s.kind != ScenarioKind::clock_scan)
        throw ValidationError("scenario kind is not clock-scan");
    hyperfine::ClockSearchOptions opts;
    opts.step_t = s.atom.sensitivity_step_t;
    ClockScanOutput result;
    result.points = hyperfine::enumerate_clock_fields(
        s.atom.constants, s.clock_scan.b_min_t, s.clock_scan.b_max_t, s.clock_scan.grid_step_t,
        opts);
    OutputWriter writer(out_dir);
    writer.write("clock_points.csv", clock_points_csv(result.points));
    writer.finish(s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count());
    return result;
}

// ---------------------------------------------------------------------------
// ramsey
// ---------------------------------------------------------------------------

struct RamseyOutput {
    double field_t = 0.0;
    hyperfine::FieldSensitivity sensitivity;
    std::vector<std::pair<double, dynamics::PhaseScanRecord>> scans;
    std::vector<estimation::PhaseScanFit> fringe_fits;
    std::optional<estimation::DecayFit> decay_fit;
};

namespace detail {

inline std::vector<double> scan_phases(const RamseyConfig& cfg) {
    if (!cfg.phase_list_rad.empty()) return cfg.phase_list_rad;
    std::vector<double> phases;
    for (long k = 0; k < cfg.phase_count; ++k)
        phases.push_back(two_pi * static_cast<double>(k) / static_cast<double>(cfg.phase_count));
    return phases;
}

inline std::string index_name(const std::string& stem, std::size_t idx,
                              const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02zu", idx);
    return stem + "_" + buf + ext;
}

inline std::string xys_csv(const std::vector<std::array<double, 3>>& rows) {
    std::string out = "x,y,sigma\n";
    for (const auto& r : rows)
        out += format_double(r[0]) + ',' + format_double(r[1]) + ',' + format_double(r[2]) + '\n';
    return out;
}

inline estimation::FitReport fringe_fit_report(const estimation::PhaseScanFit& fit,
                                               double t_r_s) {
    estimation::FitReport rep;
    rep.title = "fringe fit f(phi) = a - (b/2) cos(d phi + phi_D)";
    rep.names = {"a", "b", "d", "phi_D"};
    rep.values = {fit.a, fit.b, fit.d, fit.phi_d};
    rep.sigmas = {fit.a_sigma, fit.b_sigma, fit.d_sigma, fit.phi_d_sigma};
    rep.covariance = fit.covariance;
    rep.extras = {{"T_R_s", format_double(t_r_s)},
                  {"chi2", format_double(fit.chi2)},
                  {"dof", std::to_string(fit.dof)},
                  {"converged", fit.converged ? "true" : "false"},
                  {"flat", fit.flat ? "true" : "false"}};
    return rep;
}

} // namespace detail

inline RamseyOutput run_ramsey(const Scenario& s, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    if (s.kind != ScenarioKind::ramsey) throw ValidationError("scenario kind is not ramsey");

    RamseyOutput result;
    result.field_t = resolve_field(s);
    result.sensitivity = hyperfine::field_sensitivity(s.atom.constants, s.atom.lower,
                                                      s.atom.upper, result.field_t,
                                                      s.atom.sensitivity_step_t);

    dynamics::RamseySequence seq;
    seq.analysis_phases_rad = detail::scan_phases(s.ramsey);
    seq.detuning_offset_hz = s.ramsey.detuning_offset_hz;
    seq.echo_times_s = s.ramsey.echo_times_s;
    seq.shots_per_phase = static_cast<int>(s.ramsey.shots_per_phase);
    dynamics::ScanOptions opts;
    opts.mode = s.ramsey.mode;
    opts.dead_time_s = s.ramsey.dead_time_s;
    opts.trace_dt_s = s.ramsey.trace_dt_s;
    opts.fringe_contrast = s.ramsey.fringe_contrast;

    result.scans = dynamics::run_contrast_vs_interval(s.ramsey.t_r_list_s, seq,
                                                      result.sensitivity, s.ramsey.noise,
                                                      s.master_seed, opts);

    OutputWriter writer(out_dir);
    std::vector<estimation::DecayPoint> decay_points;
    std::vector<std::array<double, 3>> contrast_rows;
    std::string contrast_csv = "T_R_s,contrast,contrast_sigma\n";
    for (std::size_t k = 0; k < result.scans.size(); ++k) {
        auto& [t_r, record] = result.scans[k];
        record.scenario_id = s.name;
        writer.write(detail::index_name("phase_scan", k, ".csv"),
                     dynamics::phase_scan_csv(record));
        std::vector<std::array<double, 3>> plot_rows;
        for (const auto& row : record.rows)
            plot_rows.push_back({row.phi_rad,
                                 static_cast<double>(row.upcount) /
                                     static_cast<double>(row.shots),
                                 estimation::binomial_sigma(row.upcount, row.shots)});
        writer.write(detail::index_name("plot_phase_scan", k, ".csv"),
                     detail::xys_csv(plot_rows));

        const auto fit = estimation::fit_phase_scan(record);
        result.fringe_fits.push_back(fit);
        const auto rep = detail::fringe_fit_report(fit, t_r);
        writer.write(detail::index_name("fringe_fit", k, ".txt"),
                     estimation::fit_report_text(rep));
        writer.write(detail::index_name("fringe_fit", k, ".csv"),
                     estimation::fit_report_csv(rep));

        contrast_csv += format_double(t_r) + ',' + format_double(fit.b) + ',' +
                        format_double(fit.b_sigma) + '\n';
        contrast_rows.push_back({t_r, fit.b, fit.b_sigma});
        decay_points.push_back({t_r, fit.b, fit.b_sigma});
    }
    writer.write("contrast_vs_interval.csv", contrast_csv);
    writer.write("plot_contrast_vs_interval.csv", detail::xys_csv(contrast_rows));

    if (decay_points.size() >= 3) {
        const auto decay = estimation::fit_exponential_decay(decay_points);
        result.decay_fit = decay;
        estimation::FitReport rep;
        rep.title = "contrast decay fit b(T_R) = b0 exp(-T_R/tau)";
        rep.names = {"b0", "tau_s"};
        rep.values = {decay.b0, decay.tau_s};
        rep.sigmas = {decay.b0_sigma, decay.tau_sigma_s};
        rep.extras = {{"tau_sigma_bootstrap_s", format_double(decay.tau_sigma_bootstrap_s)},
                      {"chi2", format_double(decay.chi2)},
                      {"dof", std::to_string(decay.dof)},
                      {"converged", decay.converged ? "true" : "false"},
                      {"unbounded", decay.unbounded ? "true" : "false"}};
        writer.write("decay_fit.txt", estimation::fit_report_text(rep));
        writer.write("decay_fit.csv", estimation::fit_report_csv(rep));
    }
    writer.finish(s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count());
    return result;
}

// ---------------------------------------------------------------------------
// dfs
// ---------------------------------------------------------------------------

struct DfsOutput {
    double field_t = 0.0;
    double d1_hz_per_t = 0.0;
    std::vector<double> delays_s;
    dfs::LifetimeResult lifetime;
    estimation::SinusoidFit fit;
};

inline DfsOutput run_dfs(const Scenario& s, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    if (s.kind != ScenarioKind::dfs) throw ValidationError("scenario kind is not dfs");

    DfsOutput result;
    result.field_t = resolve_field(s);
    const auto sens = hyperfine::field_sensitivity(s.atom.constants, s.atom.lower, s.atom.upper,
                                                   result.field_t, s.atom.sensitivity_step_t);
    result.d1_hz_per_t = sens.d1_hz_per_t;
    if (result.d1_hz_per_t == 0.0)
        throw ValidationError("dfs scenario transition has zero field sensitivity");

    // The gradient is configured as a differential *rate*; convert to a field
    // difference through d1 of the field-sensitive transition.
    noise::NoiseSpec differential;
    differential.components.push_back(
        noise::ConstantOffset{s.dfs_cfg.static_rate_hz / result.d1_hz_per_t});
    if (s.dfs_cfg.ou_rate_rms_hz > 0.0)
        differential.components.push_back(
            noise::OrnsteinUhlenbeck{s.dfs_cfg.ou_rate_rms_hz / std::abs(result.d1_hz_per_t),
                                     s.dfs_cfg.ou_rate_tau_s});

    for (double center : s.dfs_cfg.windows_s) {
        const double half = s.dfs_cfg.window_half_width_s;
        for (double t = center - half; t <= center + half + 1e-12; t += s.dfs_cfg.window_step_s)
            result.delays_s.push_back(std::max(0.0, t));
    }

    dfs::LifetimeOptions opts;
    opts.detection = s.dfs_cfg.detection;
    opts.initial_contrast = s.dfs_cfg.initial_contrast;
    opts.extra_decay_rate_hz = s.dfs_cfg.extra_decay_rate_hz;
    opts.trace_dt_s = s.dfs_cfg.trace_dt_s;
    result.lifetime =
        dfs::run_dfs_lifetime_experiment(result.delays_s, s.dfs_cfg.common, differential,
                                         result.d1_hz_per_t, s.dfs_cfg.shots_per_point,
                                         s.master_seed, opts);

    std::vector<estimation::SeriesPoint> series;
    std::vector<std::array<double, 3>> plot_rows;
    for (const auto& p : result.lifetime.p_psi_minus) {
        series.push_back({p.t_d_s, p.p, p.sigma});
        plot_rows.push_back({p.t_d_s, p.p, p.sigma});
    }
    result.fit = estimation::fit_sinusoid(series, true);

    OutputWriter writer(out_dir);
    writer.write("lifetime.csv", dfs::lifetime_csv(result.lifetime));
    writer.write("plot_parity_oscillation.csv", detail::xys_csv(plot_rows));
    estimation::FitReport rep;
    rep.title = "damped sinusoid fit of P(Psi-) vs delay";
    rep.names = {"amplitude", "frequency_hz", "phase_rad", "offset", "damping_time_s"};
    rep.values = {result.fit.amplitude, result.fit.frequency_hz, result.fit.phase_rad,
                  result.fit.offset, result.fit.damping_time_s};
    rep.sigmas = {result.fit.amplitude_sigma, result.fit.frequency_sigma_hz,
                  result.fit.phase_sigma_rad, result.fit.offset_sigma,
                  result.fit.damping_time_sigma_s};
    rep.extras = {{"chi2", format_double(result.fit.chi2)},
                  {"dof", std::to_string(result.fit.dof)},
                  {"converged", result.fit.converged ? "true" : "false"},
                  {"damping_warning", result.fit.damping_warning ? "true" : "false"}};
    writer.write("sinusoid_fit.txt", estimation::fit_report_text(rep));
    writer.write("sinusoid_fit.csv", estimation::fit_report_csv(rep));
    writer.finish(s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count());
    return result;
}

// ---------------------------------------------------------------------------
// parabola
// ---------------------------------------------------------------------------

struct ParabolaOutput {
    double center_field_t = 0.0;
    std::vector<std::pair<double, double>> theory;   // (B, nu)
    std::vector<std::pair<double, double>> measured; // (B, nu) with noise
};

inline ParabolaOutput run_parabola(const Scenario& s, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    if (s.kind != ScenarioKind::parabola) throw ValidationError("scenario kind is not parabola");

    ParabolaOutput result;
    result.center_field_t = resolve_field(s);
    const long n = s.parabola.points;
    for (long k = 0; k < n; ++k) {
        const double frac = n == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(n - 1);
        const double field =
            result.center_field_t + s.parabola.halfspan_t * (2.0 * frac - 1.0);
        result.theory.emplace_back(
            field, hyperfine::transition_frequency(s.atom.constants, s.atom.lower, s.atom.upper,
                                                   field));
    }
    if (s.parabola.measured_points > 0) {
        RandomStream rs(derive_seed(s.master_seed, {stream_tag::synthetic}));
        const long m = s.parabola.measured_points;
        for (long k = 0; k < m; ++k) {
            const double frac =
                m == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(m - 1);
            const double field =
                result.center_field_t + s.parabola.halfspan_t * (2.0 * frac - 1.0);
            const double nu = hyperfine::transition_frequency(s.atom.constants, s.atom.lower,
                                                              s.atom.upper, field);
            result.measured.emplace_back(field + s.parabola.sigma_b_t * rs.normal(),
                                         nu + s.parabola.sigma_nu_hz * rs.normal());
        }
    }

    OutputWriter writer(out_dir);
    std::string theory_csv = "B_T,nu_hz\n";
    for (const auto& [field, nu] : result.theory)
        theory_csv += format_double(field) + ',' + format_double(nu) + '\n';
    writer.write("transition_vs_field.csv", theory_csv);
    std::vector<std::array<double, 3>> plot_rows;
    if (!result.measured.empty()) {
        std::string meas_csv = "B_T,nu_hz\n";
        for (const auto& [field, nu] : result.measured) {
            meas_csv += format_double(field) + ',' + format_double(nu) + '\n';
            plot_rows.push_back({field, nu, s.parabola.sigma_nu_hz});
        }
        writer.write("measured_points.csv", meas_csv);
    } else {
        for (const auto& [field, nu] : result.theory) plot_rows.push_back({field, nu, 0.0});
    }
    writer.write("plot_transition_vs_field.csv", detail::xys_csv(plot_rows));
    writer.finish(s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count());
    return result;
}

/// Dispatches on the scenario kind; used by the CLI subcommands.
inline void run_scenario(const Scenario& s, const std::string& out_dir) {
    switch (s.kind) {
        case ScenarioKind::clock_scan: run_clock_scan(s, out_dir); return;
        case ScenarioKind::ramsey: run_ramsey(s, out_dir); return;
        case ScenarioKind::dfs: run_dfs(s, out_dir); return;
        case ScenarioKind::parabola: run_parabola(s, out_dir); return;
    }
}

} // namespace ionmem::harness

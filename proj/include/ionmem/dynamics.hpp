#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ionmem/core.hpp"
#include "ionmem/hyperfine.hpp"
#include "ionmem/noise.hpp"
#include "ionmem/parallel.hpp"
#include "ionmem/rng.hpp"

namespace ionmem::dynamics {

using complexd = std::complex<double>;

// ---------------------------------------------------------------------------
// Single-qubit evolution: Bloch-sphere rotations, noise-driven free
// precession, Ramsey/spin-echo sequences and Bernoulli projective detection.
// Basis order is (|up>, |down>); the accumulated free-precession phase
// multiplies the |up> amplitude.
// ---------------------------------------------------------------------------

struct QubitState {
    std::array<complexd, 2> amp{};

    double norm() const { return std::sqrt(std::norm(amp[0]) + std::norm(amp[1])); }
    double p_up() const { return std::norm(amp[0]); }
};

inline QubitState make_up() { return {{complexd{1.0, 0.0}, complexd{0.0, 0.0}}}; }
inline QubitState make_down() { return {{complexd{0.0, 0.0}, complexd{1.0, 0.0}}}; }

struct Rotation {
    double theta_rad = 0.0;
    double phi_rad = 0.0; // angle of the rotation axis from x, in the x-y plane
};

/// 2x2 matrix of R(theta, phi) = cos(theta/2) I
///   - i sin(theta/2) (cos(phi) sigma_x + sin(phi) sigma_y).
inline std::array<complexd, 4> rotation_matrix(Rotation r) {
    const double c = std::cos(0.5 * r.theta_rad);
    const double s = std::sin(0.5 * r.theta_rad);
    const complexd off_upper = complexd{0.0, -s} * std::polar(1.0, -r.phi_rad);
    const complexd off_lower = complexd{0.0, -s} * std::polar(1.0, r.phi_rad);
    return {complexd{c, 0.0}, off_upper, off_lower, complexd{c, 0.0}};
}

inline QubitState rotate(const QubitState& state, Rotation r) {
    const auto m = rotation_matrix(r);
    return {{m[0] * state.amp[0] + m[1] * state.amp[1],
             m[2] * state.amp[0] + m[3] * state.amp[1]}};
}

/// Free precession by phi multiplies the |up> amplitude by e^{i phi}.
inline QubitState apply_free_phase(const QubitState& state, double phi_rad) {
    QubitState out = state;
    out.amp[0] *= std::polar(1.0, phi_rad);
    return out;
}

/// Probability of detecting |up> after the closing pi/2 pulse at analysis
/// phase phi, given accumulated phase phi_D.
inline double ramsey_probability(double phi_d_rad, double phi_rad) {
    const double p = 0.5 * (1.0 - std::cos(phi_d_rad + phi_rad));
    return std::min(1.0, std::max(0.0, p));
}

namespace detail {

/// Instantaneous detuning (Hz) at field deviation dB.
inline double detuning_hz(const hyperfine::FieldSensitivity& s, double offset_hz, double db_t) {
    return offset_hz + s.d1_hz_per_t * db_t + s.d2_hz_per_t2 * db_t * db_t;
}

/// Integral of the detuning over [t_a, t_b] against the piecewise-constant
/// trace; partial edge intervals contribute pro rata.
inline double detuning_integral(const hyperfine::FieldSensitivity& s,
                                const noise::FieldTrace& trace, double offset_hz, double t_a,
                                double t_b) {
    const double slack = 1e-9 * trace.dt_s;
    if (t_b < t_a) throw RangeError("integration interval reversed");
    if (t_a < trace.t0_s - slack || t_b > trace.end_time() + slack)
        throw RangeError("integration interval outside trace support");
    t_a = std::max(t_a, trace.t0_s);
    t_b = std::min(t_b, trace.end_time());

    const auto n = trace.size();
    auto clamp_idx = [&](double t) {
        const auto raw = static_cast<long long>(std::floor((t - trace.t0_s) / trace.dt_s));
        return static_cast<std::size_t>(std::clamp<long long>(raw, 0, static_cast<long long>(n) - 1));
    };
    const std::size_t first = clamp_idx(t_a);
    const std::size_t last = clamp_idx(t_b == t_a ? t_a : std::nexttoward(t_b, t_a));
    double acc = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
        const double lo = std::max(t_a, trace.t0_s + trace.dt_s * static_cast<double>(k));
        const double hi = std::min(t_b, trace.t0_s + trace.dt_s * static_cast<double>(k + 1));
        if (hi > lo) acc += detuning_hz(s, offset_hz, trace.samples_t[k]) * (hi - lo);
    }
    return acc;
}

} // namespace detail

/// Accumulated free-precession phase phi_D = 2 pi * integral of
/// (offset + d1 dB + d2 dB^2) dt over [t_a, t_b].
inline double free_evolve_phase(const hyperfine::FieldSensitivity& sensitivity,
                                const noise::FieldTrace& trace, double detuning_offset_hz,
                                double t_a, double t_b) {
    return two_pi * detail::detuning_integral(sensitivity, trace, detuning_offset_hz, t_a, t_b);
}

inline void validate_echo_times(const std::vector<double>& echo_times_s, double t_r_s) {
    double prev = -1.0;
    for (double e : echo_times_s) {
        if (!(e >= 0.0) || !(e <= t_r_s)) throw ValidationError("echo time outside [0, T_R]");
        if (!(e > prev)) throw ValidationError("echo times must be strictly increasing");
        prev = e;
    }
}

/// Accumulated phase of a spin-echo sequence starting at t_start: each pi
/// pulse flips the sign of subsequently accumulated phase. With no echoes
/// this is exactly free_evolve_phase.
inline double apply_echo_sequence(const hyperfine::FieldSensitivity& sensitivity,
                                  const noise::FieldTrace& trace, double detuning_offset_hz,
                                  double t_start, double t_r_s,
                                  const std::vector<double>& echo_times_s) {
    validate_echo_times(echo_times_s, t_r_s);
    double acc = 0.0;
    double seg_start = 0.0;
    double sign = 1.0;
    auto add_segment = [&](double a, double b) {
        acc += sign * detail::detuning_integral(sensitivity, trace, detuning_offset_hz,
                                                t_start + a, t_start + b);
    };
    for (double e : echo_times_s) {
        add_segment(seg_start, e);
        seg_start = e;
        sign = -sign;
    }
    add_segment(seg_start, t_r_s);
    return two_pi * acc;
}

// ---------------------------------------------------------------------------
// Ramsey phase scans.
// ---------------------------------------------------------------------------

struct RamseySequence {
    double t_r_s = 0.0;
    std::vector<double> analysis_phases_rad;
    double detuning_offset_hz = 0.0;
    std::vector<double> echo_times_s; // empty for plain Ramsey
    int shots_per_phase = 0;
};

enum class ScanMode {
    per_shot,         // fresh noise realization for every shot
    sequential_drift, // one continuous trace; shots advance a shared clock
};

struct ScanOptions {
    ScanMode mode = ScanMode::per_shot;
    double dead_time_s = 0.0;    // prep + detection time per shot (sequential mode)
    double trace_dt_s = 0.0;     // 0 = choose automatically
    double fringe_contrast = 1.0; // phenomenological detection/preparation contrast
};

struct PhaseScanRow {
    double phi_rad = 0.0;
    long upcount = 0;
    long shots = 0;
};

struct PhaseScanRecord {
    std::vector<PhaseScanRow> rows;
    double t_r_s = 0.0;
    std::uint64_t seed = 0;
    std::string scenario_id;
};

namespace detail {

inline double auto_trace_dt(double t_r_s, const noise::NoiseSpec& spec, double total_duration_s) {
    double dt = std::max(t_r_s / 16.0, 1e-9);
    for (const auto& comp : spec.components)
        if (const auto* ou = std::get_if<noise::OrnsteinUhlenbeck>(&comp))
            dt = std::min(dt, ou->correlation_time_s / 16.0);
    // Cap the sample count of long sequential traces.
    dt = std::max(dt, total_duration_s / 4e6);
    return dt;
}

/// Per-shot detection probability along the full state path:
/// R(pi/2,0) -> free phase -> R(pi/2,phi) -> projective |up> measurement,
/// with the fringe contrast mixing toward 1/2.
inline double shot_p_up(double phi_d, double phi, double contrast) {
    QubitState psi = rotate(make_up(), Rotation{0.5 * pi, 0.0});
    psi = apply_free_phase(psi, phi_d);
    psi = rotate(psi, Rotation{0.5 * pi, phi});
    return contrast * psi.p_up() + (1.0 - contrast) * 0.5;
}

} // namespace detail

/// Runs one Ramsey phase scan under the given noise model. Per-shot mode
/// draws an independent trace per (phase, shot); sequential-drift mode walks
/// one continuous trace in listed phase order, so slow drift shows up in the
/// fitted fringe. Deterministic for fixed (seed, scan_id) at any worker
/// count.
inline PhaseScanRecord run_ramsey_phase_scan(const RamseySequence& seq,
                                             const hyperfine::FieldSensitivity& sensitivity,
                                             const noise::NoiseSpec& noise_spec,
                                             std::uint64_t master_seed,
                                             const ScanOptions& opts = {},
                                             std::uint64_t scan_id = 0) {
    if (seq.shots_per_phase < 1) throw ValidationError("shots_per_phase must be >= 1");
    if (!(seq.t_r_s > 0.0)) throw ValidationError("Ramsey interval must be > 0");
    if (seq.analysis_phases_rad.empty()) throw ValidationError("no analysis phases");
    if (!(opts.fringe_contrast >= 0.0 && opts.fringe_contrast <= 1.0))
        throw ValidationError("fringe contrast must be in [0, 1]");
    validate_echo_times(seq.echo_times_s, seq.t_r_s);
    noise_spec.validate();

    const std::size_t n_phases = seq.analysis_phases_rad.size();
    const std::size_t n_shots = static_cast<std::size_t>(seq.shots_per_phase);
    const std::size_t total = n_phases * n_shots;

    noise::FieldTrace shared_trace;
    double slot = 0.0;
    if (opts.mode == ScanMode::sequential_drift) {
        slot = seq.t_r_s + opts.dead_time_s;
        const double duration = slot * static_cast<double>(total);
        const double dt = opts.trace_dt_s > 0.0
                              ? opts.trace_dt_s
                              : detail::auto_trace_dt(seq.t_r_s, noise_spec, duration);
        shared_trace = noise::sample_field_trace(noise_spec, duration + dt, dt, master_seed,
                                                 derive_seed(scan_id, {stream_tag::ramsey_shot}));
    }

    std::vector<std::uint8_t> up(total, 0);
    parallel_for(total, [&](std::size_t idx) {
        const std::size_t pi_idx = idx / n_shots;
        const std::size_t shot = idx % n_shots;
        double phi_d = 0.0;
        if (opts.mode == ScanMode::per_shot) {
            if (noise_spec.empty()) {
                // No trace needed; the detuning offset acts alone.
                phi_d = two_pi * seq.detuning_offset_hz * seq.t_r_s;
                double sign = 1.0, prev = 0.0, acc = 0.0;
                if (!seq.echo_times_s.empty()) {
                    for (double e : seq.echo_times_s) {
                        acc += sign * (e - prev);
                        prev = e;
                        sign = -sign;
                    }
                    acc += sign * (seq.t_r_s - prev);
                    phi_d = two_pi * seq.detuning_offset_hz * acc;
                }
            } else {
                const double dt = opts.trace_dt_s > 0.0
                                      ? opts.trace_dt_s
                                      : detail::auto_trace_dt(seq.t_r_s, noise_spec, seq.t_r_s);
                const auto trace = noise::sample_field_trace(
                    noise_spec, seq.t_r_s + dt, dt, master_seed,
                    derive_seed(scan_id, {stream_tag::ramsey_shot, pi_idx, shot}));
                phi_d = apply_echo_sequence(sensitivity, trace, seq.detuning_offset_hz, 0.0,
                                            seq.t_r_s, seq.echo_times_s);
            }
        } else {
            const double t_start = slot * static_cast<double>(idx);
            phi_d = apply_echo_sequence(sensitivity, shared_trace, seq.detuning_offset_hz,
                                        t_start, seq.t_r_s, seq.echo_times_s);
        }
        const double p = detail::shot_p_up(phi_d, seq.analysis_phases_rad[pi_idx],
                                           opts.fringe_contrast);
        RandomStream det(
            derive_seed(master_seed, {stream_tag::ramsey_detect, scan_id, pi_idx, shot}));
        up[idx] = det.bernoulli(p) ? 1 : 0;
    });

    PhaseScanRecord record;
    record.t_r_s = seq.t_r_s;
    record.seed = master_seed;
    for (std::size_t pi_idx = 0; pi_idx < n_phases; ++pi_idx) {
        long count = 0;
        for (std::size_t shot = 0; shot < n_shots; ++shot)
            count += up[pi_idx * n_shots + shot];
        record.rows.push_back(
            {seq.analysis_phases_rad[pi_idx], count, static_cast<long>(n_shots)});
    }
    return record;
}

/// One phase scan per Ramsey interval, each on an independent substream.
inline std::vector<std::pair<double, PhaseScanRecord>> run_contrast_vs_interval(
    const std::vector<double>& t_r_list_s, const RamseySequence& sequence_template,
    const hyperfine::FieldSensitivity& sensitivity, const noise::NoiseSpec& noise_spec,
    std::uint64_t master_seed, const ScanOptions& opts = {}) {
    if (t_r_list_s.empty()) throw ValidationError("empty Ramsey-interval list");
    std::vector<std::pair<double, PhaseScanRecord>> out;
    for (std::size_t k = 0; k < t_r_list_s.size(); ++k) {
        RamseySequence seq = sequence_template;
        seq.t_r_s = t_r_list_s[k];
        out.emplace_back(t_r_list_s[k],
                         run_ramsey_phase_scan(seq, sensitivity, noise_spec, master_seed, opts,
                                               k + 1));
    }
    return out;
}

inline std::string phase_scan_csv(const PhaseScanRecord& record) {
    std::string out = "phi_rad,upcount,shots\n";
    for (const auto& row : record.rows) {
        out += format_double(row.phi_rad);
        out += ',';
        out += std::to_string(row.upcount);
        out += ',';
        out += std::to_string(row.shots);
        out += '\n';
    }
    return out;
}

} // namespace ionmem::dynamics

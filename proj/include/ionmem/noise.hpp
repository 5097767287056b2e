#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ionmem/core.hpp"
#include "ionmem/hyperfine.hpp"
#include "ionmem/rng.hpp"

namespace ionmem::noise {

// ---------------------------------------------------------------------------
// Stochastic magnetic-field model. A NoiseSpec is a superposition of
// primitive processes; a generated FieldTrace is piecewise constant over dt,
// with deterministic components evaluated at interval midpoints. Component
// k of a spec always draws from the substream derived from
// (master_seed, stream_id, k), so trace generation is reproducible and
// superposition holds exactly.
// ---------------------------------------------------------------------------

struct ConstantOffset {
    double offset_t = 0.0;
};

struct LinearDrift {
    double rate_t_per_s = 0.0;
};

struct RandomWalk {
    double diffusion_t2_per_s = 0.0;
};

struct OrnsteinUhlenbeck {
    double rms_t = 0.0;
    double correlation_time_s = 0.0;
};

struct Sinusoid {
    double amplitude_t = 0.0;
    double frequency_hz = 0.0;
    double phase_rad = 0.0;
};

struct WhiteNoise {
    double rms_per_sample_t = 0.0;
};

using NoiseComponent = std::variant<ConstantOffset, LinearDrift, RandomWalk, OrnsteinUhlenbeck,
                                    Sinusoid, WhiteNoise>;

struct NoiseSpec {
    std::vector<NoiseComponent> components;

    void validate() const {
        auto finite = [](double x) { return std::isfinite(x); };
        for (const auto& comp : components) {
            std::visit(
                [&](const auto& c) {
                    using T = std::decay_t<decltype(c)>;
                    if constexpr (std::is_same_v<T, ConstantOffset>) {
                        if (!finite(c.offset_t)) throw ValidationError("constant offset not finite");
                    } else if constexpr (std::is_same_v<T, LinearDrift>) {
                        if (!finite(c.rate_t_per_s)) throw ValidationError("drift rate not finite");
                    } else if constexpr (std::is_same_v<T, RandomWalk>) {
                        if (!finite(c.diffusion_t2_per_s) || c.diffusion_t2_per_s < 0.0)
                            throw ValidationError("random-walk diffusion must be >= 0");
                    } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
                        if (!finite(c.rms_t) || c.rms_t < 0.0)
                            throw ValidationError("OU rms must be >= 0");
                        if (!finite(c.correlation_time_s) || !(c.correlation_time_s > 0.0))
                            throw ValidationError("OU correlation time must be > 0");
                    } else if constexpr (std::is_same_v<T, Sinusoid>) {
                        if (!finite(c.amplitude_t) || c.amplitude_t < 0.0)
                            throw ValidationError("sinusoid amplitude must be >= 0");
                        if (!finite(c.frequency_hz) || !finite(c.phase_rad))
                            throw ValidationError("sinusoid parameters not finite");
                    } else if constexpr (std::is_same_v<T, WhiteNoise>) {
                        if (!finite(c.rms_per_sample_t) || c.rms_per_sample_t < 0.0)
                            throw ValidationError("white-noise rms must be >= 0");
                    }
                },
                comp);
        }
    }

    bool empty() const { return components.empty(); }
};

/// Sampled deviation B(t) - B_nominal. Sample k holds the constant value on
/// [t0 + k dt, t0 + (k+1) dt).
struct FieldTrace {
    double t0_s = 0.0;
    double dt_s = 0.0;
    std::vector<double> samples_t;

    std::size_t size() const { return samples_t.size(); }
    double end_time() const { return t0_s + dt_s * static_cast<double>(samples_t.size()); }
    double midpoint_time(std::size_t k) const {
        return t0_s + dt_s * (static_cast<double>(k) + 0.5);
    }
};

struct GradientTrace {
    FieldTrace common;       // field at both ions
    FieldTrace differential; // field at ion 2 minus field at ion 1
};

inline FieldTrace sample_field_trace(const NoiseSpec& spec, double duration_s, double dt_s,
                                     std::uint64_t master_seed, std::uint64_t stream_id) {
    if (!(dt_s > 0.0) || !(duration_s >= dt_s))
        throw ValidationError("trace needs duration >= dt > 0");
    spec.validate();

    FieldTrace trace;
    trace.t0_s = 0.0;
    trace.dt_s = dt_s;
    const auto n = static_cast<std::size_t>(std::llround(duration_s / dt_s));
    trace.samples_t.assign(std::max<std::size_t>(n, 1), 0.0);

    for (std::size_t ci = 0; ci < spec.components.size(); ++ci) {
        RandomStream rs(derive_seed(master_seed, {stream_tag::noise_component, stream_id, ci}));
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, ConstantOffset>) {
                    for (double& s : trace.samples_t) s += c.offset_t;
                } else if constexpr (std::is_same_v<T, LinearDrift>) {
                    for (std::size_t k = 0; k < trace.size(); ++k)
                        trace.samples_t[k] += c.rate_t_per_s * trace.midpoint_time(k);
                } else if constexpr (std::is_same_v<T, RandomWalk>) {
                    const double step = std::sqrt(c.diffusion_t2_per_s * dt_s);
                    double w = 0.0;
                    for (double& s : trace.samples_t) {
                        w += step * rs.normal();
                        s += w;
                    }
                } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
                    // Exact discretization, started from the stationary law.
                    const double rho = std::exp(-dt_s / c.correlation_time_s);
                    const double kick = c.rms_t * std::sqrt(1.0 - rho * rho);
                    double x = c.rms_t * rs.normal();
                    for (std::size_t k = 0; k < trace.size(); ++k) {
                        if (k > 0) x = rho * x + kick * rs.normal();
                        trace.samples_t[k] += x;
                    }
                } else if constexpr (std::is_same_v<T, Sinusoid>) {
                    for (std::size_t k = 0; k < trace.size(); ++k)
                        trace.samples_t[k] +=
                            c.amplitude_t *
                            std::sin(two_pi * c.frequency_hz * trace.midpoint_time(k) +
                                     c.phase_rad);
                } else if constexpr (std::is_same_v<T, WhiteNoise>) {
                    for (double& s : trace.samples_t) s += c.rms_per_sample_t * rs.normal();
                }
            },
            spec.components[ci]);
    }
    return trace;
}

inline GradientTrace sample_gradient_trace(const NoiseSpec& common_spec,
                                           const NoiseSpec& differential_spec, double duration_s,
                                           double dt_s, std::uint64_t master_seed) {
    GradientTrace g;
    g.common = sample_field_trace(common_spec, duration_s, dt_s,
                                  derive_seed(master_seed, {stream_tag::gradient_common}), 0);
    g.differential =
        sample_field_trace(differential_spec, duration_s, dt_s,
                           derive_seed(master_seed, {stream_tag::gradient_differential}), 0);
    return g;
}

struct TraceStats {
    double mean_t = 0.0;
    double rms_deviation_t = 0.0; // root-mean-square deviation from the mean
    double min_t = 0.0;
    double max_t = 0.0;
};

inline TraceStats trace_statistics(const FieldTrace& trace) {
    if (trace.samples_t.empty()) throw ValidationError("statistics of an empty trace");
    TraceStats st;
    st.min_t = st.max_t = trace.samples_t.front();
    double sum = 0.0;
    for (double s : trace.samples_t) {
        sum += s;
        st.min_t = std::min(st.min_t, s);
        st.max_t = std::max(st.max_t, s);
    }
    st.mean_t = sum / static_cast<double>(trace.size());
    double ssq = 0.0;
    for (double s : trace.samples_t) ssq += (s - st.mean_t) * (s - st.mean_t);
    st.rms_deviation_t = std::sqrt(ssq / static_cast<double>(trace.size()));
    return st;
}

/// Time for a static field error delta_B to accumulate `phase_threshold` of
/// phase through the local frequency shift d1 dB + d2 dB^2. Returns +inf
/// when the shift vanishes.
inline double predict_dephasing_time(const hyperfine::FieldSensitivity& sensitivity,
                                     double delta_b_t, double phase_threshold_rad) {
    if (!(phase_threshold_rad > 0.0)) throw ValidationError("phase threshold must be > 0");
    const double shift_hz =
        sensitivity.d1_hz_per_t * delta_b_t + sensitivity.d2_hz_per_t2 * delta_b_t * delta_b_t;
    if (shift_hz == 0.0) return std::numeric_limits<double>::infinity();
    return phase_threshold_rad / (two_pi * std::abs(shift_hz));
}

inline std::string trace_csv(const FieldTrace& trace) {
    std::string out = "t_s,delta_B_T\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out += format_double(trace.midpoint_time(k));
        out += ',';
        out += format_double(trace.samples_t[k]);
        out += '\n';
    }
    return out;
}

} // namespace ionmem::noise

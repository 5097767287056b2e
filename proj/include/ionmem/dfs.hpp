#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "ionmem/core.hpp"
#include "ionmem/dynamics.hpp"
#include "ionmem/noise.hpp"
#include "ionmem/parallel.hpp"
#include "ionmem/rng.hpp"

namespace ionmem::dfs {

using complexd = std::complex<double>;

// ---------------------------------------------------------------------------
// Two-qubit decoherence-free-subspace memory. Basis order |00>, |01>, |10>,
// |11>; |1> is the bright (fluorescing) level. A uniform field shifts |01>
// and |10> identically, so states in span{|01>, |10>} only respond to the
// field *difference* between the ions.
// ---------------------------------------------------------------------------

struct TwoQubitState {
    std::array<complexd, 4> amp{};

    double norm() const {
        double n = 0.0;
        for (const auto& a : amp) n += std::norm(a);
        return std::sqrt(n);
    }
};

inline TwoQubitState psi_plus() {
    const double r = 1.0 / std::sqrt(2.0);
    return {{complexd{0.0, 0.0}, complexd{r, 0.0}, complexd{r, 0.0}, complexd{0.0, 0.0}}};
}

inline TwoQubitState psi_minus() {
    const double r = 1.0 / std::sqrt(2.0);
    return {{complexd{0.0, 0.0}, complexd{r, 0.0}, complexd{-r, 0.0}, complexd{0.0, 0.0}}};
}

inline TwoQubitState phi_plus() {
    const double r = 1.0 / std::sqrt(2.0);
    return {{complexd{r, 0.0}, complexd{0.0, 0.0}, complexd{0.0, 0.0}, complexd{r, 0.0}}};
}

/// Idealized entangling-gate output (|00> - i |11>)/sqrt(2).
inline TwoQubitState prepare_phi_minus_i() {
    const double r = 1.0 / std::sqrt(2.0);
    return {{complexd{r, 0.0}, complexd{0.0, 0.0}, complexd{0.0, 0.0}, complexd{0.0, -r}}};
}

inline complexd overlap(const TwoQubitState& bra, const TwoQubitState& ket) {
    complexd acc{0.0, 0.0};
    for (std::size_t i = 0; i < 4; ++i) acc += std::conj(bra.amp[i]) * ket.amp[i];
    return acc;
}

/// Applies the same single-qubit rotation to both ions (R tensor R).
inline TwoQubitState collective_rotate(const TwoQubitState& state, dynamics::Rotation r) {
    const auto m = dynamics::rotation_matrix(r);
    auto one = [&](int row, int col) { return m[2 * row + col]; };
    TwoQubitState out;
    for (int r1 = 0; r1 < 2; ++r1)
        for (int r2 = 0; r2 < 2; ++r2) {
            complexd acc{0.0, 0.0};
            for (int c1 = 0; c1 < 2; ++c1)
                for (int c2 = 0; c2 < 2; ++c2)
                    acc += one(r1, c1) * one(r2, c2) * state.amp[2 * c1 + c2];
            out.amp[2 * r1 + r2] = acc;
        }
    return out;
}

/// Differential phase accumulation inside the DFS: e^{+i dphi/2} on |01>,
/// e^{-i dphi/2} on |10> (the common-mode phase is global there and is
/// dropped). Takes |Psi+> to cos(dphi/2)|Psi+> + i sin(dphi/2)|Psi->.
inline TwoQubitState gradient_evolve(const TwoQubitState& state, double delta_phi_rad) {
    const double outside = std::norm(state.amp[0]) + std::norm(state.amp[3]);
    if (outside > 1e-9)
        throw SubspaceError("gradient_evolve input has support outside span{|01>, |10>}");
    TwoQubitState out = state;
    out.amp[1] *= std::polar(1.0, 0.5 * delta_phi_rad);
    out.amp[2] *= std::polar(1.0, -0.5 * delta_phi_rad);
    return out;
}

struct DfsProbabilities {
    double p_psi_plus = 0.0;
    double p_psi_minus = 0.0;
    double p_leak = 0.0;
};

inline DfsProbabilities dfs_probabilities(const TwoQubitState& state) {
    DfsProbabilities p;
    p.p_psi_plus = std::norm(overlap(psi_plus(), state));
    p.p_psi_minus = std::norm(overlap(psi_minus(), state));
    p.p_leak = std::norm(state.amp[0]) + std::norm(state.amp[3]);
    return p;
}

// ---------------------------------------------------------------------------
// Parity readout: final collective R(pi/2, 0), then per-shot sampling of the
// number of bright ions, optionally through Poisson photon counting with
// fixed classification thresholds.
// ---------------------------------------------------------------------------

struct DetectionModel {
    enum class Mode { ideal, poisson };
    Mode mode = Mode::ideal;
    double lambda_bright = 30.0; // mean photons per bright ion per window
    double lambda_background = 2.0;
    int threshold_01 = -1; // counts <= threshold_01 classify as 0 bright; -1 = auto
    int threshold_12 = -1;
};

namespace detail {

inline double poisson_pmf(double mean, int k) {
    return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

inline double poisson_cdf(double mean, int k) {
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) acc += poisson_pmf(mean, i);
    return acc;
}

/// Best integer cut between two Poisson means: minimizes total tail mass.
inline int best_threshold(double mean_low, double mean_high) {
    int best = static_cast<int>(mean_low);
    double best_err = 2.0;
    const int hi = static_cast<int>(mean_high + 8.0 * std::sqrt(mean_high + 1.0)) + 1;
    for (int t = 0; t <= hi; ++t) {
        const double err = (1.0 - poisson_cdf(mean_low, t)) + poisson_cdf(mean_high, t);
        if (err < best_err) {
            best_err = err;
            best = t;
        }
    }
    return best;
}

struct ResolvedThresholds {
    int t01 = 0;
    int t12 = 0;
    double misclassification = 0.0; // worst-case per-shot probability
};

inline ResolvedThresholds resolve_thresholds(const DetectionModel& model) {
    const double m0 = model.lambda_background;
    const double m1 = model.lambda_background + model.lambda_bright;
    const double m2 = model.lambda_background + 2.0 * model.lambda_bright;
    ResolvedThresholds r;
    r.t01 = model.threshold_01 >= 0 ? model.threshold_01 : best_threshold(m0, m1);
    r.t12 = model.threshold_12 >= 0 ? model.threshold_12 : best_threshold(m1, m2);
    const double err0 = 1.0 - poisson_cdf(m0, r.t01);
    const double err1 = poisson_cdf(m1, r.t01) + (1.0 - poisson_cdf(m1, r.t12));
    const double err2 = poisson_cdf(m2, r.t12);
    r.misclassification = std::max({err0, err1, err2});
    return r;
}

} // namespace detail

struct ParityRow {
    double t_d_s = 0.0;
    std::array<long, 3> bright_tallies{}; // shots classified as 0, 1, 2 bright ions
    long shots = 0;
    bool detection_warning = false; // Poisson thresholds misclassify > 1% of shots
};

struct ParityRecord {
    std::vector<ParityRow> rows;
};

/// Applies the final collective R(pi/2, 0) and samples `shots` detection
/// outcomes of the resulting state.
inline ParityRow measure_parity_counts(const TwoQubitState& state, const DetectionModel& model,
                                       long shots, std::uint64_t seed) {
    if (shots < 1) throw ValidationError("shots must be >= 1");
    const TwoQubitState readout = collective_rotate(state, dynamics::Rotation{0.5 * pi, 0.0});

    std::array<double, 4> cumulative{};
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        acc += std::norm(readout.amp[i]);
        cumulative[i] = acc;
    }
    detail::ResolvedThresholds thresholds;
    if (model.mode == DetectionModel::Mode::poisson)
        thresholds = detail::resolve_thresholds(model);

    ParityRow row;
    row.shots = shots;
    row.detection_warning =
        model.mode == DetectionModel::Mode::poisson && thresholds.misclassification > 0.01;
    RandomStream rs(seed);
    for (long s = 0; s < shots; ++s) {
        const double u = rs.uniform01() * acc;
        int outcome = 0;
        while (outcome < 3 && u > cumulative[outcome]) ++outcome;
        const int bright = (outcome >> 1) + (outcome & 1); // popcount of the basis index
        int classified = bright;
        if (model.mode == DetectionModel::Mode::poisson) {
            const long photons =
                rs.poisson(model.lambda_background + bright * model.lambda_bright);
            classified = photons <= thresholds.t01 ? 0 : (photons <= thresholds.t12 ? 1 : 2);
        }
        ++row.bright_tallies[classified];
    }
    return row;
}

// ---------------------------------------------------------------------------
// Lifetime experiment: prepare Phi_-i, rotate into Psi+, accumulate the
// noisy differential phase for a delay t_D, read out parity. The
// magnetic-field difference converts to a differential rate through the d1
// of the field-sensitive transition.
// ---------------------------------------------------------------------------

struct LifetimeOptions {
    DetectionModel detection;
    double initial_contrast = 1.0;    // preparation imperfection: fraction of undephased shots
    double extra_decay_rate_hz = 0.0; // additional exponential contrast decay
    double trace_dt_s = 0.0;          // 0 = choose automatically
};

struct PPsiMinusPoint {
    double t_d_s = 0.0;
    double p = 0.0;
    double sigma = 0.0;
    long shots = 0;
};

struct LifetimeResult {
    ParityRecord parity;
    std::vector<PPsiMinusPoint> p_psi_minus;
};

namespace detail {

inline double auto_gradient_dt(const noise::NoiseSpec& spec, double t_d_s) {
    double dt = std::max(t_d_s / 32.0, 1e-6);
    for (const auto& comp : spec.components)
        if (const auto* ou = std::get_if<noise::OrnsteinUhlenbeck>(&comp))
            dt = std::min(dt, ou->correlation_time_s / 8.0);
    return dt;
}

} // namespace detail

inline LifetimeResult run_dfs_lifetime_experiment(const std::vector<double>& delays_s,
                                                  const noise::NoiseSpec& common_spec,
                                                  const noise::NoiseSpec& differential_spec,
                                                  double d1_hz_per_t, long shots,
                                                  std::uint64_t master_seed,
                                                  const LifetimeOptions& opts = {}) {
    if (shots < 1) throw ValidationError("shots must be >= 1");
    if (!(opts.initial_contrast >= 0.0 && opts.initial_contrast <= 1.0))
        throw ValidationError("initial contrast must be in [0, 1]");
    if (!(opts.extra_decay_rate_hz >= 0.0)) throw ValidationError("decay rate must be >= 0");
    for (double t : delays_s)
        if (!(t >= 0.0)) throw ValidationError("delays must be >= 0");
    common_spec.validate();
    differential_spec.validate();

    // Pin the classification thresholds once so per-shot readout stays cheap.
    DetectionModel detection = opts.detection;
    bool detection_warning = false;
    if (detection.mode == DetectionModel::Mode::poisson) {
        const auto resolved = detail::resolve_thresholds(detection);
        detection.threshold_01 = resolved.t01;
        detection.threshold_12 = resolved.t12;
        detection_warning = resolved.misclassification > 0.01;
    }

    LifetimeResult result;
    result.parity.rows.resize(delays_s.size());

    for (std::size_t di = 0; di < delays_s.size(); ++di) {
        const double t_d = delays_s[di];
        std::vector<std::array<long, 3>> tallies(static_cast<std::size_t>(shots));

        parallel_for(static_cast<std::size_t>(shots), [&](std::size_t shot) {
            double delta_phi = 0.0;
            if (t_d > 0.0 && !differential_spec.empty()) {
                const double dt = opts.trace_dt_s > 0.0
                                      ? opts.trace_dt_s
                                      : detail::auto_gradient_dt(differential_spec, t_d);
                const auto grad = noise::sample_gradient_trace(
                    common_spec, differential_spec, std::max(t_d, dt) + dt, dt,
                    derive_seed(master_seed, {stream_tag::dfs_shot, di, shot}));
                hyperfine::FieldSensitivity diff_sens;
                diff_sens.d1_hz_per_t = d1_hz_per_t;
                delta_phi = two_pi * dynamics::detail::detuning_integral(
                                         diff_sens, grad.differential, 0.0, 0.0, t_d);
            }
            // Preparation imperfection and extra decay act as per-shot full
            // dephasing events, which reproduces the contrast factors
            // initial_contrast * exp(-rate * t_D) on the ensemble average.
            RandomStream deph(derive_seed(master_seed, {stream_tag::dfs_dephase, di, shot}));
            const double survive = opts.initial_contrast * std::exp(-opts.extra_decay_rate_hz * t_d);
            if (!deph.bernoulli(survive)) delta_phi += deph.uniform(0.0, two_pi);

            TwoQubitState psi = prepare_phi_minus_i();
            psi = collective_rotate(psi, dynamics::Rotation{0.5 * pi, -0.25 * pi});
            psi = gradient_evolve(psi, delta_phi);
            const ParityRow one = measure_parity_counts(
                psi, detection, 1,
                derive_seed(master_seed, {stream_tag::dfs_detect, di, shot}));
            tallies[shot] = one.bright_tallies;
        });

        ParityRow& row = result.parity.rows[di];
        row.t_d_s = t_d;
        row.shots = shots;
        row.detection_warning = detection_warning;
        for (std::size_t s = 0; s < tallies.size(); ++s)
            for (int b = 0; b < 3; ++b) row.bright_tallies[b] += tallies[s][b];

        // One bright ion tags |Psi->: the final pulse sends |Psi+> to
        // |Phi+> (0 or 2 bright) and leaves |Psi-> alone.
        const double n = static_cast<double>(shots);
        const double k = static_cast<double>(row.bright_tallies[1]);
        const double p_tilde = (k + 2.0) / (n + 4.0);
        result.p_psi_minus.push_back(
            {t_d, k / n, std::sqrt(p_tilde * (1.0 - p_tilde) / (n + 4.0)), shots});
    }
    return result;
}

inline std::string lifetime_csv(const LifetimeResult& result) {
    std::string out = "t_D_s,p_psi_minus,sigma,shots\n";
    for (const auto& p : result.p_psi_minus) {
        out += format_double(p.t_d_s);
        out += ',';
        out += format_double(p.p);
        out += ',';
        out += format_double(p.sigma);
        out += ',';
        out += std::to_string(p.shots);
        out += '\n';
    }
    return out;
}

} // namespace ionmem::dfs

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ionmem/core.hpp"
#include "ionmem/dynamics.hpp"
#include "ionmem/rng.hpp"

namespace ionmem::estimation {

// ---------------------------------------------------------------------------
// Weighted nonlinear least squares by damped Gauss-Newton with analytic
// Jacobians. Models here are smooth and low-dimensional (2-5 parameters),
// so normal equations with a step-halving line search are ample.
// ---------------------------------------------------------------------------

namespace linalg {

/// Solves A x = b for small dense systems (Gaussian elimination, partial
/// pivoting). A is row-major n*n and is destroyed. Returns false if singular.
inline bool solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        if (a[pivot * n + col] == 0.0) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] * inv;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        double acc = b[col];
        for (std::size_t c = col + 1; c < n; ++c) acc -= a[col * n + c] * b[c];
        b[col] = acc / a[col * n + col];
    }
    return true;
}

/// Inverse of a small dense matrix (Gauss-Jordan); returns false if singular.
inline bool invert(std::vector<double> a, std::vector<double>& inv_out, std::size_t n) {
    inv_out.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv_out[i * n + i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        if (a[pivot * n + col] == 0.0) return false;
        if (pivot != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a[col * n + c], a[pivot * n + c]);
                std::swap(inv_out[col * n + c], inv_out[pivot * n + c]);
            }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col * n + c] *= inv;
            inv_out[col * n + c] *= inv;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a[r * n + col];
            if (factor == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r * n + c] -= factor * a[col * n + c];
                inv_out[r * n + c] -= factor * inv_out[col * n + c];
            }
        }
    }
    return true;
}

} // namespace linalg

struct GaussNewtonOptions {
    int max_iterations = 200;
    double rel_step_tol = 1e-10;
    double chi2_rel_tol = 1e-13;
    int max_halvings = 30;
};

struct GaussNewtonResult {
    std::vector<double> params;
    std::vector<double> covariance; // row-major p*p, from the final Jacobian
    std::vector<double> sigmas;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// model(p, i, grad) returns the model prediction f_i and fills grad with
/// df_i/dp. Residuals are (y_i - f_i)/sigma_i.
template <typename Model>
GaussNewtonResult gauss_newton(Model&& model, const std::vector<double>& y,
                               const std::vector<double>& sigma, std::vector<double> p,
                               const std::vector<std::pair<double, double>>& bounds,
                               const GaussNewtonOptions& opts = {}) {
    const std::size_t n_data = y.size();
    const std::size_t n_par = p.size();

    auto clamp_params = [&](std::vector<double>& q) {
        for (std::size_t j = 0; j < n_par; ++j)
            q[j] = std::min(bounds[j].second, std::max(bounds[j].first, q[j]));
    };
    clamp_params(p);

    std::vector<double> grad(n_par);
    auto chi2_of = [&](const std::vector<double>& q) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_data; ++i) {
            const double r = (y[i] - model(q, i, grad.data())) / sigma[i];
            acc += r * r;
        }
        return acc;
    };

    GaussNewtonResult result;
    double chi2 = chi2_of(p);
    std::vector<double> jtj(n_par * n_par), jtr(n_par), delta(n_par), trial(n_par);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        result.iterations = iter + 1;
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (std::size_t i = 0; i < n_data; ++i) {
            const double f = model(p, i, grad.data());
            const double w = 1.0 / sigma[i];
            const double r = (y[i] - f) * w;
            for (std::size_t j = 0; j < n_par; ++j) {
                const double gj = grad[j] * w;
                jtr[j] += gj * r;
                for (std::size_t k = j; k < n_par; ++k) jtj[j * n_par + k] += gj * grad[k] * w;
            }
        }
        for (std::size_t j = 0; j < n_par; ++j)
            for (std::size_t k = 0; k < j; ++k) jtj[j * n_par + k] = jtj[k * n_par + j];

        std::vector<double> lhs = jtj, rhs = jtr;
        if (!linalg::solve(lhs, rhs, n_par)) break; // singular normal equations
        delta = rhs;

        double step = 1.0;
        double chi2_new = chi2;
        bool accepted = false;
        for (int h = 0; h < opts.max_halvings; ++h, step *= 0.5) {
            for (std::size_t j = 0; j < n_par; ++j) trial[j] = p[j] + step * delta[j];
            clamp_params(trial);
            chi2_new = chi2_of(trial);
            if (chi2_new <= chi2 * (1.0 + 1e-14) + 1e-300) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        double rel_step = 0.0;
        for (std::size_t j = 0; j < n_par; ++j)
            rel_step = std::max(rel_step, std::abs(trial[j] - p[j]) /
                                              std::max(1e-12, std::abs(trial[j])));
        const double chi2_drop = chi2 - chi2_new;
        p = trial;
        chi2 = chi2_new;
        if (rel_step < opts.rel_step_tol || chi2_drop <= opts.chi2_rel_tol * (chi2 + 1e-300)) {
            result.converged = true;
            break;
        }
    }

    result.params = p;
    result.chi2 = chi2;
    result.covariance.assign(n_par * n_par, 0.0);
    result.sigmas.assign(n_par, 0.0);
    // Covariance from the final Jacobian.
    std::fill(jtj.begin(), jtj.end(), 0.0);
    for (std::size_t i = 0; i < n_data; ++i) {
        model(p, i, grad.data());
        const double w = 1.0 / sigma[i];
        for (std::size_t j = 0; j < n_par; ++j)
            for (std::size_t k = j; k < n_par; ++k)
                jtj[j * n_par + k] += grad[j] * grad[k] * w * w;
    }
    for (std::size_t j = 0; j < n_par; ++j)
        for (std::size_t k = 0; k < j; ++k) jtj[j * n_par + k] = jtj[k * n_par + j];
    if (linalg::invert(jtj, result.covariance, n_par))
        for (std::size_t j = 0; j < n_par; ++j)
            result.sigmas[j] = std::sqrt(std::max(0.0, result.covariance[j * n_par + j]));
    return result;
}

/// Binomial standard error with the Agresti-Coull floor, so P in {0, 1}
/// never produces a zero weight.
inline double binomial_sigma(long upcount, long shots) {
    const double n = static_cast<double>(shots) + 4.0;
    const double p = (static_cast<double>(upcount) + 2.0) / n;
    return std::sqrt(p * (1.0 - p) / n);
}

// ---------------------------------------------------------------------------
// Fringe fit: f(phi) = a - (b/2) cos(d phi + phi_D).
// ---------------------------------------------------------------------------

struct PhaseScanFit {
    double a = 0.0, b = 0.0, d = 1.0, phi_d = 0.0;
    double a_sigma = 0.0, b_sigma = 0.0, d_sigma = 0.0, phi_d_sigma = 0.0;
    std::vector<double> covariance; // 4x4 row-major (a, b, d, phi_d)
    double chi2 = 0.0;
    int dof = 0;
    bool converged = false;
    bool flat = false; // degenerate zero-variance input
};

inline PhaseScanFit fit_phase_scan(const dynamics::PhaseScanRecord& record) {
    const auto& rows = record.rows;
    std::vector<double> phi, y, sig;
    for (const auto& r : rows) {
        if (r.shots < 1 || r.upcount < 0 || r.upcount > r.shots)
            throw ValidationError("phase-scan row with invalid counts");
        phi.push_back(r.phi_rad);
        y.push_back(static_cast<double>(r.upcount) / static_cast<double>(r.shots));
        sig.push_back(binomial_sigma(r.upcount, r.shots));
    }
    std::vector<double> distinct = phi;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 5 || distinct.back() - distinct.front() <= pi)
        throw ValidationError("phase scan needs >= 5 distinct phases spanning > pi");

    PhaseScanFit fit;
    fit.dof = static_cast<int>(rows.size()) - 4;

    const double y_min = *std::min_element(y.begin(), y.end());
    const double y_max = *std::max_element(y.begin(), y.end());
    if (y_max == y_min) {
        double sw = 0.0;
        for (double s : sig) sw += 1.0 / (s * s);
        fit.a = y_min;
        fit.b = 0.0;
        fit.d = 1.0;
        fit.phi_d = 0.0;
        fit.a_sigma = std::sqrt(1.0 / sw);
        fit.b_sigma = 2.0 * std::sqrt(2.0 / sw);
        fit.covariance.assign(16, 0.0);
        fit.covariance[0] = fit.a_sigma * fit.a_sigma;
        fit.covariance[5] = fit.b_sigma * fit.b_sigma;
        fit.converged = true;
        fit.flat = true;
        return fit;
    }

    // Coarse grid over (d, phi_D) with a linear solve for the amplitudes.
    double best_chi2 = std::numeric_limits<double>::infinity();
    double init_a = 0.5, init_b = 0.5, init_d = 1.0, init_phid = 0.0;
    for (int di = 0; di <= 8; ++di) {
        const double d_try = 0.9 + 0.025 * di;
        for (int pj = 0; pj < 64; ++pj) {
            const double phid_try = two_pi * pj / 64.0;
            double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double w = 1.0 / (sig[i] * sig[i]);
                const double basis = std::cos(d_try * phi[i] + phid_try);
                s11 += w;
                s12 += w * basis;
                s22 += w * basis * basis;
                r1 += w * y[i];
                r2 += w * y[i] * basis;
            }
            const double det = s11 * s22 - s12 * s12;
            if (det == 0.0) continue;
            const double a_try = (s22 * r1 - s12 * r2) / det;
            const double c_try = (s11 * r2 - s12 * r1) / det; // coefficient of cos
            double chi2 = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double f = a_try + c_try * std::cos(d_try * phi[i] + phid_try);
                const double r = (y[i] - f) / sig[i];
                chi2 += r * r;
            }
            if (chi2 < best_chi2) {
                best_chi2 = chi2;
                init_a = a_try;
                init_b = -2.0 * c_try;
                init_d = d_try;
                init_phid = phid_try;
            }
        }
    }
    if (init_b < 0.0) {
        init_b = -init_b;
        init_phid += pi;
    }

    const double inf = std::numeric_limits<double>::infinity();
    auto model = [&](const std::vector<double>& p, std::size_t i, double* grad) {
        const double psi = p[2] * phi[i] + p[3];
        const double c = std::cos(psi), s = std::sin(psi);
        grad[0] = 1.0;
        grad[1] = -0.5 * c;
        grad[2] = 0.5 * p[1] * s * phi[i];
        grad[3] = 0.5 * p[1] * s;
        return p[0] - 0.5 * p[1] * c;
    };
    auto gn = gauss_newton(model, y, sig, {init_a, init_b, init_d, init_phid},
                           {{-inf, inf}, {0.0, inf}, {0.5, 1.5}, {-inf, inf}});

    fit.a = gn.params[0];
    fit.b = gn.params[1];
    fit.d = gn.params[2];
    fit.phi_d = wrap_angle(gn.params[3]);
    fit.a_sigma = gn.sigmas[0];
    fit.b_sigma = gn.sigmas[1];
    fit.d_sigma = gn.sigmas[2];
    fit.phi_d_sigma = gn.sigmas[3];
    fit.covariance = gn.covariance;
    fit.chi2 = gn.chi2;
    fit.converged = gn.converged;
    return fit;
}

// ---------------------------------------------------------------------------
// Contrast decay fit: b(T_R) = b0 exp(-T_R / tau).
// ---------------------------------------------------------------------------

struct DecayPoint {
    double t_r_s = 0.0;
    double contrast = 0.0;
    double sigma = 0.0;
};

struct DecayFit {
    double b0 = 0.0;
    double tau_s = 0.0; // +inf when the data show no decay
    double b0_sigma = 0.0;
    double tau_sigma_s = 0.0;
    double tau_sigma_bootstrap_s = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    bool converged = false;
    bool unbounded = false;
};

namespace detail {

struct LogLinearInit {
    double b0 = 1.0;
    double rate = 0.0;
    bool decaying = false;
};

inline LogLinearInit log_linear_init(const std::vector<DecayPoint>& pts) {
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (const auto& p : pts) {
        if (!(p.contrast > 0.0)) continue;
        const double w = (p.contrast * p.contrast) / (p.sigma * p.sigma);
        const double ly = std::log(p.contrast);
        sw += w;
        swx += w * p.t_r_s;
        swy += w * ly;
        swxx += w * p.t_r_s * p.t_r_s;
        swxy += w * p.t_r_s * ly;
    }
    LogLinearInit init;
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0) return init;
    const double slope = (sw * swxy - swx * swy) / det;
    const double intercept = (swxx * swy - swx * swxy) / det;
    init.b0 = std::exp(intercept);
    init.rate = -slope;
    init.decaying = slope < 0.0;
    return init;
}

} // namespace detail

inline DecayFit fit_exponential_decay(const std::vector<DecayPoint>& points) {
    if (points.size() < 3) throw ValidationError("decay fit needs >= 3 points");
    std::vector<double> times;
    std::size_t nonpositive = 0;
    for (const auto& p : points) {
        if (!(p.sigma > 0.0)) throw ValidationError("decay fit needs positive sigmas");
        times.push_back(p.t_r_s);
        if (!(p.contrast > 0.0)) ++nonpositive;
    }
    std::sort(times.begin(), times.end());
    if (std::unique(times.begin(), times.end()) - times.begin() < 2)
        throw ValidationError("decay fit needs >= 2 distinct intervals");
    if (2 * nonpositive > points.size())
        throw FitDomainError("more than half of the contrasts are nonpositive");

    DecayFit fit;
    fit.dof = static_cast<int>(points.size()) - 2;

    const auto init = detail::log_linear_init(points);
    if (!init.decaying) {
        double sw = 0.0, swy = 0.0;
        for (const auto& p : points) {
            const double w = 1.0 / (p.sigma * p.sigma);
            sw += w;
            swy += w * p.contrast;
        }
        fit.b0 = swy / sw;
        fit.b0_sigma = std::sqrt(1.0 / sw);
        fit.tau_s = std::numeric_limits<double>::infinity();
        fit.unbounded = true;
        return fit;
    }

    std::vector<double> y, sig;
    for (const auto& p : points) {
        y.push_back(p.contrast);
        sig.push_back(p.sigma);
    }
    const double inf = std::numeric_limits<double>::infinity();
    auto model = [&](const std::vector<double>& p, std::size_t i, double* grad) {
        const double e = std::exp(-p[1] * points[i].t_r_s);
        grad[0] = e;
        grad[1] = -p[0] * points[i].t_r_s * e;
        return p[0] * e;
    };
    auto gn = gauss_newton(model, y, sig, {init.b0, init.rate}, {{0.0, inf}, {0.0, inf}});

    fit.b0 = gn.params[0];
    fit.b0_sigma = gn.sigmas[0];
    fit.chi2 = gn.chi2;
    fit.converged = gn.converged;
    const double rate = gn.params[1];
    if (!(rate > 0.0)) {
        fit.tau_s = std::numeric_limits<double>::infinity();
        fit.unbounded = true;
        return fit;
    }
    fit.tau_s = 1.0 / rate;
    fit.tau_sigma_s = gn.sigmas[1] / (rate * rate);

    // Parametric bootstrap alongside the covariance estimate.
    RandomStream rs(derive_seed(0x626f6f74ull, {points.size(), 200}));
    std::vector<double> taus;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> yb(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            yb[i] = fit.b0 * std::exp(-rate * points[i].t_r_s) + sig[i] * rs.normal();
        auto gb = gauss_newton(model, yb, sig, {fit.b0, rate}, {{0.0, inf}, {0.0, inf}});
        if (gb.params[1] > 0.0) taus.push_back(1.0 / gb.params[1]);
    }
    if (taus.size() >= 100) {
        double mean = 0.0;
        for (double t : taus) mean += t;
        mean /= static_cast<double>(taus.size());
        double var = 0.0;
        for (double t : taus) var += (t - mean) * (t - mean);
        fit.tau_sigma_bootstrap_s = std::sqrt(var / (static_cast<double>(taus.size()) - 1.0));
    } else {
        fit.tau_sigma_bootstrap_s = std::numeric_limits<double>::infinity();
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Sinusoid fit with periodogram initialization:
//   y(t) = offset + amplitude * exp(-t/damping_time) * cos(2 pi f t + phase).
// ---------------------------------------------------------------------------

struct SeriesPoint {
    double t_s = 0.0;
    double value = 0.0;
    double sigma = 0.0;
};

struct SinusoidFit {
    double amplitude = 0.0;
    double frequency_hz = 0.0;
    double phase_rad = 0.0;
    double offset = 0.0;
    double damping_time_s = std::numeric_limits<double>::infinity();
    double amplitude_sigma = 0.0;
    double frequency_sigma_hz = 0.0;
    double phase_sigma_rad = 0.0;
    double offset_sigma = 0.0;
    double damping_time_sigma_s = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    bool converged = false;
    bool damping_warning = false; // damped fit hit a nonpositive decay rate
};

namespace detail {

struct AmplitudeSolve {
    double c = 0.0, alpha = 0.0, beta = 0.0;
    double chi2 = std::numeric_limits<double>::infinity();
};

/// Weighted linear solve of y = c + e^{-k t}(alpha cos wt + beta sin wt).
inline AmplitudeSolve solve_amplitudes(const std::vector<SeriesPoint>& pts, double freq,
                                       double k) {
    double m[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    double rhs[3] = {0, 0, 0};
    for (const auto& p : pts) {
        const double w = 1.0 / (p.sigma * p.sigma);
        const double env = std::exp(-k * p.t_s);
        const double c = env * std::cos(two_pi * freq * p.t_s);
        const double s = env * std::sin(two_pi * freq * p.t_s);
        const double basis[3] = {1.0, c, s};
        for (int i = 0; i < 3; ++i) {
            rhs[i] += w * p.value * basis[i];
            for (int j = 0; j < 3; ++j) m[3 * i + j] += w * basis[i] * basis[j];
        }
    }
    std::vector<double> a(m, m + 9), b(rhs, rhs + 3);
    AmplitudeSolve out;
    if (!linalg::solve(a, b, 3)) return out;
    out.c = b[0];
    out.alpha = b[1];
    out.beta = b[2];
    out.chi2 = 0.0;
    for (const auto& p : pts) {
        const double env = std::exp(-k * p.t_s);
        const double f = out.c + env * (out.alpha * std::cos(two_pi * freq * p.t_s) +
                                        out.beta * std::sin(two_pi * freq * p.t_s));
        const double r = (p.value - f) / p.sigma;
        out.chi2 += r * r;
    }
    return out;
}

} // namespace detail

inline SinusoidFit fit_sinusoid(const std::vector<SeriesPoint>& series, bool damped) {
    if (series.size() < 8) throw ValidationError("sinusoid fit needs >= 8 points");
    for (const auto& p : series)
        if (!(p.sigma > 0.0)) throw ValidationError("sinusoid fit needs positive sigmas");

    std::vector<double> times;
    for (const auto& p : series) times.push_back(p.t_s);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const double span = times.back() - times.front();
    if (!(span > 0.0)) throw ValidationError("sinusoid fit needs a nonzero time span");
    double min_gap = span;
    for (std::size_t i = 1; i < times.size(); ++i)
        min_gap = std::min(min_gap, times[i] - times[i - 1]);

    // Weighted-mean removal, then a weighted DFT-style power scan.
    double sw = 0.0, swy = 0.0;
    for (const auto& p : series) {
        const double w = 1.0 / (p.sigma * p.sigma);
        sw += w;
        swy += w * p.value;
    }
    const double mean = swy / sw;

    const double f_lo = 0.5 / span;
    const double f_hi = 0.5 / min_gap;
    const double df = 1.0 / (8.0 * span);
    std::vector<double> freqs, powers;
    for (double f = f_lo; f <= f_hi; f += df) {
        double cr = 0.0, ci = 0.0;
        for (const auto& p : series) {
            const double w = 1.0 / (p.sigma * p.sigma);
            cr += w * (p.value - mean) * std::cos(two_pi * f * p.t_s);
            ci += w * (p.value - mean) * std::sin(two_pi * f * p.t_s);
        }
        freqs.push_back(f);
        powers.push_back((cr * cr + ci * ci) / (sw * sw));
        if (freqs.size() > 400000) break;
    }
    std::size_t peak_idx = 0;
    for (std::size_t i = 1; i < powers.size(); ++i)
        if (powers[i] > powers[peak_idx]) peak_idx = i;
    std::vector<double> sorted_powers = powers;
    std::sort(sorted_powers.begin(), sorted_powers.end());
    const double median = sorted_powers[sorted_powers.size() / 2];
    if (!(powers[peak_idx] > 3.0 * median) || powers[peak_idx] <= 0.0)
        throw NoOscillationError("no significant periodogram peak (peak <= 3x median power)");
    double f0 = freqs[peak_idx];
    if (!(span * f0 >= 1.0))
        throw ValidationError("series must cover >= 1 period at the periodogram peak");

    // Parabolic interpolation around the peak sharpens the start point.
    if (peak_idx > 0 && peak_idx + 1 < powers.size()) {
        const double pm = powers[peak_idx - 1], pc = powers[peak_idx], pp = powers[peak_idx + 1];
        const double denom = pm - 2.0 * pc + pp;
        if (denom < 0.0) f0 += 0.5 * df * (pm - pp) / denom;
    }

    double k0 = 0.0;
    if (damped) {
        double best = std::numeric_limits<double>::infinity();
        for (double k : {0.0, 0.25 / span, 0.5 / span, 1.0 / span, 2.0 / span}) {
            const auto s = detail::solve_amplitudes(series, f0, k);
            if (s.chi2 < best) {
                best = s.chi2;
                k0 = k;
            }
        }
    }
    const auto amp0 = detail::solve_amplitudes(series, f0, k0);

    std::vector<double> y, sig;
    for (const auto& p : series) {
        y.push_back(p.value);
        sig.push_back(p.sigma);
    }
    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n_par = damped ? 5 : 4;
    // Parameters: (c, alpha, beta, f [, k]).
    auto model = [&](const std::vector<double>& p, std::size_t i, double* grad) {
        const double t = series[i].t_s;
        const double k = p.size() > 4 ? p[4] : 0.0;
        const double env = std::exp(-k * t);
        const double c = std::cos(two_pi * p[3] * t), s = std::sin(two_pi * p[3] * t);
        grad[0] = 1.0;
        grad[1] = env * c;
        grad[2] = env * s;
        grad[3] = env * (-p[1] * s + p[2] * c) * two_pi * t;
        if (p.size() > 4) grad[4] = -t * env * (p[1] * c + p[2] * s);
        return p[0] + env * (p[1] * c + p[2] * s);
    };
    std::vector<double> p0 = {amp0.c, amp0.alpha, amp0.beta, f0};
    std::vector<std::pair<double, double>> bounds = {
        {-inf, inf}, {-inf, inf}, {-inf, inf}, {0.0, inf}};
    if (damped) {
        p0.push_back(k0);
        bounds.push_back({-inf, inf});
    }
    auto gn = gauss_newton(model, y, sig, p0, bounds);

    SinusoidFit fit;
    const double alpha = gn.params[1], beta = gn.params[2];
    fit.offset = gn.params[0];
    fit.amplitude = std::hypot(alpha, beta);
    fit.frequency_hz = gn.params[3];
    fit.phase_rad = std::atan2(-beta, alpha);
    fit.offset_sigma = gn.sigmas[0];
    fit.frequency_sigma_hz = gn.sigmas[3];
    fit.chi2 = gn.chi2;
    fit.dof = static_cast<int>(series.size()) - static_cast<int>(n_par);
    fit.converged = gn.converged;
    // Delta method for (amplitude, phase) from the (alpha, beta) block.
    if (fit.amplitude > 0.0) {
        const double va = gn.covariance[1 * n_par + 1];
        const double vb = gn.covariance[2 * n_par + 2];
        const double vab = gn.covariance[1 * n_par + 2];
        const double a2 = fit.amplitude * fit.amplitude;
        fit.amplitude_sigma =
            std::sqrt(std::max(0.0, (alpha * alpha * va + beta * beta * vb +
                                     2.0 * alpha * beta * vab) /
                                        a2));
        fit.phase_sigma_rad = std::sqrt(
            std::max(0.0, (beta * beta * va + alpha * alpha * vb - 2.0 * alpha * beta * vab) /
                              (a2 * a2)));
    }
    if (damped) {
        const double k = gn.params[4];
        if (k > 0.0) {
            fit.damping_time_s = 1.0 / k;
            fit.damping_time_sigma_s = gn.sigmas[4] / (k * k);
        } else {
            fit.damping_warning = true;
        }
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Weighted straight line, used for the zero-drive extrapolation.
// ---------------------------------------------------------------------------

struct LinearPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_sigma = 0.0;
    double intercept_sigma = 0.0;
    double covariance = 0.0; // cov(slope, intercept)
    double chi2 = 0.0;
    int dof = 0;
};

inline LinearFit fit_linear_intercept(const std::vector<LinearPoint>& points) {
    if (points.size() < 2) throw ValidationError("linear fit needs >= 2 points");
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    double x_min = points.front().x, x_max = points.front().x;
    for (const auto& p : points) {
        if (!(p.sigma > 0.0)) throw ValidationError("linear fit needs positive sigmas");
        const double w = 1.0 / (p.sigma * p.sigma);
        sw += w;
        swx += w * p.x;
        swy += w * p.y;
        swxx += w * p.x * p.x;
        swxy += w * p.x * p.y;
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
    }
    if (x_min == x_max) throw FitDomainError("linear fit design is singular (all x equal)");
    const double det = sw * swxx - swx * swx;
    LinearFit fit;
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;
    fit.slope_sigma = std::sqrt(sw / det);
    fit.intercept_sigma = std::sqrt(swxx / det);
    fit.covariance = -swx / det;
    fit.dof = static_cast<int>(points.size()) - 2;
    for (const auto& p : points) {
        const double r = (p.y - fit.intercept - fit.slope * p.x) / p.sigma;
        fit.chi2 += r * r;
    }
    return fit;
}

/// Probability that a memory of lifetime tau has decayed after time t,
/// assuming exponential decay: 1 - exp(-t/tau).
inline double memory_error_probability(double tau_s, double t_s) {
    if (!(tau_s > 0.0)) throw ValidationError("lifetime must be > 0");
    if (!(t_s >= 0.0)) throw ValidationError("time must be >= 0");
    return -std::expm1(-t_s / tau_s);
}

// ---------------------------------------------------------------------------
// Fit reports: structured text plus a machine-readable CSV mirror.
// ---------------------------------------------------------------------------

struct FitReport {
    std::string title;
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> sigmas;
    std::vector<double> covariance; // row-major, may be empty
    std::vector<std::pair<std::string, std::string>> extras;
};

inline std::string fit_report_text(const FitReport& report) {
    std::string out = "# " + report.title + "\n";
    for (std::size_t i = 0; i < report.names.size(); ++i)
        out += report.names[i] + " = " + format_double(report.values[i]) +
               "  sigma = " + format_double(report.sigmas[i]) + "\n";
    for (const auto& [k, v] : report.extras) out += k + " = " + v + "\n";
    const std::size_t n = report.names.size();
    if (report.covariance.size() == n * n) {
        out += "covariance:\n";
        for (std::size_t i = 0; i < n; ++i) {
            out += "  " + report.names[i] + ":";
            for (std::size_t j = 0; j < n; ++j)
                out += " " + format_double(report.covariance[i * n + j]);
            out += "\n";
        }
    }
    return out;
}

inline std::string fit_report_csv(const FitReport& report) {
    std::string out = "record,name,name2,value\n";
    for (std::size_t i = 0; i < report.names.size(); ++i) {
        out += "parameter," + report.names[i] + ",," + format_double(report.values[i]) + "\n";
        out += "sigma," + report.names[i] + ",," + format_double(report.sigmas[i]) + "\n";
    }
    const std::size_t n = report.names.size();
    if (report.covariance.size() == n * n)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out += "covariance," + report.names[i] + "," + report.names[j] + "," +
                       format_double(report.covariance[i * n + j]) + "\n";
    for (const auto& [k, v] : report.extras) out += "info," + k + ",," + v + "\n";
    return out;
}

} // namespace ionmem::estimation

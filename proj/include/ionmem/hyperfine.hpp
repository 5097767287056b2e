#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ionmem/core.hpp"

namespace ionmem::hyperfine {

// ---------------------------------------------------------------------------
// Ground-state hyperfine + Zeeman spectrum of a J = 1/2 ion:
//   H/h = A I.J + (g_J m_J + g_I m_I) (mu_B/h) B
// with g_I in the Bohr-magneton convention, physical sign included.
// Levels are labeled (F, m_F) by adiabatic continuation from the B = 0
// ordering; same-m_F levels never cross, so the assignment is global.
// ---------------------------------------------------------------------------

struct HyperfineConstants {
    double hyperfine_A_hz = 0.0;
    double g_J = 0.0;
    double g_I = 0.0;
    HalfInt nuclear_spin_I{};
    double mu_B_over_h_hz_per_t = 0.0;

    void validate() const {
        if (!std::isfinite(hyperfine_A_hz) || hyperfine_A_hz == 0.0)
            throw ValidationError("hyperfine_A_hz must be finite and nonzero");
        if (!(g_J > 0.0) || !std::isfinite(g_J))
            throw ValidationError("g_J must be positive");
        if (!std::isfinite(g_I))
            throw ValidationError("g_I must be finite");
        if (nuclear_spin_I.twice < 1)
            throw ValidationError("nuclear spin must be >= 1/2");
        if (!(mu_B_over_h_hz_per_t > 0.0) || !std::isfinite(mu_B_over_h_hz_per_t))
            throw ValidationError("mu_B_over_h_hz_per_t must be positive");
    }

    int level_count() const { return 2 * (nuclear_spin_I.twice + 1); }
};

/// Measured 9Be+ 2s 2S1/2 ground-state values (I = 3/2). The same numbers
/// ship in data/be9_constants.txt; the acceptance suite pins their validity
/// by reproducing the known field-independent points.
inline HyperfineConstants be9_constants() {
    HyperfineConstants c;
    c.hyperfine_A_hz = -625008837.044;
    c.g_J = 2.00226206;
    c.g_I = 4.2743887e-4;
    c.nuclear_spin_I = HalfInt{3};
    c.mu_B_over_h_hz_per_t = 13996244936.1;
    return c;
}

struct LevelLabel {
    HalfInt f;
    HalfInt mf;

    friend constexpr bool operator==(LevelLabel a, LevelLabel b) {
        return a.f == b.f && a.mf == b.mf;
    }
    friend constexpr bool operator!=(LevelLabel a, LevelLabel b) { return !(a == b); }
    friend constexpr bool operator<(LevelLabel a, LevelLabel b) {
        return a.f != b.f ? a.f < b.f : a.mf < b.mf;
    }
};

inline std::string format_label(LevelLabel l) {
    return "|F=" + format_qn(l.f) + ",mF=" + format_qn(l.mf) + ">";
}

struct ZeemanLevel {
    LevelLabel label;
    double energy_hz = 0.0; // relative to the hyperfine centroid
    double field_t = 0.0;
};

struct Transition {
    LevelLabel lower;
    LevelLabel upper;
    double frequency_hz = 0.0; // at the stated field
    double field_t = 0.0;
};

inline bool valid_label(const HyperfineConstants& c, LevelLabel l) {
    const HalfInt i = c.nuclear_spin_I;
    const HalfInt f_low{i.twice - 1};
    const HalfInt f_high{i.twice + 1};
    if (l.f != f_low && l.f != f_high) return false;
    return -l.f.twice <= l.mf.twice && l.mf.twice <= l.f.twice;
}

inline void require_label(const HyperfineConstants& c, LevelLabel l) {
    if (!valid_label(c, l))
        throw LabelError("no level " + format_label(l) + " for I=" + format_qn(c.nuclear_spin_I));
}

/// All (F, m_F) labels in canonical order: F ascending, m_F ascending.
inline std::vector<LevelLabel> all_labels(const HyperfineConstants& c) {
    std::vector<LevelLabel> out;
    const int twice_i = c.nuclear_spin_I.twice;
    for (int tf : {twice_i - 1, twice_i + 1})
        for (int tm = -tf; tm <= tf; tm += 2) out.push_back({HalfInt{tf}, HalfInt{tm}});
    return out;
}

namespace detail {

/// Closed-form (Breit-Rabi) energy of one adiabatically labeled level at a
/// signed Zeeman scale b = (mu_B/h) B. Negative b is the analytic
/// continuation used by derivative stencils near B = 0.
inline double level_energy_closed_form(const HyperfineConstants& c, LevelLabel l, double b) {
    const double a = c.hyperfine_A_hz;
    const double spin_i = c.nuclear_spin_I.value();
    const HalfInt f_high{c.nuclear_spin_I.twice + 1};
    const bool upper_manifold = (l.f == f_high);

    if (upper_manifold && std::abs(l.mf.twice) == f_high.twice) {
        // Stretch states are exactly linear in B.
        const double sign = l.mf.twice > 0 ? 1.0 : -1.0;
        return a * spin_i / 2.0 + sign * (c.g_J / 2.0 + c.g_I * spin_i) * b;
    }

    const double m = l.mf.value();
    const double cross = a * m + (c.g_J - c.g_I) * b;
    const double gap2 = (spin_i + 0.5) * (spin_i + 0.5) - m * m;
    const double arg = cross * cross + a * a * gap2;
    if (!(arg > 0.0))
        throw ValidationError("hyperfine closed form: nonpositive square-root argument");
    // Which branch is the upper one never changes with B (avoided crossing);
    // at B = 0 the F = I + 1/2 manifold lies above iff A > 0.
    const double branch = (upper_manifold == (a > 0.0)) ? 1.0 : -1.0;
    return -a / 4.0 + c.g_I * m * b + branch * 0.5 * std::sqrt(arg);
}

} // namespace detail

/// Breit-Rabi closed-form spectrum: 2(2I+1) levels in canonical label order.
inline std::vector<ZeemanLevel> level_energies_closed_form(const HyperfineConstants& c,
                                                           double field_t) {
    c.validate();
    if (!(field_t >= 0.0)) throw ValidationError("field must be >= 0");
    const double b = c.mu_B_over_h_hz_per_t * field_t;
    std::vector<ZeemanLevel> out;
    for (LevelLabel l : all_labels(c))
        out.push_back({l, detail::level_energy_closed_form(c, l, b), field_t});
    return out;
}

/// Independent oracle: builds the full hyperfine + Zeeman matrix in the
/// uncoupled |m_I, m_J> basis from ladder operators and diagonalizes it
/// numerically. Shares no algebra with the closed form beyond the labeling
/// convention.
inline std::vector<ZeemanLevel> level_energies_diagonalize(const HyperfineConstants& c,
                                                           double field_t) {
    c.validate();
    if (!(field_t >= 0.0)) throw ValidationError("field must be >= 0");
    const double b = c.mu_B_over_h_hz_per_t * field_t;
    const double a = c.hyperfine_A_hz;
    const double spin_i = c.nuclear_spin_I.value();
    const double spin_j = 0.5;

    struct Basis {
        double mi, mj;
    };
    std::vector<Basis> basis;
    for (int tmi = -c.nuclear_spin_I.twice; tmi <= c.nuclear_spin_I.twice; tmi += 2)
        for (int tmj = -1; tmj <= 1; tmj += 2) basis.push_back({0.5 * tmi, 0.5 * tmj});
    const int n = static_cast<int>(basis.size());

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    auto ladder = [](double j, double m, int dir) {
        // coefficient of J+/- |j m> -> |j m+-1>
        return std::sqrt(j * (j + 1.0) - m * (m + dir));
    };
    for (int col = 0; col < n; ++col) {
        const Basis s = basis[col];
        h(col, col) += a * s.mi * s.mj + (c.g_J * s.mj + c.g_I * s.mi) * b;
        // (A/2)(I+ J- + I- J+)
        for (int dir : {+1, -1}) {
            const double coeff =
                0.5 * a * ladder(spin_i, s.mi, dir) * ladder(spin_j, s.mj, -dir);
            if (coeff == 0.0) continue;
            const double mi2 = s.mi + dir;
            const double mj2 = s.mj - dir;
            for (int row = 0; row < n; ++row)
                if (basis[row].mi == mi2 && basis[row].mj == mj2) h(row, col) += coeff;
        }
    }

    // H commutes with Fz, so it is exactly block diagonal in m = m_I + m_J;
    // diagonalizing per block keeps the (F, m_F) assignment unambiguous even
    // at the B = 0 cross-m degeneracies.
    const HalfInt f_high{c.nuclear_spin_I.twice + 1};
    const HalfInt f_low{c.nuclear_spin_I.twice - 1};
    std::vector<ZeemanLevel> out;
    for (int tm = -f_high.twice; tm <= f_high.twice; tm += 2) {
        std::vector<int> idx;
        for (int k = 0; k < n; ++k)
            if (std::lround(2.0 * (basis[k].mi + basis[k].mj)) == tm) idx.push_back(k);
        if (idx.empty()) continue;
        Eigen::MatrixXd block(idx.size(), idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t q = 0; q < idx.size(); ++q) block(r, q) = h(idx[r], idx[q]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
        if (solver.info() != Eigen::Success)
            throw ValidationError("hyperfine diagonalization failed");
        const auto& ev = solver.eigenvalues(); // ascending
        if (idx.size() == 1) {
            out.push_back({{f_high, HalfInt{tm}}, ev(0), field_t});
        } else {
            // Within a block the upper branch belongs to F = I + 1/2 iff A > 0.
            const HalfInt f_of_upper = a > 0.0 ? f_high : f_low;
            const HalfInt f_of_lower = a > 0.0 ? f_low : f_high;
            out.push_back({{f_of_lower, HalfInt{tm}}, ev(0), field_t});
            out.push_back({{f_of_upper, HalfInt{tm}}, ev(1), field_t});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ZeemanLevel& x, const ZeemanLevel& y) { return x.label < y.label; });
    return out;
}

namespace detail {

/// Signed energy gap E(upper) - E(lower) at a signed Zeeman scale; smooth in
/// B everywhere, unlike the absolute transition frequency at level crossings.
inline double signed_gap(const HyperfineConstants& c, LevelLabel lower, LevelLabel upper,
                         double b) {
    return level_energy_closed_form(c, upper, b) - level_energy_closed_form(c, lower, b);
}

struct StencilDerivatives {
    double f0 = 0.0;
    double d1 = 0.0; // first derivative of the signed gap
    double d2 = 0.0; // second derivative of the signed gap
    double gmax = 0.0;
};

inline StencilDerivatives five_point_stencil(const HyperfineConstants& c, LevelLabel lower,
                                             LevelLabel upper, double field_t, double step_t) {
    const double scale = c.mu_B_over_h_hz_per_t;
    double g[5];
    double gmax = 0.0;
    for (int k = -2; k <= 2; ++k) {
        g[k + 2] = signed_gap(c, lower, upper, scale * (field_t + k * step_t));
        gmax = std::max(gmax, std::abs(g[k + 2]));
    }
    StencilDerivatives d;
    d.f0 = g[2];
    d.d1 = (g[0] - 8.0 * g[1] + 8.0 * g[3] - g[4]) / (12.0 * step_t);
    d.d2 = (-g[0] + 16.0 * g[1] - 30.0 * g[2] + 16.0 * g[3] - g[4]) / (12.0 * step_t * step_t);
    d.gmax = gmax;
    return d;
}

inline double d1_noise_floor(double gmax, double step_t) {
    // 5-point first-derivative stencil: sum |coefficients| = 18/12, doubled
    // for rounding in the gap evaluation itself.
    return 3.0 * std::numeric_limits<double>::epsilon() * gmax / step_t;
}

} // namespace detail

/// Absolute transition frequency between two adiabatically labeled levels.
inline double transition_frequency(const HyperfineConstants& c, LevelLabel lhs, LevelLabel rhs,
                                   double field_t) {
    c.validate();
    require_label(c, lhs);
    require_label(c, rhs);
    if (!(field_t >= 0.0)) throw ValidationError("field must be >= 0");
    return std::abs(detail::signed_gap(c, lhs, rhs, c.mu_B_over_h_hz_per_t * field_t));
}

inline constexpr double default_sensitivity_step_t = 1e-7;
inline constexpr double clock_zero_tolerance_hz_per_t = 1.0;

/// Local field dependence of a transition frequency:
///   f(B0 + x) ~= f0 + d1 x + d2 x^2,
/// so d2 is the quadratic (parabola) coefficient, i.e. half the second field
/// derivative. Derivatives come from 5-point central stencils at `step` with
/// a consistency check at step/2.
struct FieldSensitivity {
    double at_field_t = 0.0;
    double f0_hz = 0.0;
    double d1_hz_per_t = 0.0;
    double d2_hz_per_t2 = 0.0;
    double step_used_t = 0.0;
    double d1_noise_floor_hz_per_t = 0.0;
    bool precision_warning = false; // stencil noise dominates the d1 estimate
};

inline FieldSensitivity field_sensitivity(const HyperfineConstants& c, LevelLabel lower,
                                          LevelLabel upper, double field_t,
                                          double step_t = default_sensitivity_step_t) {
    c.validate();
    require_label(c, lower);
    require_label(c, upper);
    if (!(step_t > 0.0)) throw ValidationError("stencil step must be > 0");
    if (!(field_t >= 0.0)) throw ValidationError("field must be >= 0");

    const auto full = detail::five_point_stencil(c, lower, upper, field_t, step_t);
    const auto half = detail::five_point_stencil(c, lower, upper, field_t, 0.5 * step_t);

    FieldSensitivity s;
    s.at_field_t = field_t;
    s.step_used_t = step_t;
    const double sign = full.f0 < 0.0 ? -1.0 : 1.0;
    s.f0_hz = sign * full.f0;
    s.d1_hz_per_t = sign * full.d1;
    s.d2_hz_per_t2 = sign * 0.5 * full.d2;
    s.d1_noise_floor_hz_per_t = detail::d1_noise_floor(full.gmax, step_t);

    const double richardson_gap = std::abs(full.d1 - half.d1);
    const double half_floor = detail::d1_noise_floor(half.gmax, 0.5 * step_t);
    s.precision_warning =
        s.d1_noise_floor_hz_per_t > 1e-3 * std::abs(s.d1_hz_per_t) ||
        richardson_gap > std::max(1e-3 * std::abs(half.d1), 8.0 * half_floor);
    return s;
}

struct ClockFieldResult {
    LevelLabel lower; // energetically lower level at the clock field
    LevelLabel upper;
    double field_t = 0.0;
    FieldSensitivity sensitivity;
    bool noise_limited = false; // |d1| could not be driven under the noise floor
};

struct ClockSearchOptions {
    double step_t = default_sensitivity_step_t;
    double field_tolerance_t = 1e-9;
    int max_iterations = 200;
};

namespace detail {

inline ClockFieldResult make_clock_result(const HyperfineConstants& c, LevelLabel a,
                                          LevelLabel b, double field,
                                          const ClockSearchOptions& opts) {
    ClockFieldResult r;
    const double gap = signed_gap(c, a, b, c.mu_B_over_h_hz_per_t * field);
    r.lower = gap >= 0.0 ? a : b;
    r.upper = gap >= 0.0 ? b : a;
    r.field_t = field;
    r.sensitivity = field_sensitivity(c, r.lower, r.upper, field, opts.step_t);
    const double allowed =
        std::max(clock_zero_tolerance_hz_per_t, r.sensitivity.d1_noise_floor_hz_per_t);
    r.noise_limited = std::abs(r.sensitivity.d1_hz_per_t) > allowed;
    return r;
}

} // namespace detail

/// Locates a field-independent point of the transition inside [b_lo, b_hi]
/// by bracketed secant/bisection on the stencil first derivative. The first
/// derivative must change sign on the bracket (an endpoint value at the
/// stencil noise floor counts as a root at that endpoint).
inline ClockFieldResult find_clock_field(const HyperfineConstants& c, LevelLabel lower,
                                         LevelLabel upper, double b_lo, double b_hi,
                                         const ClockSearchOptions& opts = {}) {
    c.validate();
    require_label(c, lower);
    require_label(c, upper);
    if (!(b_lo >= 0.0) || !(b_hi > b_lo)) throw ValidationError("invalid clock-field bracket");

    auto d1_at = [&](double field) {
        return detail::five_point_stencil(c, lower, upper, field, opts.step_t);
    };

    auto g_lo = d1_at(b_lo);
    auto g_hi = d1_at(b_hi);
    const double floor_lo = detail::d1_noise_floor(g_lo.gmax, opts.step_t);
    const double floor_hi = detail::d1_noise_floor(g_hi.gmax, opts.step_t);

    double a = b_lo, b = b_hi;
    double ga = g_lo.d1, gb = g_hi.d1;

    if (ga * gb >= 0.0) {
        // Tolerate a root sitting on an endpoint, but prefer an interior
        // sign change if one exists past the flat spot.
        const bool lo_zero = std::abs(ga) <= floor_lo;
        const bool hi_zero = std::abs(gb) <= floor_hi;
        const double nudge = std::max(4.0 * opts.step_t, 1e-3 * (b_hi - b_lo));
        if (lo_zero) {
            const double probe = b_lo + nudge;
            const double gp = d1_at(probe).d1;
            if (probe < b_hi && gp * gb < 0.0) {
                a = probe;
                ga = gp;
            } else {
                return detail::make_clock_result(c, lower, upper, b_lo, opts);
            }
        } else if (hi_zero) {
            const double probe = b_hi - nudge;
            const double gp = d1_at(probe).d1;
            if (probe > b_lo && ga * gp < 0.0) {
                b = probe;
                gb = gp;
            } else {
                return detail::make_clock_result(c, lower, upper, b_hi, opts);
            }
        } else {
            throw NoRootError("d1 does not change sign on [" + format_double(b_lo) + ", " +
                              format_double(b_hi) + "] T for " + format_label(lower) + " <-> " +
                              format_label(upper));
        }
    }

    double width_two_ago = b - a;
    for (int iter = 0; iter < opts.max_iterations && (b - a) > opts.field_tolerance_t; ++iter) {
        double x = 0.5 * (a + b);
        if (gb != ga) {
            const double secant = b - gb * (b - a) / (gb - ga);
            const double margin = 0.01 * (b - a);
            if (std::isfinite(secant) && secant > a + margin && secant < b - margin)
                x = secant;
        }
        if (iter >= 2 && (b - a) > 0.5 * width_two_ago) x = 0.5 * (a + b); // force bisection
        width_two_ago = iter >= 1 ? (b - a) : width_two_ago;
        const double gx = d1_at(x).d1;
        if (gx == 0.0) {
            a = b = x;
            break;
        }
        if (gx * ga < 0.0) {
            b = x;
            gb = gx;
        } else {
            a = x;
            ga = gx;
        }
    }
    const double root = std::abs(ga) <= std::abs(gb) ? a : b;
    return detail::make_clock_result(c, lower, upper, root, opts);
}

/// Scans every level pair for d1 sign changes on a field grid and refines
/// each hit; results sorted by field.
inline std::vector<ClockFieldResult> enumerate_clock_fields(const HyperfineConstants& c,
                                                            double b_lo, double b_hi,
                                                            double grid_step_t,
                                                            const ClockSearchOptions& opts = {}) {
    c.validate();
    if (!(grid_step_t > 0.0)) throw ValidationError("grid step must be > 0");
    std::vector<ClockFieldResult> found;
    if (!(b_hi > b_lo) || b_lo < 0.0) return found;

    std::vector<double> grid;
    for (double x = b_lo; x < b_hi; x += grid_step_t) grid.push_back(x);
    grid.push_back(b_hi);

    const auto labels = all_labels(c);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            double prev = 0.0;
            bool have_prev = false;
            for (double field : grid) {
                const double g = detail::five_point_stencil(c, labels[i], labels[j], field,
                                                            opts.step_t)
                                     .d1;
                if (have_prev && prev * g < 0.0) {
                    found.push_back(find_clock_field(c, labels[i], labels[j],
                                                     field - grid_step_t, field, opts));
                }
                prev = g;
                have_prev = true;
            }
        }
    }

    std::sort(found.begin(), found.end(), [](const ClockFieldResult& x, const ClockFieldResult& y) {
        if (x.field_t != y.field_t) return x.field_t < y.field_t;
        if (x.lower != y.lower) return x.lower < y.lower;
        return x.upper < y.upper;
    });
    // Drop duplicate refinements of the same root from adjacent grid cells.
    auto same = [&](const ClockFieldResult& x, const ClockFieldResult& y) {
        return x.lower == y.lower && x.upper == y.upper &&
               std::abs(x.field_t - y.field_t) <= 10.0 * opts.field_tolerance_t;
    };
    found.erase(std::unique(found.begin(), found.end(), same), found.end());
    return found;
}

// ---------------------------------------------------------------------------
// Constants file: flat key = value text, '#' comments.
// ---------------------------------------------------------------------------

inline HyperfineConstants parse_constants_text(const std::string& text,
                                               const std::string& origin = "<text>") {
    std::map<std::string, double> values;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        static const char* known[] = {"hyperfine_A_hz", "g_J", "g_I", "nuclear_spin_2I",
                                      "mu_B_over_h_hz_per_t"};
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return key == k; }) == std::end(known))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        if (values.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
        char* end = nullptr;
        const double v = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad number '" + value +
                              "' for key '" + key + "'");
        values[key] = v;
    }
    for (const char* k : {"hyperfine_A_hz", "g_J", "g_I", "nuclear_spin_2I",
                          "mu_B_over_h_hz_per_t"})
        if (!values.count(k)) throw ConfigError(origin + ": missing key '" + std::string(k) + "'");

    HyperfineConstants c;
    c.hyperfine_A_hz = values["hyperfine_A_hz"];
    c.g_J = values["g_J"];
    c.g_I = values["g_I"];
    const double twice_i = values["nuclear_spin_2I"];
    if (twice_i != std::nearbyint(twice_i) || twice_i < 1.0 || twice_i > 1e3)
        throw ConfigError(origin + ": nuclear_spin_2I must be a positive integer");
    c.nuclear_spin_I = HalfInt{static_cast<int>(twice_i)};
    c.mu_B_over_h_hz_per_t = values["mu_B_over_h_hz_per_t"];
    c.validate();
    return c;
}

inline HyperfineConstants load_constants_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open constants file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_constants_text(buf.str(), path);
}

inline std::string serialize_constants(const HyperfineConstants& c) {
    std::string out;
    out += "hyperfine_A_hz = " + format_double(c.hyperfine_A_hz) + "\n";
    out += "g_J = " + format_double(c.g_J) + "\n";
    out += "g_I = " + format_double(c.g_I) + "\n";
    out += "nuclear_spin_2I = " + std::to_string(c.nuclear_spin_I.twice) + "\n";
    out += "mu_B_over_h_hz_per_t = " + format_double(c.mu_B_over_h_hz_per_t) + "\n";
    return out;
}

} // namespace ionmem::hyperfine

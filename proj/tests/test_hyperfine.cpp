#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "ionmem/hyperfine.hpp"

using namespace ionmem;
using namespace ionmem::hyperfine;

namespace {

const LevelLabel f2m0{HalfInt{4}, HalfInt{0}};
const LevelLabel f2m1{HalfInt{4}, HalfInt{2}};
const LevelLabel f2m2{HalfInt{4}, HalfInt{4}};
const LevelLabel f2mm2{HalfInt{4}, HalfInt{-4}};
const LevelLabel f1m0{HalfInt{2}, HalfInt{0}};
const LevelLabel f1m1{HalfInt{2}, HalfInt{2}};
const LevelLabel f1mm1{HalfInt{2}, HalfInt{-2}};

double energy_of(const std::vector<ZeemanLevel>& levels, LevelLabel l) {
    for (const auto& lev : levels)
        if (lev.label == l) return lev.energy_hz;
    FAIL("label not found");
    return 0.0;
}

} // namespace

TEST_CASE("zero-field spectrum: two manifolds split by 2A", "[hyperfine]") {
    const auto c = be9_constants();
    const auto closed = level_energies_closed_form(c, 0.0);
    const auto diag = level_energies_diagonalize(c, 0.0);
    REQUIRE(closed.size() == 8);
    REQUIRE(diag.size() == 8);

    // All m_F within one F manifold are degenerate at B = 0.
    for (const auto& route : {closed, diag}) {
        const double e2 = energy_of(route, f2m0);
        const double e1 = energy_of(route, f1m0);
        for (const auto& lev : route) {
            const double expected = lev.label.f == HalfInt{4} ? e2 : e1;
            CHECK(lev.energy_hz == Approx(expected).margin(1e-4));
        }
        // Splitting equals |2A| for I = 3/2, J = 1/2 (about 1.25 GHz).
        CHECK(std::abs(e1 - e2) ==
              Approx(2.0 * std::abs(c.hyperfine_A_hz)).epsilon(1e-12));
        CHECK(std::abs(e1 - e2) == Approx(1.250017674e9).epsilon(1e-6));
    }
}

TEST_CASE("clock transition frequency is about 1.2 GHz at 0.01194 T", "[hyperfine]") {
    const auto c = be9_constants();
    const double nu = transition_frequency(c, f2m0, f1m1, 0.01194);
    CHECK(nu > 1.15e9);
    CHECK(nu < 1.30e9);
}

TEST_CASE("field-sensitive probe transition is about 1.0 GHz", "[hyperfine]") {
    const auto c = be9_constants();
    const double nu = transition_frequency(c, f2m2, f1m1, 0.01194);
    CHECK(nu > 0.95e9);
    CHECK(nu < 1.10e9);
}

TEST_CASE("diagonalization oracle matches the closed form", "[hyperfine]") {
    const auto c = be9_constants();

    SECTION("at the clock field, to relative 1e-10") {
        const auto a = level_energies_closed_form(c, 0.01194);
        const auto b = level_energies_diagonalize(c, 0.01194);
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].label == b[i].label);
            const double scale = std::max(std::abs(a[i].energy_hz), std::abs(c.hyperfine_A_hz));
            CHECK(std::abs(a[i].energy_hz - b[i].energy_hz) <= 1e-10 * scale);
        }
    }

    SECTION("100 random fields in [0, 1] T") {
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> fields(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            const double field = fields(gen);
            const auto a = level_energies_closed_form(c, field);
            const auto b = level_energies_diagonalize(c, field);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double scale =
                    std::max(std::abs(a[i].energy_hz), std::abs(c.hyperfine_A_hz));
                REQUIRE(std::abs(a[i].energy_hz - b[i].energy_hz) <= 1e-10 * scale);
            }
        }
    }

    SECTION("spectrum at 0.8194 T exists and is nondegenerate") {
        const auto levels = level_energies_diagonalize(c, 0.8194);
        std::vector<double> energies;
        for (const auto& l : levels) energies.push_back(l.energy_hz);
        std::sort(energies.begin(), energies.end());
        for (std::size_t i = 1; i < energies.size(); ++i)
            CHECK(energies[i] - energies[i - 1] > 1e6);
    }
}

TEST_CASE("spectrum trace vanishes at every field (A I.J is traceless)", "[hyperfine]") {
    const auto c = be9_constants();
    for (double field : {0.0, 0.0013, 0.01194, 0.3, 0.8194}) {
        const auto levels = level_energies_closed_form(c, field);
        double sum = 0.0, scale = 0.0;
        for (const auto& l : levels) {
            sum += l.energy_hz;
            scale += std::abs(l.energy_hz);
        }
        CHECK(std::abs(sum) <= 64.0 * std::numeric_limits<double>::epsilon() * scale + 1e-6);
    }
}

TEST_CASE("stretch states are exactly linear in B", "[hyperfine]") {
    const auto c = be9_constants();
    const double h = 1e-3;
    for (double field : {0.01, 0.1, 0.5}) {
        for (LevelLabel stretch : {f2m2, f2mm2}) {
            const double e_lo = energy_of(level_energies_closed_form(c, field - h), stretch);
            const double e_mid = energy_of(level_energies_closed_form(c, field), stretch);
            const double e_hi = energy_of(level_energies_closed_form(c, field + h), stretch);
            const double second_diff = e_lo - 2.0 * e_mid + e_hi;
            const double floor = 16.0 * std::numeric_limits<double>::epsilon() *
                                 std::max({std::abs(e_lo), std::abs(e_mid), std::abs(e_hi)});
            CHECK(std::abs(second_diff) <= floor);
        }
    }
}

TEST_CASE("transition frequency properties", "[hyperfine]") {
    const auto c = be9_constants();

    SECTION("zero-field value is m_F independent") {
        CHECK(transition_frequency(c, f2m0, f1m0, 0.0) ==
              Approx(2.0 * std::abs(c.hyperfine_A_hz)).epsilon(1e-12));
        CHECK(transition_frequency(c, f2m1, f1mm1, 0.0) ==
              Approx(2.0 * std::abs(c.hyperfine_A_hz)).epsilon(1e-12));
    }

    SECTION("symmetric in its level arguments") {
        for (double field : {0.0013, 0.01194, 0.3})
            CHECK(transition_frequency(c, f2m0, f1m1, field) ==
                  transition_frequency(c, f1m1, f2m0, field));
    }

    SECTION("symmetric about the clock field to third order") {
        const double b0 = find_clock_field(c, f2m0, f1m1, 0.005, 0.02).field_t;
        const double delta = 1e-5;
        const double up = transition_frequency(c, f2m0, f1m1, b0 + delta);
        const double down = transition_frequency(c, f2m0, f1m1, b0 - delta);
        CHECK(std::abs(up - down) < 0.1); // cubic remainder, well under a hertz
    }

    SECTION("unknown level label") {
        CHECK_THROWS_AS(transition_frequency(c, {HalfInt{6}, HalfInt{0}}, f1m1, 0.01),
                        LabelError);
        CHECK_THROWS_AS(transition_frequency(c, {HalfInt{4}, HalfInt{6}}, f1m1, 0.01),
                        LabelError);
    }
}

TEST_CASE("field sensitivity reproduces the known coefficients", "[hyperfine]") {
    const auto c = be9_constants();
    const auto clock = find_clock_field(c, f2m0, f1m1, 0.005, 0.02);

    SECTION("quadratic coefficient 0.305 Hz/uT^2 at the clock point") {
        CHECK(clock.sensitivity.d2_hz_per_t2 == Approx(3.05e11).epsilon(0.05));
    }

    SECTION("probe slope 17.6 kHz/uT at the clock point") {
        const auto s = field_sensitivity(c, f2m2, f1m1, clock.field_t);
        CHECK(std::abs(s.d1_hz_per_t) == Approx(1.76e10).epsilon(0.02));
    }

    SECTION("field-sensitive qubit slope about 21 kHz/uT at low field") {
        const auto s = field_sensitivity(c, f2mm2, f1mm1, 0.0013);
        CHECK(std::abs(s.d1_hz_per_t) == Approx(2.1e10).epsilon(0.10));
    }

    SECTION("tiny stencil steps raise the precision warning") {
        const auto s = field_sensitivity(c, f2m2, f1m1, 0.01, 1e-15);
        CHECK(s.precision_warning);
        const auto good = field_sensitivity(c, f2m2, f1m1, 0.01);
        CHECK_FALSE(good.precision_warning);
    }

    SECTION("input validation") {
        CHECK_THROWS_AS(field_sensitivity(c, f2m0, f1m1, 0.01, 0.0), ValidationError);
        CHECK_THROWS_AS(field_sensitivity(c, f2m0, f1m1, -0.01), ValidationError);
    }
}

TEST_CASE("clock-field search", "[hyperfine]") {
    const auto c = be9_constants();

    SECTION("main clock point near 0.01194 T") {
        const auto r = find_clock_field(c, f2m0, f1m1, 0.005, 0.02);
        CHECK(r.field_t > 0.01184);
        CHECK(r.field_t < 0.01204);
        CHECK_FALSE(r.noise_limited);
        CHECK(std::abs(r.sensitivity.d1_hz_per_t) <=
              std::max(clock_zero_tolerance_hz_per_t,
                       r.sensitivity.d1_noise_floor_hz_per_t));
        // Canonical orientation: the F=2 level lies below at this field.
        CHECK(r.lower == f2m0);
        CHECK(r.upper == f1m1);
    }

    SECTION("four-photon transition clock point near 2.54e-5 T") {
        const auto r = find_clock_field(c, f2m1, f1mm1, 0.0, 1e-4);
        CHECK(r.field_t == Approx(2.54e-5).epsilon(0.02));
    }

    SECTION("zero-g_I toy atom: 0-0 clock point sits at B = 0") {
        HyperfineConstants toy = c;
        toy.g_I = 0.0;
        const auto r = find_clock_field(toy, f2m0, f1m0, 0.0, 1e-4);
        CHECK(r.field_t == 0.0);
    }

    SECTION("no sign change reports no root") {
        CHECK_THROWS_AS(find_clock_field(c, f2m2, f2mm2, 0.005, 0.02), NoRootError);
    }

    SECTION("bracket validation") {
        CHECK_THROWS_AS(find_clock_field(c, f2m0, f1m1, 0.02, 0.005), ValidationError);
    }
}

TEST_CASE("clock-field enumeration over a field window", "[hyperfine]") {
    const auto c = be9_constants();

    SECTION("low-field window contains the three known points") {
        const auto points = enumerate_clock_fields(c, 0.005, 0.03, 1e-4);
        REQUIRE_FALSE(points.empty());
        auto has_near = [&](double target, LevelLabel lo, LevelLabel up) {
            for (const auto& p : points)
                if (std::abs(p.field_t - target) <= 0.01 * target &&
                    ((p.lower == lo && p.upper == up) || (p.lower == up && p.upper == lo)))
                    return true;
            return false;
        };
        CHECK(has_near(0.01194, f2m0, f1m1));
        CHECK(has_near(0.01196, f2m1, f1m0));
        CHECK(has_near(0.02231, f2m1, f1m1));
        for (std::size_t i = 1; i < points.size(); ++i)
            CHECK(points[i - 1].field_t <= points[i].field_t);
        for (const auto& p : points)
            CHECK(std::abs(p.sensitivity.d1_hz_per_t) <=
                  std::max({clock_zero_tolerance_hz_per_t,
                            p.sensitivity.d1_noise_floor_hz_per_t,
                            1e-3 * p.sensitivity.f0_hz}));
    }

    SECTION("high-field window contains the 0.8194 T point") {
        const auto points = enumerate_clock_fields(c, 0.5, 0.9, 2e-3);
        bool found = false;
        for (const auto& p : points)
            if (std::abs(p.field_t - 0.8194) <= 0.01 * 0.8194) found = true;
        CHECK(found);
    }

    SECTION("empty range gives an empty list") {
        CHECK(enumerate_clock_fields(c, 0.01, 0.01, 1e-4).empty());
    }
}

TEST_CASE("generality over nuclear spin", "[hyperfine]") {
    HyperfineConstants c;
    c.hyperfine_A_hz = 1.4e9; // A > 0 exercises the opposite branch labeling
    c.g_J = 2.002;
    c.g_I = -9.95e-4;
    c.nuclear_spin_I = HalfInt{1}; // I = 1/2: four levels
    c.mu_B_over_h_hz_per_t = 13.996e9;

    const auto closed = level_energies_closed_form(c, 0.05);
    const auto diag = level_energies_diagonalize(c, 0.05);
    REQUIRE(closed.size() == 4);
    REQUIRE(diag.size() == 4);
    for (std::size_t i = 0; i < closed.size(); ++i) {
        REQUIRE(closed[i].label == diag[i].label);
        const double scale = std::max(std::abs(closed[i].energy_hz), std::abs(c.hyperfine_A_hz));
        CHECK(std::abs(closed[i].energy_hz - diag[i].energy_hz) <= 1e-10 * scale);
    }

    c.nuclear_spin_I = HalfInt{5}; // I = 5/2: twelve levels
    const auto closed6 = level_energies_closed_form(c, 0.2);
    const auto diag6 = level_energies_diagonalize(c, 0.2);
    REQUIRE(closed6.size() == 12);
    for (std::size_t i = 0; i < closed6.size(); ++i) {
        const double scale =
            std::max(std::abs(closed6[i].energy_hz), std::abs(c.hyperfine_A_hz));
        CHECK(std::abs(closed6[i].energy_hz - diag6[i].energy_hz) <= 1e-10 * scale);
    }
}

TEST_CASE("constants file round trip and validation", "[hyperfine]") {
    const std::string path = std::string(IONMEM_SOURCE_DIR) + "/data/be9_constants.txt";
    const auto from_file = load_constants_file(path);
    const auto builtin = be9_constants();
    CHECK(from_file.hyperfine_A_hz == builtin.hyperfine_A_hz);
    CHECK(from_file.g_J == builtin.g_J);
    CHECK(from_file.g_I == builtin.g_I);
    CHECK(from_file.nuclear_spin_I == builtin.nuclear_spin_I);
    CHECK(from_file.mu_B_over_h_hz_per_t == builtin.mu_B_over_h_hz_per_t);

    const auto reparsed = parse_constants_text(serialize_constants(builtin));
    CHECK(serialize_constants(reparsed) == serialize_constants(builtin));

    CHECK_THROWS_AS(parse_constants_text("g_X = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_constants_text("g_J = 2.0\n"), ConfigError); // missing keys
    CHECK_THROWS_AS(parse_constants_text("hyperfine_A_hz = banana\n"), ConfigError);
    CHECK_THROWS_AS(parse_constants_text(serialize_constants(builtin) + "g_J = 2\n"),
                    ConfigError); // duplicate
}

TEST_CASE("half-integer quantum number parsing and formatting", "[hyperfine]") {
    CHECK(parse_qn("2") == HalfInt{4});
    CHECK(parse_qn("-2") == HalfInt{-4});
    CHECK(parse_qn("1.5") == HalfInt{3});
    CHECK(parse_qn("-0.5") == HalfInt{-1});
    CHECK(format_qn(HalfInt{4}) == "2");
    CHECK(format_qn(HalfInt{-3}) == "-1.5");
    CHECK_THROWS_AS(parse_qn("0.3"), ValidationError);
    CHECK_THROWS_AS(parse_qn("x"), ValidationError);
}

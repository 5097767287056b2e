#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "ionmem/dfs.hpp"
#include "ionmem/estimation.hpp"

using namespace ionmem;
using namespace ionmem::dfs;

namespace {

TwoQubitState apply_common_phase(const TwoQubitState& s, double phi) {
    // Equal phase on |1> of both ions: the collective-dephasing channel.
    TwoQubitState out = s;
    out.amp[1] *= std::polar(1.0, phi);
    out.amp[2] *= std::polar(1.0, phi);
    out.amp[3] *= std::polar(1.0, 2.0 * phi);
    return out;
}

} // namespace

TEST_CASE("entangled-state preparation", "[dfs]") {
    const auto s = prepare_phi_minus_i();
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(s.amp[0] == complexd{r, 0.0});
    CHECK(s.amp[1] == complexd{0.0, 0.0});
    CHECK(s.amp[2] == complexd{0.0, 0.0});
    CHECK(s.amp[3] == complexd{0.0, -r});
    CHECK(s.norm() == Approx(1.0).margin(1e-15));
    CHECK(std::abs(overlap(psi_plus(), s)) == 0.0);
    CHECK(std::abs(overlap(psi_minus(), s)) == 0.0);
}

TEST_CASE("collective rotations move between the Bell states", "[dfs]") {
    SECTION("R(pi/2, -pi/4) turns the prepared state into the triplet") {
        const auto s = collective_rotate(prepare_phi_minus_i(), {0.5 * pi, -0.25 * pi});
        CHECK(std::abs(overlap(psi_plus(), s)) == Approx(1.0).margin(1e-12));
    }

    SECTION("R(pi/2, 0) turns the triplet into |Phi+>") {
        const auto s = collective_rotate(psi_plus(), {0.5 * pi, 0.0});
        CHECK(std::abs(overlap(phi_plus(), s)) == Approx(1.0).margin(1e-12));
    }

    SECTION("the singlet is invariant under 1000 random collective rotations") {
        std::mt19937_64 gen(17);
        std::uniform_real_distribution<double> thetas(0.0, two_pi), phis(-pi, pi);
        for (int trial = 0; trial < 1000; ++trial) {
            const auto s = collective_rotate(psi_minus(), {thetas(gen), phis(gen)});
            REQUIRE(std::abs(overlap(psi_minus(), s)) == Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("gradient evolution inside the subspace", "[dfs]") {
    SECTION("zero differential phase changes nothing") {
        const auto s = gradient_evolve(psi_plus(), 0.0);
        CHECK(std::abs(overlap(psi_plus(), s)) == Approx(1.0).margin(1e-15));
    }

    SECTION("half a beat maps the triplet onto the singlet") {
        const auto s = gradient_evolve(psi_plus(), pi);
        const auto p = dfs_probabilities(s);
        CHECK(p.p_psi_minus == Approx(1.0).margin(1e-14));
    }

    SECTION("amplitude-level evolution reproduces the two-state oscillation") {
        std::mt19937_64 gen(23);
        std::uniform_real_distribution<double> u(-20.0, 20.0);
        for (int trial = 0; trial < 1000; ++trial) {
            const double dphi = u(gen);
            const auto s = gradient_evolve(psi_plus(), dphi);
            const auto p = dfs_probabilities(s);
            const double c = std::cos(0.5 * dphi), sn = std::sin(0.5 * dphi);
            REQUIRE(p.p_psi_plus == Approx(c * c).margin(1e-12));
            REQUIRE(p.p_psi_minus == Approx(sn * sn).margin(1e-12));
            REQUIRE(p.p_psi_plus + p.p_psi_minus == Approx(1.0).margin(1e-12));
            // Eq-level check of the amplitudes against the expansion
            // cos(dphi/2)|Psi+> + i sin(dphi/2)|Psi->.
            TwoQubitState expected;
            for (int i = 0; i < 4; ++i)
                expected.amp[i] = c * psi_plus().amp[i] +
                                  complexd{0.0, 1.0} * sn * psi_minus().amp[i];
            for (int i = 0; i < 4; ++i)
                REQUIRE(std::abs(s.amp[i] - expected.amp[i]) < 1e-12);
        }
    }

    SECTION("support outside the subspace is rejected") {
        CHECK_THROWS_AS(gradient_evolve(prepare_phi_minus_i(), 0.3), SubspaceError);
    }
}

TEST_CASE("subspace probabilities", "[dfs]") {
    const auto p_triplet = dfs_probabilities(psi_plus());
    CHECK(p_triplet.p_psi_plus == Approx(1.0).margin(1e-15));
    CHECK(p_triplet.p_psi_minus == Approx(0.0).margin(1e-15));
    CHECK(p_triplet.p_leak == Approx(0.0).margin(1e-15));

    TwoQubitState basis01;
    basis01.amp[1] = complexd{1.0, 0.0};
    const auto p01 = dfs_probabilities(basis01);
    CHECK(p01.p_psi_plus == Approx(0.5).margin(1e-15));
    CHECK(p01.p_psi_minus == Approx(0.5).margin(1e-15));

    const auto p_leak = dfs_probabilities(prepare_phi_minus_i());
    CHECK(p_leak.p_psi_plus == Approx(0.0).margin(1e-15));
    CHECK(p_leak.p_psi_minus == Approx(0.0).margin(1e-15));
    CHECK(p_leak.p_leak == Approx(1.0).margin(1e-15));
}

TEST_CASE("uniform fields do not touch subspace probabilities", "[dfs]") {
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> u(-pi, pi);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = gradient_evolve(psi_plus(), u(gen));
        const auto before = dfs_probabilities(s);
        const auto after = dfs_probabilities(apply_common_phase(s, u(gen)));
        REQUIRE(std::abs(before.p_psi_plus - after.p_psi_plus) < 1e-12);
        REQUIRE(std::abs(before.p_psi_minus - after.p_psi_minus) < 1e-12);
    }
}

TEST_CASE("parity readout", "[dfs]") {
    DetectionModel ideal;

    SECTION("the singlet always reads exactly one bright ion") {
        const auto row = measure_parity_counts(psi_minus(), ideal, 4000, 5);
        CHECK(row.bright_tallies[0] == 0);
        CHECK(row.bright_tallies[1] == 4000);
        CHECK(row.bright_tallies[2] == 0);
    }

    SECTION("the triplet never reads one bright ion") {
        const auto row = measure_parity_counts(psi_plus(), ideal, 4000, 6);
        CHECK(row.bright_tallies[1] == 0);
        CHECK(row.bright_tallies[0] + row.bright_tallies[2] == 4000);
    }

    SECTION("dark detection classifies everything as zero bright") {
        DetectionModel dark;
        dark.mode = DetectionModel::Mode::poisson;
        dark.lambda_bright = 0.0;
        dark.lambda_background = 0.0;
        const auto row = measure_parity_counts(psi_plus(), dark, 500, 7);
        CHECK(row.bright_tallies[0] == 500);
    }

    SECTION("well-separated Poisson detection carries no warning") {
        DetectionModel poisson;
        poisson.mode = DetectionModel::Mode::poisson;
        poisson.lambda_bright = 50.0;
        poisson.lambda_background = 1.0;
        const auto row = measure_parity_counts(psi_minus(), poisson, 2000, 8);
        CHECK_FALSE(row.detection_warning);
        CHECK(row.bright_tallies[1] > 1900); // rare misclassifications allowed
    }

    SECTION("the placeholder photon yields overlap at the percent level") {
        // lambda = 30 leaves Poisson(32) and Poisson(62) tails crossing the
        // 1-vs-2-bright threshold with >1% weight, so the warning is on.
        DetectionModel poisson;
        poisson.mode = DetectionModel::Mode::poisson;
        const auto row = measure_parity_counts(psi_minus(), poisson, 500, 8);
        CHECK(row.detection_warning);
    }

    SECTION("overlapping Poisson distributions raise the warning") {
        DetectionModel weak;
        weak.mode = DetectionModel::Mode::poisson;
        weak.lambda_bright = 3.0;
        weak.lambda_background = 2.0;
        const auto row = measure_parity_counts(psi_minus(), weak, 100, 9);
        CHECK(row.detection_warning);
    }

    SECTION("parity identity within binomial error") {
        std::mt19937_64 gen(31);
        std::uniform_real_distribution<double> u(-pi, pi);
        for (int trial = 0; trial < 16; ++trial) {
            const auto s = gradient_evolve(psi_plus(), u(gen));
            const auto post = collective_rotate(s, {0.5 * pi, 0.0});
            const double parity = std::norm(post.amp[0]) + std::norm(post.amp[3]) -
                                  std::norm(post.amp[1]) - std::norm(post.amp[2]);
            const long shots = 4000;
            const auto row = measure_parity_counts(s, ideal, shots, 100 + trial);
            const double measured =
                static_cast<double>(row.bright_tallies[0] + row.bright_tallies[2] -
                                    row.bright_tallies[1]) /
                static_cast<double>(shots);
            const double sigma = 2.0 / std::sqrt(static_cast<double>(shots));
            REQUIRE(std::abs(measured - parity) <= 4.0 * sigma);
        }
    }

    SECTION("shot count validation") {
        CHECK_THROWS_AS(measure_parity_counts(psi_plus(), ideal, 0, 1), ValidationError);
    }
}

TEST_CASE("lifetime experiment", "[dfs]") {
    const double d1 = 2.1e10;

    SECTION("zero gradient and no decay pin the singlet probability at zero") {
        const auto result =
            run_dfs_lifetime_experiment({0.0, 0.5, 1.0}, {}, {}, d1, 300, 77, {});
        for (const auto& p : result.p_psi_minus) CHECK(p.p == 0.0);
    }

    SECTION("a static differential rate oscillates at that rate") {
        noise::NoiseSpec diff;
        diff.components.push_back(noise::ConstantOffset{125.0 / d1});
        std::vector<double> delays;
        for (double center : {0.3, 1.0, 2.0})
            for (int k = -12; k <= 12; ++k) delays.push_back(center + 0.002 * k);
        const auto result = run_dfs_lifetime_experiment(delays, {}, diff, d1, 250, 78, {});
        std::vector<estimation::SeriesPoint> series;
        for (const auto& p : result.p_psi_minus) series.push_back({p.t_d_s, p.p, p.sigma});
        const auto fit = estimation::fit_sinusoid(series, false);
        CHECK(fit.frequency_hz == Approx(125.0).epsilon(0.01));
    }

    SECTION("initial contrast and extra decay shrink the oscillation") {
        noise::NoiseSpec diff;
        diff.components.push_back(noise::ConstantOffset{125.0 / d1});
        std::vector<double> delays;
        for (int k = 0; k < 40; ++k) delays.push_back(0.3 + 0.002 * k);
        LifetimeOptions opts;
        opts.initial_contrast = 0.8;
        const auto result = run_dfs_lifetime_experiment(delays, {}, diff, d1, 400, 79, opts);
        std::vector<estimation::SeriesPoint> series;
        for (const auto& p : result.p_psi_minus) series.push_back({p.t_d_s, p.p, p.sigma});
        const auto fit = estimation::fit_sinusoid(series, false);
        CHECK(fit.amplitude == Approx(0.4).margin(0.04));
    }

    SECTION("tally bookkeeping sums to the shot count") {
        const auto result = run_dfs_lifetime_experiment({0.1}, {}, {}, d1, 123, 80, {});
        const auto& row = result.parity.rows.front();
        CHECK(row.bright_tallies[0] + row.bright_tallies[1] + row.bright_tallies[2] ==
              row.shots);
    }

    SECTION("validation") {
        CHECK_THROWS_AS(run_dfs_lifetime_experiment({-0.1}, {}, {}, d1, 10, 1, {}),
                        ValidationError);
        CHECK_THROWS_AS(run_dfs_lifetime_experiment({0.1}, {}, {}, d1, 0, 1, {}),
                        ValidationError);
        LifetimeOptions bad;
        bad.initial_contrast = 1.5;
        CHECK_THROWS_AS(run_dfs_lifetime_experiment({0.1}, {}, {}, d1, 10, 1, bad),
                        ValidationError);
    }
}

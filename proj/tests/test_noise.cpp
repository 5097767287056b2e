#include <catch2/catch.hpp>

#include <cmath>

#include "ionmem/noise.hpp"

using namespace ionmem;
using namespace ionmem::noise;

namespace {

NoiseSpec one(NoiseComponent c) {
    NoiseSpec spec;
    spec.components.push_back(c);
    return spec;
}

} // namespace

TEST_CASE("deterministic components", "[noise]") {
    SECTION("constant offset fills every sample") {
        const auto trace = sample_field_trace(one(ConstantOffset{1e-7}), 1.0, 0.01, 1, 0);
        REQUIRE(trace.size() == 100);
        for (double s : trace.samples_t) CHECK(s == 1e-7);
    }

    SECTION("linear drift ends within one dt of rate * duration") {
        const double rate = 2e-9, duration = 50.0, dt = 0.5;
        const auto trace = sample_field_trace(one(LinearDrift{rate}), duration, dt, 1, 0);
        CHECK(std::abs(trace.samples_t.back() - rate * duration) <= rate * dt);
    }

    SECTION("sinusoid over integer periods has rms a/sqrt(2)") {
        const double amp = 5e-8;
        const auto trace =
            sample_field_trace(one(Sinusoid{amp, 10.0, 0.3}), 2.0, 1.0 / 320.0, 1, 0);
        const auto stats = trace_statistics(trace);
        CHECK(stats.rms_deviation_t == Approx(amp / std::sqrt(2.0)).epsilon(0.01));
    }
}

TEST_CASE("Ornstein-Uhlenbeck statistics", "[noise]") {
    SECTION("stationary standard deviation") {
        const auto trace =
            sample_field_trace(one(OrnsteinUhlenbeck{1e-7, 100.0}), 1e4, 0.01, 999, 0);
        REQUIRE(trace.size() == 1000000);
        const auto stats = trace_statistics(trace);
        CHECK(stats.rms_deviation_t == Approx(1e-7).epsilon(0.10));
    }

    SECTION("autocorrelation decays as exp(-dt/tau) at one correlation time") {
        const double tau = 1.0, rms = 1.0e-7;
        const double dt = tau / 50.0;
        const std::size_t lag = 50;
        double num = 0.0, den = 0.0;
        const int realizations = 10000;
        for (int r = 0; r < realizations; ++r) {
            const auto trace =
                sample_field_trace(one(OrnsteinUhlenbeck{rms, tau}), tau + 2 * dt, dt, 33, r);
            num += trace.samples_t[0] * trace.samples_t[lag];
            den += trace.samples_t[0] * trace.samples_t[0];
        }
        CHECK(num / den == Approx(std::exp(-1.0)).epsilon(0.10));
    }
}

TEST_CASE("white noise has the configured per-sample rms", "[noise]") {
    const auto trace = sample_field_trace(one(WhiteNoise{2e-8}), 1e4, 0.1, 61, 0);
    const auto stats = trace_statistics(trace);
    CHECK(stats.rms_deviation_t == Approx(2e-8).epsilon(0.02));
    CHECK(std::abs(stats.mean_t) < 3.0 * 2e-8 / std::sqrt(1e5));
}

TEST_CASE("trace CSV export", "[noise]") {
    const auto trace = sample_field_trace(one(ConstantOffset{2.5e-8}), 0.2, 0.1, 1, 0);
    const std::string csv = trace_csv(trace);
    const std::string value = format_double(2.5e-8);
    CHECK(csv == "t_s,delta_B_T\n" + format_double(trace.midpoint_time(0)) + "," + value +
                     "\n" + format_double(trace.midpoint_time(1)) + "," + value + "\n");
}

TEST_CASE("random-walk variance grows linearly", "[noise]") {
    const double diffusion = 4e-14, dt = 0.01;
    const std::size_t step = 100;
    double sum_sq = 0.0;
    const int realizations = 10000;
    for (int r = 0; r < realizations; ++r) {
        const auto trace =
            sample_field_trace(one(RandomWalk{diffusion}), dt * step, dt, 1234, r);
        const double v = trace.samples_t[step - 1];
        sum_sq += v * v;
    }
    const double variance = sum_sq / realizations;
    CHECK(variance == Approx(diffusion * dt * step).epsilon(0.10));
}

TEST_CASE("trace statistics", "[noise]") {
    SECTION("constant trace") {
        const auto trace = sample_field_trace(one(ConstantOffset{3e-8}), 1.0, 0.1, 1, 0);
        const auto stats = trace_statistics(trace);
        CHECK(stats.mean_t == Approx(3e-8).epsilon(1e-14));
        CHECK(stats.rms_deviation_t <= 1e-8 * 3e-8); // accumulation rounding only
        CHECK(stats.min_t == 3e-8);
        CHECK(stats.max_t == 3e-8);
    }

    SECTION("concatenation invariance") {
        const auto trace =
            sample_field_trace(one(OrnsteinUhlenbeck{1e-7, 0.5}), 10.0, 0.01, 5, 1);
        const auto full = trace_statistics(trace);
        FieldTrace first{0.0, 0.01, {}}, second{0.0, 0.01, {}};
        const std::size_t half = trace.size() / 2;
        first.samples_t.assign(trace.samples_t.begin(), trace.samples_t.begin() + half);
        second.samples_t.assign(trace.samples_t.begin() + half, trace.samples_t.end());
        const auto a = trace_statistics(first);
        const auto b = trace_statistics(second);
        const double na = static_cast<double>(first.size());
        const double nb = static_cast<double>(second.size());
        const double mean = (na * a.mean_t + nb * b.mean_t) / (na + nb);
        const double msq = (na * (a.rms_deviation_t * a.rms_deviation_t + a.mean_t * a.mean_t) +
                            nb * (b.rms_deviation_t * b.rms_deviation_t + b.mean_t * b.mean_t)) /
                           (na + nb);
        CHECK(full.mean_t == Approx(mean).margin(1e-20));
        CHECK(full.rms_deviation_t == Approx(std::sqrt(msq - mean * mean)).epsilon(1e-9));
        CHECK(full.min_t == std::min(a.min_t, b.min_t));
        CHECK(full.max_t == std::max(a.max_t, b.max_t));
    }

    SECTION("empty trace is rejected") {
        CHECK_THROWS_AS(trace_statistics(FieldTrace{}), ValidationError);
    }
}

TEST_CASE("superposition of components", "[noise]") {
    NoiseSpec both;
    both.components.push_back(OrnsteinUhlenbeck{1e-7, 2.0});
    both.components.push_back(RandomWalk{1e-16});
    NoiseSpec first = one(OrnsteinUhlenbeck{1e-7, 2.0});
    NoiseSpec second_shifted; // keep the component at index 1
    second_shifted.components.push_back(ConstantOffset{0.0});
    second_shifted.components.push_back(RandomWalk{1e-16});

    const auto t_both = sample_field_trace(both, 5.0, 0.01, 77, 3);
    const auto t_first = sample_field_trace(first, 5.0, 0.01, 77, 3);
    const auto t_second = sample_field_trace(second_shifted, 5.0, 0.01, 77, 3);
    REQUIRE(t_both.size() == t_first.size());
    for (std::size_t k = 0; k < t_both.size(); ++k)
        CHECK(t_both.samples_t[k] == t_first.samples_t[k] + t_second.samples_t[k]);
}

TEST_CASE("trace generation is deterministic per (seed, stream)", "[noise]") {
    const auto spec = one(OrnsteinUhlenbeck{1e-7, 1.0});
    const auto a = sample_field_trace(spec, 2.0, 0.01, 42, 9);
    const auto b = sample_field_trace(spec, 2.0, 0.01, 42, 9);
    const auto c = sample_field_trace(spec, 2.0, 0.01, 42, 10);
    CHECK(a.samples_t == b.samples_t);
    CHECK(a.samples_t != c.samples_t);
}

TEST_CASE("gradient traces", "[noise]") {
    SECTION("constant differential") {
        const auto g = sample_gradient_trace({}, one(ConstantOffset{5e-9}), 1.0, 0.01, 11);
        REQUIRE(g.common.size() == g.differential.size());
        CHECK(g.common.t0_s == g.differential.t0_s);
        CHECK(g.common.dt_s == g.differential.dt_s);
        for (double s : g.differential.samples_t) CHECK(s == 5e-9);
        for (double s : g.common.samples_t) CHECK(s == 0.0);
    }

    SECTION("zero differential spec gives an identically zero trace") {
        const auto g = sample_gradient_trace(one(ConstantOffset{1e-7}), {}, 1.0, 0.01, 11);
        for (double s : g.differential.samples_t) CHECK(s == 0.0);
    }
}

TEST_CASE("dephasing-time prediction", "[noise]") {
    hyperfine::FieldSensitivity sens;

    SECTION("linear qubit: 0.1 uT dephases in about 76 us") {
        sens.d1_hz_per_t = 2.1e10; // 21 kHz/uT
        const double t = predict_dephasing_time(sens, 1e-7, 1.0);
        CHECK(t == Approx(76e-6).epsilon(0.05));
    }

    SECTION("clock qubit: quadratic shift dephases in about 52 s") {
        sens.d1_hz_per_t = 0.0;
        sens.d2_hz_per_t2 = 3.05e11; // 0.305 Hz/uT^2
        const double t = predict_dephasing_time(sens, 1e-7, 1.0);
        CHECK(t == Approx(52.0).epsilon(0.05));
    }

    SECTION("zero field error never dephases") {
        sens.d1_hz_per_t = 2.1e10;
        CHECK(std::isinf(predict_dephasing_time(sens, 0.0, 1.0)));
    }

    SECTION("threshold must be positive") {
        CHECK_THROWS_AS(predict_dephasing_time(sens, 1e-7, 0.0), ValidationError);
    }
}

TEST_CASE("noise validation", "[noise]") {
    CHECK_THROWS_AS(sample_field_trace({}, 1.0, 0.0, 1, 0), ValidationError);
    CHECK_THROWS_AS(sample_field_trace({}, 0.001, 0.01, 1, 0), ValidationError);
    CHECK_THROWS_AS(sample_field_trace(one(OrnsteinUhlenbeck{1e-7, 0.0}), 1.0, 0.01, 1, 0),
                    ValidationError);
    CHECK_THROWS_AS(sample_field_trace(one(OrnsteinUhlenbeck{-1e-7, 1.0}), 1.0, 0.01, 1, 0),
                    ValidationError);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sample_field_trace(one(ConstantOffset{nan}), 1.0, 0.01, 1, 0),
                    ValidationError);
}

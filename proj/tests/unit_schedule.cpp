#include <catch2/catch.hpp>

#include <cmath>

#include "iidm/schedule.hpp"

using namespace iidm;

TEST_CASE("linear schedule values are exact") {
    NoiseSchedule s = build_schedule(1000, 0.001);

    CHECK(s.beta_at(1) == 0.001);
    CHECK(s.beta_at(500) == 0.5);
    CHECK(s.beta_at(1000) == 1.0);
    for (int t = 1; t <= 1000; ++t)
        REQUIRE(s.beta_at(t) == 0.001 * static_cast<double>(t));

    CHECK(s.alpha_at(1000) == 0.0);
    CHECK(s.alpha_bar_at(1000) == 0.0);
    CHECK(s.alpha_bar_at(0) == 1.0);
    CHECK(s.alpha_bar_at(1) == 1.0 - 0.001);
    CHECK(s.alpha_bar_at(2) == Approx(0.997002).epsilon(1e-12)); // 0.999 * 0.998
}

TEST_CASE("schedule construction rejects bad parameters") {
    CHECK_THROWS_AS(build_schedule(0, 0.001), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(1000, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(1000, -0.1), std::invalid_argument);
    // slope * t_max > 1 would make alpha negative
    CHECK_THROWS_AS(build_schedule(1000, 0.0011), std::invalid_argument);
    CHECK_NOTHROW(build_schedule(500, 0.002));
}

TEST_CASE("alpha_bar is a decreasing product in [0, 1]") {
    NoiseSchedule s = build_schedule(1000, 0.001);
    bool reached_zero = false;
    for (int t = 1; t <= 1000; ++t) {
        double ab = s.alpha_bar_at(t);
        REQUIRE(ab >= 0.0);
        REQUIRE(ab <= 1.0);
        if (s.alpha_bar_at(t - 1) > 0.0 && ab > 0.0) {
            REQUIRE(ab < s.alpha_bar_at(t - 1)); // strict while positive
        }
        if (ab == 0.0) reached_zero = true;
        if (reached_zero) REQUIRE(ab == 0.0); // stays at zero once there
    }
    REQUIRE(reached_zero);
}

TEST_CASE("alpha_bar recurrence matches the direct product") {
    NoiseSchedule s = build_schedule(1000, 0.001);
    for (int t = 1; t <= 999; ++t) {
        double recur = s.alpha_bar_at(t) * s.alpha_at(t + 1);
        double stored = s.alpha_bar_at(t + 1);
        if (stored == 0.0) {
            REQUIRE(recur == 0.0);
        } else {
            REQUIRE(std::abs(recur - stored) / stored < 1e-12);
        }
    }
}

TEST_CASE("ddpm-standard coefficients") {
    NoiseSchedule s = build_schedule(1000, 0.001);

    SECTION("t = 1: no injected noise") {
        auto c = coefficients_at(s, 1, SamplerMode::ddpm_standard);
        CHECK(c.gamma_tilde == 1.0 / std::sqrt(1.0 - 0.001));
        CHECK(c.sigma_tilde == 0.0);
    }
    SECTION("t = 2: posterior variance from schedule values") {
        auto c = coefficients_at(s, 2, SamplerMode::ddpm_standard);
        double expected_var =
            (1.0 - s.alpha_bar_at(1)) / (1.0 - s.alpha_bar_at(2)) * s.beta_at(2);
        CHECK(c.sigma_tilde * c.sigma_tilde == Approx(expected_var).epsilon(1e-12));
        CHECK(c.gamma_tilde == Approx(1.0 / std::sqrt(0.998)).epsilon(1e-14));
    }
    SECTION("0 <= sigma_tilde^2 <= beta_t everywhere") {
        for (int t = 1; t <= 1000; ++t) {
            auto c = coefficients_at(s, t, SamplerMode::ddpm_standard);
            double var = c.sigma_tilde * c.sigma_tilde;
            REQUIRE(var >= 0.0);
            REQUIRE(var <= s.beta_at(t) * (1.0 + 1e-12));
        }
    }
    SECTION("degenerate final step (alpha == 0) is a fresh draw") {
        auto c = coefficients_at(s, 1000, SamplerMode::ddpm_standard);
        CHECK(c.gamma_tilde == 0.0);
        CHECK(c.beta_tilde == 0.0);
        CHECK(c.sigma_tilde == 1.0); // alpha_bar[999] underflowed to 0
    }
    SECTION("degenerate step keeps the posterior variance on short schedules") {
        NoiseSchedule two = build_schedule(2, 0.5);
        auto c2 = coefficients_at(two, 2, SamplerMode::ddpm_standard);
        CHECK(c2.gamma_tilde == 0.0);
        CHECK(c2.beta_tilde == 0.0);
        CHECK(c2.sigma_tilde == Approx(std::sqrt(0.5)).epsilon(1e-15));

        // even a degenerate schedule injects no noise on the final step
        NoiseSchedule one = build_schedule(1, 1.0);
        auto c1 = coefficients_at(one, 1, SamplerMode::ddpm_standard);
        CHECK(c1.sigma_tilde == 0.0);
    }
    SECTION("t out of range") {
        CHECK_THROWS_AS(coefficients_at(s, 0, SamplerMode::ddpm_standard),
                        std::out_of_range);
        CHECK_THROWS_AS(coefficients_at(s, 1001, SamplerMode::ddpm_standard),
                        std::out_of_range);
    }
}

TEST_CASE("paper-literal coefficients match an independent transcription") {
    NoiseSchedule s = build_schedule(1000, 0.001);
    for (int t : {1, 2, 3, 10, 50, 100, 317, 500, 900}) {
        double beta = 0.001 * t;
        double alpha = 1.0 - beta;
        double abar = 1.0;
        for (int u = 1; u <= t; ++u) abar *= 1.0 - 0.001 * u;
        double abar_prev = 1.0;
        for (int u = 1; u <= t - 1; ++u) abar_prev *= 1.0 - 0.001 * u;

        double gamma = std::sqrt(abar_prev) * beta /
                       (std::sqrt(abar) * (1.0 - abar) +
                        std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar));
        double beta_tilde = std::sqrt(abar_prev) * std::sqrt(1.0 - alpha) * beta /
                            (std::sqrt(abar) * (1.0 - abar));
        double sigma = (1.0 - abar_prev) / ((1.0 - abar) * beta);

        auto c = coefficients_at(s, t, SamplerMode::paper_literal);
        INFO("t = " << t);
        CHECK(c.gamma_tilde == Approx(gamma).epsilon(1e-12));
        CHECK(c.beta_tilde == Approx(beta_tilde).epsilon(1e-12));
        CHECK(c.sigma_tilde == Approx(sigma).epsilon(1e-12).margin(1e-15));
    }
}

TEST_CASE("paper-literal coefficients are singular where alpha_bar underflows") {
    NoiseSchedule s = build_schedule(1000, 0.001);
    CHECK_THROWS_AS(coefficients_at(s, 1000, SamplerMode::paper_literal),
                    std::domain_error);
    // alpha_bar underflows to exact zero well before t_max on this schedule
    CHECK_THROWS_AS(coefficients_at(s, 990, SamplerMode::paper_literal),
                    std::domain_error);
}

TEST_CASE("sampler mode strings round-trip") {
    CHECK(sampler_mode_from_string("ddpm-standard") == SamplerMode::ddpm_standard);
    CHECK(sampler_mode_from_string("paper-literal") == SamplerMode::paper_literal);
    CHECK_THROWS_AS(sampler_mode_from_string("bogus"), std::invalid_argument);
}

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "iidm/tensor.hpp"

namespace iidm {

/// Linear variance schedule beta[t] = slope * t together with the derived
/// per-step quantities. Index 0 is a convention slot (alpha_bar[0] = 1) so
/// that expressions involving alpha_bar[t-1] are well defined at t = 1.
///
/// Immutable after construction; safe to share across threads.
struct NoiseSchedule {
    int t_max = 0;
    double slope = 0.0;
    std::vector<double> beta;      // beta[0] = 0, unused
    std::vector<double> alpha;     // alpha[t] = 1 - beta[t]
    std::vector<double> alpha_bar; // alpha_bar[t] = prod_{s<=t} alpha[s]

    double beta_at(int t) const { return beta[check(t)]; }
    double alpha_at(int t) const { return alpha[check(t)]; }
    /// alpha_bar_at(0) == 1 by convention.
    double alpha_bar_at(int t) const {
        if (t == 0) return 1.0;
        return alpha_bar[check(t)];
    }

private:
    int check(int t) const {
        if (t < 1 || t > t_max)
            throw std::out_of_range("NoiseSchedule: t = " + std::to_string(t) +
                                    " outside 1.." + std::to_string(t_max));
        return t;
    }
};

/// Builds the schedule. Requires slope * t_max <= 1 so no alpha goes
/// negative; with slope * t_max == 1 the final step has alpha == 0 and
/// alpha_bar[t_max] == 0 exactly. All arithmetic in double precision,
/// alpha_bar by running product.
inline NoiseSchedule build_schedule(int t_max, double slope) {
    require(t_max >= 1, "build_schedule: t_max must be >= 1");
    require(slope > 0.0, "build_schedule: slope must be positive");
    require(slope * static_cast<double>(t_max) <= 1.0,
            "build_schedule: slope * t_max must not exceed 1 (alpha would go negative)");

    NoiseSchedule s;
    s.t_max = t_max;
    s.slope = slope;
    s.beta.assign(t_max + 1, 0.0);
    s.alpha.assign(t_max + 1, 1.0);
    s.alpha_bar.assign(t_max + 1, 1.0);
    double running = 1.0;
    for (int t = 1; t <= t_max; ++t) {
        s.beta[t] = slope * static_cast<double>(t);
        s.alpha[t] = 1.0 - s.beta[t];
        running *= s.alpha[t];
        s.alpha_bar[t] = running;
    }
    return s;
}

enum class SamplerMode {
    ddpm_standard, // DDPM posterior mean/variance (Ho et al. 2020, eq. 11/12)
    paper_literal, // coefficient expressions as printed, for comparison runs
};

inline const char* to_string(SamplerMode m) {
    return m == SamplerMode::ddpm_standard ? "ddpm-standard" : "paper-literal";
}

inline SamplerMode sampler_mode_from_string(const std::string& s) {
    if (s == "ddpm-standard") return SamplerMode::ddpm_standard;
    if (s == "paper-literal") return SamplerMode::paper_literal;
    throw std::invalid_argument("unknown sampler mode: " + s);
}

/// Per-step reverse coefficients: z_{t-1} = gamma_tilde * z_t
/// - beta_tilde * eps_hat + sigma_tilde * noise.
struct SamplerCoefficients {
    double gamma_tilde = 0.0;
    double beta_tilde = 0.0;
    double sigma_tilde = 0.0;
    SamplerMode mode = SamplerMode::ddpm_standard;
};

/// Reverse-step coefficients at step t.
///
/// ddpm-standard:
///   gamma_tilde = 1/sqrt(alpha_t)
///   beta_tilde  = beta_t / (sqrt(alpha_t) * sqrt(1 - alpha_bar_t))
///   sigma_tilde = sqrt(beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t))
/// With alpha_bar[0] = 1 this gives sigma_tilde = 0 at t = 1 (no noise on
/// the final step). When alpha_t == 0 (only possible at t = t_max with
/// slope * t_max == 1) the eps parameterization is singular: a beta == 1
/// forward kernel is memoryless and the posterior's z0 coefficient cannot
/// be expressed through eps_hat. The step keeps the posterior variance and
/// drops the mean terms (gamma_tilde = beta_tilde = 0), which is exact
/// whenever alpha_bar_{t-1} is zero in double precision -- always true for
/// the default 1000-step schedule -- and approximate for short schedules
/// that reach alpha == 0 while alpha_bar_{t-1} is still representable.
///
/// paper-literal evaluates the printed expressions symbol for symbol and
/// throws where their denominators vanish (alpha_bar_t == 0).
inline SamplerCoefficients coefficients_at(const NoiseSchedule& s, int t,
                                           SamplerMode mode) {
    double beta_t = s.beta_at(t); // also range-checks t
    double alpha_t = s.alpha_at(t);
    double abar_t = s.alpha_bar_at(t);
    double abar_prev = s.alpha_bar_at(t - 1);

    SamplerCoefficients c;
    c.mode = mode;
    if (mode == SamplerMode::ddpm_standard) {
        double var = (1.0 - abar_prev) / (1.0 - abar_t) * beta_t;
        c.sigma_tilde = std::sqrt(var);
        if (alpha_t == 0.0) {
            c.gamma_tilde = 0.0;
            c.beta_tilde = 0.0;
            return c;
        }
        double sqrt_alpha = std::sqrt(alpha_t);
        c.gamma_tilde = 1.0 / sqrt_alpha;
        c.beta_tilde = beta_t / (sqrt_alpha * std::sqrt(1.0 - abar_t));
        return c;
    }

    // paper-literal
    double denom_gamma =
        std::sqrt(abar_t) * (1.0 - abar_t) +
        std::sqrt(alpha_t) * (1.0 - abar_prev) / (1.0 - abar_t);
    double denom_beta = std::sqrt(abar_t) * (1.0 - abar_t);
    if (denom_gamma == 0.0 || denom_beta == 0.0)
        throw std::domain_error(
            "coefficients_at: paper-literal expressions are singular at t = " +
            std::to_string(t) + " (alpha_bar underflows to 0)");
    c.gamma_tilde = std::sqrt(abar_prev) * beta_t / denom_gamma;
    c.beta_tilde =
        std::sqrt(abar_prev) * std::sqrt(1.0 - alpha_t) * beta_t / denom_beta;
    c.sigma_tilde = (1.0 - abar_prev) / ((1.0 - abar_t) * beta_t);
    return c;
}

} // namespace iidm

#pragma once

#include <cmath>
#include <cstdint>

#include "iidm/latent.hpp"
#include "iidm/rng.hpp"
#include "iidm/schedule.hpp"
#include "iidm/tensor.hpp"

namespace iidm {

/// Segmentation mask plus style reference; the two conditioning inputs.
struct SynthesisConditions {
    LabelGrid mask;
    RgbImage style_ref;

    void validate() const {
        require(mask.height == style_ref.height && mask.width == style_ref.width,
                "SynthesisConditions: mask and style image dimensions differ");
        mask.validate();
    }
};

/// z_t = sqrt(abar_t) * z0 + sqrt(1 - abar_t) * noise, elementwise.
inline Latent forward_diffuse(const Latent& z0, int t, const Latent& noise,
                              const NoiseSchedule& schedule) {
    require(z0.same_shape(noise), "forward_diffuse: noise shape must match z0");
    if (t < 1)
        throw std::out_of_range("forward_diffuse: t must be >= 1");
    double abar = schedule.alpha_bar_at(t); // upper range check
    double a = std::sqrt(abar);
    double b = std::sqrt(1.0 - abar);
    Latent out = z0;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = a * z0.values[i] + b * noise.values[i];
    return out;
}

/// Noise-contaminated start point of image-to-image synthesis. Identical to
/// forward diffusion evaluated at t_start; kept as its own entry point
/// because it is the inference-side contract.
inline Latent i2i_start(const Latent& style_latent, int t_start, const Latent& noise,
                        const NoiseSchedule& schedule) {
    return forward_diffuse(style_latent, t_start, noise, schedule);
}

/// One ancestral step: gamma_tilde * z_t - beta_tilde * eps_pred
/// + sigma_tilde * noise, coefficients per the selected mode.
inline Latent reverse_step(const Latent& z_t, const Latent& eps_pred, int t,
                           const Latent& noise, const NoiseSchedule& schedule,
                           SamplerMode mode) {
    require(z_t.same_shape(eps_pred), "reverse_step: eps_pred shape must match z_t");
    require(z_t.same_shape(noise), "reverse_step: noise shape must match z_t");
    SamplerCoefficients c = coefficients_at(schedule, t, mode);
    Latent out = z_t;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = c.gamma_tilde * z_t.values[i] -
                        c.beta_tilde * eps_pred.values[i] +
                        c.sigma_tilde * noise.values[i];
    return out;
}

/// How the chain is seeded: from the noise-contaminated style latent, or
/// from pure Gaussian noise (the plain-diffusion baseline).
enum class StartPoint { style_image, pure_noise };

inline const char* to_string(StartPoint s) {
    return s == StartPoint::style_image ? "style" : "noise";
}

inline StartPoint start_point_from_string(const std::string& s) {
    if (s == "style") return StartPoint::style_image;
    if (s == "noise") return StartPoint::pure_noise;
    throw std::invalid_argument("unknown start point: " + s);
}

/// Full ancestral chain: encode the style reference, jump to t_start, then
/// denoise down to t = 1 querying `denoiser(z_t, mask, t)` each step.
/// Deterministic given the seed; t_start = 0 returns the encoded style
/// latent untouched. Returns the denoised latent z0_hat (not decoded).
template <typename DenoiserFn>
Latent sample(const DenoiserFn& denoiser, const SynthesisConditions& conditions,
              const Codec& codec, const NoiseSchedule& schedule, int t_start,
              std::uint64_t seed, SamplerMode mode = SamplerMode::ddpm_standard,
              StartPoint start = StartPoint::style_image) {
    conditions.validate();
    require(t_start >= 0 && t_start <= schedule.t_max,
            "sample: t_start outside 0..t_max");
    Latent z = encode(codec, conditions.style_ref);
    if (t_start == 0) return z;
    LabelGrid mask = conform_mask(conditions.mask, z.height, z.width);

    Rng root(seed);
    Rng start_rng = root.child("start-noise");
    Latent start_noise = normal_latent(start_rng, z.channels, z.height, z.width);
    if (start == StartPoint::style_image)
        z = i2i_start(z, t_start, start_noise, schedule);
    else
        z = start_noise;

    Rng step_rng = root.child("step-noise");
    Latent inject = zeros_like(z);
    for (int t = t_start; t >= 1; --t) {
        Latent eps = denoiser(z, mask, t);
        SamplerCoefficients c = coefficients_at(schedule, t, mode);
        if (c.sigma_tilde > 0.0)
            for (auto& v : inject.values) v = step_rng.normal();
        else
            for (auto& v : inject.values) v = 0.0;
        z = reverse_step(z, eps, t, inject, schedule, mode);
    }
    return z;
}

} // namespace iidm

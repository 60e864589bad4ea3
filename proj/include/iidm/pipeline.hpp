#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iidm/diffusion.hpp"
#include "iidm/image.hpp"
#include "iidm/latent.hpp"
#include "iidm/schedule.hpp"

namespace iidm {

/// Elementwise arithmetic mean of parameter sets; with two sets this is the
/// (theta_a + theta_b) / 2 model ensemble. Summation runs over inputs in
/// their given order for each element, tensors in sorted-name order.
inline DenoiserParams ensemble_average(const std::vector<DenoiserParams>& sets) {
    require(!sets.empty(), "ensemble_average: need at least one parameter set");
    const DenoiserParams& first = sets.front();
    for (const auto& s : sets) {
        require(s.arch == first.arch, "ensemble_average: architecture descriptors differ");
        require(s.tensors.size() == first.tensors.size(),
                "ensemble_average: tensor counts differ");
        for (std::size_t i = 0; i < s.tensors.size(); ++i) {
            require(s.tensors[i].name == first.tensors[i].name,
                    "ensemble_average: tensor names differ");
            require(s.tensors[i].dims == first.tensors[i].dims,
                    "ensemble_average: tensor shapes differ");
        }
    }
    DenoiserParams out = first;
    double inv = 1.0 / static_cast<double>(sets.size());
    for (std::size_t ti = 0; ti < out.tensors.size(); ++ti) {
        auto& dst = out.tensors[ti].values;
        for (std::size_t i = 0; i < dst.size(); ++i) {
            double acc = 0.0;
            for (const auto& s : sets) acc += s.tensors[ti].values[i];
            dst[i] = acc * inv;
        }
    }
    return out;
}

struct PipelineConfig {
    int t_start = 320;
    int rounds = 3; // K: initial synthesis plus K-1 refinement rounds
    bool color_transfer_enabled = true;
    SamplerMode sampler_mode = SamplerMode::ddpm_standard;
    StartPoint start = StartPoint::style_image;
    std::uint64_t seed = 0;

    void validate(const NoiseSchedule& schedule) const {
        require(rounds >= 1, "PipelineConfig: rounds (K) must be >= 1");
        require(t_start >= 1 && t_start <= schedule.t_max,
                "PipelineConfig: t_start outside 1..t_max");
    }
};

/// Per-round noise stream; round k of a run with seed s samples with
/// round_seed(s, k), so a single-round run is exactly diffusion::sample.
inline std::uint64_t round_seed(std::uint64_t seed, int round) {
    return Rng::derive_seed(seed, "round", static_cast<std::uint64_t>(round));
}

/// K rounds of synthesis: round 1 starts from the style reference (or pure
/// noise for the plain-diffusion baseline); every later round re-noises the
/// previous output, with color transfer from the style reference applied at
/// the start of the round when enabled. Fresh noise per round. Returns the
/// final decoded image; `observer`, when set, sees every round's output.
template <typename DenoiserFn>
RgbImage run_inference(const PipelineConfig& config,
                       const SynthesisConditions& conditions,
                       const NoiseSchedule& schedule, const Codec& codec,
                       const DenoiserFn& denoiser,
                       const std::function<void(int, const RgbImage&)>& observer = {}) {
    config.validate(schedule);
    conditions.validate();

    RgbImage current = conditions.style_ref;
    for (int k = 1; k <= config.rounds; ++k) {
        SynthesisConditions round_input = conditions;
        if (k > 1) {
            round_input.style_ref = config.color_transfer_enabled
                                        ? color_transfer(current, conditions.style_ref)
                                        : current;
        }
        StartPoint start = (k == 1) ? config.start : StartPoint::style_image;
        Latent z0 = sample(denoiser, round_input, codec, schedule, config.t_start,
                           round_seed(config.seed, k), config.sampler_mode, start);
        current = decode(codec, z0);
        if (observer) observer(k, current);
    }
    return current;
}

/// Refinement of an existing image: every round gets the round k > 1
/// treatment of run_inference (color transfer against the style reference,
/// then re-noise and denoise).
template <typename DenoiserFn>
RgbImage run_refinement(const PipelineConfig& config,
                        const SynthesisConditions& conditions,
                        const RgbImage& initial,
                        const NoiseSchedule& schedule, const Codec& codec,
                        const DenoiserFn& denoiser) {
    config.validate(schedule);
    conditions.validate();
    RgbImage current = initial;
    for (int k = 1; k <= config.rounds; ++k) {
        SynthesisConditions round_input = conditions;
        round_input.style_ref = config.color_transfer_enabled
                                    ? color_transfer(current, conditions.style_ref)
                                    : current;
        Latent z0 = sample(denoiser, round_input, codec, schedule, config.t_start,
                           round_seed(config.seed, k), config.sampler_mode,
                           StartPoint::style_image);
        current = decode(codec, z0);
    }
    return current;
}

} // namespace iidm

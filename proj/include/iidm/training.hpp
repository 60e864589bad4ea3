#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "iidm/denoiser.hpp"
#include "iidm/diffusion.hpp"
#include "iidm/latent.hpp"
#include "iidm/rng.hpp"
#include "iidm/schedule.hpp"

namespace iidm {

enum class GammaPolicy { constant_one };

struct TrainConfig {
    int steps = 2000;
    int batch_size = 32;
    double learning_rate = 0.05;
    GammaPolicy gamma_policy = GammaPolicy::constant_one;
    std::uint64_t seed = 0;
    int checkpoint_cadence = 500;

    void validate() const {
        require(steps >= 0, "TrainConfig: steps must be nonnegative");
        require(batch_size > 0, "TrainConfig: batch size must be positive");
        require(learning_rate >= 0.0, "TrainConfig: learning rate must be nonnegative");
        require(checkpoint_cadence > 0, "TrainConfig: checkpoint cadence must be positive");
    }
};

inline double gamma_at(GammaPolicy, int /*t*/) { return 1.0; }

struct TrainSample {
    RgbImage image;
    LabelGrid mask;
};

/// Noise-prediction objective: gamma_t times the mean squared error over
/// all elements (mean, not sum, so the magnitude is resolution-independent).
inline double loss(const Latent& eps_true, const Latent& eps_pred, double gamma_t) {
    require(eps_true.same_shape(eps_pred), "loss: shapes must match");
    require(gamma_t > 0.0, "loss: gamma_t must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < eps_true.values.size(); ++i) {
        double d = eps_pred.values[i] - eps_true.values[i];
        acc += d * d;
    }
    return gamma_t * acc / static_cast<double>(eps_true.values.size());
}

/// One SGD step over a batch. Per sample: encode, draw t uniform on
/// {1..t_max}, draw eps, diffuse, predict, accumulate the loss gradient.
/// Samples are visited in index order so the reduction order is fixed.
/// Returns the batch loss; parameters are updated in place.
inline double training_step(DenoiserParams& params,
                            const std::vector<TrainSample>& batch, const Codec& codec,
                            const NoiseSchedule& schedule, const TrainConfig& config,
                            Rng& rng) {
    require(!batch.empty(), "training_step: batch must be nonempty");
    ParamGrads grads = zero_grads(params);
    double batch_loss = 0.0;
    double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& sample : batch) {
        Latent z0 = encode(codec, sample.image);
        LabelGrid mask = conform_mask(sample.mask, z0.height, z0.width);
        int t = rng.uniform_int(1, schedule.t_max);
        Latent eps = normal_latent(rng, z0.channels, z0.height, z0.width);
        Latent z_t = forward_diffuse(z0, t, eps, schedule);

        double gamma_t = gamma_at(config.gamma_policy, t);
        MlpCache cache;
        Latent eps_pred = predict_noise(params, z_t, mask, t, &cache);
        batch_loss += loss(eps, eps_pred, gamma_t) * inv_batch;

        // d(batch loss)/d(eps_pred) for this sample
        double scale = gamma_t * 2.0 / static_cast<double>(eps.values.size()) * inv_batch;
        std::vector<double> out_grad(eps.values.size());
        for (std::size_t i = 0; i < out_grad.size(); ++i)
            out_grad[i] = scale * (eps_pred.values[i] - eps.values[i]);
        mlp_backward(params, cache, out_grad, grads);
    }
    for (std::size_t ti = 0; ti < params.tensors.size(); ++ti) {
        auto& dst = params.tensors[ti].values;
        const auto& g = grads.tensors[ti].values;
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] -= config.learning_rate * g[i];
    }
    return batch_loss;
}

struct Checkpoint {
    int step = 0;
    DenoiserParams params;
};

struct TrainResult {
    std::vector<Checkpoint> checkpoints;          // step 0, every cadence, final
    std::vector<std::pair<int, double>> history;  // (step, batch loss), 1-based
    DenoiserParams final_params;
};

/// Algorithm: draw a batch uniformly from the dataset each step and apply
/// training_step for the configured budget ("until converged" is made
/// concrete as a fixed step count).
inline TrainResult train_loop(const TrainConfig& config,
                              const std::vector<TrainSample>& dataset,
                              DenoiserParams params, const Codec& codec,
                              const NoiseSchedule& schedule) {
    config.validate();
    require(!dataset.empty(), "train_loop: dataset must be nonempty");

    TrainResult result;
    result.checkpoints.push_back({0, params});
    Rng rng = Rng(config.seed).child("train");
    std::vector<TrainSample> batch;
    for (int step = 1; step <= config.steps; ++step) {
        batch.clear();
        for (int i = 0; i < config.batch_size; ++i)
            batch.push_back(dataset[rng.uniform_int(0, static_cast<int>(dataset.size()) - 1)]);
        double l = training_step(params, batch, codec, schedule, config, rng);
        result.history.emplace_back(step, l);
        if (step % config.checkpoint_cadence == 0 && step != config.steps)
            result.checkpoints.push_back({step, params});
    }
    if (config.steps > 0) result.checkpoints.push_back({config.steps, params});
    result.final_params = std::move(params);
    return result;
}

} // namespace iidm

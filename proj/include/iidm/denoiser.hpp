#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iidm/rng.hpp"
#include "iidm/schedule.hpp"
#include "iidm/tensor.hpp"

namespace iidm {

/// Sinusoidal features of the timestep, sin/cos pairs over a geometric
/// frequency ladder (transformer-style).
inline std::vector<double> time_embedding(int t, int dim) {
    require(dim >= 2 && dim % 2 == 0, "time_embedding: dim must be even and >= 2");
    std::vector<double> e(dim);
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
        e[2 * i] = std::sin(t * freq);
        e[2 * i + 1] = std::cos(t * freq);
    }
    return e;
}

enum class Activation { tanh, identity };

inline const char* to_string(Activation a) {
    return a == Activation::tanh ? "tanh" : "identity";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation: " + s);
}

/// Shape contract of the noise predictor: a plain perceptron over
/// [flattened latent | one-hot mask volume | time embedding].
struct ArchDescriptor {
    std::vector<int> layer_sizes; // input, hidden..., output
    Activation activation = Activation::tanh;
    int time_embed_dim = 32;
    int label_count = 1;
    int latent_channels = 3;
    int latent_height = 1;
    int latent_width = 1;

    int latent_size() const { return latent_channels * latent_height * latent_width; }
    int input_size() const {
        return latent_size() + label_count * latent_height * latent_width +
               time_embed_dim;
    }

    bool operator==(const ArchDescriptor& o) const {
        return layer_sizes == o.layer_sizes && activation == o.activation &&
               time_embed_dim == o.time_embed_dim && label_count == o.label_count &&
               latent_channels == o.latent_channels &&
               latent_height == o.latent_height && latent_width == o.latent_width;
    }

    void validate() const {
        require(layer_sizes.size() >= 2, "ArchDescriptor: need input and output layers");
        for (int s : layer_sizes) require(s > 0, "ArchDescriptor: layer sizes must be positive");
        require(layer_sizes.front() == input_size(),
                "ArchDescriptor: input layer does not match latent/mask/time sizes");
        require(layer_sizes.back() == latent_size(),
                "ArchDescriptor: output layer must match the latent size");
    }
};

/// Standard toy predictor: 3 hidden layers of width 128, tanh, 32-dim time
/// embedding. Kept small enough that exact gradient checking is routine.
inline ArchDescriptor make_mlp_arch(int latent_channels, int latent_height,
                                    int latent_width, int label_count,
                                    int hidden_width = 128, int hidden_layers = 3,
                                    int time_embed_dim = 32) {
    ArchDescriptor a;
    a.label_count = label_count;
    a.latent_channels = latent_channels;
    a.latent_height = latent_height;
    a.latent_width = latent_width;
    a.time_embed_dim = time_embed_dim;
    a.layer_sizes.push_back(a.input_size());
    for (int i = 0; i < hidden_layers; ++i) a.layer_sizes.push_back(hidden_width);
    a.layer_sizes.push_back(a.latent_size());
    return a;
}

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double> values;

    std::size_t count() const {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; });
    }
};

/// Named parameter tensors of the noise predictor, kept sorted by name so
/// iteration order (and therefore summation order) is fixed.
struct DenoiserParams {
    ArchDescriptor arch;
    std::vector<NamedTensor> tensors;

    NamedTensor& find(const std::string& name) {
        for (auto& t : tensors)
            if (t.name == name) return t;
        throw std::out_of_range("DenoiserParams: no tensor named " + name);
    }
    const NamedTensor& find(const std::string& name) const {
        return const_cast<DenoiserParams*>(this)->find(name);
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& t : tensors) n += t.count();
        return n;
    }

    void sort_tensors() {
        std::sort(tensors.begin(), tensors.end(),
                  [](const NamedTensor& a, const NamedTensor& b) { return a.name < b.name; });
    }
};

inline std::string layer_weight_name(int layer) {
    return "layer" + std::to_string(layer) + ".weight";
}
inline std::string layer_bias_name(int layer) {
    return "layer" + std::to_string(layer) + ".bias";
}

/// Seeded fan-in-scaled uniform init; the final layer starts at zero so the
/// untrained model is the zero predictor.
inline DenoiserParams init_mlp_params(const ArchDescriptor& arch, std::uint64_t seed) {
    arch.validate();
    DenoiserParams p;
    p.arch = arch;
    Rng rng = Rng(seed).child("mlp-init");
    int layers = static_cast<int>(arch.layer_sizes.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        std::size_t fan_in = static_cast<std::size_t>(arch.layer_sizes[l]);
        std::size_t fan_out = static_cast<std::size_t>(arch.layer_sizes[l + 1]);
        NamedTensor w{layer_weight_name(l), {fan_out, fan_in}, {}};
        w.values.resize(fan_out * fan_in, 0.0);
        if (l != layers - 1) {
            double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : w.values) v = (2.0 * rng.uniform() - 1.0) * bound;
        }
        NamedTensor b{layer_bias_name(l), {fan_out}, std::vector<double>(fan_out, 0.0)};
        p.tensors.push_back(std::move(w));
        p.tensors.push_back(std::move(b));
    }
    p.sort_tensors();
    return p;
}

/// Per-layer inputs and activations retained for the backward pass.
struct MlpCache {
    std::vector<std::vector<double>> layer_inputs; // h_0 .. h_{L-1}
    std::vector<double> output;
};

inline std::vector<double> mlp_forward(const DenoiserParams& params,
                                       const std::vector<double>& features,
                                       MlpCache* cache = nullptr) {
    const auto& sizes = params.arch.layer_sizes;
    require(features.size() == static_cast<std::size_t>(sizes.front()),
            "mlp_forward: feature vector does not match the input layer");
    int layers = static_cast<int>(sizes.size()) - 1;
    std::vector<double> h = features;
    if (cache) {
        cache->layer_inputs.clear();
        cache->layer_inputs.reserve(layers);
    }
    for (int l = 0; l < layers; ++l) {
        if (cache) cache->layer_inputs.push_back(h);
        const auto& w = params.find(layer_weight_name(l));
        const auto& b = params.find(layer_bias_name(l));
        std::size_t rows = w.dims[0], cols = w.dims[1];
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = b.values[r];
            const double* wr = &w.values[r * cols];
            for (std::size_t k = 0; k < cols; ++k) acc += wr[k] * h[k];
            out[r] = acc;
        }
        bool last = (l == layers - 1);
        if (!last && params.arch.activation == Activation::tanh)
            for (auto& v : out) v = std::tanh(v);
        h = std::move(out);
    }
    if (cache) cache->output = h;
    return h;
}

/// Gradients mirror the parameter layout (same names and shapes).
using ParamGrads = DenoiserParams;

inline ParamGrads zero_grads(const DenoiserParams& params) {
    ParamGrads g = params;
    for (auto& t : g.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
    return g;
}

/// Exact reverse-mode gradients for one sample; accumulates into `grads`.
inline void mlp_backward(const DenoiserParams& params, const MlpCache& cache,
                         const std::vector<double>& output_grad, ParamGrads& grads) {
    const auto& sizes = params.arch.layer_sizes;
    int layers = static_cast<int>(sizes.size()) - 1;
    require(cache.layer_inputs.size() == static_cast<std::size_t>(layers),
            "mlp_backward: cache does not match the architecture");
    std::vector<double> delta = output_grad; // dL/d(layer output)
    for (int l = layers - 1; l >= 0; --l) {
        const auto& w = params.find(layer_weight_name(l));
        auto& gw = grads.find(layer_weight_name(l));
        auto& gb = grads.find(layer_bias_name(l));
        std::size_t rows = w.dims[0], cols = w.dims[1];
        const auto& input = cache.layer_inputs[l];

        // tanh layers: delta arrives w.r.t. the activated output; fold in the
        // derivative using the activated values, reconstructed going backward.
        if (l != layers - 1 && params.arch.activation == Activation::tanh) {
            // activated output of layer l is the input of layer l+1
            const auto& activated = cache.layer_inputs[l + 1];
            for (std::size_t r = 0; r < rows; ++r)
                delta[r] *= 1.0 - activated[r] * activated[r];
        }
        for (std::size_t r = 0; r < rows; ++r) {
            gb.values[r] += delta[r];
            double* gwr = &gw.values[r * cols];
            for (std::size_t k = 0; k < cols; ++k) gwr[k] += delta[r] * input[k];
        }
        if (l > 0) {
            std::vector<double> prev(cols, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* wr = &w.values[r * cols];
                for (std::size_t k = 0; k < cols; ++k) prev[k] += wr[k] * delta[r];
            }
            delta = std::move(prev);
        }
    }
}

/// Feature layout consumed by the perceptron: flattened latent, then the
/// one-hot label volume (label-major), then the time embedding.
inline std::vector<double> build_features(const ArchDescriptor& arch, const Latent& z_t,
                                          const LabelGrid& mask, int t) {
    require(z_t.channels == arch.latent_channels && z_t.height == arch.latent_height &&
                z_t.width == arch.latent_width,
            "predict_noise: latent shape does not match the architecture");
    require(mask.height == z_t.height && mask.width == z_t.width,
            "predict_noise: mask dimensions do not match the latent");
    require(mask.label_count == arch.label_count,
            "predict_noise: mask label count does not match the architecture");
    std::vector<double> f;
    f.reserve(arch.input_size());
    f.insert(f.end(), z_t.values.begin(), z_t.values.end());
    std::size_t plane = static_cast<std::size_t>(z_t.height) * z_t.width;
    std::size_t base = f.size();
    f.resize(base + static_cast<std::size_t>(arch.label_count) * plane, 0.0);
    for (std::size_t i = 0; i < plane; ++i) {
        int label = mask.labels[i];
        require(label >= 0 && label < arch.label_count,
                "predict_noise: mask label outside declared set");
        f[base + static_cast<std::size_t>(label) * plane + i] = 1.0;
    }
    auto emb = time_embedding(t, arch.time_embed_dim);
    f.insert(f.end(), emb.begin(), emb.end());
    return f;
}

/// eps_theta(z_t, m, t): deterministic noise prediction with z_t's shape.
inline Latent predict_noise(const DenoiserParams& params, const Latent& z_t,
                            const LabelGrid& mask, int t, MlpCache* cache = nullptr) {
    auto out = mlp_forward(params, build_features(params.arch, z_t, mask, t), cache);
    Latent eps(z_t.channels, z_t.height, z_t.width);
    eps.values = std::move(out);
    return eps;
}

/// Closed-form E[eps | z_t] for data z0 ~ N(mu0, var0 * I):
///   sqrt(1 - abar) * (z_t - sqrt(abar) * mu0) / (abar * var0 + 1 - abar).
/// Exact oracle for verifying the sampler; at alpha_bar == 0 it reduces to
/// z_t itself when var0 == 1.
inline Latent analytic_gaussian_predict(double mu0, double var0, const Latent& z_t,
                                        int t, const NoiseSchedule& schedule) {
    require(var0 >= 0.0, "analytic_gaussian_predict: var0 must be nonnegative");
    double abar = schedule.alpha_bar_at(t);
    double sqrt_abar = std::sqrt(abar);
    double one_minus = 1.0 - abar;
    double denom = abar * var0 + one_minus;
    double scale = std::sqrt(one_minus) / denom;
    Latent out = z_t;
    for (auto& v : out.values) v = scale * (v - sqrt_abar * mu0);
    return out;
}

/// Adapters with the uniform denoiser call shape (z_t, mask, t) -> eps_hat.
struct MlpDenoiser {
    const DenoiserParams* params;
    Latent operator()(const Latent& z_t, const LabelGrid& mask, int t) const {
        return predict_noise(*params, z_t, mask, t);
    }
};

struct AnalyticGaussianDenoiser {
    double mu0 = 0.0;
    double var0 = 1.0;
    const NoiseSchedule* schedule = nullptr;
    Latent operator()(const Latent& z_t, const LabelGrid&, int t) const {
        return analytic_gaussian_predict(mu0, var0, z_t, t, *schedule);
    }
};

/// Loss callback contract for gradient checking: returns the scalar loss
/// and, when asked, the backprop gradients for the given parameters.
using LossAndGradFn =
    std::function<double(const DenoiserParams&, ParamGrads* grads)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

/// Central-difference check of mlp_backward. Every parameter is visited up
/// to `full_check_limit` total parameters; above that a seeded subset is
/// drawn from every tensor so each layer stays covered. Relative error uses
/// a small absolute floor so flat (all-zero) landscapes compare clean.
inline GradCheckReport gradient_check(const DenoiserParams& params,
                                      const LossAndGradFn& loss_fn, double step,
                                      std::size_t full_check_limit = 10000,
                                      std::uint64_t subset_seed = 0) {
    require(step > 0.0, "gradient_check: step must be positive");
    ParamGrads analytic = zero_grads(params);
    loss_fn(params, &analytic);

    std::size_t total = params.parameter_count();
    bool full = total <= full_check_limit;
    Rng rng = Rng(subset_seed).child("grad-check");
    DenoiserParams work = params;

    GradCheckReport report;
    for (std::size_t ti = 0; ti < params.tensors.size(); ++ti) {
        const auto& tensor = params.tensors[ti];
        std::size_t n = tensor.count();
        std::size_t budget = full
            ? n
            : std::min<std::size_t>(
                  n, std::max<std::size_t>(
                         64, full_check_limit * n / std::max<std::size_t>(1, total)));
        for (std::size_t j = 0; j < budget; ++j) {
            std::size_t idx = full ? j : static_cast<std::size_t>(rng.next_u64() % n);
            double saved = work.tensors[ti].values[idx];
            work.tensors[ti].values[idx] = saved + step;
            double plus = loss_fn(work, nullptr);
            work.tensors[ti].values[idx] = saved - step;
            double minus = loss_fn(work, nullptr);
            work.tensors[ti].values[idx] = saved;
            double fd = (plus - minus) / (2.0 * step);
            double bp = analytic.tensors[ti].values[idx];
            double denom = std::max({std::abs(fd), std::abs(bp), 1e-6});
            double rel = std::abs(fd - bp) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = tensor.name;
                report.worst_index = idx;
            }
            ++report.checked;
        }
    }
    return report;
}

} // namespace iidm

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "iidm/image.hpp"
#include "iidm/rng.hpp"
#include "iidm/tensor.hpp"
#include "iidm/training.hpp"

namespace iidm {

/// Desk-scale data regime: each sample carries a constant-label mask and
/// pixels drawn i.i.d. from that label's Gaussian, so the Bayes-optimal
/// noise prediction has a closed form per label and training can be scored
/// against analytic_gaussian_predict.
struct LabeledGaussianSpec {
    int width = 2;
    int height = 2;
    std::vector<double> label_means = {0.30, 0.50, 0.70}; // pixel-space mean per label
    double pixel_std = 0.08;

    int label_count() const { return static_cast<int>(label_means.size()); }
    double variance() const { return pixel_std * pixel_std; }
};

inline TrainSample make_labeled_gaussian_sample(const LabeledGaussianSpec& spec,
                                                int label, Rng& rng) {
    TrainSample s;
    s.mask = LabelGrid(spec.height, spec.width, spec.label_count(), label);
    s.image = RgbImage(spec.width, spec.height);
    double mu = spec.label_means[label];
    for (auto& p : s.image.pixels)
        p = std::clamp(mu + spec.pixel_std * rng.normal(), 0.0, 1.0);
    return s;
}

inline std::vector<TrainSample> make_labeled_gaussian_dataset(
    const LabeledGaussianSpec& spec, int count, std::uint64_t seed) {
    Rng rng = Rng(seed).child("toy-data");
    std::vector<TrainSample> data;
    data.reserve(count);
    for (int i = 0; i < count; ++i)
        data.push_back(make_labeled_gaussian_sample(spec, i % spec.label_count(), rng));
    return data;
}

/// Two-tone style reference with per-pixel jitter: left half one color,
/// right half another. Distinct, non-degenerate histogram for similarity
/// comparisons at toy scale.
inline RgbImage make_two_tone_image(int width, int height, std::uint64_t seed,
                                    double low = 0.2, double high = 0.8,
                                    double jitter = 0.08) {
    RgbImage img(width, height);
    Rng rng = Rng(seed).child("two-tone");
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double base = (x < width / 2) ? low : high;
            for (int c = 0; c < 3; ++c) {
                double v = base + jitter * (2.0 * rng.uniform() - 1.0);
                img.at(x, y, c) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return img;
}

} // namespace iidm

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "iidm/rng.hpp"

namespace iidm {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

/// Real-valued grid in codec space, channels x height x width, channel-major.
struct Latent {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Latent() = default;
    Latent(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          values(static_cast<std::size_t>(c) * h * w, fill) {
        require(c > 0 && h > 0 && w > 0, "Latent: dimensions must be positive");
    }

    std::size_t size() const { return values.size(); }

    double& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const Latent& other) const {
        return channels == other.channels && height == other.height &&
               width == other.width;
    }
};

inline Latent zeros_like(const Latent& z) {
    return Latent(z.channels, z.height, z.width, 0.0);
}

inline Latent normal_latent(Rng& rng, int c, int h, int w) {
    Latent out(c, h, w);
    for (auto& v : out.values) v = rng.normal();
    return out;
}

/// Semantic label grid; labels must lie in {0, ..., label_count - 1}.
struct LabelGrid {
    int height = 0;
    int width = 0;
    int label_count = 0;
    std::vector<int> labels;

    LabelGrid() = default;
    LabelGrid(int h, int w, int count, int fill = 0)
        : height(h), width(w), label_count(count),
          labels(static_cast<std::size_t>(h) * w, fill) {
        require(h > 0 && w > 0, "LabelGrid: dimensions must be positive");
        require(count > 0, "LabelGrid: label_count must be positive");
        require(fill >= 0 && fill < count, "LabelGrid: fill label out of range");
    }

    int& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    int at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }

    void validate() const {
        for (int v : labels)
            require(v >= 0 && v < label_count, "LabelGrid: label outside declared set");
    }
};

} // namespace iidm

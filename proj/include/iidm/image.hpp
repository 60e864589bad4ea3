#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "iidm/tensor.hpp"

namespace iidm {

/// 8-bit-free RGB image: H x W x 3 doubles, interleaved, values in [0, 1]
/// at rest. Intermediate computations may leave the range before clamping.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // (y * width + x) * 3 + channel

    RgbImage() = default;
    RgbImage(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
        require(w > 0 && h > 0, "RgbImage: dimensions must be positive");
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    double& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

/// Image in Reinhard's l-alpha-beta opponent space, same interleaved layout.
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;
};

/// Per-channel mean and (population) standard deviation in lab space.
struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

namespace labspace {

// RGB <-> LMS and the opponent transform follow Reinhard, Ashikhmin, Gooch,
// Shirley, "Color Transfer between Images", IEEE CG&A 2001. The reverse LMS
// matrix is the exact inverse of the forward one rather than the rounded
// constants printed there, so round trips close to float precision.
inline constexpr double kRgbToLms[3][3] = {
    {0.3811, 0.5783, 0.0402},
    {0.1967, 0.7244, 0.0782},
    {0.0241, 0.1288, 0.8444},
};

using Mat3 = std::array<std::array<double, 3>, 3>;

inline const Mat3& lms_to_rgb() {
    static const Mat3 inv = [] {
        const auto& m = kRgbToLms;
        Mat3 r{};
        double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
        r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
        r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
        r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
        r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
        r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
        r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
        r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
        r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
        return r;
    }();
    return inv;
}

// log-LMS -> lab:  diag(1/sqrt(3), 1/sqrt(6), 1/sqrt(2)) * [[1,1,1],[1,1,-2],[1,-1,0]]
// and its exact inverse. Guard keeps log10 finite on black pixels.
inline constexpr double kLogEpsilon = 1e-6;

inline std::array<double, 3> rgb_pixel_to_lab(double r, double g, double b) {
    double L = kRgbToLms[0][0] * r + kRgbToLms[0][1] * g + kRgbToLms[0][2] * b;
    double M = kRgbToLms[1][0] * r + kRgbToLms[1][1] * g + kRgbToLms[1][2] * b;
    double S = kRgbToLms[2][0] * r + kRgbToLms[2][1] * g + kRgbToLms[2][2] * b;
    L = std::log10(std::max(L, kLogEpsilon));
    M = std::log10(std::max(M, kLogEpsilon));
    S = std::log10(std::max(S, kLogEpsilon));
    const double s3 = 1.0 / std::sqrt(3.0);
    const double s6 = 1.0 / std::sqrt(6.0);
    const double s2 = 1.0 / std::sqrt(2.0);
    return {s3 * (L + M + S), s6 * (L + M - 2.0 * S), s2 * (L - M)};
}

inline std::array<double, 3> lab_pixel_to_rgb(double l, double a, double b) {
    const double s3 = std::sqrt(3.0) / 3.0;
    const double s6 = std::sqrt(6.0) / 6.0;
    const double s2 = std::sqrt(2.0) / 2.0;
    double L = s3 * l + s6 * a + s2 * b;
    double M = s3 * l + s6 * a - s2 * b;
    double S = s3 * l - 2.0 * s6 * a;
    L = std::pow(10.0, L);
    M = std::pow(10.0, M);
    S = std::pow(10.0, S);
    const auto& inv = lms_to_rgb();
    return {inv[0][0] * L + inv[0][1] * M + inv[0][2] * S,
            inv[1][0] * L + inv[1][1] * M + inv[1][2] * S,
            inv[2][0] * L + inv[2][1] * M + inv[2][2] * S};
}

} // namespace labspace

inline LabImage rgb_to_lab(const RgbImage& image) {
    LabImage out;
    out.width = image.width;
    out.height = image.height;
    out.values.resize(image.pixels.size());
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        auto lab = labspace::rgb_pixel_to_lab(
            image.pixels[i * 3], image.pixels[i * 3 + 1], image.pixels[i * 3 + 2]);
        out.values[i * 3] = lab[0];
        out.values[i * 3 + 1] = lab[1];
        out.values[i * 3 + 2] = lab[2];
    }
    return out;
}

/// Converts back to RGB, clamping to [0, 1] at this final materialization.
inline RgbImage lab_to_rgb(const LabImage& lab) {
    RgbImage out(lab.width, lab.height);
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        auto rgb = labspace::lab_pixel_to_rgb(lab.values[i * 3], lab.values[i * 3 + 1],
                                              lab.values[i * 3 + 2]);
        for (int c = 0; c < 3; ++c)
            out.pixels[i * 3 + c] = std::clamp(rgb[c], 0.0, 1.0);
    }
    return out;
}

inline ChannelStats lab_stats(const LabImage& lab) {
    ChannelStats st;
    std::size_t n = lab.values.size() / 3;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += lab.values[i * 3 + c];
        st.mean[c] = sum / static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = lab.values[i * 3 + c] - st.mean[c];
            var += d * d;
        }
        st.stddev[c] = std::sqrt(var / static_cast<double>(n));
    }
    return st;
}

inline constexpr double kDegenerateStd = 1e-6;

/// Statistics matching in lab space, before conversion back to RGB. Source
/// channels with degenerate spread collapse to the reference mean.
inline LabImage color_transfer_lab(const RgbImage& source, const RgbImage& reference) {
    require(source.pixel_count() > 0 && reference.pixel_count() > 0,
            "color_transfer: images must be nonempty");
    LabImage src = rgb_to_lab(source);
    ChannelStats ss = lab_stats(src);
    ChannelStats rs = lab_stats(rgb_to_lab(reference));
    std::size_t n = src.values.size() / 3;
    for (int c = 0; c < 3; ++c) {
        if (ss.stddev[c] < kDegenerateStd) {
            for (std::size_t i = 0; i < n; ++i) src.values[i * 3 + c] = rs.mean[c];
        } else {
            double scale = rs.stddev[c] / ss.stddev[c];
            for (std::size_t i = 0; i < n; ++i)
                src.values[i * 3 + c] =
                    (src.values[i * 3 + c] - ss.mean[c]) * scale + rs.mean[c];
        }
    }
    return src;
}

/// Per-channel mean/std transfer from `reference` onto `source`
/// (Reinhard color transfer). Image sizes need not match.
inline RgbImage color_transfer(const RgbImage& source, const RgbImage& reference) {
    return lab_to_rgb(color_transfer_lab(source, reference));
}

/// Normalized per-channel histogram over uniform bins on [0, 1], channels
/// concatenated (length 3 * bins). Value 1.0 lands in the last bin; each
/// channel block sums to 1.
inline std::vector<double> channel_histogram(const RgbImage& image, int bins) {
    require(bins >= 2, "channel_histogram: bins must be >= 2");
    std::vector<double> h(static_cast<std::size_t>(bins) * 3, 0.0);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            double v = image.pixels[i * 3 + c];
            int b = std::min(bins - 1, static_cast<int>(v * bins));
            b = std::max(0, b);
            h[static_cast<std::size_t>(c) * bins + b] += 1.0;
        }
    }
    double per_channel = static_cast<double>(image.pixel_count());
    for (auto& v : h) v /= per_channel;
    return h;
}

} // namespace iidm

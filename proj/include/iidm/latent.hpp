#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "iidm/image.hpp"
#include "iidm/rng.hpp"
#include "iidm/tensor.hpp"

namespace iidm {

enum class CodecKind { identity, linear_patch };

inline const char* to_string(CodecKind k) {
    return k == CodecKind::identity ? "identity" : "linear-patch";
}

inline CodecKind codec_kind_from_string(const std::string& s) {
    if (s == "identity") return CodecKind::identity;
    if (s == "linear-patch") return CodecKind::linear_patch;
    throw std::invalid_argument("unknown codec kind: " + s);
}

/// Encoder/decoder pair mapping images to the space diffusion runs in.
/// identity passes pixel planes through untouched; linear-patch applies one
/// fixed linear map per non-overlapping patch (orthogonal by default, so
/// decode is the transpose). Immutable after construction.
struct Codec {
    CodecKind kind = CodecKind::identity;
    int patch = 1;
    int latent_channels = 3;
    // projection[row][col], row = latent channel, col = flattened patch entry
    // (channel-major within the patch). Square: patch * patch * 3 rows/cols.
    std::vector<double> projection;
    std::vector<double> inverse_projection;

    static Codec identity() { return Codec{}; }

    /// 2x2 patches, 3 -> 12 channels, orthogonal map drawn from a seeded
    /// generator (QR of a Gaussian matrix), so decode(encode(x)) == x up to
    /// float error.
    static Codec linear_patch(std::uint64_t seed, int patch = 2) {
        int dim = patch * patch * 3;
        std::vector<double> m(static_cast<std::size_t>(dim) * dim);
        Rng rng = Rng(seed).child("codec-projection");
        for (auto& v : m) v = rng.normal();
        gram_schmidt(m, dim);
        return with_projection(std::move(m), patch);
    }

    /// Explicit projection matrix (dim x dim, row-major), mainly for tests.
    static Codec with_projection(std::vector<double> m, int patch = 2) {
        int dim = patch * patch * 3;
        require(m.size() == static_cast<std::size_t>(dim) * dim,
                "Codec: projection must be (patch*patch*3)^2 entries");
        Codec c;
        c.kind = CodecKind::linear_patch;
        c.patch = patch;
        c.latent_channels = dim;
        c.inverse_projection.resize(m.size());
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                c.inverse_projection[static_cast<std::size_t>(j) * dim + i] =
                    m[static_cast<std::size_t>(i) * dim + j];
        c.projection = std::move(m);
        return c;
    }

private:
    static void gram_schmidt(std::vector<double>& m, int dim) {
        for (int i = 0; i < dim; ++i) {
            double* row = &m[static_cast<std::size_t>(i) * dim];
            for (int j = 0; j < i; ++j) {
                const double* prev = &m[static_cast<std::size_t>(j) * dim];
                double dot = 0.0;
                for (int k = 0; k < dim; ++k) dot += row[k] * prev[k];
                for (int k = 0; k < dim; ++k) row[k] -= dot * prev[k];
            }
            double norm = 0.0;
            for (int k = 0; k < dim; ++k) norm += row[k] * row[k];
            norm = std::sqrt(norm);
            for (int k = 0; k < dim; ++k) row[k] /= norm;
        }
    }
};

inline Latent encode(const Codec& codec, const RgbImage& image) {
    if (codec.kind == CodecKind::identity) {
        Latent z(3, image.height, image.width);
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                for (int c = 0; c < 3; ++c) z.at(c, y, x) = image.at(x, y, c);
        return z;
    }
    int p = codec.patch;
    require(image.height % p == 0 && image.width % p == 0,
            "encode: image dimensions must be divisible by the patch size");
    int dim = p * p * 3;
    Latent z(dim, image.height / p, image.width / p);
    std::vector<double> v(dim);
    for (int py = 0; py < z.height; ++py) {
        for (int px = 0; px < z.width; ++px) {
            int i = 0;
            for (int c = 0; c < 3; ++c)
                for (int dy = 0; dy < p; ++dy)
                    for (int dx = 0; dx < p; ++dx)
                        v[i++] = image.at(px * p + dx, py * p + dy, c);
            for (int row = 0; row < dim; ++row) {
                double acc = 0.0;
                const double* w = &codec.projection[static_cast<std::size_t>(row) * dim];
                for (int k = 0; k < dim; ++k) acc += w[k] * v[k];
                z.at(row, py, px) = acc;
            }
        }
    }
    return z;
}

/// Inverse of encode; RGB values are clamped to [0, 1] here, at final image
/// materialization, never internally.
inline RgbImage decode(const Codec& codec, const Latent& z) {
    if (codec.kind == CodecKind::identity) {
        require(z.channels == 3, "decode: identity codec expects 3 channels");
        RgbImage out(z.width, z.height);
        for (int y = 0; y < z.height; ++y)
            for (int x = 0; x < z.width; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(x, y, c) = std::clamp(z.at(c, y, x), 0.0, 1.0);
        return out;
    }
    int p = codec.patch;
    int dim = p * p * 3;
    require(z.channels == dim, "decode: latent channels do not match codec");
    RgbImage out(z.width * p, z.height * p);
    std::vector<double> lat(dim), v(dim);
    for (int py = 0; py < z.height; ++py) {
        for (int px = 0; px < z.width; ++px) {
            for (int c = 0; c < dim; ++c) lat[c] = z.at(c, py, px);
            for (int row = 0; row < dim; ++row) {
                double acc = 0.0;
                const double* w =
                    &codec.inverse_projection[static_cast<std::size_t>(row) * dim];
                for (int k = 0; k < dim; ++k) acc += w[k] * lat[k];
                v[row] = acc;
            }
            int i = 0;
            for (int c = 0; c < 3; ++c)
                for (int dy = 0; dy < p; ++dy)
                    for (int dx = 0; dx < p; ++dx)
                        out.at(px * p + dx, py * p + dy, c) =
                            std::clamp(v[i++], 0.0, 1.0);
        }
    }
    return out;
}

/// Conforms an image-resolution mask to the latent grid. Codecs that shrink
/// the spatial dimensions by an integer factor get nearest-neighbor
/// downsampling (top-left sample per block).
inline LabelGrid conform_mask(const LabelGrid& mask, int latent_height,
                              int latent_width) {
    if (mask.height == latent_height && mask.width == latent_width) return mask;
    require(latent_height > 0 && latent_width > 0 &&
                mask.height % latent_height == 0 && mask.width % latent_width == 0 &&
                mask.height / latent_height == mask.width / latent_width,
            "conform_mask: mask dimensions are not an integer multiple of the latent");
    int factor = mask.height / latent_height;
    LabelGrid out(latent_height, latent_width, mask.label_count);
    for (int y = 0; y < latent_height; ++y)
        for (int x = 0; x < latent_width; ++x)
            out.at(y, x) = mask.at(y * factor, x * factor);
    return out;
}

/// Affine map between [0,1] pixel values and the nominal [-1,1] signal
/// range, usable by callers that want zero-centered latents.
inline double pixel_to_signal(double p) { return 2.0 * p - 1.0; }
inline double signal_to_pixel(double s) { return (s + 1.0) * 0.5; }

inline Latent pixel_to_signal(const Latent& z) {
    Latent out = z;
    for (auto& v : out.values) v = pixel_to_signal(v);
    return out;
}

inline Latent signal_to_pixel(const Latent& z) {
    Latent out = z;
    for (auto& v : out.values) v = signal_to_pixel(v);
    return out;
}

} // namespace iidm

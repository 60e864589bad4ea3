#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "iidm/image.hpp"
#include "iidm/tensor.hpp"

namespace iidm {

inline std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline double from_byte(std::uint8_t b) { return static_cast<double>(b) / 255.0; }

namespace detail {

struct PngCloser {
    std::FILE* f = nullptr;
    ~PngCloser() {
        if (f) std::fclose(f);
    }
};

inline std::vector<std::uint8_t> read_png_rgb8(const std::string& path, int& width,
                                               int& height) {
    PngCloser file;
    file.f = std::fopen(path.c_str(), "rb");
    if (!file.f) throw std::runtime_error("cannot open image: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }
    png_init_io(png, file.f);
    png_read_info(png, info);

    // normalize anything to 8-bit RGB
    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height * 3);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = data.data() + static_cast<std::size_t>(y) * width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return data;
}

inline void write_png_rgb8(const std::string& path, const std::vector<std::uint8_t>& data,
                           int width, int height) {
    namespace fs = std::filesystem;
    fs::path tmp = fs::path(path);
    tmp += ".tmp";
    {
        PngCloser file;
        file.f = std::fopen(tmp.string().c_str(), "wb");
        if (!file.f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        png_structp png =
            png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) throw std::runtime_error("libpng init failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw std::runtime_error("libpng init failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw std::runtime_error("failed to encode PNG: " + path);
        }
        png_init_io(png, file.f);
        // fixed encoder settings so outputs are byte-stable across runs
        png_set_compression_level(png, 6);
        png_set_filter(png, 0, PNG_FILTER_NONE);
        png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y)
            rows[y] = const_cast<png_bytep>(data.data()) +
                      static_cast<std::size_t>(y) * width * 3;
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    fs::rename(tmp, fs::path(path));
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace detail

/// 8-bit RGB image from a .png or ASCII .ppm (P3) file.
inline RgbImage read_image(const std::string& path) {
    int w = 0, h = 0;
    std::vector<std::uint8_t> data;
    if (detail::has_suffix(path, ".ppm")) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open image: " + path);
        std::string magic;
        int maxval = 0;
        in >> magic >> w >> h >> maxval;
        if (magic != "P3" || maxval != 255 || w <= 0 || h <= 0)
            throw std::runtime_error("unsupported PPM (want ASCII P3, maxval 255): " + path);
        data.resize(static_cast<std::size_t>(w) * h * 3);
        for (auto& b : data) {
            int v;
            if (!(in >> v)) throw std::runtime_error("truncated PPM: " + path);
            b = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
        }
    } else {
        data = detail::read_png_rgb8(path, w, h);
    }
    RgbImage img(w, h);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = from_byte(data[i]);
    return img;
}

inline void write_image(const std::string& path, const RgbImage& image) {
    std::vector<std::uint8_t> data(image.pixels.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = to_byte(image.pixels[i]);
    if (detail::has_suffix(path, ".ppm")) {
        std::ostringstream out;
        out << "P3\n" << image.width << " " << image.height << "\n255\n";
        for (std::size_t i = 0; i < data.size(); ++i)
            out << static_cast<int>(data[i]) << ((i + 1) % 12 == 0 ? "\n" : " ");
        out << "\n";
        namespace fs = std::filesystem;
        fs::path tmp = fs::path(path);
        tmp += ".tmp";
        std::ofstream f(tmp);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        f << out.str();
        f.close();
        fs::rename(tmp, fs::path(path));
    } else {
        detail::write_png_rgb8(path, data, image.width, image.height);
    }
}

/// Label grid from a grayscale (or channel-equal RGB) image file: the pixel
/// byte value is the label index.
inline LabelGrid read_mask(const std::string& path, int label_count) {
    int w = 0, h = 0;
    std::vector<std::uint8_t> data;
    if (detail::has_suffix(path, ".ppm")) {
        RgbImage img = read_image(path);
        w = img.width;
        h = img.height;
        data.resize(img.pixels.size());
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = to_byte(img.pixels[i]);
    } else {
        data = detail::read_png_rgb8(path, w, h);
    }
    LabelGrid mask(h, w, label_count);
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        std::uint8_t r = data[i * 3], g = data[i * 3 + 1], b = data[i * 3 + 2];
        if (r != g || g != b)
            throw std::runtime_error("mask is not grayscale at pixel " +
                                     std::to_string(i) + ": " + path);
        if (r >= label_count)
            throw std::runtime_error("mask label " + std::to_string(r) +
                                     " exceeds label count " + std::to_string(label_count) +
                                     ": " + path);
        mask.labels[i] = r;
    }
    return mask;
}

/// Writes a label grid as a grayscale PNG (label index = byte value).
inline void write_mask(const std::string& path, const LabelGrid& mask) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(mask.width) * mask.height * 3);
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        auto v = static_cast<std::uint8_t>(mask.labels[i]);
        data[i * 3] = data[i * 3 + 1] = data[i * 3 + 2] = v;
    }
    detail::write_png_rgb8(path, data, mask.width, mask.height);
}

} // namespace iidm

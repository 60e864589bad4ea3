#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iidm/denoiser.hpp"
#include "iidm/latent.hpp"

namespace iidm {

// Checkpoint format, little-endian throughout:
//   magic "IIDM" | version u8 | arch JSON: u32 length + UTF-8 bytes |
//   per tensor (stored order): u32 name length + name | u32 rank |
//   dims as u64 each | values as f32, row-major.
inline constexpr char kWeightMagic[4] = {'I', 'I', 'D', 'M'};
inline constexpr std::uint8_t kWeightVersion = 1;

inline nlohmann::json arch_to_json(const ArchDescriptor& a) {
    return nlohmann::json{{"layers", a.layer_sizes},
                          {"activation", to_string(a.activation)},
                          {"time_dim", a.time_embed_dim},
                          {"labels", a.label_count},
                          {"latent", {a.latent_channels, a.latent_height, a.latent_width}}};
}

inline ArchDescriptor arch_from_json(const nlohmann::json& j) {
    ArchDescriptor a;
    a.layer_sizes = j.at("layers").get<std::vector<int>>();
    a.activation = activation_from_string(j.at("activation").get<std::string>());
    a.time_embed_dim = j.at("time_dim").get<int>();
    a.label_count = j.at("labels").get<int>();
    auto lat = j.at("latent");
    a.latent_channels = lat.at(0).get<int>();
    a.latent_height = lat.at(1).get<int>();
    a.latent_width = lat.at(2).get<int>();
    return a;
}

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

inline void put_f32_le(std::string& out, float value) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    put_le<std::uint32_t>(out, bits);
}

class Reader {
public:
    Reader(const std::string& data, std::string path)
        : data_(data), path_(std::move(path)) {}

    template <typename T>
    T get_le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }

    float get_f32_le() {
        std::uint32_t bits = get_le<std::uint32_t>();
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    std::string get_bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size())
            throw std::runtime_error("checkpoint truncated: " + path_);
    }
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

/// Atomic write: temp file in the same directory, then rename.
inline void write_file_atomic(const std::string& path, const std::string& data) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

} // namespace detail

inline std::string serialize_checkpoint(const DenoiserParams& params) {
    std::string out;
    out.append(kWeightMagic, 4);
    out.push_back(static_cast<char>(kWeightVersion));
    std::string arch = arch_to_json(params.arch).dump();
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(arch.size()));
    out += arch;
    for (const auto& t : params.tensors) {
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out += t.name;
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) detail::put_le<std::uint64_t>(out, d);
        for (double v : t.values) detail::put_f32_le(out, static_cast<float>(v));
    }
    return out;
}

inline void save_checkpoint(const std::string& path, const DenoiserParams& params) {
    detail::write_file_atomic(path, serialize_checkpoint(params));
}

inline DenoiserParams parse_checkpoint(const std::string& data, const std::string& path) {
    detail::Reader r(data, path);
    std::string magic = r.get_bytes(4);
    if (std::memcmp(magic.data(), kWeightMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    std::uint8_t version = r.get_le<std::uint8_t>();
    if (version != kWeightVersion)
        throw std::runtime_error("unsupported checkpoint version " +
                                 std::to_string(version) + ": " + path);
    std::uint32_t arch_len = r.get_le<std::uint32_t>();
    nlohmann::json arch_json;
    try {
        arch_json = nlohmann::json::parse(r.get_bytes(arch_len));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt architecture descriptor in " + path + ": " +
                                 e.what());
    }
    DenoiserParams p;
    p.arch = arch_from_json(arch_json);
    while (!r.at_end()) {
        NamedTensor t;
        std::uint32_t name_len = r.get_le<std::uint32_t>();
        t.name = r.get_bytes(name_len);
        std::uint32_t rank = r.get_le<std::uint32_t>();
        t.dims.resize(rank);
        for (auto& d : t.dims) d = r.get_le<std::uint64_t>();
        t.values.resize(t.count());
        for (auto& v : t.values) v = static_cast<double>(r.get_f32_le());
        p.tensors.push_back(std::move(t));
    }
    p.sort_tensors();
    return p;
}

inline DenoiserParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_checkpoint(data, path);
}

// Codecs share the container: the descriptor JSON carries the kind and
// patch size, linear-patch projections travel as a "projection" tensor.

inline void save_codec(const std::string& path, const Codec& codec) {
    nlohmann::json desc = {{"kind", to_string(codec.kind)}, {"patch", codec.patch}};
    std::string out;
    out.append(kWeightMagic, 4);
    out.push_back(static_cast<char>(kWeightVersion));
    std::string json = desc.dump();
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(json.size()));
    out += json;
    if (codec.kind == CodecKind::linear_patch) {
        std::size_t dim = static_cast<std::size_t>(codec.latent_channels);
        detail::put_le<std::uint32_t>(out, 10u); // "projection"
        out += "projection";
        detail::put_le<std::uint32_t>(out, 2u);
        detail::put_le<std::uint64_t>(out, dim);
        detail::put_le<std::uint64_t>(out, dim);
        for (double v : codec.projection)
            detail::put_f32_le(out, static_cast<float>(v));
    }
    detail::write_file_atomic(path, out);
}

inline Codec load_codec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open codec file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    detail::Reader r(data, path);
    std::string magic = r.get_bytes(4);
    if (std::memcmp(magic.data(), kWeightMagic, 4) != 0)
        throw std::runtime_error("not a codec file (bad magic): " + path);
    std::uint8_t version = r.get_le<std::uint8_t>();
    if (version != kWeightVersion)
        throw std::runtime_error("unsupported codec file version " +
                                 std::to_string(version) + ": " + path);
    nlohmann::json desc;
    try {
        desc = nlohmann::json::parse(r.get_bytes(r.get_le<std::uint32_t>()));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt codec descriptor in " + path + ": " + e.what());
    }
    CodecKind kind = codec_kind_from_string(desc.at("kind").get<std::string>());
    if (kind == CodecKind::identity) return Codec::identity();
    int patch = desc.at("patch").get<int>();
    std::uint32_t name_len = r.get_le<std::uint32_t>();
    std::string name = r.get_bytes(name_len);
    if (name != "projection")
        throw std::runtime_error("codec file missing projection tensor: " + path);
    std::uint32_t rank = r.get_le<std::uint32_t>();
    if (rank != 2) throw std::runtime_error("codec projection must be rank 2: " + path);
    std::uint64_t rows = r.get_le<std::uint64_t>();
    std::uint64_t cols = r.get_le<std::uint64_t>();
    std::vector<double> m(rows * cols);
    for (auto& v : m) v = static_cast<double>(r.get_f32_le());
    return Codec::with_projection(std::move(m), patch);
}

} // namespace iidm

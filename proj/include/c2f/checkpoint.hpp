#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/model.hpp"

namespace c2f {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian; big-endian hosts need byte swaps");

// Binary checkpoint: magic, version, vocabulary hash, then named tensors with
// explicit shapes and raw f64 little-endian payloads. Enough for exact resume
// and for refusing a model/vocabulary mismatch.
namespace ckpt {

constexpr char kMagic[8] = {'C', '2', 'F', 'C', 'K', 'P', 'T', '\1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("checkpoint truncated");
    return v;
}

}  // namespace ckpt

inline void save_checkpoint(const ModelParams& params, std::uint64_t vocab_hash,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(ckpt::kMagic, sizeof ckpt::kMagic);
    ckpt::write_pod(out, ckpt::kVersion);
    ckpt::write_pod(out, vocab_hash);
    auto views = tensor_views(const_cast<ModelParams&>(params));
    ckpt::write_pod(out, static_cast<std::uint32_t>(views.size()));
    for (const auto& t : views) {
        ckpt::write_pod(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        ckpt::write_pod(out, static_cast<std::uint32_t>(t.dims.size()));
        for (std::size_t dim : t.dims) ckpt::write_pod(out, static_cast<std::uint64_t>(dim));
        out.write(reinterpret_cast<const char*>(t.data),
                  static_cast<std::streamsize>(t.size * sizeof(double)));
    }
    if (!out) throw std::runtime_error("I/O error while writing checkpoint: " + path);
}

struct Checkpoint {
    ModelParams params;
    std::uint64_t vocab_hash = 0;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, ckpt::kMagic, sizeof magic) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    auto version = ckpt::read_pod<std::uint32_t>(in);
    if (version != ckpt::kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    std::uint64_t vocab_hash = ckpt::read_pod<std::uint64_t>(in);
    auto n_tensors = ckpt::read_pod<std::uint32_t>(in);

    struct RawTensor {
        std::vector<std::size_t> dims;
        std::vector<double> data;
    };
    std::map<std::string, RawTensor> raw;
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
        auto name_len = ckpt::read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        auto ndims = ckpt::read_pod<std::uint32_t>(in);
        RawTensor rt;
        std::size_t total = 1;
        for (std::uint32_t i = 0; i < ndims; ++i) {
            rt.dims.push_back(static_cast<std::size_t>(ckpt::read_pod<std::uint64_t>(in)));
            total *= rt.dims.back();
        }
        rt.data.resize(total);
        in.read(reinterpret_cast<char*>(rt.data.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint truncated: " + path);
        raw.emplace(std::move(name), std::move(rt));
    }

    auto emb = raw.find("encoder.embedding");
    if (emb == raw.end() || emb->second.dims.size() != 2)
        throw std::runtime_error("checkpoint missing encoder.embedding tensor");
    auto proj = raw.find("encoder.projection");
    if (proj == raw.end() || proj->second.dims.size() != 2)
        throw std::runtime_error("checkpoint missing encoder.projection tensor");

    Checkpoint result;
    result.vocab_hash = vocab_hash;
    result.params = make_model(emb->second.dims[0], emb->second.dims[1], proj->second.dims[0]);
    for (auto& view : tensor_views(result.params)) {
        auto it = raw.find(view.name);
        if (it == raw.end()) throw std::runtime_error("checkpoint missing tensor " + view.name);
        if (it->second.data.size() != view.size || it->second.dims != view.dims)
            throw std::runtime_error("checkpoint tensor shape mismatch for " + view.name);
        std::memcpy(view.data, it->second.data.data(), view.size * sizeof(double));
    }
    return result;
}

}  // namespace c2f

#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/coarse.hpp"
#include "c2f/encoder.hpp"
#include "c2f/fine.hpp"

namespace c2f {

enum class ContextMode { kFull, kStaticOnly, kAdaptiveOnly, kMaxPool, kNone };
enum class CoarseLossScope { kAllCandidates, kBucketOnly };

inline ContextMode parse_context_mode(const std::string& s) {
    if (s == "full") return ContextMode::kFull;
    if (s == "static-only") return ContextMode::kStaticOnly;
    if (s == "adaptive-only") return ContextMode::kAdaptiveOnly;
    if (s == "maxpool") return ContextMode::kMaxPool;
    if (s == "none") return ContextMode::kNone;
    throw std::invalid_argument("unknown context mode: " + s);
}

inline std::string to_string(ContextMode m) {
    switch (m) {
        case ContextMode::kFull: return "full";
        case ContextMode::kStaticOnly: return "static-only";
        case ContextMode::kAdaptiveOnly: return "adaptive-only";
        case ContextMode::kMaxPool: return "maxpool";
        case ContextMode::kNone: return "none";
    }
    return "full";
}

inline CoarseLossScope parse_coarse_loss_scope(const std::string& s) {
    if (s == "all-candidates") return CoarseLossScope::kAllCandidates;
    if (s == "bucket-only") return CoarseLossScope::kBucketOnly;
    throw std::invalid_argument("unknown coarse loss scope: " + s);
}

inline std::string to_string(CoarseLossScope s) {
    return s == CoarseLossScope::kAllCandidates ? "all-candidates" : "bucket-only";
}

struct TrainConfig {
    std::size_t bucket_size = 15;
    double lambda = 1.0;  // fine-loss weight in the joint objective
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    std::size_t max_q_tokens = 40;
    std::size_t max_p_tokens = 200;
    CoarseLossScope coarse_loss_scope = CoarseLossScope::kAllCandidates;
    ContextMode context_mode = ContextMode::kFull;
    bool adaptive_norm_term = true;  // keep the ||V_l|| term in stored w values
    std::size_t d_embed = 32;
    std::size_t d_model = 64;

    void validate() const {
        if (bucket_size < 1) throw std::invalid_argument("bucket_size must be >= 1");
        if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
        if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
        if (adam_epsilon <= 0.0) throw std::invalid_argument("adam_epsilon must be positive");
        if (max_q_tokens < 1 || max_p_tokens < 1)
            throw std::invalid_argument("token caps must be >= 1");
        if (d_embed < 1 || d_model < 1) throw std::invalid_argument("dims must be >= 1");
    }
};

struct ModelParams {
    EncoderParams encoder;
    CoarseParams coarse;
    FineParams fine;

    std::size_t d_model() const { return encoder.d_model(); }
};

inline ModelParams make_model(std::size_t vocab_size, std::size_t d_embed, std::size_t d_model) {
    ModelParams p;
    p.encoder = make_encoder(vocab_size, d_embed, d_model);
    p.coarse.weight = Vec(d_model, 0.0);
    p.fine.context_vector = Vec(d_model, 0.0);
    p.fine.weight = Vec(2 * d_model, 0.0);
    return p;
}

inline ModelParams zeros_like(const ModelParams& p) {
    return make_model(p.encoder.embedding.rows, p.encoder.d_embed(), p.encoder.d_model());
}

inline ModelParams init_model(std::size_t vocab_size, std::size_t d_embed, std::size_t d_model,
                              std::uint64_t seed) {
    ModelParams p = make_model(vocab_size, d_embed, d_model);
    std::mt19937_64 rng(seed);
    init_uniform(p.encoder.embedding, rng);
    init_uniform(p.encoder.projection, rng);
    init_uniform(p.encoder.bias, rng);
    init_uniform(p.coarse.weight, rng);
    init_uniform(p.fine.context_vector, rng);
    init_uniform(p.fine.weight, rng);
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    p.coarse.bias = dist(rng);
    p.fine.bias = 0.0;
    return p;
}

struct TensorView {
    std::string name;
    double* data;
    std::size_t size;
    std::vector<std::size_t> dims;
};

// Flat named views over every trainable tensor, in a fixed order. Drives the
// optimizer, checkpoints, and gradient checking.
inline std::vector<TensorView> tensor_views(ModelParams& p) {
    return {
        {"encoder.embedding", p.encoder.embedding.a.data(), p.encoder.embedding.a.size(),
         {p.encoder.embedding.rows, p.encoder.embedding.cols}},
        {"encoder.projection", p.encoder.projection.a.data(), p.encoder.projection.a.size(),
         {p.encoder.projection.rows, p.encoder.projection.cols}},
        {"encoder.bias", p.encoder.bias.data(), p.encoder.bias.size(), {p.encoder.bias.size()}},
        {"coarse.weight", p.coarse.weight.data(), p.coarse.weight.size(),
         {p.coarse.weight.size()}},
        {"coarse.bias", &p.coarse.bias, 1, {1}},
        {"fine.context_vector", p.fine.context_vector.data(), p.fine.context_vector.size(),
         {p.fine.context_vector.size()}},
        {"fine.weight", p.fine.weight.data(), p.fine.weight.size(), {p.fine.weight.size()}},
        {"fine.bias", &p.fine.bias, 1, {1}},
    };
}

inline bool all_finite(const ModelParams& p) {
    ModelParams& q = const_cast<ModelParams&>(p);
    for (const auto& t : tensor_views(q))
        for (std::size_t i = 0; i < t.size; ++i)
            if (!std::isfinite(t.data[i])) return false;
    return true;
}

}  // namespace c2f

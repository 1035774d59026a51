#pragma once

#include <random>
#include <stdexcept>

#include "c2f/linalg.hpp"
#include "c2f/vocab.hpp"

namespace c2f {

// Trainable stand-in for a heavyweight pair encoder: mean-pooled token
// embeddings per segment, concatenated, then one tanh layer. Exposes the same
// two entry points a heavier encoder would (pair and passage-only), so it can
// be swapped behind this interface.
struct EncoderParams {
    Mat embedding;   // vocab_size x d_embed
    Mat projection;  // d_model x (2 * d_embed), rows dotted with [v_q; v_p]
    Vec bias;        // d_model

    std::size_t d_embed() const { return embedding.cols; }
    std::size_t d_model() const { return projection.rows; }
};

struct EncodeCache {
    Vec v_q;  // mean embedding of the question segment (zero if empty)
    Vec v_p;  // mean embedding of the passage segment
    Vec out;  // tanh activations
};

namespace detail {

inline Vec mean_embedding(const TokenSequence& seq, const Mat& embedding) {
    Vec v(embedding.cols, 0.0);
    if (seq.real_len == 0) return v;
    for (std::size_t t = 0; t < seq.real_len; ++t) {
        const double* row = embedding.row(static_cast<std::size_t>(seq.ids[t]));
        for (std::size_t j = 0; j < embedding.cols; ++j) v[j] += row[j];
    }
    for (double& x : v) x /= static_cast<double>(seq.real_len);
    return v;
}

inline void mean_embedding_backward(const TokenSequence& seq, const Vec& dv, Mat& d_embedding) {
    if (seq.real_len == 0) return;
    double inv = 1.0 / static_cast<double>(seq.real_len);
    for (std::size_t t = 0; t < seq.real_len; ++t) {
        double* row = d_embedding.row(static_cast<std::size_t>(seq.ids[t]));
        for (std::size_t j = 0; j < d_embedding.cols; ++j) row[j] += inv * dv[j];
    }
}

inline Vec project_tanh(const Vec& v_q, const Vec& v_p, const EncoderParams& params) {
    Vec cat;
    cat.reserve(v_q.size() + v_p.size());
    cat.insert(cat.end(), v_q.begin(), v_q.end());
    cat.insert(cat.end(), v_p.begin(), v_p.end());
    Vec out = matvec_bias(params.projection, cat, params.bias);
    for (double& x : out) x = std::tanh(x);
    return out;
}

}  // namespace detail

// O_i: joint representation of (question, passage). Requires at least one
// non-empty segment.
inline Vec encode_pair(const TokenSequence& q, const TokenSequence& p, const EncoderParams& params,
                       EncodeCache* cache = nullptr) {
    if (q.real_len == 0 && p.real_len == 0)
        throw std::invalid_argument("encode_pair: both segments are empty");
    Vec v_q = detail::mean_embedding(q, params.embedding);
    Vec v_p = detail::mean_embedding(p, params.embedding);
    Vec out = detail::project_tanh(v_q, v_p, params);
    if (cache) *cache = EncodeCache{std::move(v_q), std::move(v_p), out};
    return out;
}

// P_i: passage-only representation; the question slot is the zero vector.
inline Vec encode_passage(const TokenSequence& p, const EncoderParams& params,
                          EncodeCache* cache = nullptr) {
    if (p.real_len == 0) throw std::invalid_argument("encode_passage: passage is empty");
    Vec v_q(params.d_embed(), 0.0);
    Vec v_p = detail::mean_embedding(p, params.embedding);
    Vec out = detail::project_tanh(v_q, v_p, params);
    if (cache) *cache = EncodeCache{std::move(v_q), std::move(v_p), out};
    return out;
}

// Accumulates parameter gradients for either encode op. `q` may be null for
// the passage-only path. Token ids are discrete, so there is no input
// gradient.
inline void encode_backward(const TokenSequence* q, const TokenSequence& p,
                            const EncoderParams& params, const EncodeCache& cache, const Vec& dout,
                            EncoderParams& grads) {
    std::size_t de = params.d_embed();
    std::size_t d = params.d_model();
    Vec dpre(d);
    for (std::size_t i = 0; i < d; ++i) dpre[i] = dout[i] * (1.0 - cache.out[i] * cache.out[i]);

    Vec dv_q(de, 0.0), dv_p(de, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double* wr = params.projection.row(i);
        double* gr = grads.projection.row(i);
        grads.bias[i] += dpre[i];
        for (std::size_t j = 0; j < de; ++j) {
            gr[j] += dpre[i] * cache.v_q[j];
            gr[de + j] += dpre[i] * cache.v_p[j];
            dv_q[j] += dpre[i] * wr[j];
            dv_p[j] += dpre[i] * wr[de + j];
        }
    }
    if (q) detail::mean_embedding_backward(*q, dv_q, grads.embedding);
    detail::mean_embedding_backward(p, dv_p, grads.embedding);
}

inline EncoderParams make_encoder(std::size_t vocab_size, std::size_t d_embed, std::size_t d_model) {
    EncoderParams p;
    p.embedding = Mat(vocab_size, d_embed);
    p.projection = Mat(d_model, 2 * d_embed);
    p.bias = Vec(d_model, 0.0);
    return p;
}

inline void init_uniform(Mat& m, std::mt19937_64& rng, double half_width = 0.05) {
    std::uniform_real_distribution<double> dist(-half_width, half_width);
    for (double& x : m.a) x = dist(rng);
}

inline void init_uniform(Vec& v, std::mt19937_64& rng, double half_width = 0.05) {
    std::uniform_real_distribution<double> dist(-half_width, half_width);
    for (double& x : v) x = dist(rng);
}

}  // namespace c2f

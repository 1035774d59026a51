#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/coarse.hpp"
#include "c2f/corpus.hpp"
#include "c2f/encoder.hpp"
#include "c2f/fine.hpp"
#include "c2f/model.hpp"
#include "c2f/vocab.hpp"

namespace c2f {

// A candidate list after tokenization; the unit bpl_step consumes.
struct TokenizedCandidates {
    std::string question_id;
    TokenSequence question;
    std::vector<TokenSequence> passages;
    std::vector<std::string> passage_ids;
    std::vector<int> labels;
};

inline TokenizedCandidates tokenize_candidates(const CandidateList& cl, const Vocabulary& vocab,
                                               const TrainConfig& cfg) {
    TokenizedCandidates tc;
    tc.question_id = cl.question.id;
    tc.question = tokenize(cl.question.text, vocab, cfg.max_q_tokens);
    for (const auto& p : cl.passages) {
        tc.passages.push_back(tokenize(p.text, vocab, cfg.max_p_tokens));
        tc.passage_ids.push_back(p.id);
    }
    tc.labels = cl.labels;
    return tc;
}

inline Vocabulary build_vocabulary(const std::vector<CandidateList>& lists) {
    Vocabulary vocab;
    for (const auto& cl : lists) {
        for (const auto& w : split_words(cl.question.text)) vocab.add(w);
        for (const auto& p : cl.passages)
            for (const auto& w : split_words(p.text)) vocab.add(w);
    }
    return vocab;
}

namespace detail {

constexpr double kProbClamp = 1e-12;

inline double clamp_prob(double p) {
    return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

inline double log_loss_term(double p, int y) {
    double pc = clamp_prob(p);
    return y == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

// d/dp of log_loss_term; zero outside the clamp window.
inline double log_loss_term_grad(double p, int y) {
    if (p < kProbClamp || p > 1.0 - kProbClamp) return 0.0;
    return y == 1 ? -1.0 / p : 1.0 / (1.0 - p);
}

inline double binary_log_loss(const std::vector<double>& probs, const std::vector<int>& labels) {
    if (probs.size() != labels.size())
        throw std::invalid_argument("log loss: scores and labels differ in length");
    double loss = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) loss += log_loss_term(probs[j], labels[j]);
    return loss;
}

inline bool is_zero(const Vec& v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

}  // namespace detail

// L^(c): summed Bernoulli log loss over coarse scores.
inline double coarse_loss(const std::vector<double>& scores, const std::vector<int>& labels) {
    return detail::binary_log_loss(scores, labels);
}

// L^(f): the same log loss applied to the fine softmax outputs.
inline double fine_loss(const std::vector<double>& probs, const std::vector<int>& labels) {
    return detail::binary_log_loss(probs, labels);
}

inline double joint_objective(double loss_c, double loss_f, double lambda) {
    return loss_c + lambda * loss_f;
}

struct LossReport {
    double loss_c = 0.0;
    double loss_f = 0.0;
    double joint = 0.0;
    std::vector<std::size_t> bucket_indices;  // finalized selection, merged order
};

struct BplResult {
    LossReport report;
    ModelParams grads;
};

// One pass of the joint training algorithm over a single question: encode,
// coarse-score, stream through the bucket with positive forcing, run the fine
// ranker on the survivors, and backpropagate the joint loss into every
// parameter. Selection is a non-differentiable gather: gradient reaches the
// encoder through the coarse loss and through the retained representations.
inline BplResult bpl_step(const TokenizedCandidates& tc, const ModelParams& params,
                          const TrainConfig& cfg) {
    std::size_t n = tc.passages.size();
    if (n == 0) throw std::invalid_argument("bpl_step: empty candidate list");
    if (tc.labels.size() != n) throw std::invalid_argument("bpl_step: labels misaligned");
    std::size_t d = params.d_model();

    // ---- forward ----
    std::vector<EncodeCache> pair_cache(n), passage_cache(n);
    std::vector<Vec> pair_reps(n), passage_reps(n);
    std::vector<double> scores(n);
    Bucket bucket(cfg.bucket_size);
    for (std::size_t i = 0; i < n; ++i) {
        pair_reps[i] = encode_pair(tc.question, tc.passages[i], params.encoder, &pair_cache[i]);
        passage_reps[i] = encode_passage(tc.passages[i], params.encoder, &passage_cache[i]);
        scores[i] = coarse_score(pair_reps[i], params.coarse);
        if (!std::isfinite(scores[i]))
            throw std::runtime_error("bpl_step: non-finite coarse score for question " +
                                     tc.question_id);
        bucket_update(bucket,
                      BucketEntry{i, scores[i], pair_reps[i], passage_reps[i], tc.labels[i]},
                      /*training=*/true);
    }
    BucketSelection sel = bucket_finalize(bucket);
    std::size_t m = sel.indices.size();

    StaticAttention st;
    AdaptiveAttention ad;
    std::vector<std::size_t> maxpool_argmax;
    Mat context(m, d);
    switch (cfg.context_mode) {
        case ContextMode::kFull:
            st = static_attention(sel.passage_reps, params.fine);
            ad = adaptive_attention(sel.pair_reps, st.v_list, cfg.adaptive_norm_term);
            context = ad.z;
            break;
        case ContextMode::kStaticOnly:
            st = static_attention(sel.passage_reps, params.fine);
            for (std::size_t i = 0; i < m; ++i) context.set_row(i, st.v_list);
            break;
        case ContextMode::kAdaptiveOnly:
            ad = adaptive_attention(sel.pair_reps, Vec(d, 0.0), false);
            context = ad.z;
            break;
        case ContextMode::kMaxPool: {
            Vec pooled = maxpool_context(sel.passage_reps, &maxpool_argmax);
            for (std::size_t i = 0; i < m; ++i) context.set_row(i, pooled);
            break;
        }
        case ContextMode::kNone:
            break;  // zero context half
    }
    FineScore fs = fine_score(sel.passage_reps, context, params.fine);

    LossReport report;
    report.bucket_indices = sel.indices;
    report.loss_f = fine_loss(fs.probs, sel.labels);
    if (cfg.coarse_loss_scope == CoarseLossScope::kAllCandidates) {
        report.loss_c = coarse_loss(scores, tc.labels);
    } else {
        report.loss_c = coarse_loss(sel.scores, sel.labels);
    }
    report.joint = joint_objective(report.loss_c, report.loss_f, cfg.lambda);
    if (!std::isfinite(report.joint))
        throw std::runtime_error("bpl_step: non-finite loss for question " + tc.question_id);

    // ---- backward ----
    ModelParams grads = zeros_like(params);
    Vec dprobs(m);
    for (std::size_t j = 0; j < m; ++j)
        dprobs[j] = cfg.lambda * detail::log_loss_term_grad(fs.probs[j], sel.labels[j]);
    Mat dpassage_sel(m, d), dcontext(m, d);
    fine_score_backward(sel.passage_reps, context, params.fine, fs, dprobs, grads.fine,
                        dpassage_sel, dcontext);

    Mat dpair_sel(m, d);
    switch (cfg.context_mode) {
        case ContextMode::kFull: {
            Vec dv_list(d, 0.0);
            adaptive_attention_backward(sel.pair_reps, st.v_list, ad, dcontext,
                                        cfg.adaptive_norm_term, dpair_sel, dv_list);
            static_attention_backward(sel.passage_reps, params.fine, st, dv_list, dpassage_sel,
                                      grads.fine.context_vector);
            break;
        }
        case ContextMode::kStaticOnly: {
            Vec dv_list(d, 0.0);
            for (std::size_t i = 0; i < m; ++i) axpy(1.0, dcontext.get_row(i), dv_list);
            static_attention_backward(sel.passage_reps, params.fine, st, dv_list, dpassage_sel,
                                      grads.fine.context_vector);
            break;
        }
        case ContextMode::kAdaptiveOnly: {
            Vec unused(d, 0.0);
            adaptive_attention_backward(sel.pair_reps, Vec(d, 0.0), ad, dcontext, false, dpair_sel,
                                        unused);
            break;
        }
        case ContextMode::kMaxPool: {
            Vec dpooled(d, 0.0);
            for (std::size_t i = 0; i < m; ++i) axpy(1.0, dcontext.get_row(i), dpooled);
            maxpool_context_backward(maxpool_argmax, dpooled, dpassage_sel);
            break;
        }
        case ContextMode::kNone:
            break;
    }

    std::vector<Vec> dpair(n, Vec(d, 0.0)), dpassage(n, Vec(d, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        axpy(1.0, dpair_sel.get_row(j), dpair[sel.indices[j]]);
        axpy(1.0, dpassage_sel.get_row(j), dpassage[sel.indices[j]]);
    }
    if (cfg.coarse_loss_scope == CoarseLossScope::kAllCandidates) {
        for (std::size_t i = 0; i < n; ++i) {
            double ds = detail::log_loss_term_grad(scores[i], tc.labels[i]);
            coarse_score_backward(pair_reps[i], params.coarse, scores[i], ds, grads.coarse,
                                  dpair[i]);
        }
    } else {
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t i = sel.indices[j];
            double ds = detail::log_loss_term_grad(scores[i], tc.labels[i]);
            coarse_score_backward(pair_reps[i], params.coarse, scores[i], ds, grads.coarse,
                                  dpair[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!detail::is_zero(dpair[i]))
            encode_backward(&tc.question, tc.passages[i], params.encoder, pair_cache[i], dpair[i],
                            grads.encoder);
        if (!detail::is_zero(dpassage[i]))
            encode_backward(nullptr, tc.passages[i], params.encoder, passage_cache[i], dpassage[i],
                            grads.encoder);
    }
    return BplResult{std::move(report), std::move(grads)};
}

// ---- optimizer ----

struct AdamState {
    ModelParams first_moment;
    ModelParams second_moment;
    long step = 0;
};

inline AdamState make_adam_state(const ModelParams& params) {
    return AdamState{zeros_like(params), zeros_like(params), 0};
}

// Standard bias-corrected Adam, applied elementwise to every tensor.
inline void adam_update(ModelParams& params, const ModelParams& grads, AdamState& state,
                        const TrainConfig& cfg) {
    state.step += 1;
    double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    auto pv = tensor_views(params);
    auto gv = tensor_views(const_cast<ModelParams&>(grads));
    auto mv = tensor_views(state.first_moment);
    auto vv = tensor_views(state.second_moment);
    for (std::size_t t = 0; t < pv.size(); ++t) {
        for (std::size_t i = 0; i < pv[t].size; ++i) {
            double g = gv[t].data[i];
            if (!std::isfinite(g))
                throw std::runtime_error("adam_update: non-finite gradient in " + pv[t].name);
            double& m = mv[t].data[i];
            double& v = vv[t].data[i];
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            double m_hat = m / bc1;
            double v_hat = v / bc2;
            pv[t].data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
    }
}

// ---- gradient checking ----

struct GradCheckCoord {
    std::string tensor;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    GradCheckCoord worst;
    std::vector<std::pair<std::string, double>> per_tensor_max;
};

// Relative error with an absolute floor: tiny true gradients (and the exactly
// zero ones on the inert norm path) are compared at the floor's scale instead
// of amplifying finite-difference noise.
inline double grad_rel_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

inline GradCheckReport gradient_check(const ModelParams& params, const TokenizedCandidates& tc,
                                      const TrainConfig& cfg, std::size_t min_coords = 200,
                                      std::uint64_t seed = 0, double fd_step = 1e-5) {
    ModelParams work = params;
    ModelParams analytic = bpl_step(tc, work, cfg).grads;
    auto work_views = tensor_views(work);
    auto grad_views = tensor_views(analytic);

    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> picked(work_views.size());
    std::size_t per_tensor = (min_coords + work_views.size() - 1) / work_views.size();
    std::size_t total = 0;
    for (std::size_t t = 0; t < work_views.size(); ++t) {
        std::size_t want = std::min(per_tensor, work_views[t].size);
        std::vector<std::size_t> all(work_views[t].size);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        picked[t].assign(all.begin(), all.begin() + want);
        total += want;
    }
    for (std::size_t t = 0; total < min_coords && t < work_views.size(); ++t) {
        std::vector<std::size_t> all(work_views[t].size);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        for (std::size_t idx : all) {
            if (total >= min_coords) break;
            if (std::find(picked[t].begin(), picked[t].end(), idx) != picked[t].end()) continue;
            picked[t].push_back(idx);
            ++total;
        }
    }

    GradCheckReport report;
    for (std::size_t t = 0; t < work_views.size(); ++t) {
        double tensor_max = 0.0;
        for (std::size_t idx : picked[t]) {
            double saved = work_views[t].data[idx];
            work_views[t].data[idx] = saved + fd_step;
            double up = bpl_step(tc, work, cfg).report.joint;
            work_views[t].data[idx] = saved - fd_step;
            double down = bpl_step(tc, work, cfg).report.joint;
            work_views[t].data[idx] = saved;
            double numeric = (up - down) / (2.0 * fd_step);
            double a = grad_views[t].data[idx];
            double err = grad_rel_error(a, numeric);
            tensor_max = std::max(tensor_max, err);
            ++report.coords_checked;
            if (err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst = GradCheckCoord{work_views[t].name, idx, a, numeric, err};
            }
        }
        report.per_tensor_max.emplace_back(work_views[t].name, tensor_max);
    }
    return report;
}

// Seeded synthetic instance for gradient checking. Instances are regenerated
// until the bucket's negative admission boundary has a comfortable score gap,
// so the finite-difference probe never flips the selected set.
inline std::pair<TokenizedCandidates, ModelParams> make_gradcheck_instance(std::uint64_t seed,
                                                                           const TrainConfig& cfg) {
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        std::mt19937_64 rng(seed + attempt * 0x100000ull);
        std::size_t vocab_size = 24;
        // Enough candidates that the negative cap binds and eviction runs.
        std::size_t n = std::min<std::size_t>(cfg.bucket_size + 4, 20);
        TokenizedCandidates tc;
        tc.question_id = "gradcheck-" + std::to_string(seed);
        std::uniform_int_distribution<int> tok(4, static_cast<int>(vocab_size) - 1);
        auto random_seq = [&](std::size_t len, std::size_t cap) {
            TokenSequence s;
            s.ids.assign(cap, kPad);
            s.real_len = len;
            for (std::size_t i = 0; i < len; ++i) s.ids[i] = tok(rng);
            return s;
        };
        tc.question = random_seq(5, cfg.max_q_tokens);
        for (std::size_t i = 0; i < n; ++i) {
            tc.passages.push_back(random_seq(4 + i % 3, cfg.max_p_tokens));
            tc.passage_ids.push_back("p" + std::to_string(i));
            tc.labels.push_back(i % 3 == 0 ? 1 : 0);
        }
        // Wider-than-training init so the coarse scores spread out; fresh
        // untrained weights leave them clustered within ~1e-5 of each other,
        // too tight for a finite-difference probe to leave the selection
        // set alone.
        ModelParams params = make_model(vocab_size, cfg.d_embed, cfg.d_model);
        std::mt19937_64 prng(seed + attempt * 31 + 17);
        init_uniform(params.encoder.embedding, prng, 0.5);
        init_uniform(params.encoder.projection, prng, 0.5);
        init_uniform(params.encoder.bias, prng, 0.3);
        init_uniform(params.coarse.weight, prng, 1.5);
        init_uniform(params.fine.context_vector, prng, 1.0);
        init_uniform(params.fine.weight, prng, 1.0);
        std::uniform_real_distribution<double> small(-0.5, 0.5);
        params.coarse.bias = small(prng);
        params.fine.bias = small(prng);

        // Boundary gap check: scores of negatives straddling the admission cut.
        std::vector<std::pair<double, std::size_t>> neg_scores;
        std::size_t positives = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Vec rep = encode_pair(tc.question, tc.passages[i], params.encoder);
            double s = coarse_score(rep, params.coarse);
            if (tc.labels[i] == 1)
                ++positives;
            else
                neg_scores.emplace_back(s, i);
        }
        std::size_t cap = cfg.bucket_size > positives ? cfg.bucket_size - positives : 0;
        if (neg_scores.size() <= cap) return {tc, params};
        std::sort(neg_scores.begin(), neg_scores.end(),
                  [](auto& a, auto& b) { return a.first > b.first; });
        double gap = cap == 0 ? 1.0 : neg_scores[cap - 1].first - neg_scores[cap].first;
        if (gap > 1e-3) return {tc, params};
    }
    throw std::runtime_error("make_gradcheck_instance: no well-separated instance found");
}

// ---- epoch driver ----

struct EpochStats {
    std::size_t epoch = 0;
    std::size_t questions = 0;
    double mean_loss_c = 0.0;
    double mean_loss_f = 0.0;
    double mean_joint = 0.0;
};

// Sequential by construction: per-question Adam updates in shuffled order,
// bitwise reproducible for a fixed seed on one platform.
struct Trainer {
    std::vector<TokenizedCandidates> data;
    ModelParams params;
    AdamState adam;
    TrainConfig cfg;
    std::mt19937_64 shuffle_rng;

    Trainer(std::vector<TokenizedCandidates> corpus, ModelParams initial, TrainConfig config)
        : data(std::move(corpus)),
          params(std::move(initial)),
          adam(make_adam_state(params)),
          cfg(config),
          shuffle_rng(config.seed + 1) {}

    EpochStats run_epoch(std::size_t epoch_index) {
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochStats stats;
        stats.epoch = epoch_index;
        for (std::size_t qi : order) {
            BplResult step = bpl_step(data[qi], params, cfg);
            adam_update(params, step.grads, adam, cfg);
            stats.mean_loss_c += step.report.loss_c;
            stats.mean_loss_f += step.report.loss_f;
            stats.mean_joint += step.report.joint;
            ++stats.questions;
        }
        if (stats.questions > 0) {
            stats.mean_loss_c /= static_cast<double>(stats.questions);
            stats.mean_loss_f /= static_cast<double>(stats.questions);
            stats.mean_joint /= static_cast<double>(stats.questions);
        }
        return stats;
    }
};

}  // namespace c2f

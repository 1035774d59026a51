#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "c2f/coarse.hpp"
#include "c2f/fine.hpp"
#include "c2f/model.hpp"
#include "c2f/training.hpp"

namespace c2f {

enum class RankBy { kFine, kCoarse };

inline RankBy parse_rank_by(const std::string& s) {
    if (s == "fine") return RankBy::kFine;
    if (s == "coarse") return RankBy::kCoarse;
    throw std::invalid_argument("unknown rank-by mode: " + s);
}

// Inference over one question. The bucket runs without positive forcing;
// bucket members are ordered by fine score, the remaining candidates follow
// ordered by coarse score. Stored scores put the bucket in a strictly higher
// band (1 + p_f vs p_c) so the run stays monotone. RankBy::kCoarse skips the
// fine ranker entirely (the single-level ablation).
inline RankedQuestion rerank_question(const TokenizedCandidates& tc, const ModelParams& params,
                                      const TrainConfig& cfg, RankBy rank_by = RankBy::kFine,
                                      AttentionReport* attention = nullptr) {
    std::size_t n = tc.passages.size();
    if (n == 0) throw std::invalid_argument("rerank_question: empty candidate list");
    std::size_t d = params.d_model();

    std::vector<Vec> pair_reps(n), passage_reps(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        pair_reps[i] = encode_pair(tc.question, tc.passages[i], params.encoder);
        passage_reps[i] = encode_passage(tc.passages[i], params.encoder);
        scores[i] = coarse_score(pair_reps[i], params.coarse);
    }

    RankedQuestion out;
    out.question_id = tc.question_id;

    auto coarse_order = [&](std::vector<std::size_t> idx) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        return idx;
    };

    if (rank_by == RankBy::kCoarse) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        idx = coarse_order(std::move(idx));
        for (std::size_t r = 0; r < idx.size(); ++r)
            out.entries.push_back(RankedEntry{tc.passage_ids[idx[r]], scores[idx[r]],
                                              static_cast<int>(r + 1)});
        return out;
    }

    Bucket bucket(cfg.bucket_size);
    for (std::size_t i = 0; i < n; ++i)
        bucket_update(bucket,
                      BucketEntry{i, scores[i], pair_reps[i], passage_reps[i], tc.labels.empty()
                                                                                   ? 0
                                                                                   : tc.labels[i]},
                      /*training=*/false);
    BucketSelection sel = bucket_finalize(bucket);
    std::size_t m = sel.indices.size();

    StaticAttention st;
    AdaptiveAttention ad;
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
            Vec pooled = maxpool_context(sel.passage_reps);
            for (std::size_t i = 0; i < m; ++i) context.set_row(i, pooled);
            break;
        }
        case ContextMode::kNone:
            break;
    }
    FineScore fs = fine_score(sel.passage_reps, context, params.fine);
    if (attention) *attention = AttentionReport{st.alpha, st.v_list, ad.beta, ad.z};

    // Bucket rows by fine score (ties: earliest original index first).
    std::vector<std::size_t> bucket_rows(m);
    std::iota(bucket_rows.begin(), bucket_rows.end(), 0);
    std::sort(bucket_rows.begin(), bucket_rows.end(), [&](std::size_t a, std::size_t b) {
        if (fs.probs[a] != fs.probs[b]) return fs.probs[a] > fs.probs[b];
        return sel.indices[a] < sel.indices[b];
    });

    std::vector<bool> in_bucket(n, false);
    for (std::size_t i : sel.indices) in_bucket[i] = true;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
        if (!in_bucket[i]) rest.push_back(i);
    rest = coarse_order(std::move(rest));

    int rank = 1;
    for (std::size_t row : bucket_rows)
        out.entries.push_back(
            RankedEntry{tc.passage_ids[sel.indices[row]], 1.0 + fs.probs[row], rank++});
    for (std::size_t i : rest)
        out.entries.push_back(RankedEntry{tc.passage_ids[i], scores[i], rank++});
    return out;
}

}  // namespace c2f

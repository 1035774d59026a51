#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "c2f/linalg.hpp"

namespace c2f {

struct CoarseParams {
    Vec weight;       // d_model
    double bias = 0.0;
};

// p_i = sigmoid(W_c . O_i + b_c)
inline double coarse_score(const Vec& pair_rep, const CoarseParams& params) {
    return sigmoid(dot(params.weight, pair_rep) + params.bias);
}

// dscore -> parameter grads and d(pair_rep)
inline void coarse_score_backward(const Vec& pair_rep, const CoarseParams& params, double score,
                                  double dscore, CoarseParams& grads, Vec& dpair_rep) {
    double dlogit = dscore * score * (1.0 - score);
    axpy(dlogit, pair_rep, grads.weight);
    grads.bias += dlogit;
    axpy(dlogit, params.weight, dpair_rep);
}

struct BucketEntry {
    std::size_t index = 0;  // original candidate position
    double score = 0.0;     // coarse score at insertion time
    Vec pair_rep;
    Vec passage_rep;
    int label = 0;
};

// (score desc, original index asc); deterministic for equal scores.
inline bool bucket_order(const BucketEntry& a, const BucketEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
}

// Bounded score-ordered memory of the best candidates seen so far in one
// streaming pass. During training every positive is forced in and negatives
// only get the slots positives leave free; at inference labels are never
// consulted and everything competes on score.
struct Bucket {
    std::size_t capacity = 1;
    std::vector<BucketEntry> positives;  // training-forced, score ordered
    std::vector<BucketEntry> negatives;  // score ordered, capped

    explicit Bucket(std::size_t k) : capacity(k) {
        if (k < 1) throw std::invalid_argument("bucket capacity must be >= 1");
    }

    std::size_t negative_cap() const {
        return capacity > positives.size() ? capacity - positives.size() : 0;
    }

    std::size_t size() const { return positives.size() + negatives.size(); }
};

namespace detail {

inline void insert_ordered(std::vector<BucketEntry>& list, BucketEntry entry) {
    auto pos = std::upper_bound(list.begin(), list.end(), entry, bucket_order);
    list.insert(pos, std::move(entry));
}

}  // namespace detail

inline void bucket_update(Bucket& bucket, BucketEntry entry, bool training) {
    if (!std::isfinite(entry.score)) throw std::invalid_argument("bucket_update: non-finite score");
    if (training && entry.label == 1) {
        detail::insert_ordered(bucket.positives, std::move(entry));
        // Forcing a positive can shrink the negative allowance; drop the
        // worst negatives until the cap holds again.
        while (bucket.negatives.size() > bucket.negative_cap()) bucket.negatives.pop_back();
        return;
    }
    std::size_t cap = bucket.negative_cap();
    if (cap == 0) return;
    if (bucket.negatives.size() < cap) {
        detail::insert_ordered(bucket.negatives, std::move(entry));
        return;
    }
    if (bucket_order(entry, bucket.negatives.back())) {
        bucket.negatives.pop_back();
        detail::insert_ordered(bucket.negatives, std::move(entry));
    }
}

struct BucketSelection {
    std::vector<std::size_t> indices;  // original candidate positions, merged order
    Mat pair_reps;                     // |bucket| x d, row-aligned with indices
    Mat passage_reps;
    std::vector<int> labels;
    std::vector<double> scores;        // coarse scores at insertion
};

// Merge positives and negatives into one (score desc, index asc) list and
// expose the retained representations as row-aligned matrices.
inline BucketSelection bucket_finalize(const Bucket& bucket) {
    if (bucket.size() == 0) throw std::runtime_error("bucket_finalize: empty bucket");
    std::vector<BucketEntry> merged;
    merged.reserve(bucket.size());
    std::merge(bucket.positives.begin(), bucket.positives.end(), bucket.negatives.begin(),
               bucket.negatives.end(), std::back_inserter(merged), bucket_order);
    std::size_t d = merged.front().pair_rep.size();
    BucketSelection sel;
    sel.pair_reps = Mat(merged.size(), d);
    sel.passage_reps = Mat(merged.size(), merged.front().passage_rep.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
        sel.indices.push_back(merged[i].index);
        sel.labels.push_back(merged[i].label);
        sel.scores.push_back(merged[i].score);
        sel.pair_reps.set_row(i, merged[i].pair_rep);
        sel.passage_reps.set_row(i, merged[i].passage_rep);
    }
    return sel;
}

}  // namespace c2f

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/corpus.hpp"

namespace c2f {

// AP over an ordered 0/1 relevance list: mean over relevant positions r of
// precision-at-r. Requires at least one relevant item.
inline double average_precision(const std::vector<int>& flags) {
    double sum = 0.0;
    int relevant = 0;
    for (std::size_t r = 0; r < flags.size(); ++r) {
        if (flags[r] == 1) {
            ++relevant;
            sum += static_cast<double>(relevant) / static_cast<double>(r + 1);
        }
    }
    if (relevant == 0)
        throw std::invalid_argument("average_precision: no relevant item (exclude this question)");
    return sum / relevant;
}

// 1/r for the first relevant position within the cutoff, 0 if none.
inline double reciprocal_rank(const std::vector<int>& flags,
                              std::optional<std::size_t> cutoff = std::nullopt) {
    std::size_t limit = cutoff ? std::min(*cutoff, flags.size()) : flags.size();
    for (std::size_t r = 0; r < limit; ++r)
        if (flags[r] == 1) return 1.0 / static_cast<double>(r + 1);
    return 0.0;
}

struct QuestionMetrics {
    std::string question_id;
    double ap = 0.0;
    double rr = 0.0;
    double rr_at_10 = 0.0;
};

struct MetricsSummary {
    double map = 0.0;
    double mrr = 0.0;
    double mrr_at_10 = 0.0;
    std::size_t evaluated_questions = 0;  // questions with >= 1 relevant passage
    std::vector<QuestionMetrics> per_question;
};

// Unweighted means over judged questions (>= 1 relevant passage in qrels).
// Questions without judged-relevant passages are excluded; a judged question
// absent from the run is an error. A judged-relevant passage missing from the
// ranked list simply never produces a hit.
inline MetricsSummary evaluate_run(const RankedRun& run, const Qrels& qrels) {
    std::vector<std::string> missing;
    for (const auto& [qid, pids] : qrels) {
        bool found = false;
        for (const auto& rq : run)
            if (rq.question_id == qid) {
                found = true;
                break;
            }
        if (!found) missing.push_back(qid);
    }
    if (!missing.empty()) {
        std::string msg = "evaluate_run: judged questions missing from run:";
        for (const auto& q : missing) msg += " " + q;
        throw std::runtime_error(msg);
    }

    MetricsSummary summary;
    for (const auto& rq : run) {
        auto judged = qrels.find(rq.question_id);
        if (judged == qrels.end() || judged->second.empty()) continue;
        std::vector<int> flags;
        flags.reserve(rq.entries.size());
        bool any = false;
        for (const auto& e : rq.entries) {
            int f = judged->second.count(e.passage_id) ? 1 : 0;
            any = any || f == 1;
            flags.push_back(f);
        }
        QuestionMetrics qm;
        qm.question_id = rq.question_id;
        qm.ap = any ? average_precision(flags) : 0.0;
        qm.rr = reciprocal_rank(flags);
        qm.rr_at_10 = reciprocal_rank(flags, 10);
        summary.map += qm.ap;
        summary.mrr += qm.rr;
        summary.mrr_at_10 += qm.rr_at_10;
        ++summary.evaluated_questions;
        summary.per_question.push_back(std::move(qm));
    }
    if (summary.evaluated_questions > 0) {
        summary.map /= static_cast<double>(summary.evaluated_questions);
        summary.mrr /= static_cast<double>(summary.evaluated_questions);
        summary.mrr_at_10 /= static_cast<double>(summary.evaluated_questions);
    }
    return summary;
}

}  // namespace c2f

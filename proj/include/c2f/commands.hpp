#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "c2f/checkpoint.hpp"
#include "c2f/corpus.hpp"
#include "c2f/metrics.hpp"
#include "c2f/model.hpp"
#include "c2f/rerank.hpp"
#include "c2f/training.hpp"
#include "c2f/vocab.hpp"

namespace c2f {

struct RunConfig {
    std::string data_path;
    std::string qrels_path;
    std::string out_path;
    std::string checkpoint_path;
    std::string attention_dump_path;
    std::string format = "auto";   // auto | wikiqa | marco
    std::string rank_by = "fine";  // fine | coarse (coarse = single-level ablation)
    double gradcheck_tolerance = 1e-4;
    bool write_breakdown = false;
    TrainConfig train;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline bool sniff_wikiqa(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    std::string line;
    std::getline(in, line);
    return line.rfind("QuestionID\t", 0) == 0;
}

inline std::string vocab_path_for(const std::string& checkpoint_path) {
    return checkpoint_path + ".vocab";
}

}  // namespace detail

inline LoadResult load_corpus(const RunConfig& cfg, std::ostream& log) {
    if (!std::filesystem::exists(cfg.data_path))
        throw std::runtime_error("data file does not exist: " + cfg.data_path);
    std::string format = cfg.format;
    if (format == "auto") format = detail::sniff_wikiqa(cfg.data_path) ? "wikiqa" : "marco";
    LoadResult result;
    if (format == "wikiqa") {
        result = load_wikiqa(cfg.data_path);
    } else if (format == "marco") {
        if (!cfg.qrels_path.empty()) {
            Qrels qrels = load_qrels(cfg.qrels_path);
            result = load_marco_candidates(cfg.data_path, &qrels);
        } else {
            result = load_marco_candidates(cfg.data_path);
        }
    } else {
        throw std::runtime_error("unknown data format: " + format);
    }
    if (result.duplicate_warnings > 0)
        log << "warning: " << result.duplicate_warnings
            << " duplicate (qid, pid) rows ignored (first kept)\n";
    if (result.unmatched_qrel_warnings > 0)
        log << "warning: " << result.unmatched_qrel_warnings
            << " qrels entries reference passages absent from the candidates\n";
    return result;
}

inline std::vector<TokenizedCandidates> tokenize_corpus(const std::vector<CandidateList>& lists,
                                                        const Vocabulary& vocab,
                                                        const TrainConfig& cfg) {
    std::vector<TokenizedCandidates> out;
    out.reserve(lists.size());
    for (const auto& cl : lists) out.push_back(tokenize_candidates(cl, vocab, cfg));
    return out;
}

// Train on the corpus, then write the checkpoint, its vocabulary sidecar
// (<checkpoint>.vocab) and the per-epoch loss log. Nothing is written until
// training has finished, so a failed run leaves no partial checkpoint.
inline int cmd_train(const RunConfig& cfg, std::ostream& log = std::cout) {
    cfg.train.validate();
    if (cfg.checkpoint_path.empty()) throw std::runtime_error("train: --checkpoint is required");
    if (cfg.out_path.empty()) throw std::runtime_error("train: --out (training log) is required");
    LoadResult corpus = load_corpus(cfg, log);
    if (corpus.lists.empty()) throw std::runtime_error("train: corpus is empty");
    Vocabulary vocab = build_vocabulary(corpus.lists);
    std::vector<TokenizedCandidates> data = tokenize_corpus(corpus.lists, vocab, cfg.train);

    ModelParams params =
        init_model(vocab.size(), cfg.train.d_embed, cfg.train.d_model, cfg.train.seed);
    Trainer trainer(std::move(data), std::move(params), cfg.train);

    std::string log_text = "epoch\tquestions\tmean_loss_c\tmean_loss_f\tmean_joint\n";
    for (std::size_t epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
        EpochStats stats = trainer.run_epoch(epoch);
        log_text += std::to_string(stats.epoch) + '\t' + std::to_string(stats.questions) + '\t' +
                    detail::format_double(stats.mean_loss_c) + '\t' +
                    detail::format_double(stats.mean_loss_f) + '\t' +
                    detail::format_double(stats.mean_joint) + '\n';
        log << "epoch " << stats.epoch << " joint " << detail::format_double(stats.mean_joint)
            << "\n";
    }

    std::ofstream log_file(cfg.out_path, std::ios::binary);
    if (!log_file) throw std::runtime_error("cannot write training log: " + cfg.out_path);
    log_file << log_text;
    save_vocabulary(vocab, detail::vocab_path_for(cfg.checkpoint_path));
    save_checkpoint(trainer.params, vocab_hash(vocab), cfg.checkpoint_path);
    log << "checkpoint written to " << cfg.checkpoint_path << "\n";
    return 0;
}

// Rerank the corpus with a trained checkpoint and write a run file.
inline int cmd_rerank(const RunConfig& cfg, std::ostream& log = std::cout) {
    cfg.train.validate();
    if (cfg.checkpoint_path.empty()) throw std::runtime_error("rerank: --checkpoint is required");
    if (cfg.out_path.empty()) throw std::runtime_error("rerank: --out (run file) is required");
    Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path);
    Vocabulary vocab = load_vocabulary(detail::vocab_path_for(cfg.checkpoint_path));
    if (vocab_hash(vocab) != ckpt.vocab_hash)
        throw std::runtime_error("vocabulary does not match checkpoint (hash mismatch)");
    LoadResult corpus = load_corpus(cfg, log);
    RankBy rank_by = parse_rank_by(cfg.rank_by);

    std::ofstream dump;
    if (!cfg.attention_dump_path.empty()) {
        dump.open(cfg.attention_dump_path, std::ios::binary);
        if (!dump)
            throw std::runtime_error("cannot write attention dump: " + cfg.attention_dump_path);
    }

    RankedRun run;
    for (const auto& cl : corpus.lists) {
        TokenizedCandidates tc = tokenize_candidates(cl, vocab, cfg.train);
        AttentionReport report;
        run.push_back(rerank_question(tc, ckpt.params, cfg.train, rank_by,
                                      dump.is_open() ? &report : nullptr));
        if (dump.is_open()) write_attention_record(dump, cl.question.id, report);
    }
    write_run(run, cfg.out_path);
    log << "run file written to " << cfg.out_path << " (" << run.size() << " questions)\n";
    return 0;
}

// Score a run file against qrels (or a labeled WikiQA file) and write a
// summary. MRR@10 counts hits in the top 10 only.
inline int cmd_evaluate(const RunConfig& cfg, std::ostream& log = std::cout) {
    if (cfg.qrels_path.empty()) throw std::runtime_error("evaluate: --qrels is required");
    if (!std::filesystem::exists(cfg.data_path))
        throw std::runtime_error("run file does not exist: " + cfg.data_path);
    if (!std::filesystem::exists(cfg.qrels_path))
        throw std::runtime_error("qrels file does not exist: " + cfg.qrels_path);
    RankedRun run = read_run(cfg.data_path);
    Qrels qrels = detail::sniff_wikiqa(cfg.qrels_path)
                      ? qrels_from_lists(load_wikiqa(cfg.qrels_path).lists)
                      : load_qrels(cfg.qrels_path);
    if (qrels.empty()) throw std::runtime_error("qrels contains no relevant judgments");
    MetricsSummary summary = evaluate_run(run, qrels);

    std::string text;
    text += "map\t" + detail::format_double(summary.map) + '\n';
    text += "mrr\t" + detail::format_double(summary.mrr) + '\n';
    text += "mrr@10\t" + detail::format_double(summary.mrr_at_10) + '\n';
    text += "questions\t" + std::to_string(summary.evaluated_questions) + '\n';
    log << text;
    if (!cfg.out_path.empty()) {
        std::ofstream out(cfg.out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write metrics summary: " + cfg.out_path);
        out << text;
        if (cfg.write_breakdown) {
            for (const auto& qm : summary.per_question)
                out << qm.question_id << "\tap=" << detail::format_double(qm.ap)
                    << "\trr=" << detail::format_double(qm.rr)
                    << "\trr@10=" << detail::format_double(qm.rr_at_10) << '\n';
        }
    }
    return 0;
}

// Compare reverse-mode gradients against central finite differences on a
// seeded synthetic instance; nonzero exit when the tolerance is exceeded.
inline int cmd_gradcheck(const RunConfig& cfg, std::ostream& log = std::cout) {
    cfg.train.validate();
    auto [tc, params] = make_gradcheck_instance(cfg.train.seed, cfg.train);
    GradCheckReport report = gradient_check(params, tc, cfg.train, 200, cfg.train.seed);
    for (const auto& [name, err] : report.per_tensor_max)
        log << name << "\tmax_rel_error\t" << detail::format_double(err) << "\n";
    log << "coords\t" << report.coords_checked << "\n";
    log << "max_rel_error\t" << detail::format_double(report.max_rel_error) << "\n";
    log << "worst\t" << report.worst.tensor << "[" << report.worst.index << "]\tanalytic\t"
        << detail::format_double(report.worst.analytic) << "\tnumeric\t"
        << detail::format_double(report.worst.numeric) << "\n";
    bool ok = report.max_rel_error < cfg.gradcheck_tolerance;
    log << (ok ? "PASS" : "FAIL") << "\ttolerance\t"
        << detail::format_double(cfg.gradcheck_tolerance) << "\n";
    return ok ? 0 : 1;
}

}  // namespace c2f

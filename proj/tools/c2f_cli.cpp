#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "c2f/commands.hpp"

namespace {

void add_shared_options(CLI::App* cmd, c2f::RunConfig& cfg) {
    cmd->add_option("--data", cfg.data_path, "input data file")->configurable(true);
    cmd->add_option("--qrels", cfg.qrels_path, "qrels file (or labeled WikiQA TSV)")
        ->configurable(true);
    cmd->add_option("--out", cfg.out_path, "output file")->configurable(true);
    cmd->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint file")->configurable(true);
    cmd->add_option("--format", cfg.format, "data format: auto, wikiqa or marco")
        ->configurable(true);
    cmd->add_option("--bucket-size", cfg.train.bucket_size, "top-k bucket capacity")
        ->configurable(true);
    cmd->add_option("--lambda", cfg.train.lambda, "fine-loss weight in the joint objective")
        ->configurable(true);
    cmd->add_option("--learning-rate", cfg.train.learning_rate, "Adam learning rate")
        ->configurable(true);
    cmd->add_option("--seed", cfg.train.seed, "RNG seed")->configurable(true);
    cmd->add_option("--epochs", cfg.train.epochs, "training epochs")->configurable(true);
    cmd->add_option("--context-mode", cfg.train.context_mode,
                    "full, static-only, adaptive-only, maxpool or none")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, c2f::ContextMode>{
                {"full", c2f::ContextMode::kFull},
                {"static-only", c2f::ContextMode::kStaticOnly},
                {"adaptive-only", c2f::ContextMode::kAdaptiveOnly},
                {"maxpool", c2f::ContextMode::kMaxPool},
                {"none", c2f::ContextMode::kNone}},
            CLI::ignore_case))
        ->configurable(true);
    cmd->add_option("--coarse-loss-scope", cfg.train.coarse_loss_scope,
                    "all-candidates or bucket-only")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, c2f::CoarseLossScope>{
                {"all-candidates", c2f::CoarseLossScope::kAllCandidates},
                {"bucket-only", c2f::CoarseLossScope::kBucketOnly}},
            CLI::ignore_case))
        ->configurable(true);
    cmd->add_option("--max-q-tokens", cfg.train.max_q_tokens, "question token cap")
        ->configurable(true);
    cmd->add_option("--max-p-tokens", cfg.train.max_p_tokens, "passage token cap")
        ->configurable(true);
    cmd->add_option("--d-embed", cfg.train.d_embed, "token embedding width")->configurable(true);
    cmd->add_option("--d-model", cfg.train.d_model, "representation width")->configurable(true);
    cmd->add_option("--adaptive-norm-term", cfg.train.adaptive_norm_term,
                    "keep the list-context norm constant in stored correlation weights")
        ->configurable(true);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coarse-to-fine passage reranker with list-context attention"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "read options from an INI config file (flags win)");

    c2f::RunConfig cfg;

    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    add_shared_options(train, cfg);

    auto* rerank = app.add_subcommand("rerank", "rerank candidates with a checkpoint");
    add_shared_options(rerank, cfg);
    rerank->add_option("--rank-by", cfg.rank_by, "fine (default) or coarse (single-level)")
        ->configurable(true);
    rerank
        ->add_option("--attention-dump", cfg.attention_dump_path,
                     "write per-question attention diagnostics to this file")
        ->configurable(true);

    auto* evaluate = app.add_subcommand("evaluate", "score a run file against qrels");
    add_shared_options(evaluate, cfg);
    evaluate->add_flag("--breakdown", cfg.write_breakdown, "append per-question metrics to --out")
        ->configurable(true);

    auto* gradcheck =
        app.add_subcommand("gradcheck", "verify gradients against finite differences");
    add_shared_options(gradcheck, cfg);
    gradcheck
        ->add_option("--tolerance", cfg.gradcheck_tolerance, "maximum accepted relative error")
        ->configurable(true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return c2f::cmd_train(cfg);
        if (rerank->parsed()) return c2f::cmd_rerank(cfg);
        if (evaluate->parsed()) return c2f::cmd_evaluate(cfg);
        if (gradcheck->parsed()) return c2f::cmd_gradcheck(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "c2f/commands.hpp"
#include "c2f/training.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace c2f;

namespace {

TrainConfig toy_config() {
    TrainConfig cfg;
    cfg.bucket_size = 3;
    cfg.d_embed = 6;
    cfg.d_model = 8;
    cfg.max_q_tokens = 6;
    cfg.max_p_tokens = 8;
    return cfg;
}

TokenizedCandidates toy_instance(std::uint64_t seed, std::size_t n, const TrainConfig& cfg,
                                 int vocab_size = 16) {
    std::mt19937_64 rng(seed);
    auto tc = oracle::random_instance(rng, n, vocab_size, cfg.max_q_tokens, cfg.max_p_tokens);
    // make sure both label values occur
    tc.labels[0] = 1;
    if (n > 1) tc.labels[n - 1] = 0;
    return tc;
}

}  // namespace

TEST_CASE("coarse loss matches hand-evaluated log losses", "[training]") {
    REQUIRE(coarse_loss({1.0 - 1e-12}, {1}) == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(coarse_loss({0.5}, {1}) == Catch::Approx(std::log(2.0)).margin(1e-12));
    REQUIRE(coarse_loss({0.5, 0.5}, {1, 0}) == Catch::Approx(2 * std::log(2.0)).margin(1e-12));
    REQUIRE_THROWS_AS(coarse_loss({0.5}, {1, 0}), std::invalid_argument);
}

TEST_CASE("fine loss on softmax outputs", "[training]") {
    REQUIRE(fine_loss({1.0}, {1}) == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(fine_loss({0.5, 0.5}, {1, 0}) == Catch::Approx(2 * std::log(2.0)).margin(1e-12));
    // all labels zero: some probability mass is always "wrong"
    REQUIRE(fine_loss({0.3, 0.7}, {0, 0}) > 0.0);
}

TEST_CASE("joint objective weighs the fine loss by lambda", "[training]") {
    REQUIRE(joint_objective(1.25, 0.5, 1.0) == 1.75);
    REQUIRE(joint_objective(1.25, 0.5, 0.0) == 1.25);
    REQUIRE(joint_objective(1.25, 0.0, 7.0) == 1.25);
    REQUIRE(joint_objective(1.0, 2.0, 0.5) == 2.0);
}

TEST_CASE("adam leaves parameters alone under zero gradients", "[training]") {
    TrainConfig cfg = toy_config();
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 5);
    ModelParams before = p;
    ModelParams zero_grads = zeros_like(p);
    AdamState state = make_adam_state(p);
    adam_update(p, zero_grads, state, cfg);
    REQUIRE(state.step == 1);
    auto pv = tensor_views(p), bv = tensor_views(before);
    for (std::size_t t = 0; t < pv.size(); ++t)
        for (std::size_t i = 0; i < pv[t].size; ++i) REQUIRE(pv[t].data[i] == bv[t].data[i]);
    auto mv = tensor_views(state.first_moment);
    for (const auto& m : mv)
        for (std::size_t i = 0; i < m.size; ++i) REQUIRE(m.data[i] == 0.0);
}

TEST_CASE("adam first step has the bias-corrected magnitude", "[training]") {
    TrainConfig cfg = toy_config();
    cfg.learning_rate = 0.05;
    ModelParams p = make_model(16, cfg.d_embed, cfg.d_model);
    double before = p.coarse.bias;
    ModelParams grads = zeros_like(p);
    grads.coarse.bias = 1.0;
    AdamState state = make_adam_state(p);
    adam_update(p, grads, state, cfg);
    // m_hat = g, v_hat = g^2 at step 1, so the update is lr / (1 + eps)
    double expected = cfg.learning_rate / (1.0 + cfg.adam_epsilon);
    REQUIRE(before - p.coarse.bias == Catch::Approx(expected).margin(1e-15));
}

TEST_CASE("identical tensors with identical gradients stay identical", "[training]") {
    TrainConfig cfg = toy_config();
    ModelParams p = make_model(16, cfg.d_embed, cfg.d_model);
    std::mt19937_64 rng(3);
    init_uniform(p.fine.weight, rng, 0.5);
    // two coordinates share value and gradient
    p.fine.weight[0] = p.fine.weight[1] = 0.25;
    ModelParams grads = zeros_like(p);
    grads.fine.weight[0] = grads.fine.weight[1] = -0.4;
    AdamState state = make_adam_state(p);
    for (int step = 0; step < 5; ++step) adam_update(p, grads, state, cfg);
    REQUIRE(p.fine.weight[0] == p.fine.weight[1]);
}

TEST_CASE("adam rejects non-finite gradients", "[training]") {
    TrainConfig cfg = toy_config();
    ModelParams p = make_model(16, cfg.d_embed, cfg.d_model);
    ModelParams grads = zeros_like(p);
    grads.encoder.bias[0] = std::nan("");
    AdamState state = make_adam_state(p);
    REQUIRE_THROWS_WITH(adam_update(p, grads, state, cfg),
                        Catch::Matchers::ContainsSubstring("encoder.bias"));
}

TEST_CASE("single positive candidate gives zero fine loss", "[training]") {
    TrainConfig cfg = toy_config();
    TokenizedCandidates tc = toy_instance(11, 1, cfg);
    tc.labels = {1};
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 7);
    BplResult r = bpl_step(tc, p, cfg);
    REQUIRE(r.report.bucket_indices == std::vector<std::size_t>{0});
    REQUIRE(r.report.loss_f == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(r.report.joint == Catch::Approx(r.report.loss_c).margin(1e-9));
}

TEST_CASE("lambda zero reduces the joint loss to the coarse loss", "[training]") {
    TrainConfig cfg = toy_config();
    cfg.lambda = 0.0;
    TokenizedCandidates tc = toy_instance(13, 5, cfg);
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 7);
    BplResult r = bpl_step(tc, p, cfg);
    REQUIRE(r.report.joint == r.report.loss_c);
}

TEST_CASE("bpl_step matches the straight-line oracle", "[training][oracle]") {
    for (std::uint64_t seed : {17ull, 18ull, 19ull}) {
        TrainConfig cfg = toy_config();
        TokenizedCandidates tc = toy_instance(seed, 4, cfg);
        ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, seed + 1);
        BplResult r = bpl_step(tc, p, cfg);
        auto want = oracle::bpl_forward_direct(tc, p, cfg);
        REQUIRE(r.report.bucket_indices == want.selected);
        REQUIRE(std::abs(r.report.loss_c - want.loss_c) < 1e-10);
        REQUIRE(std::abs(r.report.loss_f - want.loss_f) < 1e-10);
        REQUIRE(std::abs(r.report.joint - want.joint) < 1e-10);
    }
}

TEST_CASE("bpl_step is bitwise deterministic", "[training]") {
    TrainConfig cfg = toy_config();
    TokenizedCandidates tc = toy_instance(23, 6, cfg);
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 9);
    BplResult a = bpl_step(tc, p, cfg);
    BplResult b = bpl_step(tc, p, cfg);
    REQUIRE(std::memcmp(&a.report.loss_c, &b.report.loss_c, sizeof(double)) == 0);
    REQUIRE(std::memcmp(&a.report.loss_f, &b.report.loss_f, sizeof(double)) == 0);
    REQUIRE(std::memcmp(&a.report.joint, &b.report.joint, sizeof(double)) == 0);
    auto av = tensor_views(a.grads), bv = tensor_views(b.grads);
    for (std::size_t t = 0; t < av.size(); ++t)
        REQUIRE(std::memcmp(av[t].data, bv[t].data, av[t].size * sizeof(double)) == 0);
}

TEST_CASE("bpl_step rejects empty lists and non-finite parameters", "[training]") {
    TrainConfig cfg = toy_config();
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 7);
    TokenizedCandidates empty;
    empty.question_id = "empty";
    REQUIRE_THROWS_AS(bpl_step(empty, p, cfg), std::invalid_argument);

    TokenizedCandidates tc = toy_instance(29, 3, cfg);
    tc.question_id = "poisoned-question";
    p.coarse.bias = std::nan("");
    REQUIRE_THROWS_WITH(bpl_step(tc, p, cfg),
                        Catch::Matchers::ContainsSubstring("poisoned-question"));
}

TEST_CASE("fine loss gradient reaches encoder parameters", "[training]") {
    TrainConfig cfg = toy_config();
    TokenizedCandidates tc = toy_instance(31, 5, cfg);
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 7);
    cfg.lambda = 0.0;
    ModelParams g0 = bpl_step(tc, p, cfg).grads;
    cfg.lambda = 1.0;
    ModelParams g1 = bpl_step(tc, p, cfg).grads;
    // the lambda-weighted fine loss changes encoder gradients: joint training
    // is real, not a detached pipeline
    double diff = 0.0;
    for (std::size_t i = 0; i < g0.encoder.projection.a.size(); ++i)
        diff += std::abs(g1.encoder.projection.a[i] - g0.encoder.projection.a[i]);
    REQUIRE(diff > 1e-8);
    // and the coarse head itself is untouched by the fine loss (selection is
    // a non-differentiable gather)
    for (std::size_t i = 0; i < g0.coarse.weight.size(); ++i)
        REQUIRE(g1.coarse.weight[i] == Catch::Approx(g0.coarse.weight[i]).margin(1e-15));
}

TEST_CASE("bucket-only coarse loss sums over the selection", "[training]") {
    TrainConfig cfg = toy_config();
    cfg.bucket_size = 2;
    TokenizedCandidates tc = toy_instance(37, 6, cfg);
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 7);
    cfg.coarse_loss_scope = CoarseLossScope::kBucketOnly;
    BplResult r = bpl_step(tc, p, cfg);
    auto want = oracle::bpl_forward_direct(tc, p, cfg);
    REQUIRE(std::abs(r.report.loss_c - want.loss_c) < 1e-10);

    cfg.coarse_loss_scope = CoarseLossScope::kAllCandidates;
    BplResult all = bpl_step(tc, p, cfg);
    REQUIRE(all.report.loss_c > r.report.loss_c);  // more summands on this instance
}

TEST_CASE("positives survive bpl selection at every bucket size", "[training]") {
    TrainConfig cfg = toy_config();
    for (std::size_t k = 1; k <= 4; ++k) {
        cfg.bucket_size = k;
        TokenizedCandidates tc = toy_instance(41 + k, 7, cfg);
        ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, 7);
        BplResult r = bpl_step(tc, p, cfg);
        for (std::size_t i = 0; i < tc.labels.size(); ++i)
            if (tc.labels[i] == 1)
                REQUIRE(std::count(r.report.bucket_indices.begin(),
                                   r.report.bucket_indices.end(), i) == 1);
    }
}

TEST_CASE("finite differences recover linear-map coefficients at machine precision",
          "[training][grad]") {
    // the FD harness itself: on a pure linear function the central difference
    // is exact up to rounding
    std::mt19937_64 rng(43);
    Vec a(6);
    init_uniform(a, rng, 2.0);
    Vec x(6);
    init_uniform(x, rng, 1.0);
    auto f = [&]() { return dot(a, x); };
    for (std::size_t i = 0; i < x.size(); ++i) {
        double h = 1e-5, saved = x[i];
        x[i] = saved + h;
        double up = f();
        x[i] = saved - h;
        double down = f();
        x[i] = saved;
        double numeric = (up - down) / (2 * h);
        REQUIRE(grad_rel_error(a[i], numeric) < 1e-9);
    }
}

TEST_CASE("full-model gradient check stays under tolerance", "[training][grad]") {
    TrainConfig cfg = toy_config();
    for (ContextMode mode : {ContextMode::kFull, ContextMode::kStaticOnly,
                             ContextMode::kAdaptiveOnly, ContextMode::kMaxPool,
                             ContextMode::kNone}) {
        cfg.context_mode = mode;
        auto [tc, params] = make_gradcheck_instance(97, cfg);
        GradCheckReport report = gradient_check(params, tc, cfg, 200, 97);
        INFO("context mode " << to_string(mode) << " worst tensor " << report.worst.tensor);
        REQUIRE(report.coords_checked >= 200);
        REQUIRE(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("bucket-only scope also passes the gradient check", "[training][grad]") {
    TrainConfig cfg = toy_config();
    cfg.coarse_loss_scope = CoarseLossScope::kBucketOnly;
    auto [tc, params] = make_gradcheck_instance(101, cfg);
    GradCheckReport report = gradient_check(params, tc, cfg, 200, 101);
    REQUIRE(report.max_rel_error < 1e-4);
}

TEST_CASE("gradient check is deterministic for a fixed seed", "[training][grad]") {
    TrainConfig cfg = toy_config();
    auto [tc, params] = make_gradcheck_instance(103, cfg);
    GradCheckReport a = gradient_check(params, tc, cfg, 120, 103);
    GradCheckReport b = gradient_check(params, tc, cfg, 120, 103);
    REQUIRE(a.max_rel_error == b.max_rel_error);
    REQUIRE(a.coords_checked == b.coords_checked);
    REQUIRE(a.worst.tensor == b.worst.tensor);
    REQUIRE(a.worst.index == b.worst.index);
}

TEST_CASE("smoothed joint loss is monotone on the overfit corpus", "[training][slow]") {
    synthetic::CorpusConfig gen{30, 10, 60, 7};
    auto tmp = std::filesystem::temp_directory_path() / "c2f_monotone.tsv";
    synthetic::write_overfit_corpus(tmp.string(), gen);
    auto lists = load_wikiqa(tmp.string()).lists;
    std::filesystem::remove(tmp);
    Vocabulary vocab = build_vocabulary(lists);
    TrainConfig cfg;
    cfg.seed = 11;  // defaults otherwise: k 15, lambda 1, lr 1e-3, d 64
    std::vector<TokenizedCandidates> data;
    for (const auto& cl : lists) data.push_back(tokenize_candidates(cl, vocab, cfg));
    Trainer trainer(data, init_model(vocab.size(), cfg.d_embed, cfg.d_model, cfg.seed), cfg);
    std::vector<double> joint;
    for (std::size_t e = 1; e <= 100; ++e) joint.push_back(trainer.run_epoch(e).mean_joint);
    std::vector<double> windows;
    for (std::size_t w = 0; w + 5 <= joint.size(); w += 5) {
        double m = 0.0;
        for (std::size_t i = w; i < w + 5; ++i) m += joint[i];
        windows.push_back(m / 5);
    }
    for (std::size_t i = 1; i < windows.size(); ++i) REQUIRE(windows[i] <= windows[i - 1]);
}

TEST_CASE("trainer decreases the joint loss on a learnable toy corpus", "[training]") {
    TrainConfig cfg = toy_config();
    cfg.bucket_size = 4;
    cfg.seed = 5;
    std::vector<TokenizedCandidates> corpus;
    for (std::uint64_t s = 0; s < 8; ++s) corpus.push_back(toy_instance(200 + s, 4, cfg));
    ModelParams p = init_model(16, cfg.d_embed, cfg.d_model, cfg.seed);
    Trainer trainer(corpus, p, cfg);
    double first = trainer.run_epoch(1).mean_joint;
    double last = 0.0;
    for (std::size_t e = 2; e <= 30; ++e) last = trainer.run_epoch(e).mean_joint;
    REQUIRE(last < first);
}

#pragma once

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/linalg.hpp"

namespace c2f {

struct FineParams {
    Vec context_vector;  // C_l, d_model; static attention query
    Vec weight;          // W_f, 2 * d_model, applied to [P_i ; Z_i]
    double bias = 0.0;   // b_f
};

struct StaticAttention {
    Vec alpha;  // bucket-sized weights, sum 1
    Vec v_list; // V_l, convex combination of passage reps
};

// u_i = C_l . P_i, alpha = softmax(u), V_l = sum_i alpha_i P_i
inline StaticAttention static_attention(const Mat& passage_reps, const FineParams& params) {
    if (passage_reps.rows < 1) throw std::invalid_argument("static_attention: empty bucket");
    std::size_t k = passage_reps.rows, d = passage_reps.cols;
    Vec u(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double* p = passage_reps.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += params.context_vector[j] * p[j];
        u[i] = s;
    }
    StaticAttention out;
    out.alpha = softmax(u);
    out.v_list = Vec(d, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double* p = passage_reps.row(i);
        for (std::size_t j = 0; j < d; ++j) out.v_list[j] += out.alpha[i] * p[j];
    }
    return out;
}

inline void static_attention_backward(const Mat& passage_reps, const FineParams& params,
                                      const StaticAttention& att, const Vec& dv_list,
                                      Mat& dpassage_reps, Vec& dcontext_vector) {
    std::size_t k = passage_reps.rows, d = passage_reps.cols;
    Vec dalpha(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double* p = passage_reps.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += dv_list[j] * p[j];
        dalpha[i] = s;
    }
    Vec du = softmax_backward(att.alpha, dalpha);
    for (std::size_t i = 0; i < k; ++i) {
        const double* p = passage_reps.row(i);
        double* dp = dpassage_reps.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            dcontext_vector[j] += du[i] * p[j];
            dp[j] += att.alpha[i] * dv_list[j] + du[i] * params.context_vector[j];
        }
    }
}

struct AdaptiveAttention {
    Mat w;     // raw correlation weights, k x k
    Mat beta;  // row-stochastic, k x k
    Mat z;     // adaptive contexts, k x d
};

// w_ij = O_i . O_j + ||V_l||_2, beta rows = softmax(w rows), Z_i = sum_j
// beta_ij O_j. The norm term is constant across a row and cancels in the
// softmax; `include_norm_term` only changes the stored w values.
inline AdaptiveAttention adaptive_attention(const Mat& pair_reps, const Vec& v_list,
                                            bool include_norm_term = true) {
    if (pair_reps.rows < 1) throw std::invalid_argument("adaptive_attention: empty bucket");
    std::size_t k = pair_reps.rows, d = pair_reps.cols;
    double norm_term = include_norm_term ? l2_norm(v_list) : 0.0;
    AdaptiveAttention out;
    out.w = Mat(k, k);
    out.beta = Mat(k, k);
    out.z = Mat(k, d);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) out.w(i, j) = dot_rows(pair_reps, i, j) + norm_term;
    for (std::size_t i = 0; i < k; ++i) {
        Vec row = softmax(Vec(out.w.row(i), out.w.row(i) + k));
        out.beta.set_row(i, row);
        for (std::size_t j = 0; j < k; ++j) {
            const double* oj = pair_reps.row(j);
            double* zi = out.z.row(i);
            for (std::size_t c = 0; c < d; ++c) zi[c] += row[j] * oj[c];
        }
    }
    return out;
}

// dZ -> dO and dV_l. The V_l path is exactly zero in real arithmetic (row
// shift invariance); it is still chained through honestly so finite
// differences agree.
inline void adaptive_attention_backward(const Mat& pair_reps, const Vec& v_list,
                                        const AdaptiveAttention& att, const Mat& dz,
                                        bool include_norm_term, Mat& dpair_reps, Vec& dv_list) {
    std::size_t k = pair_reps.rows, d = pair_reps.cols;
    double dnorm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        Vec dbeta(k);
        for (std::size_t j = 0; j < k; ++j) {
            dbeta[j] = 0.0;
            const double* oj = pair_reps.row(j);
            const double* dzi = dz.row(i);
            for (std::size_t c = 0; c < d; ++c) dbeta[j] += dzi[c] * oj[c];
            double* doj = dpair_reps.row(j);
            for (std::size_t c = 0; c < d; ++c) doj[c] += att.beta(i, j) * dzi[c];
        }
        Vec dw = softmax_backward(Vec(att.beta.row(i), att.beta.row(i) + k), dbeta);
        for (std::size_t j = 0; j < k; ++j) {
            dnorm += dw[j];
            const double* oi = pair_reps.row(i);
            const double* oj = pair_reps.row(j);
            double* doi = dpair_reps.row(i);
            double* doj = dpair_reps.row(j);
            for (std::size_t c = 0; c < d; ++c) {
                doi[c] += dw[j] * oj[c];
                doj[c] += dw[j] * oi[c];
            }
        }
    }
    if (include_norm_term) {
        double norm = l2_norm(v_list);
        if (norm > 0.0) axpy(dnorm / norm, v_list, dv_list);
    }
}

struct FineScore {
    Vec logits;
    Vec probs;  // softmax over the bucket, sums to 1
};

// s_i = W_f . [P_i ; Z_i] + b_f, p = softmax(s)
inline FineScore fine_score(const Mat& passage_sel, const Mat& context, const FineParams& params) {
    if (passage_sel.rows != context.rows)
        throw std::invalid_argument("fine_score: row count mismatch");
    std::size_t k = passage_sel.rows, d = passage_sel.cols;
    FineScore out;
    out.logits = Vec(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double* p = passage_sel.row(i);
        const double* z = context.row(i);
        double s = params.bias;
        for (std::size_t j = 0; j < d; ++j) s += params.weight[j] * p[j];
        for (std::size_t j = 0; j < d; ++j) s += params.weight[d + j] * z[j];
        out.logits[i] = s;
    }
    out.probs = softmax(out.logits);
    return out;
}

inline void fine_score_backward(const Mat& passage_sel, const Mat& context,
                                const FineParams& params, const FineScore& score,
                                const Vec& dprobs, FineParams& grads, Mat& dpassage_sel,
                                Mat& dcontext) {
    std::size_t k = passage_sel.rows, d = passage_sel.cols;
    Vec ds = softmax_backward(score.probs, dprobs);
    for (std::size_t i = 0; i < k; ++i) {
        const double* p = passage_sel.row(i);
        const double* z = context.row(i);
        double* dp = dpassage_sel.row(i);
        double* dz = dcontext.row(i);
        grads.bias += ds[i];
        for (std::size_t j = 0; j < d; ++j) {
            grads.weight[j] += ds[i] * p[j];
            grads.weight[d + j] += ds[i] * z[j];
            dp[j] += ds[i] * params.weight[j];
            dz[j] += ds[i] * params.weight[d + j];
        }
    }
}

// Componentwise max over rows; the ablation replacement for V_l.
inline Vec maxpool_context(const Mat& passage_reps, std::vector<std::size_t>* argmax = nullptr) {
    if (passage_reps.rows < 1) throw std::invalid_argument("maxpool_context: empty bucket");
    std::size_t k = passage_reps.rows, d = passage_reps.cols;
    Vec out(passage_reps.row(0), passage_reps.row(0) + d);
    std::vector<std::size_t> arg(d, 0);
    for (std::size_t i = 1; i < k; ++i) {
        const double* p = passage_reps.row(i);
        for (std::size_t j = 0; j < d; ++j)
            if (p[j] > out[j]) {
                out[j] = p[j];
                arg[j] = i;
            }
    }
    if (argmax) *argmax = std::move(arg);
    return out;
}

inline void maxpool_context_backward(const std::vector<std::size_t>& argmax, const Vec& dout,
                                     Mat& dpassage_reps) {
    for (std::size_t j = 0; j < dout.size(); ++j) dpassage_reps(argmax[j], j) += dout[j];
}

// Per-question attention diagnostics.
struct AttentionReport {
    Vec alpha;
    Vec v_list;
    Mat beta;
    Mat z;
};

// Line-delimited key=value dump, one question per record. Values are
// comma-separated; beta rows are semicolon-separated.
inline void write_attention_record(std::ostream& out, const std::string& question_id,
                                   const AttentionReport& report) {
    auto join = [](const double* v, std::size_t n) {
        std::string s;
        char buf[32];
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof buf, "%.6g", v[i]);
            if (i) s += ',';
            s += buf;
        }
        return s;
    };
    out << "qid=" << question_id << "\tk=" << report.alpha.size()
        << "\talpha=" << join(report.alpha.data(), report.alpha.size()) << "\tbeta=";
    for (std::size_t i = 0; i < report.beta.rows; ++i) {
        if (i) out << ';';
        out << join(report.beta.row(i), report.beta.cols);
    }
    out << '\n';
}

}  // namespace c2f

#pragma once

#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "linmar/ops.hpp"

// Attention kernels, single-head unless noted. Two normalization paradigms:
//
//   division:    O_i = phi(Q_i) M / (phi(Q_i) z),  M = sum_j phi(K_j)^T V_j,
//                z = sum_j phi(K_j)^T
//   subtraction: O_i = sum_j (A_ij - gamma_i) V_j, A = (1/N) phi(Q) phi(K)^T,
//                gamma_i = (sum_j A_ij - 1) / N, so each weight row sums to 1
//
// Each paradigm ships in a quadratic form that materializes the N x N weight
// matrix (the oracle; refuses long sequences) and a linearized form that
// never builds it. The two must agree to tight tolerance on any input.

namespace linmar {

enum class Kernel { relu, elu_plus_one, identity };
enum class Paradigm { division, subtraction };

inline const char* to_string(Kernel k) {
  switch (k) {
    case Kernel::relu: return "relu";
    case Kernel::elu_plus_one: return "elu_plus_one";
    case Kernel::identity: return "identity";
  }
  return "?";
}

inline const char* to_string(Paradigm p) {
  return p == Paradigm::division ? "division" : "subtraction";
}

inline Kernel kernel_from_string(const std::string& s) {
  if (s == "relu") return Kernel::relu;
  if (s == "elu_plus_one") return Kernel::elu_plus_one;
  if (s == "identity") return Kernel::identity;
  throw ConfigError("unknown kernel '" + s + "' (relu|elu_plus_one|identity)");
}

inline Paradigm paradigm_from_string(const std::string& s) {
  if (s == "division") return Paradigm::division;
  if (s == "subtraction") return Paradigm::subtraction;
  throw ConfigError("unknown paradigm '" + s + "' (division|subtraction)");
}

struct AttentionConfig {
  Index n_tokens = 0;   // N
  Index model_dim = 0;  // D (multi-head); head ops only use head_dim
  Index n_heads = 1;
  Kernel kernel = Kernel::relu;
  Paradigm paradigm = Paradigm::division;
  double epsilon = 1e-6;          // floor for division normalizers
  bool strict_normalizer = false; // error instead of clamping

  Index head_dim() const { return model_dim / n_heads; }

  void validate() const {
    if (n_tokens < 1) throw ContractError("AttentionConfig: n_tokens must be >= 1");
    if (n_heads < 1) throw ContractError("AttentionConfig: n_heads must be >= 1");
    if (model_dim < 1 || model_dim % n_heads != 0)
      throw ContractError("AttentionConfig: model_dim must be a positive multiple of n_heads");
    if (!(epsilon > 0)) throw ContractError("AttentionConfig: epsilon must be > 0");
  }
};

template <class S>
struct AttentionOutput {
  Tensor<S> output;
  std::optional<Tensor<S>> weights;  // quadratic forms only
};

// Quadratic forms exist as oracles; past this length they refuse to run.
inline constexpr Index kQuadraticFormLimit = 1024;

namespace testing {

// Fault-injection hook for the verification harness: deliberately corrupt one
// term so the equivalence suite must catch it. Never set outside tests.
enum class Mutation { none, sub_gamma_sign_flip };

inline std::atomic<Mutation>& mutation_flag() {
  static std::atomic<Mutation> m{Mutation::none};
  return m;
}

inline void set_mutation(Mutation m) { mutation_flag().store(m); }
inline Mutation active_mutation() { return mutation_flag().load(); }

}  // namespace testing

template <class S>
Tensor<S> kernel_apply(const Tensor<S>& x, Kernel k) {
  switch (k) {
    case Kernel::relu: return relu(x);
    case Kernel::elu_plus_one: return elu_plus_one(x);
    case Kernel::identity: return x;
  }
  throw ContractError("kernel_apply: bad kernel");
}

namespace detail {

template <class S>
void check_qkv(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v, const char* op) {
  require_rank2(q, op);
  require_rank2(k, op);
  require_rank2(v, op);
  if (q.shape != k.shape)
    throw DimensionError(std::string(op) + ": q " + shape_str(q.shape) + " vs k " + shape_str(k.shape));
  if (v.shape[0] != q.shape[0])
    throw DimensionError(std::string(op) + ": v has " + std::to_string(v.shape[0]) + " rows, expected " +
                         std::to_string(q.shape[0]));
}

template <class S>
void refuse_long_quadratic(const Tensor<S>& q, const char* op) {
  if (q.shape[0] > kQuadraticFormLimit)
    throw ContractError(std::string(op) + ": quadratic form refuses N=" + std::to_string(q.shape[0]) +
                        " > " + std::to_string(kQuadraticFormLimit));
}

// Strict mode rejects normalizers below the floor instead of clamping them.
template <class S>
Tensor<S> guard_normalizer(const Tensor<S>& den, const AttentionConfig& cfg, const char* op) {
  if (cfg.strict_normalizer) {
    for (Index i = 0; i < den.numel(); ++i)
      if (den.data[i] < S(cfg.epsilon))
        throw DegenerateNormalizerError(std::string(op) + ": normalizer " + std::to_string(den.data[i]) +
                                        " below epsilon at row " + std::to_string(i));
  }
  return clamp_min(den, S(cfg.epsilon));
}

}  // namespace detail

// Reference softmax attention with 1/sqrt(d) score scaling. Materializes the
// weight matrix, so it is held to the same sequence-length cap as the other
// quadratic forms.
template <class S>
AttentionOutput<S> softmax_attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v) {
  detail::check_qkv(q, k, v, "softmax_attention");
  detail::refuse_long_quadratic(q, "softmax_attention");
  S inv_sqrt_d = S(1) / std::sqrt(S(q.shape[1]));
  Tensor<S> scores = scale(matmul(q, transpose(k)), inv_sqrt_d);
  Tensor<S> w = softmax_rows(scores);
  return {matmul(w, v), w};
}

// Division paradigm, quadratic oracle: build the weight matrix row-normalized
// by its own row sums (floored at epsilon), multiply by V.
template <class S>
AttentionOutput<S> linear_attention_div_quadratic(const Tensor<S>& q, const Tensor<S>& k,
                                                  const Tensor<S>& v, const AttentionConfig& cfg) {
  detail::check_qkv(q, k, v, "linear_attention_div_quadratic");
  detail::refuse_long_quadratic(q, "linear_attention_div_quadratic");
  Tensor<S> phi_q = kernel_apply(q, cfg.kernel);
  Tensor<S> phi_k = kernel_apply(k, cfg.kernel);
  Tensor<S> a = matmul(phi_q, transpose(phi_k));                      // N x N scores
  Tensor<S> den = detail::guard_normalizer(row_sums(a), cfg, "linear_attention_div_quadratic");
  Tensor<S> w = rows_div(a, den);
  return {matmul(w, v), w};
}

// Division paradigm, linearized: O(N d^2) via the running memory M and
// normalizer z; never materializes N x N.
template <class S>
AttentionOutput<S> linear_attention_div_linear(const Tensor<S>& q, const Tensor<S>& k,
                                               const Tensor<S>& v, const AttentionConfig& cfg) {
  detail::check_qkv(q, k, v, "linear_attention_div_linear");
  Tensor<S> phi_q = kernel_apply(q, cfg.kernel);
  Tensor<S> phi_k = kernel_apply(k, cfg.kernel);
  Tensor<S> m = matmul(transpose(phi_k), v);             // d x dv
  Tensor<S> z = transpose(col_sums(phi_k));              // d x 1
  Tensor<S> num = matmul(phi_q, m);                      // N x dv
  Tensor<S> den = detail::guard_normalizer(matmul(phi_q, z), cfg, "linear_attention_div_linear");
  return {rows_div(num, den), std::nullopt};
}

// Subtraction paradigm, quadratic oracle: A = (1/N) phi(Q) phi(K)^T, shift
// each row by gamma_i = (row_sum - 1)/N so the effective weights sum to 1.
template <class S>
AttentionOutput<S> linear_attention_sub_quadratic(const Tensor<S>& q, const Tensor<S>& k,
                                                  const Tensor<S>& v, const AttentionConfig& cfg) {
  detail::check_qkv(q, k, v, "linear_attention_sub_quadratic");
  detail::refuse_long_quadratic(q, "linear_attention_sub_quadratic");
  Index n = q.shape[0];
  Tensor<S> phi_q = kernel_apply(q, cfg.kernel);
  Tensor<S> phi_k = kernel_apply(k, cfg.kernel);
  Tensor<S> a = scale(matmul(phi_q, transpose(phi_k)), S(1) / S(n));
  Tensor<S> gamma = scale(add_scalar(row_sums(a), S(-1)), S(1) / S(n));  // N x 1
  Tensor<S> w = sub(a, matmul(gamma, Tensor<S>::ones({1, n})));
  return {matmul(w, v), w};
}

// Subtraction paradigm, linearized closed form:
//   O = phi(Q) Mbar - (phi(Q) zbar - 1) vbar
// with Mbar = (1/N) sum phi(K)^T V, zbar = (1/N) sum phi(K)^T,
// vbar = (1/N) sum V.
template <class S>
AttentionOutput<S> linear_attention_sub_linear(const Tensor<S>& q, const Tensor<S>& k,
                                               const Tensor<S>& v, const AttentionConfig& cfg) {
  detail::check_qkv(q, k, v, "linear_attention_sub_linear");
  Index n = q.shape[0];
  Tensor<S> phi_q = kernel_apply(q, cfg.kernel);
  Tensor<S> phi_k = kernel_apply(k, cfg.kernel);
  Tensor<S> mbar = scale(matmul(transpose(phi_k), v), S(1) / S(n));  // d x dv
  Tensor<S> zbar = scale(transpose(col_sums(phi_k)), S(1) / S(n));   // d x 1
  Tensor<S> vbar = scale(col_sums(v), S(1) / S(n));                  // 1 x dv
  Tensor<S> term1 = matmul(phi_q, mbar);
  Tensor<S> coef = add_scalar(matmul(phi_q, zbar), S(-1));           // N x 1
  if (testing::active_mutation() == testing::Mutation::sub_gamma_sign_flip) coef = neg(coef);
  return {sub(term1, matmul(coef, vbar)), std::nullopt};
}

// Dispatch on paradigm, linearized forms.
template <class S>
AttentionOutput<S> linear_attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v,
                                    const AttentionConfig& cfg) {
  return cfg.paradigm == Paradigm::division ? linear_attention_div_linear(q, k, v, cfg)
                                            : linear_attention_sub_linear(q, k, v, cfg);
}

template <class S>
struct Projections {
  Tensor<S> wq, wk, wv, wo;  // each D x D

  void validate(Index model_dim) const {
    for (const Tensor<S>* w : {&wq, &wk, &wv, &wo}) {
      if (w->rank() != 2 || w->shape[0] != model_dim || w->shape[1] != model_dim)
        throw DimensionError("Projections: expected " + std::to_string(model_dim) + "x" +
                             std::to_string(model_dim) + ", got " + shape_str(w->shape));
    }
  }
};

// Multi-head wrapper: project, split columns into heads, run per_head(h, q, k, v)
// on each, concatenate, apply the output projection. Heads run sequentially so
// results never depend on a reduction order.
template <class S, class F>
Tensor<S> multihead(F&& per_head, const Tensor<S>& x, const Projections<S>& p,
                    const AttentionConfig& cfg) {
  cfg.validate();
  detail::require_rank2(x, "multihead");
  if (x.shape[1] != cfg.model_dim)
    throw DimensionError("multihead: input " + shape_str(x.shape) + " vs model_dim " +
                         std::to_string(cfg.model_dim));
  p.validate(cfg.model_dim);
  Index d = cfg.head_dim();
  Tensor<S> q = matmul(x, p.wq);
  Tensor<S> k = matmul(x, p.wk);
  Tensor<S> v = matmul(x, p.wv);
  std::vector<Tensor<S>> heads;
  heads.reserve(cfg.n_heads);
  for (Index h = 0; h < cfg.n_heads; ++h) {
    Tensor<S> qh = slice_cols(q, h * d, d);
    Tensor<S> kh = slice_cols(k, h * d, d);
    Tensor<S> vh = slice_cols(v, h * d, d);
    heads.push_back(per_head(h, qh, kh, vh));
  }
  return matmul(concat_cols(heads), p.wo);
}

// Multi-head over the configured paradigm's linearized kernel.
template <class S>
Tensor<S> multihead_linear_attention(const Tensor<S>& x, const Projections<S>& p,
                                     const AttentionConfig& cfg) {
  return multihead(
      [&cfg](Index, const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v) {
        return linear_attention(q, k, v, cfg).output;
      },
      x, p, cfg);
}

}  // namespace linmar

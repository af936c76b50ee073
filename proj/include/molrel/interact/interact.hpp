#pragma once

#include <string>
#include <vector>

#include "molrel/nn/layers.hpp"

namespace molrel::interact {

// Vector-mode layers fuse two pooled d-vectors into one d-vector. Token-mode
// layers (the attention trio) consume token sets; self/cross output token
// sets whose pooling is deferred to alignment, bilinear_attention pools
// internally. token_mode tags which happened.
template <typename S>
struct InteractionOutput {
  TensorT<S> fused;
  bool token_mode = false;
};

inline const std::vector<std::string>& registry_interaction() {
  static const std::vector<std::string> names = {
      "bilinear_attention", "self_attention", "cross_attention", "highway",
      "gated_fusion",       "bilinear_fusion", "mean",           "none"};
  return names;
}

inline bool is_registered_interaction(const std::string& name) {
  for (const auto& n : registry_interaction())
    if (n == name) return true;
  return false;
}

// Attention trio consumes token sets; the rest consume pooled vectors.
inline bool interaction_wants_tokens(const std::string& name) {
  return name == "self_attention" || name == "cross_attention" || name == "bilinear_attention";
}

[[noreturn]] inline void throw_unknown_interaction(const std::string& name) {
  std::string all;
  for (const auto& n : registry_interaction()) all += (all.empty() ? "" : ", ") + n;
  fail_validation("UnknownInteraction: '", name, "'; valid names: ", all);
}

struct InteractConfig {
  int dim = 64;
  double bn_momentum = 0.1;
};

// --------------------------------------------------------------------------
// mean: (a + b) / 2
// --------------------------------------------------------------------------

template <typename S>
TensorT<S> mean_fuse(const TensorT<S>& a, const TensorT<S>& b) {
  return scale(add(a, b), 0.5);
}

// --------------------------------------------------------------------------
// gated_fusion: g = sigmoid(W_g [a ; b] + c)
//               out = g * tanh(W_a a) + (1 - g) * tanh(W_b b)
// --------------------------------------------------------------------------

template <typename S>
void init_gated_fusion(ParamStore<S>& store, const std::string& p, const InteractConfig& cfg,
                       Rng& rng) {
  nn::init_linear(store, p + ".gate", 2 * cfg.dim, cfg.dim, rng);
  nn::init_proj(store, p + ".wa", cfg.dim, cfg.dim, rng);
  nn::init_proj(store, p + ".wb", cfg.dim, cfg.dim, rng);
}

template <typename S>
TensorT<S> gated_fusion(Workspace<S>& ws, const std::string& p, const TensorT<S>& a,
                        const TensorT<S>& b) {
  TensorT<S> g = sigmoid(nn::linear(ws, p + ".gate", concat_cols(a, b)));
  TensorT<S> one_minus_g = add_scalar(scale(g, -1.0), 1.0);
  return add(mul(g, tanh_act(matmul(a, ws.param(p + ".wa")))),
             mul(one_minus_g, tanh_act(matmul(b, ws.param(p + ".wb")))));
}

// --------------------------------------------------------------------------
// bilinear_fusion (factored): out = relu(W_o ((U a) * (V b)) + c)
// --------------------------------------------------------------------------

template <typename S>
void init_bilinear_fusion(ParamStore<S>& store, const std::string& p, const InteractConfig& cfg,
                          Rng& rng) {
  nn::init_proj(store, p + ".u", cfg.dim, cfg.dim, rng);
  nn::init_proj(store, p + ".v", cfg.dim, cfg.dim, rng);
  nn::init_linear(store, p + ".out", cfg.dim, cfg.dim, rng);
}

template <typename S>
TensorT<S> bilinear_fusion(Workspace<S>& ws, const std::string& p, const TensorT<S>& a,
                           const TensorT<S>& b) {
  TensorT<S> prod = mul(matmul(a, ws.param(p + ".u")), matmul(b, ws.param(p + ".v")));
  return relu(nn::linear(ws, p + ".out", prod));
}

// --------------------------------------------------------------------------
// highway: x = W_p [a ; b]; t = sigmoid(W_t x + c_t)
//          out = t * relu(W_h x + c_h) + (1 - t) * x
// --------------------------------------------------------------------------

template <typename S>
void init_highway(ParamStore<S>& store, const std::string& p, const InteractConfig& cfg,
                  Rng& rng) {
  nn::init_proj(store, p + ".wp", 2 * cfg.dim, cfg.dim, rng);
  nn::init_linear(store, p + ".transform", cfg.dim, cfg.dim, rng);
  nn::init_linear(store, p + ".carry", cfg.dim, cfg.dim, rng);
}

template <typename S>
TensorT<S> highway_fuse(Workspace<S>& ws, const std::string& p, const TensorT<S>& a,
                        const TensorT<S>& b) {
  TensorT<S> x = matmul(concat_cols(a, b), ws.param(p + ".wp"));
  TensorT<S> t = sigmoid(nn::linear(ws, p + ".transform", x));
  TensorT<S> one_minus_t = add_scalar(scale(t, -1.0), 1.0);
  return add(mul(t, relu(nn::linear(ws, p + ".carry", x))), mul(one_minus_t, x));
}

// --------------------------------------------------------------------------
// self_attention: one scaled-dot-product self-attention layer over the
// concatenated token sets, with a learned segment embedding per source.
// --------------------------------------------------------------------------

template <typename S>
void init_self_attention(ParamStore<S>& store, const std::string& p, const InteractConfig& cfg,
                         Rng& rng) {
  store.normal(p + ".segment", 2, cfg.dim, 0.1, rng);
  nn::init_attention(store, p + ".attn", cfg.dim, cfg.dim, cfg.dim, rng);
}

template <typename S>
TensorT<S> self_attention_fuse(Workspace<S>& ws, const std::string& p, const TensorT<S>& tokens_a,
                               const TensorT<S>& tokens_b) {
  std::vector<int> seg_ids(static_cast<size_t>(tokens_a.rows()), 0);
  seg_ids.insert(seg_ids.end(), static_cast<size_t>(tokens_b.rows()), 1);
  TensorT<S> seg = embedding_lookup(ws.param(p + ".segment"), seg_ids);
  TensorT<S> x = add(concat_rows(tokens_a, tokens_b), seg);
  return nn::attend(ws, p + ".attn", x, x);
}

// --------------------------------------------------------------------------
// cross_attention: A' = attend(A -> B), B' = attend(B -> A), output [A'; B'].
// One shared projection set serves both directions.
// --------------------------------------------------------------------------

template <typename S>
void init_cross_attention(ParamStore<S>& store, const std::string& p, const InteractConfig& cfg,
                          Rng& rng) {
  nn::init_attention(store, p + ".attn", cfg.dim, cfg.dim, cfg.dim, rng);
}

template <typename S>
TensorT<S> cross_attention_fuse(Workspace<S>& ws, const std::string& p, const TensorT<S>& tokens_a,
                                const TensorT<S>& tokens_b) {
  TensorT<S> a_prime = nn::attend(ws, p + ".attn", tokens_a, tokens_b);
  TensorT<S> b_prime = nn::attend(ws, p + ".attn", tokens_b, tokens_a);
  return concat_rows(a_prime, b_prime);
}

// --------------------------------------------------------------------------
// bilinear_attention: S_ij = (U a_i)^T (V b_j); alpha = softmax over all
// (i, j); fused = bn(W_o sum_ij alpha_ij ((U a_i) * (V b_j))) where bn is
// running-statistics batch normalization (identity in eval mode with unit
// stats). Running stats update outside the tape during training.
// --------------------------------------------------------------------------

template <typename S>
void init_bilinear_attention(ParamStore<S>& store, const std::string& p,
                             const InteractConfig& cfg, Rng& rng) {
  nn::init_proj(store, p + ".u", cfg.dim, cfg.dim, rng);
  nn::init_proj(store, p + ".v", cfg.dim, cfg.dim, rng);
  nn::init_proj(store, p + ".out", cfg.dim, cfg.dim, rng);
  store.ones(p + ".bn.gamma", 1, cfg.dim, ParamKind::norm);
  store.zeros(p + ".bn.beta", 1, cfg.dim, ParamKind::norm);
  store.zeros(p + ".bn.running_mean", 1, cfg.dim, ParamKind::norm);
  store.ones(p + ".bn.running_var", 1, cfg.dim, ParamKind::norm);
  store.at(p + ".bn.running_mean").trainable = false;
  store.at(p + ".bn.running_var").trainable = false;
}

template <typename S>
TensorT<S> bilinear_attention_fuse(Workspace<S>& ws, const std::string& p,
                                   const TensorT<S>& tokens_a, const TensorT<S>& tokens_b,
                                   const InteractConfig& cfg) {
  const Index na = tokens_a.rows(), nb = tokens_b.rows();
  TensorT<S> ua = matmul(tokens_a, ws.param(p + ".u"));
  TensorT<S> vb = matmul(tokens_b, ws.param(p + ".v"));
  TensorT<S> scores = matmul(ua, transpose(vb));                       // na x nb
  TensorT<S> alpha = reshape(softmax_rows(reshape(scores, 1, na * nb)), na * nb, 1);

  std::vector<int> ia, ib;
  for (Index i = 0; i < na; ++i)
    for (Index j = 0; j < nb; ++j) {
      ia.push_back(static_cast<int>(i));
      ib.push_back(static_cast<int>(j));
    }
  TensorT<S> pair_prod = mul(gather_rows(ua, ia), gather_rows(vb, ib));  // (na*nb) x d
  TensorT<S> pooled = sum_axis(mul_colvec(pair_prod, alpha), 0);         // 1 x d
  TensorT<S> fused = matmul(pooled, ws.param(p + ".out"));

  // Running-statistics normalization; stats are state, not tape nodes.
  MatX<S>& rm = ws.store().value(p + ".bn.running_mean");
  MatX<S>& rv = ws.store().value(p + ".bn.running_var");
  if (ws.training()) {
    const S m = static_cast<S>(cfg.bn_momentum);
    rm = (S(1) - m) * rm + m * fused.v;
    MatX<S> centered = fused.v - rm;
    rv = (S(1) - m) * rv + m * centered.cwiseProduct(centered);
  }
  TensorT<S> inv_std = ws.constant(MatX<S>((rv.array() + S(1e-5)).rsqrt()));
  TensorT<S> normed = mul(sub(fused, ws.constant(MatX<S>(rm))), inv_std);
  return add(mul(normed, ws.param(p + ".bn.gamma")), ws.param(p + ".bn.beta"));
}

// --------------------------------------------------------------------------
// Registry dispatch. Token-mode layers take token sets; vector-mode layers
// take pooled 1 x d vectors.
// --------------------------------------------------------------------------

template <typename S>
void init_interaction(const std::string& name, ParamStore<S>& store, const std::string& prefix,
                      const InteractConfig& cfg, Rng& rng) {
  if (name == "mean" || name == "none") return;
  if (name == "gated_fusion") return init_gated_fusion(store, prefix, cfg, rng);
  if (name == "bilinear_fusion") return init_bilinear_fusion(store, prefix, cfg, rng);
  if (name == "highway") return init_highway(store, prefix, cfg, rng);
  if (name == "self_attention") return init_self_attention(store, prefix, cfg, rng);
  if (name == "cross_attention") return init_cross_attention(store, prefix, cfg, rng);
  if (name == "bilinear_attention") return init_bilinear_attention(store, prefix, cfg, rng);
  throw_unknown_interaction(name);
}

template <typename S>
InteractionOutput<S> apply_interaction(const std::string& name, Workspace<S>& ws,
                                       const std::string& prefix, const TensorT<S>& a,
                                       const TensorT<S>& b, const InteractConfig& cfg) {
  if (name == "mean") return {mean_fuse(a, b), false};
  if (name == "gated_fusion") return {gated_fusion(ws, prefix, a, b), false};
  if (name == "bilinear_fusion") return {bilinear_fusion(ws, prefix, a, b), false};
  if (name == "highway") return {highway_fuse(ws, prefix, a, b), false};
  if (name == "self_attention") return {self_attention_fuse(ws, prefix, a, b), true};
  if (name == "cross_attention") return {cross_attention_fuse(ws, prefix, a, b), true};
  if (name == "bilinear_attention") return {bilinear_attention_fuse(ws, prefix, a, b, cfg), false};
  throw_unknown_interaction(name);
}

}  // namespace molrel::interact

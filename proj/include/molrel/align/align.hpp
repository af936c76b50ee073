#pragma once

#include <string>
#include <vector>

#include "molrel/nn/layers.hpp"

namespace molrel::align {

// Projects molecular representations into the backbone's embedding space.
// "mlp" maps a pooled vector to one backbone token; "qformer" maps a token
// set to K backbone tokens through learned queries.
struct AlignConfig {
  int in_dim = 64;   // encoder / interaction width
  int lm_dim = 128;  // backbone embedding width
  int queries = 8;   // K
  int blocks = 2;    // L
};

inline const std::vector<std::string>& registry_align() {
  static const std::vector<std::string> names = {"mlp", "qformer"};
  return names;
}

inline bool is_registered_align(const std::string& name) {
  return name == "mlp" || name == "qformer";
}

[[noreturn]] inline void throw_unknown_align(const std::string& name) {
  fail_validation("UnknownAlignment: '", name, "'; valid names: mlp, qformer");
}

// --------------------------------------------------------------------------
// Lightweight MLP projector: two linear layers with gelu between.
// --------------------------------------------------------------------------

template <typename S>
void init_mlp_project(ParamStore<S>& store, const std::string& p, const AlignConfig& cfg,
                      Rng& rng) {
  nn::init_linear(store, p + ".fc1", cfg.in_dim, cfg.lm_dim, rng);
  nn::init_linear(store, p + ".fc2", cfg.lm_dim, cfg.lm_dim, rng);
}

template <typename S>
TensorT<S> mlp_project(Workspace<S>& ws, const std::string& p, const TensorT<S>& pooled) {
  return nn::linear(ws, p + ".fc2", gelu(nn::linear(ws, p + ".fc1", pooled)));
}

// --------------------------------------------------------------------------
// Q-former (simplified): K learned queries pass through L blocks of
// (cross-attention onto the input tokens, then feed-forward), both with
// residual connections, followed by a linear map to the backbone width.
// Order-free on the key side, so output is invariant under input token
// permutation.
// --------------------------------------------------------------------------

template <typename S>
void init_qformer(ParamStore<S>& store, const std::string& p, const AlignConfig& cfg, Rng& rng) {
  store.normal(p + ".queries", cfg.queries, cfg.in_dim, 0.5, rng);
  for (int l = 0; l < cfg.blocks; ++l) {
    std::string bp = p + ".block" + std::to_string(l);
    nn::init_attention(store, bp + ".cross", cfg.in_dim, cfg.in_dim, cfg.in_dim, rng);
    nn::init_mlp2(store, bp + ".ff", cfg.in_dim, cfg.in_dim, cfg.in_dim, rng);
  }
  nn::init_linear(store, p + ".out", cfg.in_dim, cfg.lm_dim, rng);
}

template <typename S>
TensorT<S> qformer_lite(Workspace<S>& ws, const std::string& p, const TensorT<S>& tokens,
                        const AlignConfig& cfg) {
  if (tokens.rows() < 1) fail_validation("qformer: empty input token set");
  TensorT<S> q = ws.param(p + ".queries");
  for (int l = 0; l < cfg.blocks; ++l) {
    std::string bp = p + ".block" + std::to_string(l);
    q = add(q, nn::attend(ws, bp + ".cross", q, tokens));
    q = add(q, nn::mlp2(ws, bp + ".ff", q, [](const TensorT<S>& x) { return gelu(x); }));
  }
  return nn::linear(ws, p + ".out", q);  // K x lm_dim
}

template <typename S>
void init_align(const std::string& name, ParamStore<S>& store, const std::string& prefix,
                const AlignConfig& cfg, Rng& rng) {
  if (name == "mlp") return init_mlp_project(store, prefix, cfg, rng);
  if (name == "qformer") return init_qformer(store, prefix, cfg, rng);
  throw_unknown_align(name);
}

// For "mlp", tokens are pooled (mean) first when a token set arrives; the
// result is 1 x lm_dim. For "qformer", K x lm_dim.
template <typename S>
TensorT<S> apply_align(const std::string& name, Workspace<S>& ws, const std::string& prefix,
                       const TensorT<S>& tokens_or_vec, const AlignConfig& cfg) {
  if (name == "mlp") {
    TensorT<S> pooled =
        tokens_or_vec.rows() == 1 ? tokens_or_vec : mean_rows(tokens_or_vec);
    return mlp_project(ws, prefix, pooled);
  }
  if (name == "qformer") return qformer_lite(ws, prefix, tokens_or_vec, cfg);
  throw_unknown_align(name);
}

}  // namespace molrel::align

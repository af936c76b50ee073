#pragma once

#include <string>

#include "molrel/tensor/ops.hpp"
#include "molrel/tensor/workspace.hpp"

namespace molrel::nn {

// y = x W + b with W named "<prefix>.w" (in x out) and b "<prefix>.b".
template <typename S>
void init_linear(ParamStore<S>& store, const std::string& prefix, Index in, Index out, Rng& rng) {
  store.xavier(prefix + ".w", in, out, rng);
  store.zeros(prefix + ".b", 1, out, ParamKind::bias);
}

template <typename S>
TensorT<S> linear(Workspace<S>& ws, const std::string& prefix, const TensorT<S>& x) {
  return add_rowvec(matmul(x, ws.param(prefix + ".w")), ws.param(prefix + ".b"));
}

// Bias-free variant for attention projections.
template <typename S>
void init_proj(ParamStore<S>& store, const std::string& name, Index in, Index out, Rng& rng) {
  store.xavier(name, in, out, rng);
}

// Two linear layers with an activation between.
template <typename S>
void init_mlp2(ParamStore<S>& store, const std::string& prefix, Index in, Index hidden, Index out,
               Rng& rng) {
  init_linear(store, prefix + ".fc1", in, hidden, rng);
  init_linear(store, prefix + ".fc2", hidden, out, rng);
}

template <typename S, typename Act>
TensorT<S> mlp2(Workspace<S>& ws, const std::string& prefix, const TensorT<S>& x, Act&& act) {
  return linear(ws, prefix + ".fc2", act(linear(ws, prefix + ".fc1", x)));
}

template <typename S>
void init_layer_norm(ParamStore<S>& store, const std::string& prefix, Index dim) {
  store.ones(prefix + ".gain", 1, dim, ParamKind::norm);
  store.zeros(prefix + ".bias", 1, dim, ParamKind::norm);
}

template <typename S>
TensorT<S> apply_layer_norm(Workspace<S>& ws, const std::string& prefix, const TensorT<S>& x) {
  return layer_norm(x, ws.param(prefix + ".gain"), ws.param(prefix + ".bias"));
}

// Single-head scaled dot-product attention block: queries attend to keys /
// values through projections named "<prefix>.wq/.wk/.wv".
template <typename S>
void init_attention(ParamStore<S>& store, const std::string& prefix, Index q_in, Index kv_in,
                    Index dim, Rng& rng) {
  init_proj(store, prefix + ".wq", q_in, dim, rng);
  init_proj(store, prefix + ".wk", kv_in, dim, rng);
  init_proj(store, prefix + ".wv", kv_in, dim, rng);
}

template <typename S>
TensorT<S> attend(Workspace<S>& ws, const std::string& prefix, const TensorT<S>& queries,
                  const TensorT<S>& keys_values) {
  TensorT<S> q = matmul(queries, ws.param(prefix + ".wq"));
  TensorT<S> k = matmul(keys_values, ws.param(prefix + ".wk"));
  TensorT<S> v = matmul(keys_values, ws.param(prefix + ".wv"));
  TensorT<S> scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  return matmul(softmax_rows(scores), v);
}

}  // namespace molrel::nn

#pragma once

#include <string>
#include <vector>

#include "molrel/chem/molgraph.hpp"
#include "molrel/nn/layers.hpp"

namespace molrel::enc2d {

using molrel::chem::MolGraph;

// Every encoder produces per-atom token embeddings plus a pooled molecule
// embedding; pooling is uniformly the mean over atom tokens, which keeps
// permutation invariance exactly testable across encoders.
template <typename S>
struct EncoderOutput {
  TensorT<S> atom_tokens;  // num_atoms x dim
  TensorT<S> pooled;       // 1 x dim
};

struct Encoder2dConfig {
  int dim = 64;
  int layers = 2;
  int heads = 4;       // GAT
  double gin_eps = 0.0;
};

// Registry names, bit-exact as used in configs.
inline const std::vector<std::string>& registry_2d() {
  static const std::vector<std::string> names = {"gcn",         "mpnn", "gat",       "neuralfp",
                                                 "attentivefp", "gin",  "graphsage", "coatgin"};
  return names;
}

inline bool is_registered_2d(const std::string& name) {
  for (const auto& n : registry_2d())
    if (n == name) return true;
  return false;
}

inline bool is_implemented_2d(const std::string& name) {
  return name == "gcn" || name == "mpnn" || name == "gat" || name == "gin" ||
         name == "graphsage";
}

[[noreturn]] inline void throw_unknown_2d(const std::string& name) {
  std::string all;
  for (const auto& n : registry_2d()) all += (all.empty() ? "" : ", ") + n;
  fail_validation("UnknownEncoder: '", name, "' is not a 2D encoder; valid names: ", all);
}

[[noreturn]] inline void throw_unimplemented_2d(const std::string& name) {
  fail_validation("UnimplementedEncoder: '", name,
                  "' is a reserved registry name; supply your own encoder through the "
                  "extension interface or pick one of: gcn, mpnn, gat, gin, graphsage");
}

namespace detail {

// Dense symmetric normalized adjacency with self-loops:
// D^{-1/2} (A + I) D^{-1/2}.
template <typename S>
MatX<S> normalized_adjacency(const MolGraph& g) {
  const Index n = g.num_atoms();
  MatX<S> a = MatX<S>::Identity(n, n);
  for (const auto& [s, d] : g.edge_index) a(s, d) = S(1);
  VecX<S> deg = a.rowwise().sum();
  MatX<S> out(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      out(i, j) = a(i, j) / std::sqrt(deg(i) * deg(j));
  return out;
}

template <typename S>
MatX<S> plain_adjacency(const MolGraph& g) {
  const Index n = g.num_atoms();
  MatX<S> a = MatX<S>::Zero(n, n);
  for (const auto& [s, d] : g.edge_index) a(s, d) = S(1);
  return a;
}

template <typename S>
TensorT<S> node_features(Workspace<S>& ws, const MolGraph& g) {
  return ws.constant(g.node_features.template cast<S>());
}

}  // namespace detail

// --------------------------------------------------------------------------
// GCN: H' = relu(D^{-1/2} (A+I) D^{-1/2} H W), mean pooling.
// --------------------------------------------------------------------------

template <typename S>
void init_gcn(ParamStore<S>& store, const std::string& p, const Encoder2dConfig& cfg, Rng& rng) {
  Index in = MolGraph::kNodeFeatures;
  for (int l = 0; l < cfg.layers; ++l) {
    store.xavier(p + ".layer" + std::to_string(l) + ".w", in, cfg.dim, rng);
    in = cfg.dim;
  }
}

template <typename S>
EncoderOutput<S> gcn_encode(Workspace<S>& ws, const std::string& p, const MolGraph& g,
                            const Encoder2dConfig& cfg) {
  TensorT<S> a_hat = ws.constant(detail::normalized_adjacency<S>(g));
  TensorT<S> h = detail::node_features(ws, g);
  for (int l = 0; l < cfg.layers; ++l)
    h = relu(matmul(matmul(a_hat, h), ws.param(p + ".layer" + std::to_string(l) + ".w")));
  return {h, mean_rows(h)};
}

// --------------------------------------------------------------------------
// GIN: h' = MLP((1 + eps) h + sum_{j in N(i)} h_j).
// --------------------------------------------------------------------------

template <typename S>
void init_gin(ParamStore<S>& store, const std::string& p, const Encoder2dConfig& cfg, Rng& rng) {
  Index in = MolGraph::kNodeFeatures;
  for (int l = 0; l < cfg.layers; ++l) {
    nn::init_mlp2(store, p + ".layer" + std::to_string(l), in, cfg.dim, cfg.dim, rng);
    in = cfg.dim;
  }
}

template <typename S>
EncoderOutput<S> gin_encode(Workspace<S>& ws, const std::string& p, const MolGraph& g,
                            const Encoder2dConfig& cfg) {
  TensorT<S> adj = ws.constant(detail::plain_adjacency<S>(g));
  TensorT<S> h = detail::node_features(ws, g);
  for (int l = 0; l < cfg.layers; ++l) {
    TensorT<S> agg = add(scale(h, 1.0 + cfg.gin_eps), matmul(adj, h));
    h = nn::mlp2(ws, p + ".layer" + std::to_string(l), agg,
                 [](const TensorT<S>& x) { return relu(x); });
  }
  return {h, mean_rows(h)};
}

// --------------------------------------------------------------------------
// GAT: alpha_ij = softmax_{j in N(i) + self} leaky_relu(a^T [W h_i ; W h_j]),
// heads concatenated on hidden layers, averaged on the final layer.
// --------------------------------------------------------------------------

template <typename S>
void init_gat(ParamStore<S>& store, const std::string& p, const Encoder2dConfig& cfg, Rng& rng) {
  if (cfg.dim % cfg.heads != 0)
    fail_validation("gat: dim ", cfg.dim, " must be divisible by heads ", cfg.heads);
  Index in = MolGraph::kNodeFeatures;
  for (int l = 0; l < cfg.layers; ++l) {
    const bool final_layer = l == cfg.layers - 1;
    const Index head_dim = final_layer ? cfg.dim : cfg.dim / cfg.heads;
    for (int hd = 0; hd < cfg.heads; ++hd) {
      std::string hp = p + ".layer" + std::to_string(l) + ".head" + std::to_string(hd);
      store.xavier(hp + ".w", in, head_dim, rng);
      store.xavier(hp + ".a_src", head_dim, 1, rng);
      store.xavier(hp + ".a_dst", head_dim, 1, rng);
    }
    in = cfg.dim;
  }
}

template <typename S>
EncoderOutput<S> gat_encode(Workspace<S>& ws, const std::string& p, const MolGraph& g,
                            const Encoder2dConfig& cfg) {
  const Index n = g.num_atoms();
  // Additive mask: 0 on edges and the diagonal, -1e9 elsewhere.
  MatX<S> mask = MatX<S>::Constant(n, n, S(-1e9));
  for (Index i = 0; i < n; ++i) mask(i, i) = S(0);
  for (const auto& [s, d] : g.edge_index) mask(s, d) = S(0);
  TensorT<S> maskc = ws.constant(std::move(mask));
  TensorT<S> ones_row = ws.constant(MatX<S>::Ones(1, n));
  TensorT<S> ones_col = ws.constant(MatX<S>::Ones(n, 1));

  TensorT<S> h = detail::node_features(ws, g);
  for (int l = 0; l < cfg.layers; ++l) {
    const bool final_layer = l == cfg.layers - 1;
    TensorT<S> out;
    for (int hd = 0; hd < cfg.heads; ++hd) {
      std::string hp = p + ".layer" + std::to_string(l) + ".head" + std::to_string(hd);
      TensorT<S> wh = matmul(h, ws.param(hp + ".w"));
      TensorT<S> src = matmul(wh, ws.param(hp + ".a_src"));  // n x 1
      TensorT<S> dst = matmul(wh, ws.param(hp + ".a_dst"));  // n x 1
      TensorT<S> scores = leaky_relu(
          add(matmul(src, ones_row), matmul(ones_col, transpose(dst))), 0.2);
      TensorT<S> alpha = softmax_rows(add(scores, maskc));
      TensorT<S> head_out = matmul(alpha, wh);
      if (hd == 0) out = head_out;
      else out = final_layer ? add(out, head_out) : concat_cols(out, head_out);
    }
    if (final_layer) out = scale(out, 1.0 / cfg.heads);
    h = out;
  }
  return {h, mean_rows(h)};
}

// --------------------------------------------------------------------------
// GraphSAGE: h' = relu(W [h ; mean_{j in N(i)} h_j]); empty neighborhoods
// aggregate to the zero vector.
// --------------------------------------------------------------------------

template <typename S>
void init_graphsage(ParamStore<S>& store, const std::string& p, const Encoder2dConfig& cfg,
                    Rng& rng) {
  Index in = MolGraph::kNodeFeatures;
  for (int l = 0; l < cfg.layers; ++l) {
    nn::init_linear(store, p + ".layer" + std::to_string(l), 2 * in, cfg.dim, rng);
    in = cfg.dim;
  }
}

template <typename S>
EncoderOutput<S> graphsage_encode(Workspace<S>& ws, const std::string& p, const MolGraph& g,
                                  const Encoder2dConfig& cfg) {
  const Index n = g.num_atoms();
  std::vector<int> src, dst;
  for (const auto& [s, d] : g.edge_index) {
    src.push_back(s);
    dst.push_back(d);
  }
  MatX<S> inv_deg = MatX<S>::Zero(n, 1);
  for (int d : dst) inv_deg(d, 0) += S(1);
  for (Index i = 0; i < n; ++i) inv_deg(i, 0) = inv_deg(i, 0) > 0 ? S(1) / inv_deg(i, 0) : S(0);
  TensorT<S> inv_deg_c = ws.constant(std::move(inv_deg));

  TensorT<S> h = detail::node_features(ws, g);
  for (int l = 0; l < cfg.layers; ++l) {
    TensorT<S> mean_nb =
        src.empty() ? ws.constant(MatX<S>::Zero(n, h.cols()))
                    : mul_colvec(segment_sum(gather_rows(h, src), dst, n), inv_deg_c);
    h = relu(nn::linear(ws, p + ".layer" + std::to_string(l), concat_cols(h, mean_nb)));
  }
  return {h, mean_rows(h)};
}

// --------------------------------------------------------------------------
// MPNN: m_ij = MLP(h_j + edge features), aggregated by segment sum, then a
// GRU cell update. The one encoder that consumes edge features.
// --------------------------------------------------------------------------

template <typename S>
void init_mpnn(ParamStore<S>& store, const std::string& p, const Encoder2dConfig& cfg, Rng& rng) {
  nn::init_linear(store, p + ".input", MolGraph::kNodeFeatures, cfg.dim, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = p + ".layer" + std::to_string(l);
    nn::init_mlp2(store, lp + ".msg", cfg.dim + MolGraph::kEdgeFeatures, cfg.dim, cfg.dim, rng);
    for (const char* gate : {"z", "r", "h"}) {
      store.xavier(lp + ".gru.w" + std::string(gate), cfg.dim, cfg.dim, rng);
      store.xavier(lp + ".gru.u" + std::string(gate), cfg.dim, cfg.dim, rng);
      store.zeros(lp + ".gru.b" + std::string(gate), 1, cfg.dim, ParamKind::bias);
    }
  }
}

// Standard gated recurrent update; x is the aggregated message.
template <typename S>
TensorT<S> gru_cell(Workspace<S>& ws, const std::string& p, const TensorT<S>& h,
                    const TensorT<S>& x) {
  auto gate = [&](const std::string& g, const TensorT<S>& hh) {
    return add_rowvec(add(matmul(x, ws.param(p + ".w" + g)), matmul(hh, ws.param(p + ".u" + g))),
                      ws.param(p + ".b" + g));
  };
  TensorT<S> z = sigmoid(gate("z", h));
  TensorT<S> r = sigmoid(gate("r", h));
  TensorT<S> cand = tanh_act(add_rowvec(
      add(matmul(x, ws.param(p + ".wh")), matmul(mul(r, h), ws.param(p + ".uh"))),
      ws.param(p + ".bh")));
  TensorT<S> one_minus_z = add_scalar(scale(z, -1.0), 1.0);
  return add(mul(one_minus_z, h), mul(z, cand));
}

template <typename S>
EncoderOutput<S> mpnn_encode(Workspace<S>& ws, const std::string& p, const MolGraph& g,
                             const Encoder2dConfig& cfg) {
  const Index n = g.num_atoms();
  std::vector<int> src, dst;
  for (const auto& [s, d] : g.edge_index) {
    src.push_back(s);
    dst.push_back(d);
  }
  TensorT<S> h = nn::linear(ws, p + ".input", detail::node_features(ws, g));
  TensorT<S> edge_feats = ws.constant(g.edge_features.template cast<S>());
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = p + ".layer" + std::to_string(l);
    TensorT<S> msum;
    if (src.empty()) {
      msum = ws.constant(MatX<S>::Zero(n, cfg.dim));
    } else {
      TensorT<S> hj = gather_rows(h, src);  // message from the source endpoint
      TensorT<S> m = nn::mlp2(ws, lp + ".msg", concat_cols(hj, edge_feats),
                              [](const TensorT<S>& x) { return relu(x); });
      msum = segment_sum(m, dst, n);
    }
    h = gru_cell(ws, lp + ".gru", h, msum);
  }
  return {h, mean_rows(h)};
}

// --------------------------------------------------------------------------
// Registry dispatch
// --------------------------------------------------------------------------

template <typename S>
void init_encoder2d(const std::string& name, ParamStore<S>& store, const std::string& prefix,
                    const Encoder2dConfig& cfg, Rng& rng) {
  if (name == "gcn") return init_gcn(store, prefix, cfg, rng);
  if (name == "gin") return init_gin(store, prefix, cfg, rng);
  if (name == "gat") return init_gat(store, prefix, cfg, rng);
  if (name == "graphsage") return init_graphsage(store, prefix, cfg, rng);
  if (name == "mpnn") return init_mpnn(store, prefix, cfg, rng);
  if (is_registered_2d(name)) throw_unimplemented_2d(name);
  throw_unknown_2d(name);
}

template <typename S>
EncoderOutput<S> encode2d(const std::string& name, Workspace<S>& ws, const std::string& prefix,
                          const MolGraph& g, const Encoder2dConfig& cfg) {
  if (name == "gcn") return gcn_encode(ws, prefix, g, cfg);
  if (name == "gin") return gin_encode(ws, prefix, g, cfg);
  if (name == "gat") return gat_encode(ws, prefix, g, cfg);
  if (name == "graphsage") return graphsage_encode(ws, prefix, g, cfg);
  if (name == "mpnn") return mpnn_encode(ws, prefix, g, cfg);
  if (is_registered_2d(name)) throw_unimplemented_2d(name);
  throw_unknown_2d(name);
}

}  // namespace molrel::enc2d

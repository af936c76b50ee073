#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "molrel/chem/conformer.hpp"
#include "molrel/chem/molgraph.hpp"
#include "molrel/encoders/encoder2d.hpp"
#include "molrel/nn/layers.hpp"

namespace molrel::enc3d {

using molrel::chem::Conformer;
using molrel::chem::Molecule;
template <typename S>
using EncoderOutput = molrel::enc2d::EncoderOutput<S>;

struct Encoder3dConfig {
  int dim = 64;
  int layers = 2;
  double cutoff = 5.0;   // Angstrom; SchNet neighborhood
  int n_rbf = 16;        // radial basis centers, evenly spaced on [0, cutoff]
  double rbf_gamma = 10.0;
  bool unimol_stub = false;  // "unimol" resolves to schnet + attention head
};

// Output carries updated coordinates for equivariant encoders (EGNN); other
// encoders return the input coordinates unchanged.
template <typename S>
struct Encoder3dOutput {
  TensorT<S> atom_tokens;
  TensorT<S> pooled;
  TensorT<S> coords;  // n x 3
};

inline const std::vector<std::string>& registry_3d() {
  static const std::vector<std::string> names = {
      "egnn",   "3d-geoformer", "se3transformer", "painn",      "gvp",   "gearnet",
      "dimenet++", "schnet",    "spherenet",      "g-spherenet", "unimol"};
  return names;
}

inline bool is_registered_3d(const std::string& name) {
  for (const auto& n : registry_3d())
    if (n == name) return true;
  return false;
}

inline bool is_implemented_3d(const std::string& name, bool unimol_stub) {
  return name == "schnet" || name == "egnn" || (name == "unimol" && unimol_stub);
}

[[noreturn]] inline void throw_unknown_3d(const std::string& name) {
  std::string all;
  for (const auto& n : registry_3d()) all += (all.empty() ? "" : ", ") + n;
  fail_validation("UnknownEncoder: '", name, "' is not a 3D encoder; valid names: ", all);
}

[[noreturn]] inline void throw_unimplemented_3d(const std::string& name) {
  if (name == "unimol")
    fail_validation("UnimplementedEncoder: 'unimol' requires pretrained weights that are not "
                    "shipped; set unimol_stub=true for the desk-scale stand-in, or supply your "
                    "own encoder through the extension interface");
  fail_validation("UnimplementedEncoder: '", name,
                  "' is a reserved registry name; supply your own encoder through the extension "
                  "interface or pick one of: schnet, egnn, unimol (with unimol_stub=true)");
}

namespace detail {

// One-hot-free element ids into the shared 12-slot element vocabulary.
inline std::vector<int> element_ids(const Molecule& mol) {
  std::vector<int> out;
  out.reserve(mol.atoms.size());
  for (const auto& a : mol.atoms) out.push_back(chem::element_feature_index(a.element));
  return out;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Attention re-aggregation head: each atom attends to all atoms, features
// are re-aggregated by the attention weights, and the pooled vector is the
// mean of the weighted features.
// --------------------------------------------------------------------------

template <typename S>
void init_attn_reaggregate(ParamStore<S>& store, const std::string& p, int dim, Rng& rng) {
  nn::init_attention(store, p, dim, dim, dim, rng);
}

template <typename S>
EncoderOutput<S> attn_reaggregate(Workspace<S>& ws, const std::string& p,
                                  const TensorT<S>& tokens) {
  if (tokens.rows() < 1) fail_validation("attn_reaggregate: needs at least one token");
  TensorT<S> out = nn::attend(ws, p, tokens, tokens);
  return {out, mean_rows(out)};
}

// --------------------------------------------------------------------------
// SchNet-style continuous-filter convolution:
//   h_i' = h_i + sum_{j : d_ij < cutoff} (W2 h_j) * filter(rbf(d_ij))
// with rbf_k(d) = exp(-gamma (d - mu_k)^2), centers evenly on [0, cutoff].
// --------------------------------------------------------------------------

template <typename S>
void init_schnet(ParamStore<S>& store, const std::string& p, const Encoder3dConfig& cfg,
                 Rng& rng) {
  store.normal(p + ".embed", chem::MolGraph::kNumElements, cfg.dim, 0.5, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = p + ".layer" + std::to_string(l);
    store.xavier(lp + ".w2", cfg.dim, cfg.dim, rng);
    nn::init_mlp2(store, lp + ".filter", cfg.n_rbf, cfg.dim, cfg.dim, rng);
  }
}

template <typename S>
Encoder3dOutput<S> schnet_encode(Workspace<S>& ws, const std::string& p, const Molecule& mol,
                                 const Conformer& conf, const Encoder3dConfig& cfg) {
  if (conf.num_atoms() != mol.num_atoms())
    fail_validation("schnet: conformer has ", conf.num_atoms(), " atoms but molecule has ",
                    mol.num_atoms());
  const Index n = mol.num_atoms();

  std::vector<int> src, dst;
  std::vector<double> dist;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = (conf.coords.row(i) - conf.coords.row(j)).norm();
      if (d < cfg.cutoff) {
        src.push_back(static_cast<int>(i));
        dst.push_back(static_cast<int>(j));
        dist.push_back(d);
      }
    }

  MatX<S> rbf(static_cast<Index>(dist.size()), cfg.n_rbf);
  const double spacing = cfg.cutoff / (cfg.n_rbf - 1);
  for (size_t e = 0; e < dist.size(); ++e)
    for (int k = 0; k < cfg.n_rbf; ++k) {
      double mu = k * spacing;
      rbf(static_cast<Index>(e), k) =
          static_cast<S>(std::exp(-cfg.rbf_gamma * (dist[e] - mu) * (dist[e] - mu)));
    }

  TensorT<S> h = embedding_lookup(ws.param(p + ".embed"), detail::element_ids(mol));
  TensorT<S> rbf_c = ws.constant(std::move(rbf));
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = p + ".layer" + std::to_string(l);
    if (src.empty()) continue;  // no pairs within cutoff: h' = h exactly
    TensorT<S> filt = nn::mlp2(ws, lp + ".filter", rbf_c,
                               [](const TensorT<S>& x) { return gelu(x); });
    TensorT<S> wh = matmul(h, ws.param(lp + ".w2"));
    TensorT<S> messages = mul(gather_rows(wh, src), filt);
    h = add(h, segment_sum(messages, dst, n));
  }
  TensorT<S> coords = ws.constant(conf.coords.template cast<S>());
  return {h, mean_rows(h), coords};
}

// --------------------------------------------------------------------------
// EGNN layer over the complete graph:
//   m_ij = phi_e(h_i + h_j + |x_i - x_j|^2)
//   x_i' = x_i + (1 / (n - 1)) sum_j (x_i - x_j) phi_x(m_ij)
//   h_i' = phi_h(h_i + sum_j m_ij)
// phi_* are two-layer MLPs. Feature outputs depend on distances only; the
// coordinate stream is E(3)-equivariant.
// --------------------------------------------------------------------------

template <typename S>
void init_egnn(ParamStore<S>& store, const std::string& p, const Encoder3dConfig& cfg, Rng& rng) {
  store.normal(p + ".embed", chem::MolGraph::kNumElements, cfg.dim, 0.5, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = p + ".layer" + std::to_string(l);
    nn::init_mlp2(store, lp + ".phi_e", 2 * cfg.dim + 1, cfg.dim, cfg.dim, rng);
    nn::init_mlp2(store, lp + ".phi_x", cfg.dim, cfg.dim, 1, rng);
    nn::init_mlp2(store, lp + ".phi_h", 2 * cfg.dim, cfg.dim, cfg.dim, rng);
  }
}

template <typename S>
Encoder3dOutput<S> egnn_encode(Workspace<S>& ws, const std::string& p, const Molecule& mol,
                               const Conformer& conf, const Encoder3dConfig& cfg) {
  if (conf.num_atoms() != mol.num_atoms())
    fail_validation("egnn: conformer has ", conf.num_atoms(), " atoms but molecule has ",
                    mol.num_atoms());
  const Index n = mol.num_atoms();
  std::vector<int> src, dst, flat;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      src.push_back(static_cast<int>(i));
      dst.push_back(static_cast<int>(j));
      flat.push_back(static_cast<int>(i * n + j));
    }

  TensorT<S> h = embedding_lookup(ws.param(p + ".embed"), detail::element_ids(mol));
  TensorT<S> x = ws.constant(conf.coords.template cast<S>());
  TensorT<S> ones_row = ws.constant(MatX<S>::Ones(1, n));
  TensorT<S> ones_col = ws.constant(MatX<S>::Ones(n, 1));
  const double inv_nm1 = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;

  auto act = [](const TensorT<S>& t) { return gelu(t); };
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = p + ".layer" + std::to_string(l);
    if (src.empty()) {
      h = nn::mlp2(ws, lp + ".phi_h",
                   concat_cols(h, ws.constant(MatX<S>::Zero(n, cfg.dim))), act);
      continue;
    }
    // Pairwise squared distances of the current coordinates.
    TensorT<S> sq = sum_axis(mul(x, x), 1);  // n x 1
    TensorT<S> d2 = add(add(matmul(sq, ones_row), matmul(ones_col, transpose(sq))),
                        scale(matmul(x, transpose(x)), -2.0));
    TensorT<S> d2_edge = gather_rows(reshape(d2, n * n, 1), flat);

    TensorT<S> m_in = concat_cols(concat_cols(gather_rows(h, src), gather_rows(h, dst)), d2_edge);
    TensorT<S> m = nn::mlp2(ws, lp + ".phi_e", m_in, act);
    TensorT<S> w = nn::mlp2(ws, lp + ".phi_x", m, act);  // E x 1
    TensorT<S> xd = sub(gather_rows(x, src), gather_rows(x, dst));
    x = add(x, scale(segment_sum(mul_colvec(xd, w), src, n), inv_nm1));
    h = nn::mlp2(ws, lp + ".phi_h", concat_cols(h, segment_sum(m, src, n)), act);
  }
  return {h, mean_rows(h), x};
}

// --------------------------------------------------------------------------
// Registry dispatch. "unimol" with unimol_stub resolves to the SchNet
// backbone followed by the attention re-aggregation head; the real
// pretrained Uni-Mol is out of scope and errors with a pointer to the
// extension interface.
// --------------------------------------------------------------------------

template <typename S>
void init_encoder3d(const std::string& name, ParamStore<S>& store, const std::string& prefix,
                    const Encoder3dConfig& cfg, Rng& rng) {
  if (name == "schnet") return init_schnet(store, prefix, cfg, rng);
  if (name == "egnn") return init_egnn(store, prefix, cfg, rng);
  if (name == "unimol" && cfg.unimol_stub) {
    init_schnet(store, prefix + ".schnet", cfg, rng);
    init_attn_reaggregate(store, prefix + ".attn", cfg.dim, rng);
    return;
  }
  if (is_registered_3d(name)) throw_unimplemented_3d(name);
  throw_unknown_3d(name);
}

template <typename S>
Encoder3dOutput<S> encode3d(const std::string& name, Workspace<S>& ws, const std::string& prefix,
                            const Molecule& mol, const Conformer& conf,
                            const Encoder3dConfig& cfg) {
  if (name == "schnet") return schnet_encode(ws, prefix, mol, conf, cfg);
  if (name == "egnn") return egnn_encode(ws, prefix, mol, conf, cfg);
  if (name == "unimol" && cfg.unimol_stub) {
    Encoder3dOutput<S> base = schnet_encode(ws, prefix + ".schnet", mol, conf, cfg);
    EncoderOutput<S> re = attn_reaggregate(ws, prefix + ".attn", base.atom_tokens);
    return {re.atom_tokens, re.pooled, base.coords};
  }
  if (is_registered_3d(name)) throw_unimplemented_3d(name);
  throw_unknown_3d(name);
}

}  // namespace molrel::enc3d

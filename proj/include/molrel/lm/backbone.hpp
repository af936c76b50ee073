#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "molrel/lm/tokenizer.hpp"
#include "molrel/nn/layers.hpp"

namespace molrel::lm {

// --------------------------------------------------------------------------
// Presets: the seven backbone names, desk-scaled. Gated presets use
// gate/up/down MLP projections, plain presets fc1/fc2. The LoRA target
// list is the preset default; a config may narrow it.
// --------------------------------------------------------------------------

enum class MlpKind { gated, plain };

struct BackbonePreset {
  std::string name;
  int layers = 4;
  int d_model = 128;
  int heads = 4;
  int context = 256;
  MlpKind mlp = MlpKind::plain;
  std::vector<std::string> lora_targets;
};

inline const std::vector<BackbonePreset>& backbone_presets() {
  static const std::vector<std::string> gated_targets = {
      "q_proj", "k_proj", "v_proj", "o_proj", "gate_proj", "up_proj", "down_proj"};
  static const std::vector<std::string> plain_targets = {"q_proj", "v_proj", "out_proj", "fc1",
                                                         "fc2"};
  static const std::vector<BackbonePreset> presets = {
      {"DeepSeek-1.5B", 4, 128, 4, 256, MlpKind::gated, gated_targets},
      {"DeepSeek-7B", 6, 192, 6, 256, MlpKind::gated, gated_targets},
      {"DeepSeek-14B", 8, 256, 8, 256, MlpKind::gated, gated_targets},
      {"LLaMA-1B", 4, 128, 4, 256, MlpKind::plain, plain_targets},
      {"LLaMA-13B", 8, 256, 8, 256, MlpKind::plain, plain_targets},
      {"Galactica-1.3B", 4, 128, 4, 256, MlpKind::plain, plain_targets},
      {"Galactica-6.7B", 6, 192, 6, 256, MlpKind::plain, plain_targets},
  };
  return presets;
}

inline const BackbonePreset& preset_by_name(const std::string& name) {
  for (const auto& p : backbone_presets())
    if (p.name == name) return p;
  std::string all;
  for (const auto& p : backbone_presets()) all += (all.empty() ? "" : ", ") + p.name;
  fail_validation("UnknownBackbone: '", name, "'; valid names: ", all);
}

// The attention output projection carries the preset family's name.
inline std::string attn_out_name(const BackbonePreset& p) {
  return p.mlp == MlpKind::gated ? "o_proj" : "out_proj";
}

struct LoraConfig {
  bool enabled = false;
  int r = 16;
  double alpha = 32.0;
  double dropout = 0.1;
  std::vector<std::string> target_modules;  // empty: preset defaults
  double scaling() const { return alpha / static_cast<double>(r); }
};

// Targets actually adapted: the preset's modules intersected with the
// config's list when one is given.
inline std::vector<std::string> effective_lora_targets(const BackbonePreset& preset,
                                                       const LoraConfig& cfg) {
  if (cfg.target_modules.empty()) return preset.lora_targets;
  std::vector<std::string> out;
  for (const std::string& t : cfg.target_modules)
    if (std::find(preset.lora_targets.begin(), preset.lora_targets.end(), t) !=
        preset.lora_targets.end())
      out.push_back(t);
  return out;
}

// --------------------------------------------------------------------------
// Parameter layout
// --------------------------------------------------------------------------

namespace detail {

// (module name, in, out) for every LoRA-targetable linear in one layer.
inline std::vector<std::tuple<std::string, int, int>> layer_linears(const BackbonePreset& p) {
  const int d = p.d_model, ffn = 4 * p.d_model;
  std::vector<std::tuple<std::string, int, int>> out = {
      {"q_proj", d, d}, {"k_proj", d, d}, {"v_proj", d, d}, {attn_out_name(p), d, d}};
  if (p.mlp == MlpKind::gated) {
    out.emplace_back("gate_proj", d, ffn);
    out.emplace_back("up_proj", d, ffn);
    out.emplace_back("down_proj", ffn, d);
  } else {
    out.emplace_back("fc1", d, ffn);
    out.emplace_back("fc2", ffn, d);
  }
  return out;
}

}  // namespace detail

template <typename S>
void init_backbone(ParamStore<S>& store, const BackbonePreset& p, Rng& rng) {
  store.normal("lm.embed", kVocabSize, p.d_model, 0.02, rng);
  store.normal("lm.pos", p.context, p.d_model, 0.01, rng);
  for (int l = 0; l < p.layers; ++l) {
    std::string lp = "lm.layer" + std::to_string(l);
    nn::init_layer_norm(store, lp + ".ln1", p.d_model);
    nn::init_layer_norm(store, lp + ".ln2", p.d_model);
    for (const auto& [name, in, out] : detail::layer_linears(p))
      store.normal(lp + "." + name, in, out, 0.02, rng);
  }
  nn::init_layer_norm(store, "lm.final_ln", p.d_model);
  store.normal("lm.lm_head", p.d_model, kVocabSize, 0.02, rng);
}

// Adapter pairs: down is Gaussian, up starts at zero so the initial delta
// vanishes and base logits are untouched.
template <typename S>
void init_lora(ParamStore<S>& store, const BackbonePreset& p, const LoraConfig& cfg, Rng& rng) {
  if (!cfg.enabled) return;
  if (cfg.r <= 0) fail_validation("lora: rank must be positive, got ", cfg.r);
  auto targets = effective_lora_targets(p, cfg);
  for (int l = 0; l < p.layers; ++l) {
    std::string lp = "lm.layer" + std::to_string(l);
    for (const auto& [name, in, out] : detail::layer_linears(p)) {
      if (std::find(targets.begin(), targets.end(), name) == targets.end()) continue;
      store.normal("lora.layer" + std::to_string(l) + "." + name + ".down", in, cfg.r, 0.02, rng);
      store.zeros("lora.layer" + std::to_string(l) + "." + name + ".up", cfg.r, out,
                  ParamKind::matrix);
    }
  }
}

// Freeze every base backbone weight; adapters and non-backbone modules stay
// trainable.
template <typename S>
size_t freeze_base_backbone(ParamStore<S>& store) {
  return store.set_trainable("lm.", false);
}

// W <- W + scaling * down * up for every adapted linear; returns a store
// without adapter entries.
template <typename S>
ParamStore<S> merge_lora(const ParamStore<S>& store, const BackbonePreset& p,
                         const LoraConfig& cfg) {
  ParamStore<S> out;
  for (const auto& e : store.entries()) {
    if (e.name.rfind("lora.", 0) == 0) continue;
    out.create(e.name, e.value, e.kind);
    out.at(e.name).trainable = e.trainable;
  }
  if (!cfg.enabled) return out;
  for (int l = 0; l < p.layers; ++l) {
    for (const auto& [name, in, o] : detail::layer_linears(p)) {
      std::string down = "lora.layer" + std::to_string(l) + "." + name + ".down";
      std::string up = "lora.layer" + std::to_string(l) + "." + name + ".up";
      if (!store.contains(down)) continue;
      out.value("lm.layer" + std::to_string(l) + "." + name) +=
          static_cast<S>(cfg.scaling()) * (store.at(down).value * store.at(up).value);
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Forward
// --------------------------------------------------------------------------

// One aligned block of embeddings injected at consecutive placeholder
// positions: rows() consecutive tokens starting at `position`.
template <typename S>
struct InjectedBlock {
  int position = 0;
  TensorT<S> embeddings;  // k x d_model
};

namespace detail {

template <typename S>
TensorT<S> lora_linear(Workspace<S>& ws, const std::string& base, const std::string& adapter,
                       const TensorT<S>& x, const LoraConfig& cfg) {
  TensorT<S> y = matmul(x, ws.param(base));
  if (cfg.enabled && ws.store().contains(adapter + ".down")) {
    TensorT<S> xd = dropout(x, cfg.dropout, ws.training(), ws.rng());
    y = add(y, scale(matmul(matmul(xd, ws.param(adapter + ".down")), ws.param(adapter + ".up")),
                     cfg.scaling()));
  }
  return y;
}

}  // namespace detail

// Pre-norm decoder-only transformer with a causal mask. Placeholder
// positions are replaced by injected embeddings at the embedding layer.
// Returns logits (len x vocab).
template <typename S>
TensorT<S> backbone_forward(Workspace<S>& ws, const BackbonePreset& p,
                            const std::vector<int>& ids,
                            const std::vector<InjectedBlock<S>>& injected,
                            const LoraConfig& lora) {
  const Index len = static_cast<Index>(ids.size());
  if (len == 0) fail_validation("backbone: empty input");
  if (len > p.context)
    fail_validation("backbone: context overflow, ", len, " tokens > context ", p.context);

  // Zero the embedding rows being replaced, then add the injected blocks
  // through a constant selection matrix (keeps gradients flowing into the
  // injected embeddings).
  MatX<S> keep = MatX<S>::Ones(len, 1);
  Index total_injected = 0;
  for (const auto& block : injected) total_injected += block.embeddings.rows();
  MatX<S> select = MatX<S>::Zero(len, std::max<Index>(total_injected, 1));
  Index col = 0;
  for (const auto& block : injected) {
    if (block.embeddings.cols() != p.d_model)
      fail_validation("backbone: injected width ", block.embeddings.cols(), " != d_model ",
                      p.d_model);
    for (Index k = 0; k < block.embeddings.rows(); ++k) {
      Index pos = block.position + k;
      if (pos < 0 || pos >= len)
        fail_validation("backbone: injection position ", pos, " outside sequence of ", len);
      if (!is_mol_placeholder(ids[static_cast<size_t>(pos)]))
        fail_validation("backbone: injection at position ", pos,
                        " which holds a non-placeholder token");
      keep(pos, 0) = S(0);
      select(pos, col + k) = S(1);
    }
    col += block.embeddings.rows();
  }

  TensorT<S> h = mul_colvec(embedding_lookup(ws.param("lm.embed"), ids), ws.constant(keep));
  if (total_injected > 0) {
    TensorT<S> stacked;
    bool first = true;
    for (const auto& block : injected) {
      stacked = first ? block.embeddings : concat_rows(stacked, block.embeddings);
      first = false;
    }
    h = add(h, matmul(ws.constant(select), stacked));
  }
  h = add(h, slice_rows(ws.param("lm.pos"), 0, len));

  // Strictly-upper-triangular additive mask.
  MatX<S> causal = MatX<S>::Zero(len, len);
  for (Index i = 0; i < len; ++i)
    for (Index j = i + 1; j < len; ++j) causal(i, j) = S(-1e9);
  TensorT<S> mask = ws.constant(std::move(causal));

  const int dh = p.d_model / p.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < p.layers; ++l) {
    std::string lp = "lm.layer" + std::to_string(l);
    std::string ap = "lora.layer" + std::to_string(l);
    TensorT<S> x = nn::apply_layer_norm(ws, lp + ".ln1", h);
    TensorT<S> q = detail::lora_linear(ws, lp + ".q_proj", ap + ".q_proj", x, lora);
    TensorT<S> k = detail::lora_linear(ws, lp + ".k_proj", ap + ".k_proj", x, lora);
    TensorT<S> v = detail::lora_linear(ws, lp + ".v_proj", ap + ".v_proj", x, lora);
    TensorT<S> heads_out;
    for (int hd = 0; hd < p.heads; ++hd) {
      TensorT<S> qh = slice(q, 0, len, hd * dh, dh);
      TensorT<S> kh = slice(k, 0, len, hd * dh, dh);
      TensorT<S> vh = slice(v, 0, len, hd * dh, dh);
      TensorT<S> scores = add(scale(matmul(qh, transpose(kh)), inv_sqrt_dh), mask);
      TensorT<S> out = matmul(softmax_rows(scores), vh);
      heads_out = hd == 0 ? out : concat_cols(heads_out, out);
    }
    std::string oname = attn_out_name(p);
    h = add(h, detail::lora_linear(ws, lp + "." + oname, ap + "." + oname, heads_out, lora));

    TensorT<S> y = nn::apply_layer_norm(ws, lp + ".ln2", h);
    TensorT<S> m;
    if (p.mlp == MlpKind::gated) {
      TensorT<S> gate = gelu(detail::lora_linear(ws, lp + ".gate_proj", ap + ".gate_proj", y, lora));
      TensorT<S> up = detail::lora_linear(ws, lp + ".up_proj", ap + ".up_proj", y, lora);
      m = detail::lora_linear(ws, lp + ".down_proj", ap + ".down_proj", mul(gate, up), lora);
    } else {
      TensorT<S> mid = gelu(detail::lora_linear(ws, lp + ".fc1", ap + ".fc1", y, lora));
      m = detail::lora_linear(ws, lp + ".fc2", ap + ".fc2", mid, lora);
    }
    h = add(h, m);
  }
  h = nn::apply_layer_norm(ws, "lm.final_ln", h);
  return matmul(h, ws.param("lm.lm_head"));  // len x vocab
}

// --------------------------------------------------------------------------
// Inference
// --------------------------------------------------------------------------

// Greedy decoding; eos is suppressed until min_len new tokens have been
// emitted; halts at eos or after max_len new tokens. Deterministic.
template <typename S>
std::string generate(ParamStore<S>& store, const BackbonePreset& p, std::vector<int> ids,
                     const std::vector<InjectedBlock<S>>& injected, int min_len, int max_len,
                     const LoraConfig& lora) {
  if (static_cast<Index>(ids.size()) + max_len > p.context)
    fail_validation("generate: context overflow, prompt ", ids.size(), " + max_len ", max_len,
                    " > context ", p.context);
  std::vector<int> emitted;
  for (int step = 0; step < max_len; ++step) {
    Tape<S> tape;
    Workspace<S> ws(tape, store, /*training=*/false, /*rng_seed=*/0);
    TensorT<S> logits = backbone_forward(ws, p, ids, injected, lora);
    Index last = logits.rows() - 1;
    int best = -1;
    S best_val = std::numeric_limits<S>::lowest();
    for (int tok = 0; tok < kVocabSize; ++tok) {
      if (tok == kEosId && static_cast<int>(emitted.size()) < min_len) continue;
      if (tok == kPadId || is_mol_placeholder(tok) || tok == kBosId) continue;
      if (logits.v(last, tok) > best_val) {
        best_val = logits.v(last, tok);
        best = tok;
      }
    }
    if (best == kEosId) break;
    emitted.push_back(best);
    ids.push_back(best);
  }
  return detokenize(emitted);
}

// Length-normalized two-choice score:
//   s = exp(L+) / (exp(L+) + exp(L-))
// where L(+/-) is the mean token log-likelihood of each continuation after
// the shared prompt.
template <typename S>
double two_choice_score(ParamStore<S>& store, const BackbonePreset& p,
                        const std::vector<int>& prompt_ids,
                        const std::vector<InjectedBlock<S>>& injected,
                        const std::string& positive, const std::string& negative,
                        const LoraConfig& lora) {
  auto mean_loglik = [&](const std::string& continuation) -> double {
    std::vector<int> cont = tokenize(continuation);
    if (cont.empty()) fail_validation("two_choice_score: empty continuation");
    std::vector<int> ids = prompt_ids;
    ids.insert(ids.end(), cont.begin(), cont.end());
    Tape<S> tape;
    Workspace<S> ws(tape, store, false, 0);
    TensorT<S> logits = backbone_forward(ws, p, ids, injected, lora);
    TensorT<S> logp = log_softmax(logits);
    double total = 0.0;
    const Index prompt_len = static_cast<Index>(prompt_ids.size());
    for (size_t k = 0; k < cont.size(); ++k) {
      Index predict_from = prompt_len + static_cast<Index>(k) - 1;
      total += static_cast<double>(logp.v(predict_from, cont[k]));
    }
    return total / static_cast<double>(cont.size());
  };
  double lp = mean_loglik(positive);
  double ln = mean_loglik(negative);
  return 1.0 / (1.0 + std::exp(ln - lp));
}

}  // namespace molrel::lm

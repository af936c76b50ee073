#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "molrel/core/rng.hpp"
#include "molrel/tensor/params.hpp"
#include "molrel/tensor/tape.hpp"

namespace molrel {

// Per-forward context: binds a parameter store to a tape. Each parameter
// becomes one leaf node no matter how many times it is used, so gradients
// from shared weights accumulate correctly.
template <typename S>
class Workspace {
 public:
  Workspace(Tape<S>& tape, ParamStore<S>& store, bool training, uint64_t rng_seed)
      : tape_(tape), store_(store), training_(training), rng_(rng_seed) {}

  TensorT<S> param(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) {
      TensorT<S> t(store_.value(name));
      t.tape = &tape_;
      t.node = it->second;
      return t;
    }
    TensorT<S> leaf = tape_.leaf(store_.value(name));
    cache_[name] = leaf.node;
    touched_.emplace_back(name, leaf.node);
    return leaf;
  }

  TensorT<S> constant(MatX<S> m) const { return molrel::constant<S>(std::move(m)); }

  Tape<S>& tape() { return tape_; }
  ParamStore<S>& store() { return store_; }
  bool training() const { return training_; }
  Rng& rng() { return rng_; }

  // (parameter name, leaf node) pairs in first-use order.
  const std::vector<std::pair<std::string, int>>& touched() const { return touched_; }

  // Gradients for every touched parameter that received one, keyed by name.
  std::unordered_map<std::string, MatX<S>> grads() const {
    std::unordered_map<std::string, MatX<S>> out;
    for (const auto& [name, node] : touched_)
      if (tape_.has_grad(node)) out[name] = tape_.grad(node);
    return out;
  }

 private:
  Tape<S>& tape_;
  ParamStore<S>& store_;
  bool training_;
  Rng rng_;
  std::unordered_map<std::string, int> cache_;
  std::vector<std::pair<std::string, int>> touched_;
};

}  // namespace molrel

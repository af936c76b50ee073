#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "molrel/core/error.hpp"
#include "molrel/core/rng.hpp"
#include "molrel/core/types.hpp"

namespace molrel {

// Weight-decay classification: AdamW decays matrix weights only.
enum class ParamKind { matrix, bias, norm };

// Named, ordered parameter container. Creation order is the iteration order,
// which makes optimizer sweeps and checkpoints deterministic.
template <typename S>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    MatX<S> value;
    ParamKind kind;
    bool trainable = true;
  };

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  MatX<S>& create(const std::string& name, MatX<S> value, ParamKind kind) {
    if (contains(name)) fail_runtime("ParamStore: duplicate parameter '", name, "'");
    index_[name] = entries_.size();
    entries_.push_back(Entry{name, std::move(value), kind, true});
    return entries_.back().value;
  }

  MatX<S>& zeros(const std::string& name, Index r, Index c, ParamKind kind) {
    return create(name, MatX<S>::Zero(r, c), kind);
  }

  MatX<S>& ones(const std::string& name, Index r, Index c, ParamKind kind) {
    return create(name, MatX<S>::Ones(r, c), kind);
  }

  // Xavier-uniform, the default for weight matrices.
  MatX<S>& xavier(const std::string& name, Index r, Index c, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(r + c));
    MatX<S> m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = static_cast<S>(rng.uniform(-bound, bound));
    return create(name, std::move(m), ParamKind::matrix);
  }

  MatX<S>& normal(const std::string& name, Index r, Index c, double stddev, Rng& rng,
                  ParamKind kind = ParamKind::matrix) {
    MatX<S> m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = static_cast<S>(rng.normal(0.0, stddev));
    return create(name, std::move(m), kind);
  }

  Entry& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) fail_runtime("ParamStore: unknown parameter '", name, "'");
    return entries_[it->second];
  }
  const Entry& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail_runtime("ParamStore: unknown parameter '", name, "'");
    return entries_[it->second];
  }

  MatX<S>& value(const std::string& name) { return at(name).value; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  size_t num_scalars() const {
    size_t n = 0;
    for (const Entry& e : entries_) n += static_cast<size_t>(e.value.size());
    return n;
  }

  // Freeze / unfreeze by name prefix; returns how many entries matched.
  size_t set_trainable(const std::string& prefix, bool trainable) {
    size_t n = 0;
    for (Entry& e : entries_)
      if (e.name.rfind(prefix, 0) == 0) {
        e.trainable = trainable;
        ++n;
      }
    return n;
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const Entry& e : entries_) {
      out.create(e.name, e.value.template cast<T>(), e.kind);
      out.at(e.name).trainable = e.trainable;
    }
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace molrel

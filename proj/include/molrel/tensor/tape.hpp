#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <utility>
#include <vector>

#include "molrel/core/error.hpp"
#include "molrel/core/types.hpp"

namespace molrel {

// When on, every op verifies its output is finite. Cheap at desk scale and
// catches divergence at the op that produced it.
inline std::atomic<bool>& debug_checks_flag() {
  static std::atomic<bool> flag{true};
  return flag;
}
inline void set_debug_checks(bool on) { debug_checks_flag().store(on); }
inline bool debug_checks() { return debug_checks_flag().load(); }

template <typename S>
class Tape;

// Value plus an optional reference into the tape that recorded it.
// node < 0 means constant (no gradient flows through it).
template <typename S>
struct TensorT {
  MatX<S> v;
  Tape<S>* tape = nullptr;
  int node = -1;

  TensorT() = default;
  explicit TensorT(MatX<S> value) : v(std::move(value)) {}

  Index rows() const { return v.rows(); }
  Index cols() const { return v.cols(); }
  Index size() const { return v.size(); }
  bool on_tape() const { return node >= 0; }
};

using Tensor = TensorT<float>;
using Tensord = TensorT<double>;

template <typename S>
TensorT<S> constant(MatX<S> m) {
  return TensorT<S>(std::move(m));
}

// Accepts any Eigen expression.
template <typename Derived>
TensorT<typename Derived::Scalar> constant(const Eigen::MatrixBase<Derived>& m) {
  using S = typename Derived::Scalar;
  return TensorT<S>(MatX<S>(m));
}

// Reverse-mode tape. Nodes are recorded in forward order; backward visits
// them once in reverse. Confined to one logical thread.
template <typename S>
class Tape {
 public:
  using Mat = MatX<S>;
  using BackFn = std::function<void(Tape&, const Mat&)>;

  TensorT<S> leaf(Mat value) {
    TensorT<S> t(std::move(value));
    t.tape = this;
    t.node = record({}, nullptr);
    return t;
  }

  int record(std::array<int, 3> parents, BackFn back) {
    nodes_.push_back(Node{parents, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void accumulate(int node, const Mat& g) {
    if (node < 0) return;
    Mat& slot = grads_[static_cast<size_t>(node)];
    if (slot.size() == 0) {
      slot = g;
    } else {
      slot += g;
    }
  }

  void backward(const TensorT<S>& loss) {
    if (consumed_) fail_runtime("backward: tape already consumed");
    if (loss.tape != this || !loss.on_tape())
      fail_runtime("backward: loss is not recorded on this tape");
    if (loss.rows() != 1 || loss.cols() != 1)
      fail_runtime("backward: loss must be scalar, got ", loss.rows(), "x", loss.cols());
    consumed_ = true;
    grads_.assign(nodes_.size(), Mat());
    grads_[static_cast<size_t>(loss.node)] = Mat::Ones(1, 1);
    for (int i = loss.node; i >= 0; --i) {
      const Node& n = nodes_[static_cast<size_t>(i)];
      const Mat& g = grads_[static_cast<size_t>(i)];
      if (g.size() == 0 || !n.back) continue;
      n.back(*this, g);
    }
  }

  bool has_grad(int node) const {
    return node >= 0 && static_cast<size_t>(node) < grads_.size() &&
           grads_[static_cast<size_t>(node)].size() > 0;
  }

  const Mat& grad(int node) const {
    if (!has_grad(node)) fail_runtime("grad: node ", node, " has no gradient");
    return grads_[static_cast<size_t>(node)];
  }

  size_t num_nodes() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  void reset() {
    nodes_.clear();
    grads_.clear();
    consumed_ = false;
  }

 private:
  struct Node {
    std::array<int, 3> parents;
    BackFn back;
  };
  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
  bool consumed_ = false;
};

namespace detail {

template <typename S>
Tape<S>* tape_of(const TensorT<S>& a) {
  return a.on_tape() ? a.tape : nullptr;
}

template <typename S>
Tape<S>* tape_of(const TensorT<S>& a, const TensorT<S>& b) {
  Tape<S>* ta = tape_of(a);
  Tape<S>* tb = tape_of(b);
  if (ta && tb && ta != tb) fail_runtime("op: operands recorded on different tapes");
  return ta ? ta : tb;
}

template <typename S>
void check_finite(const char* op, const MatX<S>& m) {
  if (!debug_checks()) return;
  if (!m.allFinite()) fail_runtime(op, ": non-finite output");
}

}  // namespace detail

}  // namespace molrel

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "molrel/core/rng.hpp"
#include "molrel/tensor/tape.hpp"

namespace molrel {

namespace detail {

inline std::string shape_str(Index r, Index c) {
  return concat(r, "x", c);
}

template <typename S>
void check_same_shape(const char* op, const TensorT<S>& a, const TensorT<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail_runtime(op, ": shape mismatch ", shape_str(a.rows(), a.cols()), " vs ",
                 shape_str(b.rows(), b.cols()));
}

template <typename S, typename Fn>
TensorT<S> make_unary(const char* op, const TensorT<S>& a, MatX<S> value, Fn&& back) {
  check_finite(op, value);
  TensorT<S> out(std::move(value));
  if (Tape<S>* t = tape_of(a)) {
    out.tape = t;
    out.node = t->record({a.node, -1, -1}, std::forward<Fn>(back));
  }
  return out;
}

template <typename S, typename Fn>
TensorT<S> make_binary(const char* op, const TensorT<S>& a, const TensorT<S>& b, MatX<S> value,
                       Fn&& back) {
  check_finite(op, value);
  TensorT<S> out(std::move(value));
  if (Tape<S>* t = tape_of(a, b)) {
    out.tape = t;
    out.node = t->record({a.node, b.node, -1}, std::forward<Fn>(back));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check_same_shape("add", a, b);
  int pa = a.node, pb = b.node;
  return detail::make_binary("add", a, b, MatX<S>(a.v + b.v),
                             [pa, pb](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, g);
                               t.accumulate(pb, g);
                             });
}

template <typename S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check_same_shape("sub", a, b);
  int pa = a.node, pb = b.node;
  return detail::make_binary("sub", a, b, MatX<S>(a.v - b.v),
                             [pa, pb](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, g);
                               t.accumulate(pb, MatX<S>(-g));
                             });
}

template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check_same_shape("mul", a, b);
  int pa = a.node, pb = b.node;
  return detail::make_binary("mul", a, b, MatX<S>(a.v.cwiseProduct(b.v)),
                             [pa, pb, av = a.v, bv = b.v](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, MatX<S>(g.cwiseProduct(bv)));
                               t.accumulate(pb, MatX<S>(g.cwiseProduct(av)));
                             });
}

template <typename S>
TensorT<S> scale(const TensorT<S>& a, double k) {
  int pa = a.node;
  S ks = static_cast<S>(k);
  return detail::make_unary("scale", a, MatX<S>(a.v * ks),
                            [pa, ks](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>(g * ks));
                            });
}

template <typename S>
TensorT<S> add_scalar(const TensorT<S>& a, double k) {
  int pa = a.node;
  return detail::make_unary("add_scalar", a, MatX<S>(a.v.array() + static_cast<S>(k)),
                            [pa](Tape<S>& t, const MatX<S>& g) { t.accumulate(pa, g); });
}

// a (n x c) + row vector (1 x c), broadcast over rows. The bias-add.
template <typename S>
TensorT<S> add_rowvec(const TensorT<S>& a, const TensorT<S>& r) {
  if (r.rows() != 1 || r.cols() != a.cols())
    fail_runtime("add_rowvec: expected 1x", a.cols(), " row vector, got ",
                 detail::shape_str(r.rows(), r.cols()));
  int pa = a.node, pr = r.node;
  MatX<S> out = a.v.rowwise() + r.v.row(0);
  return detail::make_binary("add_rowvec", a, r, std::move(out),
                             [pa, pr](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, g);
                               t.accumulate(pr, MatX<S>(g.colwise().sum()));
                             });
}

// a (n x c) * col vector (n x 1), broadcast over columns.
template <typename S>
TensorT<S> mul_colvec(const TensorT<S>& a, const TensorT<S>& c) {
  if (c.cols() != 1 || c.rows() != a.rows())
    fail_runtime("mul_colvec: expected ", a.rows(), "x1 column vector, got ",
                 detail::shape_str(c.rows(), c.cols()));
  int pa = a.node, pc = c.node;
  MatX<S> out = a.v.array().colwise() * c.v.col(0).array();
  return detail::make_binary("mul_colvec", a, c, std::move(out),
                             [pa, pc, av = a.v, cv = c.v](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, MatX<S>(g.array().colwise() * cv.col(0).array()));
                               t.accumulate(pc, MatX<S>(g.cwiseProduct(av).rowwise().sum()));
                             });
}

// ---------------------------------------------------------------------------
// Linear algebra / structure
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
  if (a.cols() != b.rows())
    fail_runtime("matmul: shape mismatch ", detail::shape_str(a.rows(), a.cols()), " * ",
                 detail::shape_str(b.rows(), b.cols()));
  int pa = a.node, pb = b.node;
  return detail::make_binary("matmul", a, b, MatX<S>(a.v * b.v),
                             [pa, pb, av = a.v, bv = b.v](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, MatX<S>(g * bv.transpose()));
                               t.accumulate(pb, MatX<S>(av.transpose() * g));
                             });
}

template <typename S>
TensorT<S> transpose(const TensorT<S>& a) {
  int pa = a.node;
  return detail::make_unary("transpose", a, MatX<S>(a.v.transpose()),
                            [pa](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>(g.transpose()));
                            });
}

// Row-major reshape: a flat memory view with new dimensions.
template <typename S>
TensorT<S> reshape(const TensorT<S>& a, Index rows, Index cols) {
  if (rows * cols != a.size())
    fail_runtime("reshape: cannot view ", detail::shape_str(a.rows(), a.cols()), " as ",
                 detail::shape_str(rows, cols));
  int pa = a.node;
  Index ar = a.rows(), ac = a.cols();
  MatX<S> out = Eigen::Map<const MatX<S>>(a.v.data(), rows, cols);
  return detail::make_unary("reshape", a, std::move(out),
                            [pa, ar, ac](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>(Eigen::Map<const MatX<S>>(g.data(), ar, ac)));
                            });
}

template <typename S>
TensorT<S> concat_rows(const TensorT<S>& a, const TensorT<S>& b) {
  if (a.cols() != b.cols())
    fail_runtime("concat_rows: column mismatch ", a.cols(), " vs ", b.cols());
  MatX<S> out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a.v;
  out.bottomRows(b.rows()) = b.v;
  int pa = a.node, pb = b.node;
  Index na = a.rows(), nb = b.rows();
  return detail::make_binary("concat_rows", a, b, std::move(out),
                             [pa, pb, na, nb](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, MatX<S>(g.topRows(na)));
                               t.accumulate(pb, MatX<S>(g.bottomRows(nb)));
                             });
}

template <typename S>
TensorT<S> concat_cols(const TensorT<S>& a, const TensorT<S>& b) {
  if (a.rows() != b.rows())
    fail_runtime("concat_cols: row mismatch ", a.rows(), " vs ", b.rows());
  MatX<S> out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a.v;
  out.rightCols(b.cols()) = b.v;
  int pa = a.node, pb = b.node;
  Index ca = a.cols(), cb = b.cols();
  return detail::make_binary("concat_cols", a, b, std::move(out),
                             [pa, pb, ca, cb](Tape<S>& t, const MatX<S>& g) {
                               t.accumulate(pa, MatX<S>(g.leftCols(ca)));
                               t.accumulate(pb, MatX<S>(g.rightCols(cb)));
                             });
}

template <typename S>
TensorT<S> slice(const TensorT<S>& a, Index r0, Index nr, Index c0, Index nc) {
  if (r0 < 0 || c0 < 0 || r0 + nr > a.rows() || c0 + nc > a.cols())
    fail_runtime("slice: block (", r0, ",", nr, ",", c0, ",", nc, ") out of ",
                 detail::shape_str(a.rows(), a.cols()));
  int pa = a.node;
  Index ar = a.rows(), ac = a.cols();
  return detail::make_unary("slice", a, MatX<S>(a.v.block(r0, c0, nr, nc)),
                            [pa, r0, c0, nr, nc, ar, ac](Tape<S>& t, const MatX<S>& g) {
                              MatX<S> ga = MatX<S>::Zero(ar, ac);
                              ga.block(r0, c0, nr, nc) = g;
                              t.accumulate(pa, ga);
                            });
}

template <typename S>
TensorT<S> slice_rows(const TensorT<S>& a, Index r0, Index nr) {
  return slice(a, r0, nr, 0, a.cols());
}

// out.row(k) = a.row(ids[k]); duplicate ids accumulate in the backward pass.
template <typename S>
TensorT<S> gather_rows(const TensorT<S>& a, std::vector<int> ids) {
  MatX<S> out(static_cast<Index>(ids.size()), a.cols());
  for (size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= a.rows())
      fail_runtime("gather_rows: index ", ids[k], " out of ", a.rows(), " rows");
    out.row(static_cast<Index>(k)) = a.v.row(ids[k]);
  }
  int pa = a.node;
  Index ar = a.rows(), ac = a.cols();
  return detail::make_unary("gather_rows", a, std::move(out),
                            [pa, ar, ac, ids = std::move(ids)](Tape<S>& t, const MatX<S>& g) {
                              MatX<S> ga = MatX<S>::Zero(ar, ac);
                              for (size_t k = 0; k < ids.size(); ++k)
                                ga.row(ids[k]) += g.row(static_cast<Index>(k));
                              t.accumulate(pa, ga);
                            });
}

// out.row(s) = sum of a.row(k) over k with ids[k] == s. The single
// message-passing aggregation primitive.
template <typename S>
TensorT<S> segment_sum(const TensorT<S>& a, std::vector<int> ids, Index num_segments) {
  if (static_cast<Index>(ids.size()) != a.rows())
    fail_runtime("segment_sum: ", ids.size(), " ids for ", a.rows(), " rows");
  MatX<S> out = MatX<S>::Zero(num_segments, a.cols());
  for (size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= num_segments)
      fail_runtime("segment_sum: segment id ", ids[k], " out of ", num_segments);
    out.row(ids[k]) += a.v.row(static_cast<Index>(k));
  }
  int pa = a.node;
  return detail::make_unary("segment_sum", a, std::move(out),
                            [pa, ids = std::move(ids), ac = a.cols()](Tape<S>& t, const MatX<S>& g) {
                              MatX<S> ga(static_cast<Index>(ids.size()), ac);
                              for (size_t k = 0; k < ids.size(); ++k)
                                ga.row(static_cast<Index>(k)) = g.row(ids[k]);
                              t.accumulate(pa, ga);
                            });
}

template <typename S>
TensorT<S> embedding_lookup(const TensorT<S>& table, const std::vector<int>& ids) {
  return gather_rows(table, ids);
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> relu(const TensorT<S>& a) {
  int pa = a.node;
  return detail::make_unary("relu", a, MatX<S>(a.v.cwiseMax(S(0))),
                            [pa, av = a.v](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>((av.array() > S(0)).template cast<S>() * g.array()));
                            });
}

template <typename S>
TensorT<S> leaky_relu(const TensorT<S>& a, double slope) {
  int pa = a.node;
  S sl = static_cast<S>(slope);
  MatX<S> out = a.v.array().max(a.v.array() * sl);
  return detail::make_unary("leaky_relu", a, std::move(out),
                            [pa, sl, av = a.v](Tape<S>& t, const MatX<S>& g) {
                              MatX<S> d = (av.array() > S(0)).select(MatX<S>::Ones(av.rows(), av.cols()),
                                                                     MatX<S>::Constant(av.rows(), av.cols(), sl));
                              t.accumulate(pa, MatX<S>(g.cwiseProduct(d)));
                            });
}

template <typename S>
TensorT<S> sigmoid(const TensorT<S>& a) {
  int pa = a.node;
  MatX<S> y = (S(1) / (S(1) + (-a.v.array()).exp())).matrix();
  return detail::make_unary("sigmoid", a, MatX<S>(y),
                            [pa, y](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>(g.array() * y.array() * (S(1) - y.array())));
                            });
}

template <typename S>
TensorT<S> tanh_act(const TensorT<S>& a) {
  int pa = a.node;
  MatX<S> y = a.v.array().tanh();
  return detail::make_unary("tanh", a, MatX<S>(y),
                            [pa, y](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>(g.array() * (S(1) - y.array().square())));
                            });
}

// Tanh approximation, fixed so checkpoints reproduce across implementations:
// gelu(x) = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
template <typename S>
TensorT<S> gelu(const TensorT<S>& a) {
  int pa = a.node;
  const S c = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
  const S k = static_cast<S>(0.044715);
  auto x = a.v.array();
  MatX<S> t_inner = (c * (x + k * x.cube())).tanh();
  MatX<S> out = (S(0.5) * x * (S(1) + t_inner.array())).matrix();
  return detail::make_unary("gelu", a, std::move(out),
                            [pa, c, k, av = a.v, t_inner](Tape<S>& t, const MatX<S>& g) {
                              auto x = av.array();
                              auto th = t_inner.array();
                              auto sech2 = S(1) - th.square();
                              auto d = S(0.5) * (S(1) + th) +
                                       S(0.5) * x * sech2 * c * (S(1) + S(3) * k * x.square());
                              t.accumulate(pa, MatX<S>(g.array() * d));
                            });
}

// ---------------------------------------------------------------------------
// Normalization / attention pieces
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> softmax_rows(const TensorT<S>& a) {
  MatX<S> y(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    auto row = a.v.row(i).array();
    auto shifted = (row - row.maxCoeff()).exp();
    y.row(i) = shifted / shifted.sum();
  }
  int pa = a.node;
  return detail::make_unary("softmax", a, MatX<S>(y),
                            [pa, y](Tape<S>& t, const MatX<S>& g) {
                              MatX<S> ga(y.rows(), y.cols());
                              for (Index i = 0; i < y.rows(); ++i) {
                                S dot = (g.row(i).array() * y.row(i).array()).sum();
                                ga.row(i) = y.row(i).array() * (g.row(i).array() - dot);
                              }
                              t.accumulate(pa, ga);
                            });
}

// axis = 1: across each row (default); axis = 0: across each column.
template <typename S>
TensorT<S> softmax(const TensorT<S>& a, int axis = 1) {
  if (axis == 1) return softmax_rows(a);
  if (axis == 0) return transpose(softmax_rows(transpose(a)));
  fail_runtime("softmax: axis must be 0 or 1, got ", axis);
}

template <typename S>
TensorT<S> log_softmax(const TensorT<S>& a) {
  MatX<S> y(a.rows(), a.cols());
  MatX<S> sm(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    auto row = a.v.row(i).array();
    S mx = row.maxCoeff();
    auto shifted = row - mx;
    S lse = std::log(shifted.exp().sum());
    y.row(i) = shifted - lse;
    sm.row(i) = (shifted - lse).exp();
  }
  int pa = a.node;
  return detail::make_unary("log_softmax", a, MatX<S>(y),
                            [pa, sm](Tape<S>& t, const MatX<S>& g) {
                              MatX<S> ga(sm.rows(), sm.cols());
                              for (Index i = 0; i < sm.rows(); ++i) {
                                S gsum = g.row(i).sum();
                                ga.row(i) = g.row(i).array() - gsum * sm.row(i).array();
                              }
                              t.accumulate(pa, ga);
                            });
}

// Row-wise layer norm with learned gain and bias (both 1 x c).
template <typename S>
TensorT<S> layer_norm(const TensorT<S>& x, const TensorT<S>& gain, const TensorT<S>& bias,
                      double eps = 1e-5) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || bias.rows() != 1 || bias.cols() != x.cols())
    fail_runtime("layer_norm: gain/bias must be 1x", x.cols());
  const Index n = x.rows(), c = x.cols();
  MatX<S> xhat(n, c);
  VecX<S> inv_std(n);
  for (Index i = 0; i < n; ++i) {
    S mean = x.v.row(i).mean();
    auto centered = x.v.row(i).array() - mean;
    S var = centered.square().sum() / static_cast<S>(c);
    S istd = S(1) / std::sqrt(var + static_cast<S>(eps));
    inv_std(i) = istd;
    xhat.row(i) = centered * istd;
  }
  MatX<S> out = (xhat.array().rowwise() * gain.v.row(0).array()).rowwise() + bias.v.row(0).array();
  detail::check_finite("layer_norm", out);
  TensorT<S> result(std::move(out));
  Tape<S>* t = detail::tape_of(x, gain);
  if (Tape<S>* tb = detail::tape_of(bias)) {
    if (t && t != tb) fail_runtime("layer_norm: operands recorded on different tapes");
    t = t ? t : tb;
  }
  if (t) {
    int px = x.node, pg = gain.node, pb = bias.node;
    result.tape = t;
    result.node = t->record({px, pg, pb},
        [px, pg, pb, xhat, inv_std, gv = gain.v, c](Tape<S>& tp, const MatX<S>& g) {
          tp.accumulate(pb, MatX<S>(g.colwise().sum()));
          tp.accumulate(pg, MatX<S>(g.cwiseProduct(xhat).colwise().sum()));
          if (px >= 0) {
            MatX<S> gx(xhat.rows(), xhat.cols());
            for (Index i = 0; i < xhat.rows(); ++i) {
              auto gh = g.row(i).array() * gv.row(0).array();
              S m1 = gh.sum() / static_cast<S>(c);
              S m2 = (gh * xhat.row(i).array()).sum() / static_cast<S>(c);
              gx.row(i) = inv_std(i) * (gh - m1 - xhat.row(i).array() * m2);
            }
            tp.accumulate(px, gx);
          }
        });
  }
  return result;
}

// Inverted dropout; identity when not training or p == 0.
template <typename S>
TensorT<S> dropout(const TensorT<S>& a, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return a;
  if (p >= 1.0) fail_runtime("dropout: p must be < 1, got ", p);
  MatX<S> mask(a.rows(), a.cols());
  const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      mask(i, j) = rng.uniform() < p ? S(0) : keep_scale;
  int pa = a.node;
  return detail::make_unary("dropout", a, MatX<S>(a.v.cwiseProduct(mask)),
                            [pa, mask](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>(g.cwiseProduct(mask)));
                            });
}

// ---------------------------------------------------------------------------
// Reductions / losses
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> sum_all(const TensorT<S>& a) {
  int pa = a.node;
  MatX<S> out(1, 1);
  out(0, 0) = a.v.sum();
  Index r = a.rows(), c = a.cols();
  return detail::make_unary("sum", a, std::move(out),
                            [pa, r, c](Tape<S>& t, const MatX<S>& g) {
                              t.accumulate(pa, MatX<S>(MatX<S>::Constant(r, c, g(0, 0))));
                            });
}

template <typename S>
TensorT<S> mean_all(const TensorT<S>& a) {
  if (a.size() == 0) fail_runtime("mean: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

// axis = 0: 1 x c column sums; axis = 1: n x 1 row sums.
template <typename S>
TensorT<S> sum_axis(const TensorT<S>& a, int axis) {
  int pa = a.node;
  Index r = a.rows(), c = a.cols();
  if (axis == 0) {
    return detail::make_unary("sum_axis0", a, MatX<S>(a.v.colwise().sum()),
                              [pa, r](Tape<S>& t, const MatX<S>& g) {
                                t.accumulate(pa, MatX<S>(g.replicate(r, 1)));
                              });
  }
  if (axis == 1) {
    return detail::make_unary("sum_axis1", a, MatX<S>(a.v.rowwise().sum()),
                              [pa, c](Tape<S>& t, const MatX<S>& g) {
                                t.accumulate(pa, MatX<S>(g.replicate(1, c)));
                              });
  }
  fail_runtime("sum_axis: axis must be 0 or 1, got ", axis);
}

// Mean over rows: 1 x c. The uniform pooling readout.
template <typename S>
TensorT<S> mean_rows(const TensorT<S>& a) {
  if (a.rows() == 0) fail_runtime("mean_rows: empty tensor");
  return scale(sum_axis(a, 0), 1.0 / static_cast<double>(a.rows()));
}

// Mean negative log-likelihood over rows whose target is not ignore_index.
template <typename S>
TensorT<S> cross_entropy(const TensorT<S>& logits, const std::vector<int>& targets,
                         int ignore_index = -1) {
  if (static_cast<Index>(targets.size()) != logits.rows())
    fail_runtime("cross_entropy: ", targets.size(), " targets for ", logits.rows(), " rows");
  Index counted = 0;
  for (int t : targets)
    if (t != ignore_index) {
      if (t < 0 || t >= logits.cols())
        fail_runtime("cross_entropy: target ", t, " out of vocab ", logits.cols());
      ++counted;
    }
  if (counted == 0) fail_runtime("cross_entropy: no unmasked targets");

  MatX<S> sm(logits.rows(), logits.cols());
  double loss = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.v.row(i).array();
    S mx = row.maxCoeff();
    auto shifted = row - mx;
    S lse = std::log(shifted.exp().sum());
    sm.row(i) = (shifted - lse).exp();
    if (targets[static_cast<size_t>(i)] != ignore_index)
      loss -= static_cast<double>(shifted(targets[static_cast<size_t>(i)]) - lse);
  }
  MatX<S> out(1, 1);
  out(0, 0) = static_cast<S>(loss / static_cast<double>(counted));
  int pa = logits.node;
  return detail::make_unary(
      "cross_entropy", logits, std::move(out),
      [pa, sm, targets, ignore_index, counted](Tape<S>& t, const MatX<S>& g) {
        MatX<S> ga = MatX<S>::Zero(sm.rows(), sm.cols());
        const S inv = g(0, 0) / static_cast<S>(counted);
        for (Index i = 0; i < sm.rows(); ++i) {
          int tgt = targets[static_cast<size_t>(i)];
          if (tgt == ignore_index) continue;
          ga.row(i) = sm.row(i) * inv;
          ga(i, tgt) -= inv;
        }
        t.accumulate(pa, ga);
      });
}

}  // namespace molrel

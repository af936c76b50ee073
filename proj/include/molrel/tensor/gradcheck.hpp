#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "molrel/tensor/ops.hpp"

namespace molrel {

// Central finite differences against the tape's analytic gradients, always in
// 64-bit mode. f receives the tape plus one leaf tensor per input and must
// return a scalar. Returns the max over coordinates of
//   |analytic - numeric| / max(1, |analytic|, |numeric|).
template <typename F>
double grad_check(F&& f, const std::vector<Matd>& inputs, double eps = 1e-4) {
  auto eval = [&](const std::vector<Matd>& vals, Tape<double>* tape,
                  std::vector<Tensord>* leaves_out) -> double {
    Tape<double> local;
    Tape<double>& t = tape ? *tape : local;
    std::vector<Tensord> leaves;
    leaves.reserve(vals.size());
    for (const Matd& m : vals) leaves.push_back(t.leaf(m));
    Tensord loss = f(t, leaves);
    if (loss.rows() != 1 || loss.cols() != 1) fail_runtime("grad_check: f must be scalar-valued");
    if (!std::isfinite(loss.v(0, 0))) fail_runtime("grad_check: non-finite loss");
    if (tape) {
      t.backward(loss);
      *leaves_out = leaves;
    }
    return loss.v(0, 0);
  };

  Tape<double> tape;
  std::vector<Tensord> leaves;
  eval(inputs, &tape, &leaves);

  double max_err = 0.0;
  std::vector<Matd> probe = inputs;
  for (size_t i = 0; i < inputs.size(); ++i) {
    Matd analytic = tape.has_grad(leaves[i].node)
                        ? tape.grad(leaves[i].node)
                        : Matd::Zero(inputs[i].rows(), inputs[i].cols());
    for (Index r = 0; r < inputs[i].rows(); ++r) {
      for (Index c = 0; c < inputs[i].cols(); ++c) {
        double saved = probe[i](r, c);
        probe[i](r, c) = saved + eps;
        double up = eval(probe, nullptr, nullptr);
        probe[i](r, c) = saved - eps;
        double down = eval(probe, nullptr, nullptr);
        probe[i](r, c) = saved;
        double numeric = (up - down) / (2.0 * eps);
        double a = analytic(r, c);
        double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        max_err = std::max(max_err, err);
      }
    }
  }
  return max_err;
}

}  // namespace molrel

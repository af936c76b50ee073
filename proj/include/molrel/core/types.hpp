#pragma once

#include <Eigen/Core>

namespace molrel {

// Dense row-major matrices are the universal value type: row-major keeps
// reshapes and checkpoint serialization a plain memory view.
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matd = MatX<double>;
using Matf = MatX<float>;

using Index = Eigen::Index;

}  // namespace molrel

#pragma once

#include <Eigen/Dense>

#include "cmarl/numerics/tensor.hpp"

namespace cmarl::numerics {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<RowMatrix> as_matrix(Tensor& t)
{
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

inline Eigen::Map<const RowMatrix> as_matrix(const Tensor& t)
{
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

}  // namespace cmarl::numerics

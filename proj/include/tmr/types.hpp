#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace tmr {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Row-per-descriptor storage shared by keypoint sets, codebooks and indexes.
using DescriptorMatrix = RowMatrix<float>;

// Floating-point image plane, indexed (row = y, col = x).
using ImageF = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using WordId = std::uint32_t;
using DocIndex = std::uint32_t;

}  // namespace tmr

#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace spgseg {

using PointId = std::uint32_t;
using Vec3 = Eigen::Vector3d;

/// Row-major dense matrix; rows are points, columns are channels.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N x D per-point features (F, G, X or E depending on the stage).
using FeatureMatrix = Matrix;

}  // namespace spgseg

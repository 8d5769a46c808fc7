#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace vulab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace vulab

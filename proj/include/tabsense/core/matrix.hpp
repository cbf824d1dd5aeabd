#pragma once

#include <Eigen/Dense>

namespace tabsense {

// Row-major so one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace tabsense

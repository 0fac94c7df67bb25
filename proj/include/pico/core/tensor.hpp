#pragma once

#include <Eigen/Dense>

namespace pico {

using Vector = Eigen::VectorXd;
// Batches are stored column-major: one sample per column.
using Matrix = Eigen::MatrixXd;

}  // namespace pico

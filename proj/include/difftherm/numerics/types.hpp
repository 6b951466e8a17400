#pragma once

#include <Eigen/Dense>

namespace difftherm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace difftherm

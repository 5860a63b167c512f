#pragma once

#include <Eigen/Dense>

namespace icl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace icl

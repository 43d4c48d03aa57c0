#pragma once

#include <Eigen/Dense>

namespace eik {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// <x> = (1 + |x|^2)^{1/2}
inline double japanese_bracket(double r) { return std::sqrt(1.0 + r * r); }
inline double japanese_bracket(const Vec& x) { return std::sqrt(1.0 + x.squaredNorm()); }

}  // namespace eik

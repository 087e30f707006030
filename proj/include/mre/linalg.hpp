#pragma once

#include <Eigen/Dense>

namespace mre {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant (Higham 2005). Falls back to lower degrees for small norms.
MatrixXd expm(const MatrixXd& a);

inline MatrixXd symmetrized(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

/// max |a_ij - a_ji|
double asymmetry(const MatrixXd& a);

/// Infinity norm (max row sum).
inline double norm_inf(const MatrixXd& a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace mre

#pragma once

#include <Eigen/Core>

namespace fnnet::geometry {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values[k]
  int sweeps = 0;
};

// Cyclic Jacobi eigensolver for a symmetric matrix. Iterates until every
// off-diagonal entry is below `tol`·‖A‖_F (or `max_sweeps` is reached).
// Only the upper triangle's symmetry is assumed, not checked.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-14, int max_sweeps = 100);

}  // namespace fnnet::geometry

#pragma once

#include <Eigen/Dense>

namespace readlens {

struct EigenDecomposition {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column i pairs with values(i)
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for real symmetric matrices. Only the upper
/// triangle is trusted to be consistent with the lower one; asymmetric input
/// is symmetrized first.
EigenDecomposition jacobi_eigen(const Eigen::MatrixXd& symmetric,
                                int max_sweeps = 100);

}  // namespace readlens

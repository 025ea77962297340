#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bgs {

struct SymEig {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns are eigenvectors
};

// Dense symmetric eigendecomposition (LAPACK divide and conquer).
SymEig sym_eig(const Eigen::MatrixXd& h);
Eigen::VectorXd sym_eigvals(const Eigen::MatrixXd& h);
// Same spectrum, but `vectors` holds only the listed rows of the eigenvector
// matrix (rows.size() x n). Skips most of the back-transformation.
SymEig sym_eig_rows(const Eigen::MatrixXd& h, const std::vector<Eigen::Index>& rows);

// Inverse of a symmetric positive definite matrix; throws NotPositiveDefinite
// tagged with `op` otherwise.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* op);

}  // namespace bgs

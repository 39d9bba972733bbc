#pragma once

#include <Eigen/Dense>

namespace torusppca {

/// Eigendecomposition of a symmetric matrix with eigenvalues in descending
/// order. Each eigenvector is signed so that its largest-magnitude entry is
/// positive (first such entry on ties), which makes outputs reproducible.
struct EigenPair {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

EigenPair sorted_eigen(const Eigen::MatrixXd& symmetric);

/// Flips the sign of every column of `vectors` so that its largest-magnitude
/// entry is positive.
void canonicalize_signs(Eigen::MatrixXd& vectors);

/// Orthogonal (or semi-orthogonal, when the column counts differ) R minimising
/// ||A R - B||_F. A is n x p, B is n x q; R is p x q.
Eigen::MatrixXd orthogonal_procrustes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Symmetrises in place: (A + A^T) / 2.
void symmetrize(Eigen::MatrixXd& a);

}  // namespace torusppca

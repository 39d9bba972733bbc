#include "torusppca/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "torusppca/errors.hpp"

namespace torusppca {

DegenerateComponentError::DegenerateComponentError(int component, double eigenvalue,
                                                   double noise_floor)
    : NumericalError("component " + std::to_string(component) + " is degenerate: eigenvalue " +
                     std::to_string(eigenvalue) + " does not exceed the noise variance " +
                     std::to_string(noise_floor)),
      component_(component) {}

void canonicalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (vectors(best, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

EigenPair sorted_eigen(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols()) {
    throw std::invalid_argument("sorted_eigen: matrix is not square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sorted_eigen: eigensolver did not converge");
  }
  EigenPair out;
  // Eigen returns ascending order.
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  canonicalize_signs(out.vectors);
  return out;
}

Eigen::MatrixXd orthogonal_procrustes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("orthogonal_procrustes: row counts differ");
  }
  const Eigen::MatrixXd cross = a.transpose() * b;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

void symmetrize(Eigen::MatrixXd& a) {
  a = 0.5 * (a + a.transpose()).eval();
}

}  // namespace torusppca

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "torusppca/linalg.hpp"

namespace torusppca {

/// Isotropic-noise latent factor model x = mu + W z + eps, z ~ N(0, I_d),
/// eps ~ N(0, sigma2 I_D).
struct PpcaModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd W;
  double sigma2 = 1.0;

  int ambient_dim() const noexcept { return static_cast<int>(W.rows()); }
  int latent_dim() const noexcept { return static_cast<int>(W.cols()); }

  /// M = W^T W + sigma2 I_d.
  Eigen::MatrixXd M() const;
  /// C = W W^T + sigma2 I_D, the marginal covariance of x.
  Eigen::MatrixXd C() const;

  /// Throws std::invalid_argument unless 1 <= d < D, shapes agree and
  /// sigma2 > 0.
  void validate() const;
};

struct SampleMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // divisor N
};

/// Mean and maximum-likelihood (divisor N) covariance. Requires N >= 2.
SampleMoments sample_mean_cov(const Eigen::MatrixXd& x);

/// (1/N) sum_j (x_j - mu)(x_j - mu)^T about an arbitrary centre.
Eigen::MatrixXd scatter_about(const Eigen::MatrixXd& x, const Eigen::VectorXd& mu);

/// Closed-form maximum-likelihood solution from the sample covariance:
/// sigma2 is the mean of the D - d smallest eigenvalues and
/// W = U_d (Lambda_d - sigma2 I)^{1/2}, with the rotation fixed to identity.
/// Throws DegenerateComponentError when lambda_d does not exceed sigma2.
PpcaModel ppca_closed_form(const Eigen::MatrixXd& x, int d);
PpcaModel ppca_closed_form(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int d);

/// Same as above but reusing an existing eigendecomposition of `cov`.
PpcaModel ppca_closed_form(const Eigen::VectorXd& mean, const EigenPair& eig, int d);

/// -(N/2)[D log 2pi + log det C + tr(C^{-1} S)] with S taken about model.mu.
double ppca_loglik(const Eigen::MatrixXd& x, const PpcaModel& model);

/// Same value from a precomputed scatter matrix about model.mu.
double ppca_loglik(Eigen::Index n, const Eigen::MatrixXd& scatter, const PpcaModel& model);

struct EmUpdate {
  Eigen::MatrixXd W;
  double sigma2;
};

/// One fixed-point step of the PPCA EM equations for scatter S:
///   W' = S W (sigma2 I + M^{-1} W^T S W)^{-1}
///   sigma2' = tr(S - S W M^{-1} W'^T) / D
EmUpdate ppca_em_update(const Eigen::MatrixXd& scatter, const Eigen::MatrixXd& W, double sigma2);

struct PpcaEmResult {
  PpcaModel model;
  std::vector<double> trace;  // log-likelihood after each update
  int iterations = 0;
  bool converged = false;
};

/// Iterates ppca_em_update from `init` (its mu is replaced by the sample mean)
/// until the relative log-likelihood change falls below tol.
PpcaEmResult ppca_em(const Eigen::MatrixXd& x, int d, const PpcaModel& init, double tol = 1e-8,
                     int max_iter = 1000);

struct LatentPosterior {
  Eigen::VectorXd mean;  // M^{-1} W^T (x - mu)
  Eigen::MatrixXd cov;   // sigma2 M^{-1}

  /// E[z z^T | x] = cov + mean mean^T.
  Eigen::MatrixXd second_moment() const { return cov + mean * mean.transpose(); }
};

LatentPosterior latent_posterior(const Eigen::VectorXd& x, const PpcaModel& model);

/// Posterior means for every row of x, as an N x d matrix.
Eigen::MatrixXd posterior_means(const Eigen::MatrixXd& x, const PpcaModel& model);

}  // namespace torusppca

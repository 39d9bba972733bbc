#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "torusppca/ppca.hpp"
#include "torusppca/wrapped_normal.hpp"

namespace torusppca {

struct TppcaConfig {
  int d = 1;
  LatticeOptions lattice;
  /// Relative change of the observed wrapped-normal log-likelihood that ends
  /// the outer alternation.
  double outer_tol = 1e-7;
  int outer_max_iter = 500;
  /// Settings for the unstructured CEM run used for initialisation.
  CemOptions cem;
  /// When false (default) Step 2 performs a single EM update per outer
  /// iteration; when true it iterates to step2_tol.
  bool step2_to_convergence = false;
  double step2_tol = 1e-10;
  int step2_max_iter = 1000;
  /// Recorded for provenance only; the estimator is deterministic.
  std::optional<std::uint64_t> seed;

  void validate(Eigen::Index ambient_dim) const;
};

struct TppcaInit {
  Eigen::VectorXd mu;
  WrapIndices winding;
  Eigen::MatrixXd unwrapped;
  Eigen::MatrixXd scatter;  // S of the unwrapped rows about mu
  Eigen::MatrixXd W;
  double sigma2 = 0.0;
  bool regularized = false;
};

/// Unstructured CEM for (mu, K), then the closed-form PPCA fit of its scatter.
TppcaInit tppca_init(const AngleMatrix& y, int d, const CemOptions& cem = {});

struct Step1Result {
  Eigen::VectorXd mu;
  WrapIndices winding;
  Eigen::MatrixXd unwrapped;
};

/// Classification step for the windings under the current (mu, W, sigma2),
/// followed by the mean update mu = mean(y_j + 2 pi k_j).
///
/// The per-row objective is the expected complete-data log-likelihood. Its
/// k-dependent part reduces to -(x - mu)^T C^{-1} (x - mu) with
/// C = W W^T + sigma2 I, so each row takes the best lattice point of
/// N(mu, C). Ties go to the lexicographically smallest k.
Step1Result tppca_step1(const AngleMatrix& y, const PpcaModel& model,
                        const LatticeOptions& lattice = {});

/// One PPCA EM update using the scatter of the unwrapped rows about mu.
EmUpdate tppca_step2(const Eigen::MatrixXd& unwrapped, const Eigen::VectorXd& mu,
                     const Eigen::MatrixXd& W, double sigma2);

/// Sum over rows of the wrapped-normal log-density with covariance C.
double tppca_observed_loglik(const AngleMatrix& y, const PpcaModel& model,
                             const LatticeOptions& lattice = {});

struct TppcaFit {
  PpcaModel model;
  WrapIndices winding;
  Eigen::MatrixXd unwrapped;  // x_hat_j = y_j + 2 pi k_j
  Eigen::MatrixXd scores;     // posterior means, N x d
  std::vector<double> trace;  // observed log-likelihood; entry 0 is the initial model
  int iterations = 0;
  bool converged = false;
  bool init_regularized = false;
  /// Outer iterations whose log-likelihood fell by more than 1e-6 relative.
  int monotonicity_violations = 0;
  LatticeOptions lattice;
};

TppcaFit tppca_fit(const AngleMatrix& y, const TppcaConfig& config);

struct Reconstruction {
  Eigen::MatrixXd unwrapped;  // mu + W z_j
  AngleMatrix angles;         // wrap of the above
};

Reconstruction tppca_reconstruct(const TppcaFit& fit);

/// Unwraps new observations under a fitted model (best lattice point of
/// N(mu, C)) and returns their posterior-mean scores.
Eigen::MatrixXd tppca_scores(const AngleMatrix& y, const PpcaModel& model,
                             const LatticeOptions& lattice = {});

}  // namespace torusppca

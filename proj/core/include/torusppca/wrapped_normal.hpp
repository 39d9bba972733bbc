#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace torusppca {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Maps a finite real onto [0, 2pi). Throws std::invalid_argument on NaN/inf.
double wrap_angle(double x);

/// Elementwise wrap_angle for any Eigen matrix or vector.
template <typename Derived>
typename Derived::PlainObject wrap(const Eigen::MatrixBase<Derived>& x) {
  typename Derived::PlainObject out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, c) = wrap_angle(x(r, c));
  }
  return out;
}

/// Smallest signed difference a - b on the circle, in [-pi, pi).
double angular_difference(double a, double b);

/// N x D observations on the torus; every entry is in [0, 2pi).
class AngleMatrix {
 public:
  /// Takes values that are already in [0, 2pi); throws otherwise.
  explicit AngleMatrix(Eigen::MatrixXd values);

  /// Wraps arbitrary finite reals onto the torus.
  static AngleMatrix wrapped(const Eigen::MatrixXd& raw);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  Eigen::VectorXd row(Eigen::Index j) const { return values_.row(j).transpose(); }

 private:
  Eigen::MatrixXd values_;
};

/// Winding numbers k_j with x_j = y_j + 2 pi k_j. Entries satisfy |k| <= radius.
struct WrapIndices {
  Eigen::MatrixXi k;
  int radius = 0;
};

/// Unwrapped mean and covariance of the wrapped normal.
struct WnParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

/// Controls enumeration of the winding lattice {-radius..radius}^D.
///
/// Per coordinate, a winding k_i is kept only when its marginal Gaussian weight
/// exp(-(y_i + 2 pi k_i - mu_i)^2 / (2 Sigma_ii)) is at least `prune_relative`
/// times the best one for that coordinate. Set prune_relative to 0 to enumerate
/// the full box. The term budget applies to the enumerated product.
struct LatticeOptions {
  int radius = 2;
  std::size_t max_terms = 1'000'000;
  double prune_relative = 1e-12;
};

/// Evaluates lattice sums of a fixed multivariate normal N(mu, Sigma) at
/// observed angles. Construction factors Sigma once; the query methods are
/// const and safe to call concurrently.
class WrappedNormalLattice {
 public:
  /// Throws NumericalError when Sigma is not symmetric positive definite and
  /// std::invalid_argument on shape mismatch or a negative radius.
  WrappedNormalLattice(WnParams params, LatticeOptions options);

  int dim() const noexcept { return static_cast<int>(params_.mu.size()); }
  const WnParams& params() const noexcept { return params_; }
  const LatticeOptions& options() const noexcept { return options_; }

  /// log sum_k phi(y + 2 pi k | mu, Sigma), via a running log-sum-exp.
  double log_density(const Eigen::VectorXd& y) const;

  /// Winding vector maximising phi(y + 2 pi k | mu, Sigma). Ties go to the
  /// lexicographically smallest k.
  Eigen::VectorXi best_winding(const Eigen::VectorXd& y) const;

  /// Normalised E-step weights v_k over the enumerated lattice, in
  /// lexicographic order of k.
  struct Weight {
    Eigen::VectorXi k;
    double v;
  };
  std::vector<Weight> weights(const Eigen::VectorXd& y) const;

  /// log phi(x | mu, Sigma) for an unwrapped point.
  double log_normal(const Eigen::VectorXd& x) const;

  /// Number of lattice terms that would be enumerated for y.
  std::size_t term_count(const Eigen::VectorXd& y) const;

 private:
  // Visits (k, q) with q the whitened squared residual, skipping subtrees
  // whose partial q already exceeds *bound (never when bound is null).
  template <typename Visitor>
  void enumerate(const Eigen::VectorXd& y, const double* bound, Visitor&& visit) const;

  // q at the per-coordinate nearest winding, clamped to the radius.
  double nearest_rounding_form(const Eigen::VectorXd& y) const;

  WnParams params_;
  LatticeOptions options_;
  Eigen::MatrixXd whitener_;  // L^{-1}, lower triangular
  Eigen::MatrixXd whitened_period_;  // 2 pi L^{-1} e_i in column i
  double log_norm_ = 0.0;  // -D/2 log 2pi - sum log L_ii
};

/// One-shot convenience wrapper around WrappedNormalLattice::log_density.
double wn_log_density(const Eigen::VectorXd& y, const WnParams& params,
                      const LatticeOptions& options = {});

/// Smallest radius J beyond which the lattice tail at y carries less than
/// `relative_tolerance` of the dominant term in every coordinate.
int adaptive_lattice_radius(const Eigen::VectorXd& y, const WnParams& params,
                            double relative_tolerance = 1e-14);

/// Elementwise circular mean (atan2 of mean sine and cosine) in [0, 2pi) and a
/// diagonal covariance built from -2 log R, where R is the mean resultant length.
WnParams circular_moment_init(const AngleMatrix& y);

struct CemOptions {
  LatticeOptions lattice;
  /// Stop once the classification log-likelihood improves by at most
  /// tol * (1 + |l|), or when the assignments stop changing.
  double tol = 1e-10;
  int max_iter = 500;
  /// Ridge factor applied as eps * tr(Sigma) / D when Sigma is singular.
  double ridge = 1e-8;
};

struct CemResult {
  WnParams params;
  WrapIndices winding;
  Eigen::MatrixXd unwrapped;  // x_j = y_j + 2 pi k_j
  std::vector<double> trace;  // classification log-likelihood after each M-step
  int iterations = 0;
  bool converged = false;
  bool regularized = false;
};

/// Classification EM for the wrapped normal with unstructured covariance.
/// C-step: per-row best winding under the current (mu, Sigma).
/// M-step: mean and divisor-N covariance of the unwrapped rows.
/// The default start is circular_moment_init(y).
CemResult cem_fit(const AngleMatrix& y, const CemOptions& options = {},
                  const std::optional<WnParams>& init = std::nullopt);

/// Sum over rows of log phi(x_j | mu, Sigma), the classification
/// log-likelihood for fixed windings.
double classification_loglik(const Eigen::MatrixXd& unwrapped, const WnParams& params);

/// x_j = y_j + 2 pi k_j for all rows.
Eigen::MatrixXd unwrap(const AngleMatrix& y, const Eigen::MatrixXi& k);

/// Stabilises a covariance estimate: when its smallest eigenvalue is not above
/// 1e-10 tr/D, adds ridge * tr/D (or ridge when the trace is zero) to the
/// diagonal. Returns true when the ridge was applied.
bool regularize_covariance(Eigen::MatrixXd& sigma, double ridge);

}  // namespace torusppca

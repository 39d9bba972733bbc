#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "torusppca/ppca.hpp"
#include "torusppca/wrapped_normal.hpp"

namespace torusppca {

/// Upper tail P(chi2_df > x). df = 0 is the point mass at zero, whose tail is
/// 0 for x > 0 and 1 otherwise.
double chi_square_sf(double x, int df);

/// Degrees of freedom of the d-component test against the saturated model:
/// D(D+1)/2 - (Dd + 1 - d(d-1)/2).
int lrt_type1_df(int D, int d);

/// Degrees of freedom of the d versus d+1 component test: D - d.
int lrt_type2_df(int D, int d);

struct LrtResult {
  int d = 0;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  /// Type 2 only: the raw difference was negative and has been set to zero.
  bool clamped = false;
};

/// U_d = nD(a - log g - 1) with a, g the arithmetic and geometric means of
/// the eigenvalues of Sigma0^{-1} S, Sigma0 = W W^T + sigma2 I.
LrtResult lrt_type1(const Eigen::MatrixXd& S, const PpcaModel& model, Eigen::Index n);

/// V_d = U_d - U_{d+1}. Throws std::invalid_argument unless
/// model_d1 has exactly one more component than model_d and d + 1 < D.
LrtResult lrt_type2(const Eigen::MatrixXd& S, const PpcaModel& model_d,
                    const PpcaModel& model_d1, Eigen::Index n);

enum class LrtType { kType1 = 1, kType2 = 2 };

struct LrtStep {
  LrtResult test;
  std::optional<std::string> error;  // fit failure at this d (or d + 1)
};

struct LrtSelection {
  int chosen_d = 1;
  /// Every test rejected, so the largest admissible dimension was returned.
  bool exhausted = false;
  std::vector<LrtStep> steps;
};

/// Forward stepwise test on Euclidean data: d = 1, 2, ... until the first
/// non-rejection at level alpha. Models are closed-form PPCA fits of the
/// sample covariance. Type 1 tests d in [1, D-1]; Type 2 tests d in [1, D-2].
LrtSelection select_lrt(const Eigen::MatrixXd& x, double alpha, LrtType type);

struct KaiserGuttmanResult {
  int chosen_d = 1;
  int raw_count = 0;
  bool clamped = false;
  Eigen::VectorXd eigenvalues;  // of the correlation matrix, descending
};

/// Number of correlation eigenvalues strictly above one, clamped to [1, D-1].
/// Throws std::invalid_argument naming the first zero-variance column.
KaiserGuttmanResult kaiser_guttman(const Eigen::MatrixXd& x);

struct CvResult {
  /// press[m] for m = 0..max_m; press[0] predicts every centred entry by zero.
  std::vector<double> press;
  /// w[m] for m = 1..max_m; w[0] is unused and set to NaN.
  std::vector<double> w;
  int chosen_d = 1;
  /// The m range was shortened because a leave-out SVD lost rank.
  bool truncated = false;
  bool clamped = false;
};

/// D_m = n + p - 2m.
int cv_dof_m(int n, int p, int m);

/// Krzanowski leave-out SVD cross-validation on the column-centred data.
/// The prediction of x_ij at rank m combines the row-i scores of the SVD with
/// column j removed and the column-j loadings of the SVD with row i removed,
/// each weighted by the square root of its singular value; leave-out singular
/// vectors take the sign that agrees with the full-data SVD.
CvResult cv_select(const Eigen::MatrixXd& x, double threshold = 0.9);

struct SelectionOptions {
  double alpha = 0.05;
  double cv_threshold = 0.9;
  bool run_lrt1 = true;
  bool run_lrt2 = true;
  bool run_kg = true;
  bool run_cv = true;
};

struct SelectionReport {
  int D = 0;
  Eigen::Index n = 0;
  Eigen::VectorXd covariance_eigenvalues;  // of S, descending
  std::optional<LrtSelection> lrt1;
  std::optional<LrtSelection> lrt2;
  std::optional<KaiserGuttmanResult> kg;
  std::optional<CvResult> cv;
  /// The torus front end needed a ridge in its CEM unwrap.
  bool unwrap_regularized = false;
};

/// Runs the requested selectors on Euclidean data.
SelectionReport select_dimension(const Eigen::MatrixXd& x, const SelectionOptions& options);

/// Torus front end: unwraps once with unstructured-covariance CEM and runs the
/// Euclidean selectors on the unwrapped rows.
SelectionReport select_dimension(const AngleMatrix& y, const SelectionOptions& options,
                                 const CemOptions& cem = {});

}  // namespace torusppca

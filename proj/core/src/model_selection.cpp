#include "torusppca/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "torusppca/errors.hpp"
#include "torusppca/linalg.hpp"

namespace torusppca {

double chi_square_sf(double x, int df) {
  if (df < 0) throw std::invalid_argument("chi_square_sf: negative degrees of freedom");
  if (std::isnan(x)) throw std::invalid_argument("chi_square_sf: NaN statistic");
  if (x <= 0.0) return 1.0;
  if (df == 0) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

int lrt_type1_df(int D, int d) {
  if (d < 1 || d >= D) throw std::invalid_argument("lrt_type1_df: need 1 <= d < D");
  return D * (D + 1) / 2 - (D * d + 1 - d * (d - 1) / 2);
}

int lrt_type2_df(int D, int d) {
  if (d < 1 || d >= D) throw std::invalid_argument("lrt_type2_df: need 1 <= d < D");
  return D - d;
}

LrtResult lrt_type1(const Eigen::MatrixXd& S, const PpcaModel& model, Eigen::Index n) {
  model.validate();
  const Eigen::Index D = S.rows();
  if (S.cols() != D || model.ambient_dim() != D) {
    throw std::invalid_argument("lrt_type1: S and model disagree on D");
  }
  if (n <= D) throw std::invalid_argument("lrt_type1: need n > D");
  const Eigen::LLT<Eigen::MatrixXd> llt(model.C());
  if (llt.info() != Eigen::Success) throw NumericalError("lrt_type1: Sigma0 is not positive definite");
  // L^{-1} S L^{-T} is similar to Sigma0^{-1} S and symmetric.
  const Eigen::MatrixXd half = llt.matrixL().solve(S);
  Eigen::MatrixXd whitened = llt.matrixL().solve(half.transpose());
  symmetrize(whitened);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                 whitened, Eigen::EigenvaluesOnly)
                                 .eigenvalues();
  if (!(ev.minCoeff() > 0.0)) {
    throw NumericalError("lrt_type1: Sigma0^{-1} S has a non-positive eigenvalue");
  }
  const double a = ev.mean();
  const double log_g = ev.array().log().mean();
  LrtResult r;
  r.d = model.latent_dim();
  r.statistic = static_cast<double>(n) * static_cast<double>(D) * (a - log_g - 1.0);
  r.df = lrt_type1_df(static_cast<int>(D), r.d);
  // With df = 0 the model is saturated and imposes nothing to test.
  r.p_value = r.df == 0 ? 1.0 : chi_square_sf(r.statistic, r.df);
  return r;
}

LrtResult lrt_type2(const Eigen::MatrixXd& S, const PpcaModel& model_d,
                    const PpcaModel& model_d1, Eigen::Index n) {
  const int D = static_cast<int>(S.rows());
  const int d = model_d.latent_dim();
  if (model_d1.latent_dim() != d + 1) {
    throw std::invalid_argument("lrt_type2: second model must have d + 1 components");
  }
  if (d + 1 >= D) throw std::invalid_argument("lrt_type2: need d + 1 < D");
  const LrtResult u_d = lrt_type1(S, model_d, n);
  const LrtResult u_d1 = lrt_type1(S, model_d1, n);
  LrtResult r;
  r.d = d;
  r.statistic = u_d.statistic - u_d1.statistic;
  if (r.statistic < 0.0) {
    r.statistic = 0.0;
    r.clamped = true;
  }
  r.df = lrt_type2_df(D, d);
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

LrtSelection select_lrt(const Eigen::MatrixXd& x, double alpha, LrtType type) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("select_lrt: alpha must be in (0, 1)");
  const int D = static_cast<int>(x.cols());
  if (D < 2) throw std::invalid_argument("select_lrt: need at least two variables");
  if (x.rows() <= D) throw std::invalid_argument("select_lrt: need n > D");
  const SampleMoments mom = sample_mean_cov(x);
  const EigenPair eig = sorted_eigen(mom.cov);

  const int last = type == LrtType::kType1 ? D - 1 : D - 2;
  std::vector<std::optional<PpcaModel>> models(static_cast<std::size_t>(D));
  std::vector<std::string> fit_errors(static_cast<std::size_t>(D));
  auto model_at = [&](int d) -> const std::optional<PpcaModel>& {
    auto& slot = models[static_cast<std::size_t>(d)];
    if (!slot && fit_errors[static_cast<std::size_t>(d)].empty()) {
      try {
        slot = ppca_closed_form(mom.mean, eig, d);
      } catch (const NumericalError& e) {
        fit_errors[static_cast<std::size_t>(d)] = e.what();
      }
    }
    return slot;
  };

  LrtSelection sel;
  for (int d = 1; d <= last; ++d) {
    LrtStep step;
    step.test.d = d;
    try {
      const auto& m = model_at(d);
      if (!m) throw NumericalError(fit_errors[static_cast<std::size_t>(d)]);
      if (type == LrtType::kType1) {
        step.test = lrt_type1(mom.cov, *m, x.rows());
      } else {
        const auto& m1 = model_at(d + 1);
        if (!m1) throw NumericalError(fit_errors[static_cast<std::size_t>(d + 1)]);
        step.test = lrt_type2(mom.cov, *m, *m1, x.rows());
      }
    } catch (const NumericalError& e) {
      step.error = e.what();
    }
    sel.steps.push_back(step);
    if (!step.error && step.test.p_value >= alpha) {
      sel.chosen_d = d;
      return sel;
    }
  }
  sel.chosen_d = D - 1;
  sel.exhausted = true;
  return sel;
}

KaiserGuttmanResult kaiser_guttman(const Eigen::MatrixXd& x) {
  const Eigen::Index D = x.cols();
  if (D < 2) throw std::invalid_argument("kaiser_guttman: need at least two variables");
  const SampleMoments mom = sample_mean_cov(x);
  Eigen::VectorXd sd(D);
  for (Eigen::Index i = 0; i < D; ++i) {
    if (!(mom.cov(i, i) > 0.0)) {
      throw std::invalid_argument("kaiser_guttman: column " + std::to_string(i) +
                                  " has zero variance");
    }
    sd(i) = std::sqrt(mom.cov(i, i));
  }
  const Eigen::VectorXd inv = sd.cwiseInverse();
  Eigen::MatrixXd corr = inv.asDiagonal() * mom.cov * inv.asDiagonal();
  corr.diagonal().setOnes();
  KaiserGuttmanResult r;
  r.eigenvalues = sorted_eigen(corr).values;
  r.raw_count = static_cast<int>((r.eigenvalues.array() > 1.0).count());
  r.chosen_d = r.raw_count;
  if (r.chosen_d < 1 || r.chosen_d > D - 1) {
    r.chosen_d = std::clamp(r.chosen_d, 1, static_cast<int>(D - 1));
    r.clamped = true;
  }
  return r;
}

int cv_dof_m(int n, int p, int m) { return n + p - 2 * m; }

namespace {

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& x, Eigen::Index j) {
  Eigen::MatrixXd out(x.rows(), x.cols() - 1);
  out.leftCols(j) = x.leftCols(j);
  out.rightCols(x.cols() - 1 - j) = x.rightCols(x.cols() - 1 - j);
  return out;
}

Eigen::MatrixXd drop_row(const Eigen::MatrixXd& x, Eigen::Index i) {
  Eigen::MatrixXd out(x.rows() - 1, x.cols());
  out.topRows(i) = x.topRows(i);
  out.bottomRows(x.rows() - 1 - i) = x.bottomRows(x.rows() - 1 - i);
  return out;
}

// Flips columns of `vectors` so each has a non-negative inner product with the
// matching column of `reference`.
void align_signs(Eigen::MatrixXd& vectors, const Eigen::MatrixXd& reference) {
  for (Eigen::Index t = 0; t < vectors.cols(); ++t) {
    if (vectors.col(t).dot(reference.col(t)) < 0.0) vectors.col(t) *= -1.0;
  }
}

}  // namespace

CvResult cv_select(const Eigen::MatrixXd& x, double threshold) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (p < 2) throw std::invalid_argument("cv_select: need at least two variables");
  if (n <= p) throw std::invalid_argument("cv_select: need n > p");
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();

  const Eigen::JacobiSVD<Eigen::MatrixXd> full(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double rank_tol = 1e-12 * std::max(full.singularValues()(0), 1e-300);
  Eigen::Index max_m = p - 1;
  bool truncated = false;

  // Row-i scores with column j removed, scaled by sqrt of singular values.
  std::vector<Eigen::MatrixXd> col_scores(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(drop_column(xc, j), Eigen::ComputeThinU);
    Eigen::MatrixXd u = svd.matrixU();
    align_signs(u, full.matrixU().leftCols(u.cols()));
    const Eigen::VectorXd s = svd.singularValues();
    Eigen::Index good = 0;
    while (good < s.size() && s(good) > rank_tol) ++good;
    if (good < max_m) {
      max_m = good;
      truncated = true;
    }
    col_scores[static_cast<std::size_t>(j)] = u * s.cwiseSqrt().asDiagonal();
  }
  // Column-j loadings with row i removed, scaled likewise (p x p per row).
  std::vector<Eigen::MatrixXd> row_loadings(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(drop_row(xc, i), Eigen::ComputeThinV);
    Eigen::MatrixXd v = svd.matrixV();
    align_signs(v, full.matrixV().leftCols(v.cols()));
    const Eigen::VectorXd s = svd.singularValues();
    Eigen::Index good = 0;
    while (good < s.size() && s(good) > rank_tol) ++good;
    if (good < max_m) {
      max_m = good;
      truncated = true;
    }
    row_loadings[static_cast<std::size_t>(i)] = v * s.cwiseSqrt().asDiagonal();
  }

  const double np = static_cast<double>(n) * static_cast<double>(p);
  CvResult r;
  r.truncated = truncated;
  r.press.push_back(xc.squaredNorm() / np);
  r.w.push_back(std::numeric_limits<double>::quiet_NaN());
  Eigen::MatrixXd prediction = Eigen::MatrixXd::Zero(n, p);
  double remaining = static_cast<double>((n - 1) * p);
  for (Eigen::Index m = 1; m <= max_m; ++m) {
    const Eigen::Index t = m - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::MatrixXd& load = row_loadings[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < p; ++j) {
        prediction(i, j) += col_scores[static_cast<std::size_t>(j)](i, t) * load(j, t);
      }
    }
    const double press = (prediction - xc).squaredNorm() / np;
    const double dm = cv_dof_m(static_cast<int>(n), static_cast<int>(p), static_cast<int>(m));
    remaining -= dm;
    if (!(remaining > 0.0)) {
      r.truncated = true;
      break;
    }
    r.w.push_back(((r.press.back() - press) / dm) / (press / remaining));
    r.press.push_back(press);
  }

  r.chosen_d = 0;
  for (std::size_t m = 1; m < r.w.size(); ++m) {
    if (r.w[m] > threshold) r.chosen_d = static_cast<int>(m);
  }
  if (r.chosen_d < 1) {
    r.chosen_d = 1;
    r.clamped = true;
  }
  return r;
}

SelectionReport select_dimension(const Eigen::MatrixXd& x, const SelectionOptions& options) {
  SelectionReport rep;
  rep.D = static_cast<int>(x.cols());
  rep.n = x.rows();
  rep.covariance_eigenvalues = sorted_eigen(sample_mean_cov(x).cov).values;
  if (options.run_lrt1) rep.lrt1 = select_lrt(x, options.alpha, LrtType::kType1);
  if (options.run_lrt2) rep.lrt2 = select_lrt(x, options.alpha, LrtType::kType2);
  if (options.run_kg) rep.kg = kaiser_guttman(x);
  if (options.run_cv) rep.cv = cv_select(x, options.cv_threshold);
  return rep;
}

SelectionReport select_dimension(const AngleMatrix& y, const SelectionOptions& options,
                                 const CemOptions& cem) {
  const CemResult unwrap_fit = cem_fit(y, cem);
  SelectionReport rep = select_dimension(unwrap_fit.unwrapped, options);
  rep.unwrap_regularized = unwrap_fit.regularized;
  return rep;
}

}  // namespace torusppca

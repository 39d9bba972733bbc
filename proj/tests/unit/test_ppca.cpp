#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "torusppca/errors.hpp"
#include "torusppca/ppca.hpp"

using namespace torusppca;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd gaussian(std::mt19937_64& g, int rows, int cols) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(g);
  return m;
}

// Data with a d-dimensional signal of the given scale plus isotropic noise.
Eigen::MatrixXd factor_data(std::mt19937_64& g, int n, int D, int d, double noise) {
  const Eigen::MatrixXd w = gaussian(g, D, d) * 1.5;
  Eigen::MatrixXd x = gaussian(g, n, d) * w.transpose() + noise * gaussian(g, n, D);
  x.rowwise() += gaussian(g, 1, D).row(0);
  return x;
}

double naive_log_normal(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& s) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  const Eigen::VectorXd r = x - mu;
  return -0.5 * (static_cast<double>(x.size()) * std::log(2 * kPi) + std::log(lu.determinant()) +
                 r.dot(lu.inverse() * r));
}

// Nelder-Mead on (w1, w2, w3, log sigma2) for D = 3, d = 1.
double numeric_max_loglik(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mean = x.colwise().mean();
  auto f = [&](const Eigen::Vector4d& t) {
    PpcaModel m;
    m.mu = mean;
    m.W = t.head<3>();
    m.sigma2 = std::exp(t(3));
    return -ppca_loglik(x, m);
  };
  std::vector<Eigen::Vector4d> s(5, Eigen::Vector4d(1, 0.5, -0.5, 0));
  for (int i = 0; i < 4; ++i) s[static_cast<std::size_t>(i + 1)](i) += 1.0;
  std::vector<double> v(5);
  for (int i = 0; i < 5; ++i) v[static_cast<std::size_t>(i)] = f(s[static_cast<std::size_t>(i)]);
  for (int it = 0; it < 20000; ++it) {
    std::vector<int> o{0, 1, 2, 3, 4};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)]; });
    auto at = [&](int i) -> Eigen::Vector4d& { return s[static_cast<std::size_t>(o[static_cast<std::size_t>(i)])]; };
    auto val = [&](int i) -> double& { return v[static_cast<std::size_t>(o[static_cast<std::size_t>(i)])]; };
    Eigen::Vector4d c = Eigen::Vector4d::Zero();
    for (int i = 0; i < 4; ++i) c += at(i) / 4.0;
    const Eigen::Vector4d r = c + (c - at(4));
    const double fr = f(r);
    if (fr < val(0)) {
      const Eigen::Vector4d e = c + 2.0 * (c - at(4));
      const double fe = f(e);
      if (fe < fr) { at(4) = e; val(4) = fe; } else { at(4) = r; val(4) = fr; }
    } else if (fr < val(3)) {
      at(4) = r; val(4) = fr;
    } else {
      const Eigen::Vector4d k = c + 0.5 * (at(4) - c);
      const double fk = f(k);
      if (fk < val(4)) {
        at(4) = k; val(4) = fk;
      } else {
        for (int i = 1; i < 5; ++i) { at(i) = at(0) + 0.5 * (at(i) - at(0)); val(i) = f(at(i)); }
      }
    }
  }
  return -*std::min_element(v.begin(), v.end());
}

}  // namespace

TEST(SampleMeanCov, TwoPoints) {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 0;
  const SampleMoments m = sample_mean_cov(x);
  EXPECT_EQ(m.mean, Eigen::Vector2d(1, 0));
  Eigen::Matrix2d s;
  s << 1, 0, 0, 0;
  EXPECT_EQ(m.cov, s);
}

TEST(SampleMeanCov, IdenticalRowsGiveZero) {
  const SampleMoments m = sample_mean_cov(Eigen::MatrixXd::Constant(5, 3, 2.5));
  EXPECT_EQ(m.cov, Eigen::MatrixXd::Zero(3, 3));
}

TEST(SampleMeanCov, MatchesDoubleLoop) {
  std::mt19937_64 g(1);
  const Eigen::MatrixXd x = gaussian(g, 10, 3);
  const SampleMoments m = sample_mean_cov(x);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double ma = 0, mb = 0, s = 0;
      for (int j = 0; j < 10; ++j) { ma += x(j, a); mb += x(j, b); }
      ma /= 10; mb /= 10;
      for (int j = 0; j < 10; ++j) s += (x(j, a) - ma) * (x(j, b) - mb);
      EXPECT_NEAR(m.cov(a, b), s / 10, 1e-12);
    }
}

TEST(SampleMeanCov, NeedsTwoRows) {
  EXPECT_THROW(sample_mean_cov(Eigen::MatrixXd::Zero(1, 3)), std::invalid_argument);
}

TEST(ClosedForm, DiagonalCase) {
  const Eigen::Vector3d mean(0, 0, 0);
  const PpcaModel m = ppca_closed_form(mean, Eigen::Matrix3d(Eigen::Vector3d(4, 1, 1).asDiagonal()), 1);
  EXPECT_NEAR(m.sigma2, 1.0, 1e-14);
  EXPECT_NEAR(m.W(0, 0), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(m.W(1, 0), 0.0, 1e-14);
  EXPECT_NEAR(m.W(2, 0), 0.0, 1e-14);
}

TEST(ClosedForm, IsotropicIsDegenerate) {
  for (int d = 1; d < 4; ++d) {
    try {
      ppca_closed_form(Eigen::Vector4d::Zero(), Eigen::Matrix4d::Identity(), d);
      FAIL() << "expected DegenerateComponentError";
    } catch (const DegenerateComponentError& e) {
      EXPECT_EQ(e.component(), d);
    }
  }
}

TEST(ClosedForm, RejectsFullDimension) {
  EXPECT_THROW(ppca_closed_form(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity(), 3), std::invalid_argument);
}

TEST(ClosedForm, SigmaSquaredIsMeanOfDiscardedEigenvalues) {
  std::mt19937_64 g(2);
  const Eigen::MatrixXd x = factor_data(g, 200, 5, 2, 0.5);
  const SampleMoments mom = sample_mean_cov(x);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(mom.cov).eigenvalues();
  const PpcaModel m = ppca_closed_form(x, 2);
  EXPECT_NEAR(m.sigma2, ev.head(3).mean(), 1e-12);
}

TEST(ClosedForm, ReproducesTopEigenspace) {
  std::mt19937_64 g(3);
  const Eigen::MatrixXd x = factor_data(g, 200, 5, 2, 0.5);
  const SampleMoments mom = sample_mean_cov(x);
  const PpcaModel m = ppca_closed_form(x, 2);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mom.cov);
  const Eigen::MatrixXd u = es.eigenvectors().rightCols(2);
  const Eigen::MatrixXd c = m.C();
  // C acts on the top eigenvectors exactly as S does.
  EXPECT_LT((c * u - mom.cov * u).norm(), 1e-10);
}

TEST(ClosedForm, MatchesNumericOptimizer) {
  std::mt19937_64 g(4);
  const Eigen::MatrixXd x = factor_data(g, 150, 3, 1, 0.4);
  const double closed = ppca_loglik(x, ppca_closed_form(x, 1));
  const double numeric = numeric_max_loglik(x);
  EXPECT_GE(closed, numeric - 1e-6);
  EXPECT_NEAR(closed, numeric, 1e-4);
}

TEST(ClosedForm, EigenvectorSignConvention) {
  std::mt19937_64 g(5);
  const PpcaModel m = ppca_closed_form(factor_data(g, 100, 4, 2, 0.3), 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::Index i;
    m.W.col(c).cwiseAbs().maxCoeff(&i);
    EXPECT_GT(m.W(i, c), 0.0);
  }
}

TEST(Loglik, SinglePointAtMeanWithIdentityCovariance) {
  PpcaModel m;
  m.mu = Eigen::Vector3d(1, 2, 3);
  m.W = Eigen::Vector3d::Zero();
  m.sigma2 = 1.0;
  EXPECT_NEAR(ppca_loglik(m.mu.transpose(), m), -1.5 * std::log(2 * kPi), 1e-14);
}

TEST(Loglik, MatchesPerRowDensity) {
  std::mt19937_64 g(6);
  const Eigen::MatrixXd x = factor_data(g, 40, 4, 2, 0.7);
  PpcaModel m;
  m.mu = gaussian(g, 4, 1);
  m.W = gaussian(g, 4, 2);
  m.sigma2 = 0.8;
  double direct = 0.0;
  for (int j = 0; j < 40; ++j) direct += naive_log_normal(x.row(j).transpose(), m.mu, m.C());
  EXPECT_NEAR(ppca_loglik(x, m), direct, 1e-10 * std::abs(direct));
}

TEST(Loglik, ClosedFormMaximumIdentity) {
  std::mt19937_64 g(7);
  const Eigen::MatrixXd x = factor_data(g, 120, 5, 2, 0.6);
  const int d = 2, D = 5, n = 120;
  const Eigen::VectorXd lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sample_mean_cov(x).cov)
                                  .eigenvalues().reverse();
  const PpcaModel m = ppca_closed_form(x, d);
  // At the optimum: log det C = sum log lambda_1..d + (D-d) log sigma2, tr(C^{-1} S) = D.
  const double expected = -0.5 * n * (D * std::log(2 * kPi) + lam.head(d).array().log().sum() +
                                      (D - d) * std::log(m.sigma2) + D);
  EXPECT_NEAR(ppca_loglik(x, m), expected, 1e-9 * std::abs(expected));
}

TEST(Em, ClosedFormIsFixedPoint) {
  std::mt19937_64 g(8);
  const Eigen::MatrixXd x = factor_data(g, 300, 5, 2, 0.5);
  const SampleMoments mom = sample_mean_cov(x);
  const PpcaModel m = ppca_closed_form(x, 2);
  const EmUpdate up = ppca_em_update(mom.cov, m.W, m.sigma2);
  EXPECT_LT((up.W - m.W).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(up.sigma2, m.sigma2, 1e-10);
}

TEST(Em, ConvergesToClosedFormCovariance) {
  std::mt19937_64 g(9);
  const Eigen::MatrixXd x = factor_data(g, 500, 3, 1, 0.5);
  PpcaModel init;
  init.mu = Eigen::Vector3d::Zero();
  init.W = Eigen::Vector3d(1, 0, 0);
  init.sigma2 = 1.0;
  // A zero tolerance runs EM until the log-likelihood stops changing in floating point.
  const PpcaEmResult em = ppca_em(x, 1, init, 0.0, 100000);
  const PpcaModel cf = ppca_closed_form(x, 1);
  EXPECT_LT((em.model.C() - cf.C()).norm(), 1e-6 * cf.C().norm());
}

TEST(Em, TraceIsNonDecreasing) {
  std::mt19937_64 g(10);
  const Eigen::MatrixXd x = factor_data(g, 200, 5, 2, 0.8);
  PpcaModel init;
  init.mu = Eigen::VectorXd::Zero(5);
  init.W = gaussian(g, 5, 2);
  init.sigma2 = 2.0;
  const PpcaEmResult em = ppca_em(x, 2, init);
  ASSERT_GT(em.trace.size(), 2u);
  for (std::size_t i = 1; i < em.trace.size(); ++i) EXPECT_GE(em.trace[i], em.trace[i - 1] - 1e-9);
}

TEST(Posterior, MeanIsZeroAtMu) {
  PpcaModel m;
  m.mu = Eigen::Vector3d(1, 2, 3);
  m.W = Eigen::Vector3d(1, -1, 2);
  m.sigma2 = 0.5;
  EXPECT_LT(latent_posterior(m.mu, m).mean.norm(), 1e-15);
}

TEST(Posterior, TwoByTwoHandExample) {
  PpcaModel m;
  m.mu = Eigen::Vector2d::Zero();
  m.W = Eigen::Vector2d(1, 1);
  m.sigma2 = 1.0;
  const LatentPosterior p = latent_posterior(Eigen::Vector2d(1, 1), m);
  EXPECT_NEAR(p.mean(0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.cov(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.second_moment()(0, 0), 1.0 / 3.0 + 4.0 / 9.0, 1e-15);
}

TEST(Posterior, SmallNoiseLimitIsLeastSquaresProjection) {
  std::mt19937_64 g(11);
  PpcaModel m;
  m.mu = gaussian(g, 4, 1);
  m.W = gaussian(g, 4, 2);
  m.sigma2 = 1e-12;
  const Eigen::VectorXd x = gaussian(g, 4, 1);
  const Eigen::VectorXd ls = (m.W.transpose() * m.W).ldlt().solve(m.W.transpose() * (x - m.mu));
  EXPECT_LT((latent_posterior(x, m).mean - ls).norm(), 1e-9);
}

TEST(Posterior, RowwiseMeansMatchSingleRow) {
  std::mt19937_64 g(12);
  const Eigen::MatrixXd x = factor_data(g, 20, 4, 2, 0.5);
  const PpcaModel m = ppca_closed_form(x, 2);
  const Eigen::MatrixXd z = posterior_means(x, m);
  for (int j = 0; j < 20; ++j) {
    EXPECT_LT((z.row(j).transpose() - latent_posterior(x.row(j).transpose(), m).mean).norm(), 1e-12);
  }
}

TEST(Invariance, RotationOfLoadings) {
  std::mt19937_64 g(13);
  const Eigen::MatrixXd x = factor_data(g, 100, 5, 2, 0.5);
  const PpcaModel m = ppca_closed_form(x, 2);
  const double t = 0.7;
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  PpcaModel rot = m;
  rot.W = m.W * r;
  EXPECT_LT((rot.C() - m.C()).norm(), 1e-12);
  EXPECT_NEAR(ppca_loglik(x, rot), ppca_loglik(x, m), 1e-9);
  const Eigen::VectorXd xj = x.row(0).transpose();
  const LatentPosterior a = latent_posterior(xj, m);
  const LatentPosterior b = latent_posterior(xj, rot);
  EXPECT_LT((b.mean - r.transpose() * a.mean).norm(), 1e-12);
  EXPECT_LT((b.cov - r.transpose() * a.cov * r).norm(), 1e-12);
}

TEST(Invariance, TraceAndDeterminantIdentities) {
  std::mt19937_64 g(14);
  const Eigen::MatrixXd x = factor_data(g, 200, 5, 2, 0.5);
  const PpcaModel m = ppca_closed_form(x, 2);
  const Eigen::MatrixXd c = m.C();
  EXPECT_NEAR(c.trace(), (m.W * m.W.transpose()).trace() + 5 * m.sigma2, 1e-12);
  const Eigen::VectorXd lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sample_mean_cov(x).cov)
                                  .eigenvalues().reverse();
  EXPECT_NEAR(std::log(c.determinant()), lam.head(2).array().log().sum() + 3 * std::log(m.sigma2), 1e-10);
}

TEST(Validate, RejectsBadModels) {
  PpcaModel m;
  m.mu = Eigen::Vector3d::Zero();
  m.W = Eigen::Vector3d::Ones();
  m.sigma2 = 0.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.sigma2 = 1.0;
  m.W = Eigen::Matrix3d::Identity();
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

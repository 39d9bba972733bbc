#include "torusppca/ppca.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "torusppca/errors.hpp"

namespace torusppca {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_dim(int d, Eigen::Index ambient) {
  if (d < 1 || d >= ambient) {
    throw std::invalid_argument("latent dimension " + std::to_string(d) +
                                " must satisfy 1 <= d < D = " + std::to_string(ambient));
  }
}

}  // namespace

Eigen::MatrixXd PpcaModel::M() const {
  const Eigen::Index d = W.cols();
  return W.transpose() * W + sigma2 * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd PpcaModel::C() const {
  const Eigen::Index n = W.rows();
  return W * W.transpose() + sigma2 * Eigen::MatrixXd::Identity(n, n);
}

void PpcaModel::validate() const {
  check_dim(static_cast<int>(W.cols()), W.rows());
  if (mu.size() != W.rows()) throw std::invalid_argument("PpcaModel: mu and W disagree on D");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("PpcaModel: sigma2 must be positive and finite");
  }
}

SampleMoments sample_mean_cov(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw std::invalid_argument("sample_mean_cov: need at least two rows");
  SampleMoments m;
  m.mean = x.colwise().mean().transpose();
  m.cov = scatter_about(x, m.mean);
  return m;
}

Eigen::MatrixXd scatter_about(const Eigen::MatrixXd& x, const Eigen::VectorXd& mu) {
  if (mu.size() != x.cols()) throw std::invalid_argument("scatter_about: width mismatch");
  const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
  Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(x.rows());
  symmetrize(s);
  return s;
}

PpcaModel ppca_closed_form(const Eigen::VectorXd& mean, const EigenPair& eig, int d) {
  const Eigen::Index ambient = eig.values.size();
  check_dim(d, ambient);
  const Eigen::VectorXd& lambda = eig.values;
  const double sigma2 = lambda.tail(ambient - d).mean();
  const double floor = 1e-10 * lambda.sum() / static_cast<double>(ambient);
  if (!(lambda(d - 1) - sigma2 > floor)) {
    throw DegenerateComponentError(d, lambda(d - 1), sigma2);
  }
  PpcaModel m;
  m.mu = mean;
  m.sigma2 = sigma2;
  const Eigen::VectorXd scale = (lambda.head(d).array() - sigma2).sqrt();
  m.W = eig.vectors.leftCols(d) * scale.asDiagonal();
  if (!(sigma2 > 0.0)) {
    throw NumericalError("closed-form PPCA: noise variance is not positive");
  }
  return m;
}

PpcaModel ppca_closed_form(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int d) {
  check_dim(d, cov.rows());
  return ppca_closed_form(mean, sorted_eigen(cov), d);
}

PpcaModel ppca_closed_form(const Eigen::MatrixXd& x, int d) {
  check_dim(d, x.cols());
  const SampleMoments m = sample_mean_cov(x);
  return ppca_closed_form(m.mean, m.cov, d);
}

double ppca_loglik(Eigen::Index n, const Eigen::MatrixXd& scatter, const PpcaModel& model) {
  const Eigen::LLT<Eigen::MatrixXd> llt(model.C());
  if (llt.info() != Eigen::Success) throw NumericalError("ppca_loglik: C is not positive definite");
  const double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const double trace_term = llt.solve(scatter).trace();
  const auto dim = static_cast<double>(scatter.rows());
  return -0.5 * static_cast<double>(n) * (dim * kLogTwoPi + log_det + trace_term);
}

double ppca_loglik(const Eigen::MatrixXd& x, const PpcaModel& model) {
  model.validate();
  if (x.cols() != model.ambient_dim()) throw std::invalid_argument("ppca_loglik: width mismatch");
  return ppca_loglik(x.rows(), scatter_about(x, model.mu), model);
}

EmUpdate ppca_em_update(const Eigen::MatrixXd& scatter, const Eigen::MatrixXd& W, double sigma2) {
  const Eigen::Index d = W.cols();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd m = W.transpose() * W + sigma2 * eye;
  const Eigen::LDLT<Eigen::MatrixXd> m_fact(m);
  if (m_fact.info() != Eigen::Success || !(m_fact.vectorD().minCoeff() > 0.0)) {
    throw NumericalError("PPCA EM update: M is singular");
  }
  const Eigen::MatrixXd sw = scatter * W;
  const Eigen::MatrixXd inner = sigma2 * eye + m_fact.solve(W.transpose() * sw);
  const Eigen::PartialPivLU<Eigen::MatrixXd> inner_fact(inner.transpose());
  EmUpdate out;
  out.W = inner_fact.solve(sw.transpose()).transpose();
  const Eigen::MatrixXd sw_minv = m_fact.solve(sw.transpose()).transpose();  // S W M^{-1}
  out.sigma2 = (scatter.trace() - (sw_minv * out.W.transpose()).trace()) /
               static_cast<double>(scatter.rows());
  if (!out.W.allFinite() || !std::isfinite(out.sigma2)) {
    throw NumericalError("PPCA EM update produced non-finite parameters");
  }
  return out;
}

PpcaEmResult ppca_em(const Eigen::MatrixXd& x, int d, const PpcaModel& init, double tol,
                     int max_iter) {
  check_dim(d, x.cols());
  if (init.latent_dim() != d || init.ambient_dim() != x.cols()) {
    throw std::invalid_argument("ppca_em: initial model has the wrong shape");
  }
  const SampleMoments mom = sample_mean_cov(x);
  PpcaEmResult out;
  out.model = init;
  out.model.mu = mom.mean;
  out.model.validate();
  double previous = ppca_loglik(x.rows(), mom.cov, out.model);
  for (int iter = 1; iter <= max_iter; ++iter) {
    const EmUpdate up = ppca_em_update(mom.cov, out.model.W, out.model.sigma2);
    out.model.W = up.W;
    out.model.sigma2 = up.sigma2;
    const double ll = ppca_loglik(x.rows(), mom.cov, out.model);
    out.trace.push_back(ll);
    out.iterations = iter;
    if (std::abs(ll - previous) <= tol * std::abs(previous)) {
      out.converged = true;
      break;
    }
    previous = ll;
  }
  return out;
}

LatentPosterior latent_posterior(const Eigen::VectorXd& x, const PpcaModel& model) {
  if (x.size() != model.ambient_dim()) {
    throw std::invalid_argument("latent_posterior: observation length mismatch");
  }
  const Eigen::LDLT<Eigen::MatrixXd> m_fact(model.M());
  LatentPosterior p;
  p.mean = m_fact.solve(model.W.transpose() * (x - model.mu));
  const Eigen::Index d = model.W.cols();
  p.cov = model.sigma2 * m_fact.solve(Eigen::MatrixXd::Identity(d, d));
  return p;
}

Eigen::MatrixXd posterior_means(const Eigen::MatrixXd& x, const PpcaModel& model) {
  if (x.cols() != model.ambient_dim()) {
    throw std::invalid_argument("posterior_means: width mismatch");
  }
  const Eigen::LDLT<Eigen::MatrixXd> m_fact(model.M());
  const Eigen::MatrixXd centered = x.rowwise() - model.mu.transpose();
  // Rows of (M^{-1} W^T (x - mu))^T.
  return m_fact.solve(model.W.transpose() * centered.transpose()).transpose();
}

}  // namespace torusppca

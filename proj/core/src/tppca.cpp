#include "torusppca/tppca.hpp"

#include <cmath>
#include <stdexcept>

namespace torusppca {

void TppcaConfig::validate(Eigen::Index ambient_dim) const {
  if (d < 1 || d >= ambient_dim) {
    throw std::invalid_argument("TPPCA: latent dimension must satisfy 1 <= d < D");
  }
  if (!(outer_tol > 0.0)) throw std::invalid_argument("TPPCA: outer_tol must be positive");
  if (outer_max_iter < 1) throw std::invalid_argument("TPPCA: outer_max_iter must be positive");
  if (lattice.radius < 1) throw std::invalid_argument("TPPCA: lattice radius must be >= 1");
}

TppcaInit tppca_init(const AngleMatrix& y, int d, const CemOptions& cem) {
  if (d < 1 || d >= y.cols()) {
    throw std::invalid_argument("tppca_init: latent dimension must satisfy 1 <= d < D");
  }
  const CemResult fit = cem_fit(y, cem);
  TppcaInit init;
  init.mu = fit.params.mu;
  init.winding = fit.winding;
  init.unwrapped = fit.unwrapped;
  init.scatter = scatter_about(fit.unwrapped, fit.params.mu);
  init.regularized = fit.regularized;
  const PpcaModel closed = ppca_closed_form(init.mu, init.scatter, d);
  init.W = closed.W;
  init.sigma2 = closed.sigma2;
  return init;
}

Step1Result tppca_step1(const AngleMatrix& y, const PpcaModel& model,
                        const LatticeOptions& lattice) {
  model.validate();
  if (y.cols() != model.ambient_dim()) throw std::invalid_argument("tppca_step1: width mismatch");
  const WrappedNormalLattice lat(WnParams{model.mu, model.C()}, lattice);
  Step1Result out;
  out.winding.radius = lattice.radius;
  out.winding.k.resize(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    out.winding.k.row(j) = lat.best_winding(y.row(j)).transpose();
  }
  out.unwrapped = unwrap(y, out.winding.k);
  out.mu = out.unwrapped.colwise().mean().transpose();
  return out;
}

EmUpdate tppca_step2(const Eigen::MatrixXd& unwrapped, const Eigen::VectorXd& mu,
                     const Eigen::MatrixXd& W, double sigma2) {
  return ppca_em_update(scatter_about(unwrapped, mu), W, sigma2);
}

double tppca_observed_loglik(const AngleMatrix& y, const PpcaModel& model,
                             const LatticeOptions& lattice) {
  const WrappedNormalLattice lat(WnParams{model.mu, model.C()}, lattice);
  double total = 0.0;
  for (Eigen::Index j = 0; j < y.rows(); ++j) total += lat.log_density(y.row(j));
  return total;
}

TppcaFit tppca_fit(const AngleMatrix& y, const TppcaConfig& config) {
  config.validate(y.cols());
  CemOptions cem = config.cem;
  cem.lattice = config.lattice;
  const TppcaInit init = tppca_init(y, config.d, cem);

  TppcaFit fit;
  fit.lattice = config.lattice;
  fit.init_regularized = init.regularized;
  fit.model.mu = init.mu;
  fit.model.W = init.W;
  fit.model.sigma2 = init.sigma2;
  fit.winding = init.winding;
  fit.unwrapped = init.unwrapped;
  fit.trace.push_back(tppca_observed_loglik(y, fit.model, config.lattice));

  for (int iter = 1; iter <= config.outer_max_iter; ++iter) {
    Step1Result s1 = tppca_step1(y, fit.model, config.lattice);
    fit.model.mu = s1.mu;
    fit.winding = std::move(s1.winding);
    fit.unwrapped = std::move(s1.unwrapped);

    const Eigen::MatrixXd scatter = scatter_about(fit.unwrapped, fit.model.mu);
    const int inner = config.step2_to_convergence ? config.step2_max_iter : 1;
    double inner_prev = ppca_loglik(y.rows(), scatter, fit.model);
    for (int s = 0; s < inner; ++s) {
      const EmUpdate up = ppca_em_update(scatter, fit.model.W, fit.model.sigma2);
      fit.model.W = up.W;
      fit.model.sigma2 = up.sigma2;
      if (!config.step2_to_convergence) break;
      const double ll = ppca_loglik(y.rows(), scatter, fit.model);
      if (std::abs(ll - inner_prev) <= config.step2_tol * std::abs(inner_prev)) break;
      inner_prev = ll;
    }

    const double ll = tppca_observed_loglik(y, fit.model, config.lattice);
    const double previous = fit.trace.back();
    if (ll < previous - 1e-6 * std::abs(previous)) ++fit.monotonicity_violations;
    fit.trace.push_back(ll);
    fit.iterations = iter;
    if (std::abs(ll - previous) <= config.outer_tol * std::abs(previous)) {
      fit.converged = true;
      break;
    }
  }
  fit.scores = posterior_means(fit.unwrapped, fit.model);
  return fit;
}

Reconstruction tppca_reconstruct(const TppcaFit& fit) {
  Eigen::MatrixXd x = (fit.scores * fit.model.W.transpose()).rowwise() +
                      fit.model.mu.transpose();
  AngleMatrix angles = AngleMatrix::wrapped(x);
  return Reconstruction{std::move(x), std::move(angles)};
}

Eigen::MatrixXd tppca_scores(const AngleMatrix& y, const PpcaModel& model,
                             const LatticeOptions& lattice) {
  model.validate();
  if (y.cols() != model.ambient_dim()) throw std::invalid_argument("tppca_scores: width mismatch");
  const WrappedNormalLattice lat(WnParams{model.mu, model.C()}, lattice);
  Eigen::MatrixXi k(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.rows(); ++j) k.row(j) = lat.best_winding(y.row(j)).transpose();
  return posterior_means(unwrap(y, k), model);
}

}  // namespace torusppca

#include "torusppca/wrapped_normal.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "torusppca/errors.hpp"
#include "torusppca/linalg.hpp"

namespace torusppca {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void require_finite(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("wrap: non-finite angle");
}

}  // namespace

double wrap_angle(double x) {
  require_finite(x);
  double r = x - kTwoPi * std::floor(x / kTwoPi);
  // x slightly below a multiple of 2pi can round up to exactly 2pi.
  if (r >= kTwoPi || r < 0.0) r = 0.0;
  return r;
}

double angular_difference(double a, double b) {
  const double d = wrap_angle(a - b);
  return d >= std::numbers::pi ? d - kTwoPi : d;
}

AngleMatrix::AngleMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("AngleMatrix: need at least one row and one column");
  }
  for (Eigen::Index c = 0; c < values_.cols(); ++c) {
    for (Eigen::Index r = 0; r < values_.rows(); ++r) {
      const double v = values_(r, c);
      if (!(v >= 0.0 && v < kTwoPi)) {
        throw std::invalid_argument("AngleMatrix: entry (" + std::to_string(r) + ", " +
                                    std::to_string(c) + ") is outside [0, 2pi)");
      }
    }
  }
}

AngleMatrix AngleMatrix::wrapped(const Eigen::MatrixXd& raw) { return AngleMatrix(wrap(raw)); }

WrappedNormalLattice::WrappedNormalLattice(WnParams params, LatticeOptions options)
    : params_(std::move(params)), options_(options) {
  const Eigen::Index d = params_.mu.size();
  if (d < 1 || params_.sigma.rows() != d || params_.sigma.cols() != d) {
    throw std::invalid_argument("WrappedNormalLattice: mu/sigma shape mismatch");
  }
  if (options_.radius < 0) {
    throw std::invalid_argument("WrappedNormalLattice: negative lattice radius");
  }
  if (!params_.mu.allFinite() || !params_.sigma.allFinite()) {
    throw std::invalid_argument("WrappedNormalLattice: non-finite parameters");
  }
  Eigen::MatrixXd sym = params_.sigma;
  symmetrize(sym);
  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym,
                                  Eigen::EigenvaluesOnly).eigenvalues();
  if (!(eig.minCoeff() > 0.0) || eig.minCoeff() <= 1e-13 * eig.maxCoeff()) {
    throw NumericalError("wrapped normal covariance is not positive definite");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("wrapped normal covariance: Cholesky factorisation failed");
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  whitener_ = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  whitened_period_ = kTwoPi * whitener_;
  log_norm_ = -0.5 * static_cast<double>(d) * kLogTwoPi - lower.diagonal().array().log().sum();
}

template <typename Visitor>
void WrappedNormalLattice::enumerate(const Eigen::VectorXd& y, const double* bound,
                                     Visitor&& visit) const {
  const int d = dim();
  if (y.size() != d) throw std::invalid_argument("wrapped normal: observation length mismatch");
  const Eigen::VectorXd offset = y - params_.mu;
  const int radius = options_.radius;
  const auto ud = static_cast<std::size_t>(d);

  std::vector<std::vector<int>> candidates(ud);
  const double log_cut = options_.prune_relative > 0.0
                             ? -std::log(options_.prune_relative)
                             : std::numeric_limits<double>::infinity();
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) {
    auto& list = candidates[static_cast<std::size_t>(i)];
    const double var = params_.sigma(i, i);
    double best = std::numeric_limits<double>::infinity();
    for (int k = -radius; k <= radius; ++k) {
      const double r = offset(i) + kTwoPi * k;
      best = std::min(best, r * r);
    }
    for (int k = -radius; k <= radius; ++k) {
      const double r = offset(i) + kTwoPi * k;
      if ((r * r - best) / (2.0 * var) <= log_cut) list.push_back(k);
    }
    const std::size_t cap = options_.max_terms + 1;
    count = count > cap / list.size() ? cap : std::min(cap, count * list.size());
  }
  if (count > options_.max_terms) {
    throw ResourceError("winding lattice enumeration exceeds the budget of " +
                        std::to_string(options_.max_terms) + " terms");
  }

  // The whitener is lower triangular, so once k_0..k_i are fixed the whitened
  // residual entries 0..i are final and their squared sum bounds q from below.
  // Row `level` of `partial` is the whitened residual with windings 0..level-1
  // applied; `settled[level]` is the sum of its final squared entries.
  // The last coordinate varies fastest, which yields lexicographic order.
  std::vector<double> partial((ud + 1) * ud);
  std::vector<double> settled(ud + 1, 0.0);
  Eigen::Map<Eigen::VectorXd>(partial.data(), d) = whitener_ * offset;
  const double* period = whitened_period_.data();  // column-major
  Eigen::VectorXi k(d);
  auto recurse = [&](auto&& self, int level) -> void {
    const auto lv = static_cast<std::size_t>(level);
    const double* cur = partial.data() + lv * ud;
    const double* col = period + lv * ud;
    if (level == d - 1) {
      for (int kk : candidates[lv]) {
        const double r = cur[lv] + kk * col[lv];
        const double q = settled[lv] + r * r;
        if (bound != nullptr && q > *bound) continue;
        k(level) = kk;
        visit(k, q);
      }
      return;
    }
    double* next = partial.data() + (lv + 1) * ud;
    for (int kk : candidates[lv]) {
      const double r = cur[lv] + kk * col[lv];
      const double s = settled[lv] + r * r;
      if (bound != nullptr && s > *bound) continue;
      settled[lv + 1] = s;
      for (std::size_t i = lv + 1; i < ud; ++i) next[i] = cur[i] + kk * col[i];
      k(level) = kk;
      self(self, level + 1);
    }
  };
  recurse(recurse, 0);
}

namespace {

// Terms more than this far above the smallest quadratic form carry relative
// weight below exp(-50), far under double precision for any lattice size the
// budget admits.
constexpr double kNegligibleGap = 100.0;

}  // namespace

double WrappedNormalLattice::nearest_rounding_form(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd offset = y - params_.mu;
  Eigen::VectorXd shifted = offset;
  for (Eigen::Index i = 0; i < offset.size(); ++i) {
    const double k = std::clamp(std::round(-offset(i) / kTwoPi),
                                static_cast<double>(-options_.radius),
                                static_cast<double>(options_.radius));
    shifted(i) += kTwoPi * k;
  }
  return (whitener_ * shifted).squaredNorm();
}

double WrappedNormalLattice::log_density(const Eigen::VectorXd& y) const {
  if (y.size() != dim()) throw std::invalid_argument("wrapped normal: observation length mismatch");
  // Seeding the cutoff with a feasible term only tightens pruning of terms that
  // are negligible relative to it.
  double bound = nearest_rounding_form(y) + kNegligibleGap;
  double q_min = std::numeric_limits<double>::infinity();
  double acc = 0.0;
  enumerate(y, &bound, [&](const Eigen::VectorXi&, double q) {
    if (q < q_min) {
      acc = (acc == 0.0 ? 0.0 : acc * std::exp(-0.5 * (q_min - q))) + 1.0;
      q_min = q;
      bound = std::min(bound, q_min + kNegligibleGap);
    } else {
      acc += std::exp(-0.5 * (q - q_min));
    }
  });
  return log_norm_ - 0.5 * q_min + std::log(acc);
}

Eigen::VectorXi WrappedNormalLattice::best_winding(const Eigen::VectorXd& y) const {
  if (y.size() != dim()) throw std::invalid_argument("wrapped normal: observation length mismatch");
  // Subtrees whose lower bound strictly exceeds the incumbent cannot win or
  // tie, so lexicographic tie-breaking is unaffected by the pruning.
  double bound = nearest_rounding_form(y);
  bound += 1e-9 * (1.0 + bound);
  double q_min = std::numeric_limits<double>::infinity();
  Eigen::VectorXi best = Eigen::VectorXi::Zero(dim());
  enumerate(y, &bound, [&](const Eigen::VectorXi& k, double q) {
    if (q < q_min) {
      q_min = q;
      best = k;
      bound = std::min(bound, q_min);
    }
  });
  return best;
}

std::vector<WrappedNormalLattice::Weight> WrappedNormalLattice::weights(
    const Eigen::VectorXd& y) const {
  std::vector<Weight> out;
  double q_min = std::numeric_limits<double>::infinity();
  enumerate(y, nullptr, [&](const Eigen::VectorXi& k, double q) {
    out.push_back({k, q});
    q_min = std::min(q_min, q);
  });
  double total = 0.0;
  for (auto& w : out) {
    w.v = std::exp(-0.5 * (w.v - q_min));
    total += w.v;
  }
  for (auto& w : out) w.v /= total;
  return out;
}

double WrappedNormalLattice::log_normal(const Eigen::VectorXd& x) const {
  return log_norm_ - 0.5 * (whitener_ * (x - params_.mu)).squaredNorm();
}

std::size_t WrappedNormalLattice::term_count(const Eigen::VectorXd& y) const {
  std::size_t n = 0;
  enumerate(y, nullptr, [&](const Eigen::VectorXi&, double) { ++n; });
  return n;
}

double wn_log_density(const Eigen::VectorXd& y, const WnParams& params,
                      const LatticeOptions& options) {
  return WrappedNormalLattice(params, options).log_density(y);
}

int adaptive_lattice_radius(const Eigen::VectorXd& y, const WnParams& params,
                            double relative_tolerance) {
  const double log_tol = -std::log(relative_tolerance);
  const double pi = std::numbers::pi;
  int radius = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double spread = std::sqrt(2.0 * params.sigma(i, i) * log_tol + pi * pi);
    const double reach = std::abs(y(i) - params.mu(i)) + spread;
    radius = std::max(radius, static_cast<int>(std::ceil(reach / kTwoPi)) - 1);
  }
  return std::max(radius, 0);
}

WnParams circular_moment_init(const AngleMatrix& y) {
  const Eigen::MatrixXd& v = y.values();
  const Eigen::Index d = v.cols();
  WnParams p;
  p.mu.resize(d);
  p.sigma = Eigen::MatrixXd::Zero(d, d);
  constexpr double kMaxVar = kTwoPi * kTwoPi;
  constexpr double kMinVar = 1e-12;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double s = v.col(i).array().sin().mean();
    const double c = v.col(i).array().cos().mean();
    p.mu(i) = wrap_angle(std::atan2(s, c));
    const double resultant = std::hypot(s, c);
    double var = resultant > 0.0 ? -2.0 * std::log(resultant) : kMaxVar;
    p.sigma(i, i) = std::clamp(var, kMinVar, kMaxVar);
  }
  return p;
}

Eigen::MatrixXd unwrap(const AngleMatrix& y, const Eigen::MatrixXi& k) {
  if (k.rows() != y.rows() || k.cols() != y.cols()) {
    throw std::invalid_argument("unwrap: winding matrix shape mismatch");
  }
  return y.values() + kTwoPi * k.cast<double>();
}

double classification_loglik(const Eigen::MatrixXd& unwrapped, const WnParams& params) {
  // Lattice radius is irrelevant for the plain normal density.
  const WrappedNormalLattice lattice(params, LatticeOptions{0, 1, 0.0});
  double total = 0.0;
  for (Eigen::Index j = 0; j < unwrapped.rows(); ++j) {
    total += lattice.log_normal(unwrapped.row(j).transpose());
  }
  return total;
}

bool regularize_covariance(Eigen::MatrixXd& sigma, double ridge) {
  symmetrize(sigma);
  const auto d = static_cast<double>(sigma.rows());
  const double tr = sigma.trace();
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                             sigma, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig > 1e-10 * tr / d && tr > 0.0) return false;
  const double shift = tr > 0.0 ? ridge * tr / d : ridge;
  sigma.diagonal().array() += shift;
  return true;
}

namespace {

Eigen::MatrixXd divisor_n_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(x.rows());
}

}  // namespace

CemResult cem_fit(const AngleMatrix& y, const CemOptions& options,
                  const std::optional<WnParams>& init) {
  const Eigen::Index n = y.rows();
  const Eigen::Index d = y.cols();
  if (n <= d) {
    throw std::invalid_argument("cem_fit: need more observations than dimensions");
  }
  if (options.lattice.radius < 1) {
    throw std::invalid_argument("cem_fit: lattice radius must be at least 1");
  }

  CemResult out;
  out.params = init ? *init : circular_moment_init(y);
  out.winding.radius = options.lattice.radius;
  Eigen::MatrixXi previous;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const WrappedNormalLattice lattice(out.params, options.lattice);
    Eigen::MatrixXi k(n, d);
    for (Eigen::Index j = 0; j < n; ++j) k.row(j) = lattice.best_winding(y.row(j)).transpose();

    out.unwrapped = unwrap(y, k);
    out.params.mu = out.unwrapped.colwise().mean().transpose();
    out.params.sigma = divisor_n_covariance(out.unwrapped, out.params.mu);
    out.regularized |= regularize_covariance(out.params.sigma, options.ridge);
    out.winding.k = k;
    out.iterations = iter;

    const double ll = classification_loglik(out.unwrapped, out.params);
    const bool stalled = !out.trace.empty() &&
                         ll - out.trace.back() <= options.tol * (1.0 + std::abs(ll));
    out.trace.push_back(ll);
    if ((iter > 1 && k == previous) || stalled) {
      out.converged = true;
      break;
    }
    previous = std::move(k);
  }
  return out;
}

}  // namespace torusppca

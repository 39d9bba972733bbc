#include "torusppca/simulation.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "torusppca/linalg.hpp"
#include "torusppca/parallel.hpp"

namespace torusppca {

void SimScenario::validate() const {
  if (D < 2) throw std::invalid_argument("scenario: D must be at least 2");
  if (n <= D) throw std::invalid_argument("scenario: need n > D");
  if (d_true < 1 || d_true >= D) throw std::invalid_argument("scenario: need 1 <= d_true < D");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("scenario: sigma must be positive");
  if (replications < 1) throw std::invalid_argument("scenario: replications must be positive");
  if (!(w_singular_min > 0.0 && w_singular_min <= w_singular_max)) {
    throw std::invalid_argument("scenario: need 0 < w_singular_min <= w_singular_max");
  }
}

SimDataset gen_dataset(const SimScenario& s, int rep) {
  s.validate();
  if (rep < 0) throw std::invalid_argument("gen_dataset: negative replication index");
  std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                    static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.D),
                    static_cast<std::uint32_t>(s.d_true),
                    static_cast<std::uint32_t>(std::llround(s.sigma * 1e6)),
                    static_cast<std::uint32_t>(rep)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_real_distribution<double> scale(s.w_singular_min, s.w_singular_max);

  SimDataset out{AngleMatrix(Eigen::MatrixXd::Zero(1, 1)), {}, {}, {}, {}};
  out.mu_true.resize(s.D);
  for (int i = 0; i < s.D; ++i) out.mu_true(i) = angle(rng);

  Eigen::MatrixXd g(s.D, s.d_true);
  for (int c = 0; c < s.d_true; ++c) {
    for (int r = 0; r < s.D; ++r) g(r, c) = normal(rng);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(s.D, s.d_true);
  Eigen::VectorXd sv(s.d_true);
  for (int c = 0; c < s.d_true; ++c) sv(c) = scale(rng);
  out.w_true = q * sv.asDiagonal();

  out.z_true.resize(s.n, s.d_true);
  for (int c = 0; c < s.d_true; ++c) {
    for (int r = 0; r < s.n; ++r) out.z_true(r, c) = normal(rng);
  }
  Eigen::MatrixXd eps(s.n, s.D);
  for (int c = 0; c < s.D; ++c) {
    for (int r = 0; r < s.n; ++r) eps(r, c) = s.sigma * normal(rng);
  }
  out.x_true = ((out.z_true * out.w_true.transpose()).rowwise() + out.mu_true.transpose()) + eps;
  out.y = AngleMatrix::wrapped(out.x_true);
  return out;
}

MetricRecord compute_metrics(const Eigen::MatrixXd& x_recons, const Eigen::MatrixXd& z_recons,
                             const SimDataset& truth, const MetricOptions& options) {
  if (x_recons.rows() != truth.x_true.rows() || x_recons.cols() != truth.x_true.cols()) {
    throw std::invalid_argument("compute_metrics: reconstructed X has the wrong shape");
  }
  if (z_recons.rows() != truth.z_true.rows() || z_recons.cols() != truth.z_true.cols()) {
    throw std::invalid_argument("compute_metrics: reconstructed Z has the wrong shape");
  }
  const Eigen::MatrixXd target =
      options.target == XTarget::kObserved
          ? truth.x_true
          : Eigen::MatrixXd((truth.z_true * truth.w_true.transpose()).rowwise() +
                            truth.mu_true.transpose());
  Eigen::MatrixXd diff = x_recons - target;
  if (options.angular) {
    diff = diff.unaryExpr([](double v) { return angular_difference(v, 0.0); });
  } else if (options.align_lattice) {
    for (Eigen::Index c = 0; c < diff.cols(); ++c) {
      const double shift = kTwoPi * std::round(-diff.col(c).mean() / kTwoPi);
      diff.col(c).array() += shift;
    }
  }
  MetricRecord r;
  const auto nx = static_cast<double>(diff.size());
  r.mse_x = diff.squaredNorm() / nx;
  r.mae_x = diff.cwiseAbs().sum() / nx;

  const Eigen::MatrixXd rot = orthogonal_procrustes(z_recons, truth.z_true);
  const Eigen::MatrixXd dz = z_recons * rot - truth.z_true;
  const auto nz = static_cast<double>(dz.size());
  r.mse_z = dz.squaredNorm() / nz;
  r.mae_z = dz.cwiseAbs().sum() / nz;
  return r;
}

std::string method_name(Method m) { return m == Method::kTppca ? "TPPCA" : "PPCA"; }

MethodOutput run_tppca(const AngleMatrix& y, int d, const TppcaConfig& base) {
  TppcaConfig cfg = base;
  cfg.d = d;
  const TppcaFit fit = tppca_fit(y, cfg);
  MethodOutput out;
  out.x_recons = tppca_reconstruct(fit).unwrapped;
  out.z_recons = fit.scores;
  out.converged = fit.converged;
  return out;
}

MethodOutput run_ppca(const AngleMatrix& y, int d) {
  const PpcaModel model = ppca_closed_form(y.values(), d);
  MethodOutput out;
  out.z_recons = posterior_means(y.values(), model);
  out.x_recons = (out.z_recons * model.W.transpose()).rowwise() + model.mu.transpose();
  return out;
}

namespace {

struct RepRecord {
  bool ok[2] = {false, false};
  bool converged[2] = {false, false};
  MetricRecord metrics[2];
  bool selection_ok = false;
  int chosen[4] = {0, 0, 0, 0};
};

constexpr const char* kSelectors[4] = {"lrt1", "lrt2", "kg", "cv"};

}  // namespace

MetricTable monte_carlo(const std::vector<SimScenario>& grid, const MonteCarloOptions& options) {
  if (grid.empty()) throw std::invalid_argument("monte_carlo: empty grid");
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const SimScenario& s : grid) {
    s.validate();
    offsets.push_back(total);
    total += static_cast<std::size_t>(s.replications);
  }
  std::vector<RepRecord> records(total);

  parallel_for(
      total,
      [&](std::size_t task) {
        std::size_t cell = 0;
        while (cell + 1 < grid.size() && offsets[cell + 1] <= task) ++cell;
        const SimScenario& s = grid[cell];
        const int rep = static_cast<int>(task - offsets[cell]);
        RepRecord& rec = records[task];
        const SimDataset data = gen_dataset(s, rep);
        for (int m = 0; m < 2; ++m) {
          try {
            const MethodOutput out = m == 0 ? run_tppca(data.y, s.d_true, options.tppca)
                                            : run_ppca(data.y, s.d_true);
            rec.metrics[m] = compute_metrics(out.x_recons, out.z_recons, data, options.metrics);
            rec.converged[m] = out.converged;
            rec.ok[m] = true;
          } catch (const std::exception&) {
            rec.ok[m] = false;
          }
        }
        if (options.run_selection) {
          try {
            CemOptions cem = options.tppca.cem;
            cem.lattice = options.tppca.lattice;
            const SelectionReport rep_sel = select_dimension(data.y, options.selection, cem);
            rec.chosen[0] = rep_sel.lrt1 ? rep_sel.lrt1->chosen_d : 0;
            rec.chosen[1] = rep_sel.lrt2 ? rep_sel.lrt2->chosen_d : 0;
            rec.chosen[2] = rep_sel.kg ? rep_sel.kg->chosen_d : 0;
            rec.chosen[3] = rep_sel.cv ? rep_sel.cv->chosen_d : 0;
            rec.selection_ok = true;
          } catch (const std::exception&) {
            rec.selection_ok = false;
          }
        }
      },
      options.threads);

  MetricTable table;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const SimScenario& s = grid[c];
    const auto begin = records.begin() + static_cast<std::ptrdiff_t>(offsets[c]);
    const auto end = begin + s.replications;
    for (int m = 0; m < 2; ++m) {
      CellSummary cell;
      cell.scenario = s;
      cell.method = m == 0 ? Method::kTppca : Method::kPpca;
      for (auto it = begin; it != end; ++it) {
        if (!it->ok[m]) {
          ++cell.failures;
          continue;
        }
        ++cell.successes;
        if (!it->converged[m]) ++cell.non_converged;
        cell.mean.mse_x += it->metrics[m].mse_x;
        cell.mean.mae_x += it->metrics[m].mae_x;
        cell.mean.mse_z += it->metrics[m].mse_z;
        cell.mean.mae_z += it->metrics[m].mae_z;
      }
      if (cell.successes > 0) {
        const double k = cell.successes;
        cell.mean.mse_x /= k;
        cell.mean.mae_x /= k;
        cell.mean.mse_z /= k;
        cell.mean.mae_z /= k;
      }
      table.cells.push_back(cell);
    }
    if (options.run_selection) {
      int ok = 0;
      std::map<int, int> counts[4];
      for (auto it = begin; it != end; ++it) {
        if (!it->selection_ok) continue;
        ++ok;
        for (int k = 0; k < 4; ++k) {
          if (it->chosen[k] > 0) ++counts[k][it->chosen[k]];
        }
      }
      table.selection_failures.push_back(s.replications - ok);
      for (int k = 0; k < 4; ++k) {
        for (const auto& [d_hat, count] : counts[k]) {
          table.selection.push_back(
              SelectionFrequency{s, kSelectors[k], d_hat, count, static_cast<double>(count) / ok});
        }
      }
    }
  }
  return table;
}

std::vector<SimScenario> reference_grid(int replications, std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  const double sigmas[] = {pi / 8, pi / 4, pi / 2, pi, 1.5 * pi, 2 * pi};
  std::vector<SimScenario> grid;
  for (int d : {2, 3}) {
    for (double sigma : sigmas) {
      for (int n : {50, 100, 500}) {
        SimScenario s;
        s.n = n;
        s.D = 5;
        s.d_true = d;
        s.sigma = sigma;
        s.replications = replications;
        s.seed = seed;
        grid.push_back(s);
      }
    }
  }
  return grid;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(std::ostream& out, const MetricTable& table) {
  out << "method,n,D,d_true,sigma,metric,value,replications,failures\n";
  for (const CellSummary& c : table.cells) {
    const std::pair<const char*, double> values[] = {{"mse_x", c.mean.mse_x},
                                                     {"mae_x", c.mean.mae_x},
                                                     {"mse_z", c.mean.mse_z},
                                                     {"mae_z", c.mean.mae_z}};
    for (const auto& [name, value] : values) {
      out << method_name(c.method) << ',' << c.scenario.n << ',' << c.scenario.D << ','
          << c.scenario.d_true << ',' << format_double(c.scenario.sigma) << ',' << name << ','
          << (c.successes > 0 ? format_double(value) : "NaN") << ',' << c.scenario.replications
          << ',' << c.failures << '\n';
    }
  }
}

void write_selection_csv(std::ostream& out, const MetricTable& table) {
  out << "selector,n,D,d_true,sigma,d_hat,count,frequency\n";
  for (const SelectionFrequency& f : table.selection) {
    out << f.selector << ',' << f.scenario.n << ',' << f.scenario.D << ',' << f.scenario.d_true
        << ',' << format_double(f.scenario.sigma) << ',' << f.d_hat << ',' << f.count << ','
        << format_double(f.frequency) << '\n';
  }
}

}  // namespace torusppca

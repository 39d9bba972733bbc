#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "torusppca/model_selection.hpp"
#include "torusppca/tppca.hpp"
#include "torusppca/wrapped_normal.hpp"

namespace torusppca {

/// One Monte Carlo cell. The true loading matrix has orthonormal Gaussian
/// directions scaled by singular values drawn from U[w_singular_min,
/// w_singular_max]; the true mean is uniform on [0, 2pi)^D.
struct SimScenario {
  int n = 100;
  int D = 5;
  int d_true = 2;
  double sigma = 0.39269908169872414;  // pi / 8
  int replications = 100;
  std::uint64_t seed = 1;
  double w_singular_min = 1.0;
  double w_singular_max = 2.0;

  void validate() const;
};

struct SimDataset {
  AngleMatrix y;
  Eigen::MatrixXd x_true;  // mu + W z + eps, unwrapped
  Eigen::MatrixXd z_true;
  Eigen::MatrixXd w_true;
  Eigen::VectorXd mu_true;
};

/// Draws replication `rep` of the scenario. The stream depends only on
/// (seed, n, D, d_true, sigma, rep), so any replication can be regenerated
/// on its own.
SimDataset gen_dataset(const SimScenario& scenario, int rep);

/// What the reconstructed X is compared with.
enum class XTarget {
  kObserved,  // the generated X including noise
  kSignal,    // mu + W z, the noise-free part
};

struct MetricOptions {
  XTarget target = XTarget::kObserved;
  /// Shift each reconstructed coordinate by the integer multiple of 2 pi that
  /// minimises its squared error. Reconstructions are only defined up to such
  /// shifts because the mean lives on the circle.
  bool align_lattice = true;
  /// Use the shortest signed arc instead of raw differences.
  bool angular = false;
};

struct MetricRecord {
  double mse_x = 0.0;
  double mae_x = 0.0;
  double mse_z = 0.0;
  double mae_z = 0.0;
};

/// Entrywise X errors over all n D entries and Z errors over all n d entries,
/// after rotating the estimated scores onto the true ones with orthogonal
/// Procrustes.
MetricRecord compute_metrics(const Eigen::MatrixXd& x_recons, const Eigen::MatrixXd& z_recons,
                             const SimDataset& truth, const MetricOptions& options = {});

enum class Method { kTppca, kPpca };
std::string method_name(Method m);

struct MethodOutput {
  Eigen::MatrixXd x_recons;
  Eigen::MatrixXd z_recons;
  bool converged = true;
};

/// TPPCA fit and reconstruction with the true d.
MethodOutput run_tppca(const AngleMatrix& y, int d, const TppcaConfig& base = {});

/// Euclidean PPCA applied directly to the wrapped angles.
MethodOutput run_ppca(const AngleMatrix& y, int d);

struct MonteCarloOptions {
  TppcaConfig tppca;  // its d is overridden per cell
  MetricOptions metrics;
  bool run_selection = false;
  SelectionOptions selection;
  unsigned threads = 0;  // 0: default_thread_count()
};

struct CellSummary {
  SimScenario scenario;
  Method method = Method::kTppca;
  MetricRecord mean;
  int successes = 0;
  int failures = 0;
  int non_converged = 0;
};

struct SelectionFrequency {
  SimScenario scenario;
  std::string selector;  // lrt1, lrt2, kg, cv
  int d_hat = 0;
  int count = 0;
  double frequency = 0.0;  // count / successful replications
};

struct MetricTable {
  std::vector<CellSummary> cells;
  std::vector<SelectionFrequency> selection;
  /// Replications whose selection pipeline threw, per scenario in grid order.
  std::vector<int> selection_failures;
};

/// Runs every scenario of the grid, replications in parallel. Per-replication
/// records are stored by index and reduced in index order, so the table is
/// bit-identical for any thread count.
MetricTable monte_carlo(const std::vector<SimScenario>& grid, const MonteCarloOptions& options);

/// Grid of the reference study: n in {50, 100, 500}, d in {2, 3},
/// sigma in {pi/8, pi/4, pi/2, pi, 3pi/2, 2pi}, D = 5.
std::vector<SimScenario> reference_grid(int replications, std::uint64_t seed);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

/// Columns: method,n,D,d_true,sigma,metric,value,replications,failures.
void write_metrics_csv(std::ostream& out, const MetricTable& table);

/// Columns: selector,n,D,d_true,sigma,d_hat,count,frequency.
void write_selection_csv(std::ostream& out, const MetricTable& table);

}  // namespace torusppca

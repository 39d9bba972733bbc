#include "torusppca_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "torusppca/errors.hpp"
#include "torusppca/model_selection.hpp"
#include "torusppca/parallel.hpp"
#include "torusppca/simulation.hpp"
#include "torusppca/tppca.hpp"
#include "torusppca_cli/csv.hpp"
#include "torusppca_cli/io.hpp"
#include "torusppca_cli/model_document.hpp"
#include "torusppca_cli/sim_config.hpp"

namespace torusppca::cli {

const char* tool_version() { return TORUSPPCA_VERSION; }

namespace {

/// A request the arguments make impossible (maps to kExitUsage).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Unit { kRad, kDeg };

const std::map<std::string, Unit> kUnitNames{{"rad", Unit::kRad}, {"deg", Unit::kDeg}};

double to_radians_factor(Unit u) { return u == Unit::kDeg ? std::numbers::pi / 180.0 : 1.0; }

struct AngleInput {
  std::vector<std::string> header;
  AngleMatrix y;
  std::string digest;
};

AngleInput load_angles(const std::string& path, Unit unit) {
  const std::string text = read_file(path);
  CsvTable table = parse_csv(text);
  AngleMatrix y = AngleMatrix::wrapped(table.values * to_radians_factor(unit));
  return AngleInput{std::move(table.header), std::move(y), fnv1a64_hex(text)};
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    atomic_write_file(path, content);
  }
}

std::vector<std::string> pc_header(int d) {
  std::vector<std::string> h;
  for (int i = 1; i <= d; ++i) h.push_back("PC" + std::to_string(i));
  return h;
}

// ---- fit -----------------------------------------------------------------

struct FitArgs {
  std::string input;
  int dim = 0;
  Unit unit = Unit::kRad;
  int lattice = 2;
  double tol = 1e-7;
  int max_iter = 500;
  std::optional<std::uint64_t> seed;
  std::string output;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const AngleInput in = load_angles(a.input, a.unit);
  const auto D = static_cast<int>(in.y.cols());
  if (a.dim < 1 || a.dim >= D) {
    throw UsageError("--dim must satisfy 1 <= d < D (D = " + std::to_string(D) + ")");
  }
  if (in.y.rows() <= D) throw UsageError("need more rows than columns to fit");
  TppcaConfig cfg;
  cfg.d = a.dim;
  cfg.lattice.radius = a.lattice;
  cfg.outer_tol = a.tol;
  cfg.outer_max_iter = a.max_iter;
  cfg.seed = a.seed;
  const TppcaFit fit = tppca_fit(in.y, cfg);

  ModelDocument doc;
  doc.model = fit.model;
  doc.lattice_radius = a.lattice;
  doc.iterations = fit.iterations;
  doc.converged = fit.converged;
  doc.final_loglik = fit.trace.back();
  doc.seed = a.seed;
  doc.input_digest = in.digest;
  doc.tool_version = tool_version();
  atomic_write_file(a.output, dump_model(doc));

  out << "D=" << D << " d=" << a.dim << " n=" << in.y.rows()
      << " sigma2=" << format_double(fit.model.sigma2)
      << " loglik=" << format_double(doc.final_loglik) << " iterations=" << fit.iterations
      << " converged=" << (fit.converged ? "true" : "false") << '\n';
  return fit.converged ? kExitOk : kExitNotConverged;
}

// ---- scores / reconstruct ---------------------------------------------------

struct ApplyArgs {
  std::string model;
  std::string input;
  Unit unit = Unit::kRad;
  std::string output;
};

struct Applied {
  ModelDocument doc;
  AngleInput in;
  Eigen::MatrixXd scores;
};

Applied apply_model(const ApplyArgs& a) {
  Applied r{parse_model(read_file(a.model)), load_angles(a.input, a.unit), {}};
  if (r.in.y.cols() != r.doc.model.ambient_dim()) {
    throw UsageError("model has D = " + std::to_string(r.doc.model.ambient_dim()) +
                     " but the input has " + std::to_string(r.in.y.cols()) + " columns");
  }
  LatticeOptions lattice;
  lattice.radius = r.doc.lattice_radius;
  r.scores = tppca_scores(r.in.y, r.doc.model, lattice);
  return r;
}

int cmd_scores(const ApplyArgs& a, std::ostream& out) {
  const Applied r = apply_model(a);
  emit(a.output, format_csv(pc_header(r.doc.model.latent_dim()), r.scores), out);
  return kExitOk;
}

int cmd_reconstruct(const ApplyArgs& a, std::ostream& out) {
  const Applied r = apply_model(a);
  const Eigen::MatrixXd x =
      (r.scores * r.doc.model.W.transpose()).rowwise() + r.doc.model.mu.transpose();
  const Eigen::MatrixXd angles = wrap(x) / to_radians_factor(a.unit);
  emit(a.output, format_csv(r.in.header, angles), out);
  return kExitOk;
}

// ---- select ----------------------------------------------------------------

struct SelectArgs {
  std::string input;
  std::string method = "all";
  double alpha = 0.05;
  double threshold = 0.9;
  Unit unit = Unit::kRad;
  int lattice = 2;
  std::string output;
};

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json lrt_json(const LrtSelection& s) {
  nlohmann::json steps = nlohmann::json::array();
  for (const LrtStep& st : s.steps) {
    nlohmann::json j{{"d", st.test.d}};
    if (st.error) {
      j["error"] = *st.error;
    } else {
      j["statistic"] = finite_or_null(st.test.statistic);
      j["df"] = st.test.df;
      j["p_value"] = finite_or_null(st.test.p_value);
      j["clamped"] = st.test.clamped;
    }
    steps.push_back(j);
  }
  return {{"chosen_d", s.chosen_d}, {"exhausted", s.exhausted}, {"steps", steps}};
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json report_json(const SelectionReport& rep, const SelectArgs& a) {
  nlohmann::json j{{"D", rep.D},
                   {"n", rep.n},
                   {"alpha", a.alpha},
                   {"cv_threshold", a.threshold},
                   {"unwrap_regularized", rep.unwrap_regularized},
                   {"covariance_eigenvalues", to_vector(rep.covariance_eigenvalues)}};
  nlohmann::json methods = nlohmann::json::object();
  if (rep.lrt1) methods["lrt1"] = lrt_json(*rep.lrt1);
  if (rep.lrt2) methods["lrt2"] = lrt_json(*rep.lrt2);
  if (rep.kg) {
    methods["kg"] = {{"chosen_d", rep.kg->chosen_d},
                     {"raw_count", rep.kg->raw_count},
                     {"clamped", rep.kg->clamped},
                     {"eigenvalues", to_vector(rep.kg->eigenvalues)}};
  }
  if (rep.cv) {
    nlohmann::json w = nlohmann::json::array();
    for (double v : rep.cv->w) w.push_back(finite_or_null(v));
    methods["cv"] = {{"chosen_d", rep.cv->chosen_d},
                     {"press", rep.cv->press},
                     {"w", w},
                     {"truncated", rep.cv->truncated},
                     {"clamped", rep.cv->clamped}};
  }
  j["methods"] = methods;
  return j;
}

void print_report(const SelectionReport& rep, std::ostream& out) {
  out << "method  chosen_d  detail\n";
  auto lrt_line = [&](const char* name, const LrtSelection& s) {
    out << std::left << std::setw(8) << name << std::setw(10) << s.chosen_d;
    for (const LrtStep& st : s.steps) {
      out << " d=" << st.test.d;
      if (st.error) {
        out << ":error";
      } else {
        out << ":stat=" << format_double(st.test.statistic) << ",df=" << st.test.df
            << ",p=" << format_double(st.test.p_value);
      }
    }
    if (s.exhausted) out << " (all rejected)";
    out << '\n';
  };
  if (rep.lrt1) lrt_line("lrt1", *rep.lrt1);
  if (rep.lrt2) lrt_line("lrt2", *rep.lrt2);
  if (rep.kg) {
    out << std::left << std::setw(8) << "kg" << std::setw(10) << rep.kg->chosen_d << " eig=";
    for (Eigen::Index i = 0; i < rep.kg->eigenvalues.size(); ++i) {
      out << (i ? "," : "") << format_double(rep.kg->eigenvalues(i));
    }
    out << (rep.kg->clamped ? " (clamped)" : "") << '\n';
  }
  if (rep.cv) {
    out << std::left << std::setw(8) << "cv" << std::setw(10) << rep.cv->chosen_d << " W=";
    for (std::size_t m = 1; m < rep.cv->w.size(); ++m) {
      out << (m > 1 ? "," : "") << format_double(rep.cv->w[m]);
    }
    out << (rep.cv->clamped ? " (clamped)" : "") << '\n';
  }
}

int cmd_select(const SelectArgs& a, std::ostream& out) {
  const AngleInput in = load_angles(a.input, a.unit);
  if (in.y.cols() < 2) throw UsageError("selection needs at least two columns");
  if (in.y.rows() <= in.y.cols()) throw UsageError("selection needs more rows than columns");
  SelectionOptions opt;
  opt.alpha = a.alpha;
  opt.cv_threshold = a.threshold;
  const bool all = a.method == "all";
  opt.run_lrt1 = all || a.method == "lrt1";
  opt.run_lrt2 = all || a.method == "lrt2";
  opt.run_kg = all || a.method == "kg";
  opt.run_cv = all || a.method == "cv";
  CemOptions cem;
  cem.lattice.radius = a.lattice;
  const SelectionReport rep = select_dimension(in.y, opt, cem);
  if (!a.output.empty()) atomic_write_file(a.output, report_json(rep, a).dump(2) + "\n");
  print_report(rep, out);
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string outdir;
  std::optional<unsigned> threads;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimConfig cfg;
  try {
    cfg = parse_sim_config(read_file(a.config));
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (a.threads) cfg.mc.threads = *a.threads;
  const unsigned threads = cfg.mc.threads ? cfg.mc.threads : default_thread_count();
  const std::vector<SimScenario> grid = cfg.grid();

  const auto start = std::chrono::steady_clock::now();
  const MetricTable table = monte_carlo(grid, cfg.mc);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::filesystem::create_directories(a.outdir);
  const std::filesystem::path dir(a.outdir);
  std::ostringstream metrics;
  write_metrics_csv(metrics, table);
  atomic_write_file(dir / "metrics.csv", metrics.str());
  std::vector<std::string> outputs{"metrics.csv"};
  if (cfg.mc.run_selection) {
    std::ostringstream sel;
    write_selection_csv(sel, table);
    atomic_write_file(dir / "selection.csv", sel.str());
    outputs.push_back("selection.csv");
  }
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : cfg.entries) config[k] = v;
  const nlohmann::json manifest{{"tool_version", tool_version()},
                                {"config", config},
                                {"seed", cfg.seed},
                                {"cells", grid.size()},
                                {"threads", threads},
                                {"wall_time_seconds", wall},
                                {"outputs", outputs}};
  atomic_write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  int failures = 0;
  for (const CellSummary& c : table.cells) failures += c.failures;
  out << "cells=" << grid.size() << " replications=" << cfg.replications
      << " failures=" << failures << " wall_time_s=" << format_double(wall) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic PCA for angular data on the torus", "torusppca"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a torus PPCA model to an angle CSV");
  fit_cmd->add_option("input", fit.input, "Input CSV (header row, one angle per column)")
      ->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("-d,--dim", fit.dim, "Latent dimension d")->required();
  fit_cmd->add_option("--unit", fit.unit, "Input unit")->transform(CLI::CheckedTransformer(kUnitNames));
  fit_cmd->add_option("--lattice", fit.lattice, "Winding lattice radius J")->check(CLI::Range(1, 50));
  fit_cmd->add_option("--tol", fit.tol, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit.max_iter, "Maximum outer iterations")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit.seed, "Seed recorded in the model provenance");
  fit_cmd->add_option("-o,--output", fit.output, "Model JSON path")->required();

  ApplyArgs scores;
  auto* scores_cmd = app.add_subcommand("scores", "Posterior-mean scores for new observations");
  scores_cmd->add_option("model", scores.model, "Model JSON")->required()->check(CLI::ExistingFile);
  scores_cmd->add_option("input", scores.input, "Input CSV")->required()->check(CLI::ExistingFile);
  scores_cmd->add_option("--unit", scores.unit, "Input unit")->transform(CLI::CheckedTransformer(kUnitNames));
  scores_cmd->add_option("-o,--output", scores.output, "Scores CSV path (default stdout)");

  ApplyArgs recon;
  auto* recon_cmd = app.add_subcommand("reconstruct", "Reconstruct observations on the torus");
  recon_cmd->add_option("model", recon.model, "Model JSON")->required()->check(CLI::ExistingFile);
  recon_cmd->add_option("input", recon.input, "Input CSV")->required()->check(CLI::ExistingFile);
  recon_cmd->add_option("--unit", recon.unit, "Input and output unit")->transform(CLI::CheckedTransformer(kUnitNames));
  recon_cmd->add_option("-o,--output", recon.output, "Output CSV path (default stdout)");

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "Choose the latent dimension");
  sel_cmd->add_option("input", sel.input, "Input CSV")->required()->check(CLI::ExistingFile);
  sel_cmd->add_option("--method", sel.method, "lrt1, lrt2, kg, cv or all")
      ->check(CLI::IsMember({"lrt1", "lrt2", "kg", "cv", "all"}));
  sel_cmd->add_option("--alpha", sel.alpha, "LRT significance level")->check(CLI::Range(0.0, 1.0));
  sel_cmd->add_option("--threshold", sel.threshold, "Cross-validation W_m threshold");
  sel_cmd->add_option("--unit", sel.unit, "Input unit")->transform(CLI::CheckedTransformer(kUnitNames));
  sel_cmd->add_option("--lattice", sel.lattice, "Winding lattice radius J")->check(CLI::Range(1, 50));
  sel_cmd->add_option("-o,--output", sel.output, "JSON report path");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the Monte Carlo study");
  sim_cmd->add_option("config", sim.config, "key = value scenario file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("-o,--outdir", sim.outdir, "Output directory")->required();
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (default TORUSPPCA_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (scores_cmd->parsed()) return cmd_scores(scores, out);
    if (recon_cmd->parsed()) return cmd_reconstruct(recon, out);
    if (sel_cmd->parsed()) {
      if (!(sel.alpha > 0.0 && sel.alpha < 1.0)) throw UsageError("--alpha must be in (0, 1)");
      return cmd_select(sel, out);
    }
    if (sim_cmd->parsed()) return cmd_simulate(sim, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CsvError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace torusppca::cli

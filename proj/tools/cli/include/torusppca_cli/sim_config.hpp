#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusppca/simulation.hpp"

namespace torusppca::cli {

/// Invalid simulate configuration; reported as a usage error.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "1.5", "pi", "pi/8", "3pi/2", "3*pi/2", "2 * pi" and plain fractions
/// such as "1/3".
double parse_angle_expression(const std::string& text);

/// Flat `key = value` document; `#` starts a comment. List-valued keys take
/// comma-separated values and the grid is their Cartesian product.
struct SimConfig {
  std::vector<int> n{50, 100, 500};
  int D = 5;
  std::vector<int> d_true{2, 3};
  std::vector<double> sigma;  // defaults to the reference sigma list
  int replications = 100;
  std::uint64_t seed = 1;
  double w_singular_min = 1.0;
  double w_singular_max = 2.0;
  MonteCarloOptions mc;
  /// Raw key/value pairs in file order, echoed into the manifest.
  std::vector<std::pair<std::string, std::string>> entries;

  std::vector<SimScenario> grid() const;
};

/// Throws ConfigError listing every unknown key, or the first bad value.
SimConfig parse_sim_config(const std::string& text);

}  // namespace torusppca::cli

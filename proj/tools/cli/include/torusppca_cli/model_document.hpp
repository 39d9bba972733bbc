#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "torusppca/ppca.hpp"

namespace torusppca::cli {

/// Persisted TPPCA model. Doubles are written in shortest round-trip form, so
/// load(save(m)) == m bit for bit.
struct ModelDocument {
  static constexpr int kVersion = 1;

  int version = kVersion;
  PpcaModel model;  // mu in radians; W stored row-major
  int lattice_radius = 2;
  int iterations = 0;
  bool converged = false;
  double final_loglik = 0.0;
  std::optional<std::uint64_t> seed;
  std::string input_digest;
  std::string tool_version;

  bool operator==(const ModelDocument& other) const;
};

nlohmann::json to_json(const ModelDocument& doc);

/// Validates the schema and shapes; throws std::runtime_error describing the
/// first problem.
ModelDocument model_from_json(const nlohmann::json& j);

std::string dump_model(const ModelDocument& doc);
ModelDocument parse_model(const std::string& text);

}  // namespace torusppca::cli

#include "torusppca_cli/model_document.hpp"

#include <stdexcept>

namespace torusppca::cli {

bool ModelDocument::operator==(const ModelDocument& o) const {
  return version == o.version && model.mu == o.model.mu && model.W == o.model.W &&
         model.sigma2 == o.model.sigma2 && lattice_radius == o.lattice_radius &&
         iterations == o.iterations && converged == o.converged &&
         final_loglik == o.final_loglik && seed == o.seed && input_digest == o.input_digest &&
         tool_version == o.tool_version;
}

nlohmann::json to_json(const ModelDocument& doc) {
  nlohmann::json j;
  j["version"] = doc.version;
  j["D"] = doc.model.ambient_dim();
  j["d"] = doc.model.latent_dim();
  j["mu"] = std::vector<double>(doc.model.mu.data(), doc.model.mu.data() + doc.model.mu.size());
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(doc.model.W.size()));
  for (Eigen::Index r = 0; r < doc.model.W.rows(); ++r) {
    for (Eigen::Index c = 0; c < doc.model.W.cols(); ++c) w.push_back(doc.model.W(r, c));
  }
  j["W"] = w;
  j["sigma2"] = doc.model.sigma2;
  j["J"] = doc.lattice_radius;
  j["convergence"] = {{"iterations", doc.iterations},
                      {"converged", doc.converged},
                      {"final_loglik", doc.final_loglik}};
  j["provenance"] = {{"seed", doc.seed ? nlohmann::json(*doc.seed) : nlohmann::json(nullptr)},
                     {"input_digest", doc.input_digest},
                     {"tool_version", doc.tool_version}};
  return j;
}

ModelDocument model_from_json(const nlohmann::json& j) {
  try {
    ModelDocument doc;
    doc.version = j.at("version").get<int>();
    if (doc.version != ModelDocument::kVersion) {
      throw std::runtime_error("unsupported model version " + std::to_string(doc.version));
    }
    const int D = j.at("D").get<int>();
    const int d = j.at("d").get<int>();
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto w = j.at("W").get<std::vector<double>>();
    if (D < 2 || d < 1 || d >= D) throw std::runtime_error("model needs 1 <= d < D");
    if (mu.size() != static_cast<std::size_t>(D)) throw std::runtime_error("mu must have D entries");
    if (w.size() != static_cast<std::size_t>(D) * static_cast<std::size_t>(d)) {
      throw std::runtime_error("W must have D*d entries");
    }
    doc.model.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), D);
    doc.model.W.resize(D, d);
    for (int r = 0; r < D; ++r) {
      for (int c = 0; c < d; ++c) doc.model.W(r, c) = w[static_cast<std::size_t>(r * d + c)];
    }
    doc.model.sigma2 = j.at("sigma2").get<double>();
    doc.model.validate();
    doc.lattice_radius = j.at("J").get<int>();
    if (doc.lattice_radius < 1) throw std::runtime_error("J must be at least 1");
    const auto& conv = j.at("convergence");
    doc.iterations = conv.at("iterations").get<int>();
    doc.converged = conv.at("converged").get<bool>();
    doc.final_loglik = conv.at("final_loglik").get<double>();
    const auto& prov = j.at("provenance");
    if (!prov.at("seed").is_null()) doc.seed = prov.at("seed").get<std::uint64_t>();
    doc.input_digest = prov.at("input_digest").get<std::string>();
    doc.tool_version = prov.at("tool_version").get<std::string>();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("invalid model document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid model document: ") + e.what());
  }
}

std::string dump_model(const ModelDocument& doc) { return to_json(doc).dump(2) + "\n"; }

ModelDocument parse_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace torusppca::cli

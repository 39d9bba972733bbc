#include "torusppca_cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

#include "torusppca/simulation.hpp"

namespace torusppca::cli {

CsvError::CsvError(std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) +
                         (column > 0 ? ", column " + std::to_string(column) : std::string()) +
                         ": " + what),
      line_(line),
      column_(column) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line);
    if (!have_header) {
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (fields[c].empty()) throw CsvError(line_no, c + 1, "empty column name");
      }
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw CsvError(line_no, 0,
                     "expected " + std::to_string(table.header.size()) + " fields, found " +
                         std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw CsvError(line_no, c + 1, "'" + f + "' is not a number");
      }
      if (!std::isfinite(v)) throw CsvError(line_no, c + 1, "value is not finite");
      row[c] = v;
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw CsvError(line_no == 0 ? 1 : line_no, 0, "missing header row");
  if (rows.empty()) throw CsvError(line_no, 0, "no data rows");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

std::string format_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c > 0) out += ',';
    out += header[c];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace torusppca::cli

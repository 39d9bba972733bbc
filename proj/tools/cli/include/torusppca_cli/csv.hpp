#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace torusppca::cli {

/// Malformed CSV input. Line and column are one-based; column 0 means the
/// whole line.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Comma-separated, header row first, every other row a finite number per
/// column. Blank lines are skipped; surrounding whitespace is ignored.
CsvTable parse_csv(std::istream& in);
CsvTable parse_csv(const std::string& text);

/// Header plus rows, numbers in shortest round-trip form.
std::string format_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values);

}  // namespace torusppca::cli

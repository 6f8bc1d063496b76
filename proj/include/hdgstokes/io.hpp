#pragma once

#include <string>
#include <vector>

#include "hdgstokes/assembly.hpp"

namespace hdgstokes {

/// Matrix Market coordinate format. With symmetric = true only the lower
/// triangle is written with the matching header.
void write_matrix_market(const std::string& path, const SparseMat& A, bool symmetric = false);
void write_matrix_market(const std::string& path, const Eigen::VectorXd& v);

/// Shortest round-trip-exact decimal representation.
std::string format_double(double v);

/// Minimal CSV table with a fixed header row.
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  void write(const std::string& path) const;
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::string>& header() const { return header_; }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Residual history export: iteration, true residual, preconditioned residual.
void write_residual_history(const std::string& path, const std::vector<double>& true_res,
                            const std::vector<double>& precon_res);

}  // namespace hdgstokes

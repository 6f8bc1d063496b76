#include "hdgstokes/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hdgstokes {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_market(const std::string& path, const SparseMat& A, bool symmetric) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_matrix_market: cannot open " + path);
  os << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
  long nnz = 0;
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMat::InnerIterator it(A, col); it; ++it)
      if (!symmetric || it.row() >= it.col()) ++nnz;
  os << A.rows() << " " << A.cols() << " " << nnz << "\n";
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(A, col); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;
      os << (it.row() + 1) << " " << (it.col() + 1) << " " << format_double(it.value()) << "\n";
    }
  }
}

void write_matrix_market(const std::string& path, const Eigen::VectorXd& v) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_matrix_market: cannot open " + path);
  os << "%%MatrixMarket matrix array real general\n";
  os << v.size() << " 1\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << format_double(v(i)) << "\n";
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width mismatch");
  rows_.push_back(std::move(row));
}

void CsvTable::write(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("CsvTable: cannot open " + path);
  for (size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
  os << "\n";
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

void write_residual_history(const std::string& path, const std::vector<double>& true_res,
                            const std::vector<double>& precon_res) {
  CsvTable table({"iteration", "true_residual", "precon_residual"});
  for (size_t i = 0; i < true_res.size(); ++i) {
    table.add_row({std::to_string(i + 1), format_double(true_res[i]),
                   i < precon_res.size() ? format_double(precon_res[i]) : ""});
  }
  table.write(path);
}

}  // namespace hdgstokes

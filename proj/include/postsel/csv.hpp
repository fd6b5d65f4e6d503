#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace postsel {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

double parse_double(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int ncol() const { return static_cast<int>(header.size()); }
  int nrow() const { return static_cast<int>(rows.size()); }
};

// Comma-separated, first non-comment line is the header, '#' lines skipped.
CsvTable read_csv(const std::string& path);

// `comments` are emitted as leading '#' lines.
void write_csv(const std::string& path, const CsvTable& table,
               const std::vector<std::string>& comments = {});

// Numeric matrix from a table; if the first column is non-numeric it is
// treated as row labels and returned separately.
struct LabeledMatrix {
  std::vector<std::string> row_labels;   // empty if the table had none
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;
};

LabeledMatrix read_matrix_csv(const std::string& path);

// Single numeric column (by name, or the only column).
Eigen::VectorXd read_vector_csv(const std::string& path,
                                const std::string& column = "");

}  // namespace postsel

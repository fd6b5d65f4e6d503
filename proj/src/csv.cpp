#include "postsel/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "postsel/errors.hpp"

namespace postsel {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericalError("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw ValidationError("not a number: '" + s + "'");
  return v;
}

static bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  return end != begin && end && *end == '\0';
}

static std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

static std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split_line(t);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (static_cast<int>(cells.size()) != table.ncol())
      throw ValidationError(path + ": row with " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(table.ncol()));
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ValidationError(path + ": empty file");
  return table;
}

void write_csv(const std::string& path, const CsvTable& table,
               const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (const auto& c : comments) out << "# " << c << "\n";
  for (int j = 0; j < table.ncol(); ++j)
    out << (j ? "," : "") << table.header[j];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "," : "") << row[j];
    out << "\n";
  }
  if (!out) throw ValidationError("write failed: " + path);
}

LabeledMatrix read_matrix_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.nrow() == 0) throw ValidationError(path + ": no data rows");
  LabeledMatrix m;
  const bool labeled = !looks_numeric(table.rows[0][0]);
  const int c0 = labeled ? 1 : 0;
  const int ncol = table.ncol() - c0;
  if (ncol <= 0) throw ValidationError(path + ": no numeric columns");
  m.col_labels.assign(table.header.begin() + c0, table.header.end());
  m.values.resize(table.nrow(), ncol);
  for (int i = 0; i < table.nrow(); ++i) {
    if (labeled) m.row_labels.push_back(table.rows[i][0]);
    for (int j = 0; j < ncol; ++j)
      m.values(i, j) = parse_double(table.rows[i][j + c0]);
  }
  return m;
}

Eigen::VectorXd read_vector_csv(const std::string& path,
                                const std::string& column) {
  const CsvTable table = read_csv(path);
  int col = -1;
  if (column.empty()) {
    if (table.ncol() != 1)
      throw ValidationError(path + ": expected a single column");
    col = 0;
  } else {
    for (int j = 0; j < table.ncol(); ++j)
      if (table.header[j] == column) col = j;
    if (col < 0) throw ValidationError(path + ": no column '" + column + "'");
  }
  Eigen::VectorXd v(table.nrow());
  for (int i = 0; i < table.nrow(); ++i)
    v[i] = parse_double(table.rows[i][col]);
  return v;
}

}  // namespace postsel

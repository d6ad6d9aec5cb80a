#include "lbnn/matrix_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "lbnn/error.hpp"

namespace lbnn::io {

namespace {

double parse_field(std::string field, std::size_t line_no) {
  const auto first = field.find_first_not_of(" \t\r");
  const auto last = field.find_last_not_of(" \t\r");
  if (first == std::string::npos) throw InvalidArgument("csv line " + std::to_string(line_no) + ": empty field");
  field = field.substr(first, last - first + 1);
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    throw InvalidArgument("csv line " + std::to_string(line_no) + ": cannot parse '" + field + "'");
  }
  if (!std::isfinite(value)) throw InvalidArgument("csv line " + std::to_string(line_no) + ": non-finite value");
  return value;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Matrix read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(parse_field(field, line_no));
    if (!line.empty() && line.back() == ',') throw InvalidArgument("csv line " + std::to_string(line_no) + ": trailing comma");
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument("csv line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("csv: no data");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix matrix_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("matrix json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw InvalidArgument("matrix json: expected {\"rows\", \"cols\", \"data\"}");
  }
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer() || !j["data"].is_array()) {
    throw InvalidArgument("matrix json: rows/cols must be integers and data an array");
  }
  const auto rows = j["rows"].get<long long>();
  const auto cols = j["cols"].get<long long>();
  if (rows < 0 || cols < 0) throw InvalidArgument("matrix json: negative dimension");
  const auto& data = j["data"];
  if (static_cast<long long>(data.size()) != rows * cols) throw InvalidArgument("matrix json: data length != rows*cols");
  Matrix m(rows, cols);
  for (long long k = 0; k < rows * cols; ++k) {
    const auto& v = data[static_cast<std::size_t>(k)];
    if (!v.is_number()) throw InvalidArgument("matrix json: non-numeric entry (NaN/Inf are not allowed)");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw InvalidArgument("matrix json: non-finite entry");
    m(k / cols, k % cols) = x;
  }
  return m;
}

Matrix read_json(std::istream& in) {
  std::stringstream ss;
  ss << in.rdbuf();
  return matrix_from_json_text(ss.str());
}

std::string matrix_to_json_text(const Matrix& m) {
  std::string out = "{\"rows\": " + std::to_string(m.rows()) + ", \"cols\": " + std::to_string(m.cols()) +
                    ", \"data\": [";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i || j) out += ", ";
      out += std::isfinite(m(i, j)) ? format_double(m(i, j)) : "null";
    }
  }
  out += "]}";
  return out;
}

void write_json(std::ostream& out, const Matrix& m) { out << matrix_to_json_text(m) << '\n'; }

Matrix load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return path.extension() == ".json" ? read_json(in) : read_csv(in);
}

void save(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  if (path.extension() == ".json") {
    write_json(out, m);
  } else {
    write_csv(out, m);
  }
}

}  // namespace lbnn::io

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lbnn/linalg.hpp"

namespace lbnn::io {

/// CSV: one row per line, comma separated, no header. Rejects ragged rows and NaN/Inf.
Matrix read_csv(std::istream& in);
void write_csv(std::ostream& out, const Matrix& m);

/// JSON: {"rows": m, "cols": n, "data": [row-major values]}. Rejects NaN/Inf.
Matrix read_json(std::istream& in);
Matrix matrix_from_json_text(const std::string& text);
std::string matrix_to_json_text(const Matrix& m);
void write_json(std::ostream& out, const Matrix& m);

/// Dispatches on extension: ".json" reads JSON, anything else CSV.
Matrix load(const std::filesystem::path& path);
void save(const std::filesystem::path& path, const Matrix& m);

/// Formats a double with 17 significant digits.
std::string format_double(double x);

}  // namespace lbnn::io

#include "lbnn/serialize.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "lbnn/error.hpp"
#include "lbnn/matrix_io.hpp"

namespace lbnn::io {
namespace {

Matrix matrix_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(std::string("missing field ") + key);
  const auto& m = j.at(key);
  const auto rows = m.at("rows").get<Eigen::Index>();
  const auto cols = m.at("cols").get<Eigen::Index>();
  const auto& data = m.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw InvalidArgument(std::string("bad matrix ") + key);
  Matrix out(rows, cols);
  for (Eigen::Index k = 0; k < rows * cols; ++k) {
    const auto& v = data[static_cast<std::size_t>(k)];
    out(k / cols, k % cols) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  }
  return out;
}

}  // namespace

std::string json_number(double x) { return std::isfinite(x) ? format_double(x) : "null"; }

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

void JsonObject::raw(const std::string& key, const std::string& value) {
  text_ += first_ ? "{\n" : ",\n";
  first_ = false;
  text_ += "  " + json_string(key) + ": " + value;
}

void JsonObject::matrix(const std::string& key, const Matrix& m) { raw(key, matrix_to_json_text(m)); }
void JsonObject::number(const std::string& key, double x) { raw(key, json_number(x)); }
void JsonObject::integer(const std::string& key, long long x) { raw(key, std::to_string(x)); }
void JsonObject::unsigned_integer(const std::string& key, std::uint64_t x) { raw(key, std::to_string(x)); }
void JsonObject::string(const std::string& key, const std::string& s) { raw(key, json_string(s)); }
std::string JsonObject::finish() const { return (first_ ? std::string("{") : text_ + "\n") + "}\n"; }

std::string to_json(const PredictiveMoments& m) {
  JsonObject w;
  w.matrix("mean", m.mean);
  w.matrix("cov", m.cov);
  w.matrix("mean_se", m.mean_se);
  w.matrix("cov_se", m.cov_se);
  w.number("ess", m.ess);
  w.integer("samples", m.samples);
  w.unsigned_integer("seed", m.seed);
  return w.finish();
}

PredictiveMoments predictive_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PredictiveMoments m;
    m.mean = matrix_field(j, "mean");
    m.cov = matrix_field(j, "cov");
    m.mean_se = matrix_field(j, "mean_se");
    m.cov_se = matrix_field(j, "cov_se");
    m.ess = j.at("ess").is_null() ? std::numeric_limits<double>::infinity() : j.at("ess").get<double>();
    m.samples = j.at("samples").get<std::int64_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("predictive json: ") + e.what());
  }
}

std::string to_json(const KernelEstimate& k, std::uint64_t seed) {
  JsonObject w;
  w.string("regime_tag", std::string(to_string(k.regime)));
  w.number("ess", k.ess);
  w.unsigned_integer("seed", seed);
  w.raw("residual", k.residual ? json_number(*k.residual) : "null");
  w.matrix("K", k.K);
  w.matrix("se", k.se);
  return w.finish();
}

std::string to_json(const ScaleMoments& m, std::uint64_t seed) {
  JsonObject w;
  w.matrix("mean_L", m.mean_L);
  w.matrix("mean_Linv", m.mean_Linv);
  w.matrix("se_L", m.se_L);
  w.matrix("se_Linv", m.se_Linv);
  w.integer("samples", m.samples);
  w.unsigned_integer("seed", seed);
  w.raw("acceptance_rate", m.acceptance_rate ? json_number(*m.acceptance_rate) : "null");
  if (m.chain_ess)
    w.matrix("chain_ess", *m.chain_ess);
  else
    w.raw("chain_ess", "null");
  return w.finish();
}

}  // namespace lbnn::io

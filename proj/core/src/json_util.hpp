#pragma once

// Private helpers shared by the JSON file formats.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cernet/errors.hpp"
#include "cernet/model.hpp"

namespace cernet::detail {

using json = nlohmann::json;

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(path, "non-finite value");
  return v;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  return j.get<int>();
}

inline Vector vector_from(const json& j, const std::string& path, Eigen::Index expected = -1) {
  if (!j.is_array()) throw ParseError(path, "expected an array");
  if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected)
    throw ParseError(path, "expected " + std::to_string(expected) + " entries, got " +
                               std::to_string(j.size()));
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix matrix_from(const json& j, const std::string& path, Eigen::Index rows = -1,
                          Eigen::Index cols = -1) {
  if (!j.is_array()) throw ParseError(path, "expected a nested array");
  if (rows >= 0 && static_cast<Eigen::Index>(j.size()) != rows)
    throw ParseError(path, "expected " + std::to_string(rows) + " rows, got " +
                               std::to_string(j.size()));
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  Eigen::Index c = cols;
  if (c < 0) c = r > 0 && j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    m.row(i) = vector_from(j[static_cast<std::size_t>(i)], row_path, c).transpose();
  }
  return m;
}

inline json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", what + " is not valid JSON: " + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ArgumentError("failed writing '" + path.string() + "'");
}

}  // namespace cernet::detail

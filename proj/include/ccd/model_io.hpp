#pragma once

#include "ccd/lti.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace ccd::io {

using nlohmann::json;

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const std::string& what);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& what);

/// {"w", "x_p", "xi_o", "u_o", "A", "B", "C", "D", "g", "labels"}; matrices row-major.
json model_to_json(const lti::StateSpaceModel& model, const lti::OperatingPoint& op);

struct ModelDocument {
  lti::StateSpaceModel model;
  lti::OperatingPoint op;
};

ModelDocument model_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Shortest round-tripping decimal form of a double.
std::string format_double(double v);

/// 64-bit FNV-1a digest in hex; used for content-addressed cache keys.
std::string content_hash(const std::string& text);

}  // namespace ccd::io

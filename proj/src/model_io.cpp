#include "ccd/model_io.hpp"

#include <fmt/format.h>

#include <cstdint>
#include <fstream>
#include <sstream>

namespace ccd::io {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw IoError(what + ": ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json model_to_json(const lti::StateSpaceModel& model, const lti::OperatingPoint& op) {
  json j;
  j["w"] = op.w;
  j["x_p"] = {op.x_p(0), op.x_p(1)};
  j["xi_o"] = vector_to_json(op.xi_o);
  j["u_o"] = vector_to_json(op.u_o);
  j["A"] = matrix_to_json(model.A);
  j["B"] = matrix_to_json(model.B);
  j["C"] = matrix_to_json(model.C);
  j["D"] = matrix_to_json(model.D);
  j["g"] = vector_to_json(model.g);
  j["labels"] = {{"states", model.labels.states},
                 {"inputs", model.labels.inputs},
                 {"outputs", model.labels.outputs}};
  if (op.extrapolated) j["extrapolated"] = true;
  return j;
}

ModelDocument model_from_json(const json& j) {
  ModelDocument doc;
  try {
    doc.op.w = j.at("w").get<double>();
    const auto xp = vector_from_json(j.at("x_p"), "x_p");
    if (xp.size() != 2) throw IoError("x_p must have two entries");
    doc.op.x_p = xp;
    doc.op.xi_o = vector_from_json(j.at("xi_o"), "xi_o");
    doc.op.u_o = vector_from_json(j.at("u_o"), "u_o");
    doc.op.extrapolated = j.value("extrapolated", false);
    doc.model.A = matrix_from_json(j.at("A"), "A");
    doc.model.B = matrix_from_json(j.at("B"), "B");
    doc.model.C = matrix_from_json(j.at("C"), "C");
    doc.model.D = matrix_from_json(j.at("D"), "D");
    doc.model.g = vector_from_json(j.at("g"), "g");
    if (j.contains("labels")) {
      const auto& l = j.at("labels");
      doc.model.labels.states = l.value("states", std::vector<std::string>{});
      doc.model.labels.inputs = l.value("inputs", std::vector<std::string>{});
      doc.model.labels.outputs = l.value("outputs", std::vector<std::string>{});
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model document: ") + e.what());
  }
  // Empty matrices lose their column count in JSON; restore from the other blocks.
  if (doc.model.B.rows() == 0) doc.model.B.resize(doc.model.A.rows(), doc.op.u_o.size());
  if (doc.model.D.rows() == 0) doc.model.D.resize(doc.model.C.rows(), doc.model.B.cols());
  doc.model.validate();
  if (doc.op.xi_o.size() != doc.model.states() || doc.op.u_o.size() != doc.model.inputs())
    throw DimensionError("operating point does not match model dimensions");
  return doc;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string content_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace ccd::io

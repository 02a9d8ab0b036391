#include "ccd/plant_family.hpp"

#include "ccd/model_io.hpp"
#include "ccd/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace ccd::lpv {

namespace {

Vector flatten(const Sample& s) {
  const auto& m = s.model;
  Vector v(m.A.size() + m.B.size() + m.C.size() + m.D.size() + m.g.size() + s.op.xi_o.size() +
           s.op.u_o.size());
  Eigen::Index k = 0;
  for (const Matrix* x : {&m.A, &m.B, &m.C, &m.D}) {
    v.segment(k, x->size()) = x->reshaped();
    k += x->size();
  }
  for (const Vector* x : {&m.g, &s.op.xi_o, &s.op.u_o}) {
    v.segment(k, x->size()) = *x;
    k += x->size();
  }
  return v;
}

Sample unflatten(const Vector& v, const Sample& like) {
  Sample s = like;
  Eigen::Index k = 0;
  for (Matrix* x : {&s.model.A, &s.model.B, &s.model.C, &s.model.D}) {
    x->reshaped() = v.segment(k, x->size());
    k += x->size();
  }
  for (Vector* x : {&s.model.g, &s.op.xi_o, &s.op.u_o}) {
    *x = v.segment(k, x->size());
    k += x->size();
  }
  return s;
}

// Lower index of the cell holding x and the local coordinate in [0, 1].
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - axis.begin() - 1, 0));
  i = std::min(i, axis.size() - 2);
  return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 2) throw BuildError(fmt::format("{} axis needs at least two nodes", name));
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1])) throw BuildError(fmt::format("{} axis must be strictly increasing", name));
}

const char* method_name(PlantInterpolation m) { return m == PlantInterpolation::bilinear ? "bilinear" : "pchip"; }

}  // namespace

PlantLpvFamily PlantLpvFamily::build(std::vector<double> cs_axis, std::vector<double> cd_axis,
                                     std::vector<std::vector<Sample>> nodes, const BuildOptions& options,
                                     PlantInterpolation method) {
  check_axis(cs_axis, "c_s");
  check_axis(cd_axis, "c_d");
  if (nodes.size() != cs_axis.size() * cd_axis.size())
    throw BuildError(fmt::format("expected {} plant nodes, got {}", cs_axis.size() * cd_axis.size(),
                                 nodes.size()));
  if (method == PlantInterpolation::pchip && (cs_axis.size() < 3 || cd_axis.size() < 3))
    throw BuildError("pchip plant interpolation needs three nodes per axis");

  // Union mask across every node so all models share one channel layout.
  const auto& first = nodes.front();
  if (first.empty()) throw BuildError("plant node without samples");
  auto mask = SparsityMasks::of(first.front().model, options.zero_threshold);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (nodes[n].size() != first.size())
      throw BuildError(fmt::format("plant node {} has a different sample count", n));
    for (std::size_t k = 0; k < nodes[n].size(); ++k) {
      if (nodes[n][k].op.w != first[k].op.w)
        throw BuildError(fmt::format("plant node {} does not share the wind samples", n));
      mask = mask.united(SparsityMasks::of(nodes[n][k].model, options.zero_threshold));
    }
  }

  PlantLpvFamily family;
  family.cs_ = std::move(cs_axis);
  family.cd_ = std::move(cd_axis);
  family.method_ = method;
  family.nodes_.reserve(nodes.size());
  for (auto& samples : nodes) family.nodes_.push_back(LpvModel::build_with_mask(std::move(samples), mask, options));
  return family;
}

bool PlantLpvFamily::contains(const fowt::PlantDesign& x, double tol) const {
  return x.c_s >= cs_.front() - tol && x.c_s <= cs_.back() + tol && x.c_d >= cd_.front() - tol &&
         x.c_d <= cd_.back() + tol;
}

LpvModel PlantLpvFamily::at(const fowt::PlantDesign& x_p) const {
  if (!contains(x_p))
    throw DomainError(fmt::format("plant design [{}, {}] outside the family grid [{}, {}] x [{}, {}]",
                                  x_p.c_s, x_p.c_d, cs_.front(), cs_.back(), cd_.front(), cd_.back()));
  const double cs = std::clamp(x_p.c_s, cs_.front(), cs_.back());
  const double cd = std::clamp(x_p.c_d, cd_.front(), cd_.back());
  const auto ncd = cd_.size();
  const auto nw = winds().size();
  std::vector<Sample> samples(nw);

  if (method_ == PlantInterpolation::bilinear) {
    const auto [i, s] = locate(cs_, cs);
    const auto [j, t] = locate(cd_, cd);
    const auto& n00 = nodes_[i * ncd + j].samples();
    const auto& n01 = nodes_[i * ncd + j + 1].samples();
    const auto& n10 = nodes_[(i + 1) * ncd + j].samples();
    const auto& n11 = nodes_[(i + 1) * ncd + j + 1].samples();
    for (std::size_t k = 0; k < nw; ++k) {
      const Vector v = (1 - s) * (1 - t) * flatten(n00[k]) + (1 - s) * t * flatten(n01[k]) +
                       s * (1 - t) * flatten(n10[k]) + s * t * flatten(n11[k]);
      samples[k] = unflatten(v, n00[k]);
    }
  } else {
    for (std::size_t k = 0; k < nw; ++k) {
      const auto width = flatten(nodes_.front().samples()[k]).size();
      Matrix along_cs(static_cast<Eigen::Index>(cs_.size()), width);
      for (std::size_t i = 0; i < cs_.size(); ++i) {
        Matrix along_cd(static_cast<Eigen::Index>(ncd), width);
        for (std::size_t j = 0; j < ncd; ++j)
          along_cd.row(static_cast<Eigen::Index>(j)) = flatten(nodes_[i * ncd + j].samples()[k]).transpose();
        along_cs.row(static_cast<Eigen::Index>(i)) = Pchip(cd_, std::move(along_cd))(cd).transpose();
      }
      samples[k] = unflatten(Pchip(cs_, std::move(along_cs))(cs), nodes_.front().samples()[k]);
    }
  }
  for (auto& s : samples) s.op.x_p = x_p.as_vector();
  return LpvModel::build_with_mask(std::move(samples), mask(), nodes_.front().options());
}

Evaluation PlantLpvFamily::eval(const fowt::PlantDesign& x_p, double w, bool allow_extrapolation) const {
  return at(x_p).eval(w, allow_extrapolation);
}

void PlantLpvFamily::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = "plant_family";
  manifest["cs_axis"] = cs_;
  manifest["cd_axis"] = cd_;
  manifest["interpolation"] = method_name(method_);
  io::json names = io::json::array();
  for (std::size_t i = 0; i < cs_.size(); ++i)
    for (std::size_t j = 0; j < cd_.size(); ++j) {
      const auto name = fmt::format("node_{}_{}", i, j);
      node(i, j).save(dir / name);
      names.push_back(name);
    }
  manifest["nodes"] = names;
  io::write_json(dir / "manifest.json", manifest);
}

PlantLpvFamily PlantLpvFamily::load(const std::filesystem::path& dir) {
  const auto manifest = io::read_json(dir / "manifest.json");
  try {
    if (manifest.at("schema_version").get<int>() != 1 ||
        manifest.at("kind").get<std::string>() != "plant_family")
      throw IoError(dir.string() + ": not a plant-family manifest");
    const auto method = manifest.at("interpolation").get<std::string>();
    if (method != "bilinear" && method != "pchip") throw IoError("unknown plant interpolation " + method);
    std::vector<std::vector<Sample>> nodes;
    BuildOptions options;
    for (const auto& name : manifest.at("nodes")) {
      auto lpv = LpvModel::load(dir / name.get<std::string>());
      options = lpv.options();
      nodes.push_back(lpv.samples());
    }
    return build(manifest.at("cs_axis").get<std::vector<double>>(),
                 manifest.at("cd_axis").get<std::vector<double>>(), std::move(nodes), options,
                 method == "bilinear" ? PlantInterpolation::bilinear : PlantInterpolation::pchip);
  } catch (const io::json::exception& e) {
    throw IoError(fmt::format("{}: malformed manifest: {}", dir.string(), e.what()));
  }
}

std::vector<Sample> surrogate_samples(const fowt::Surrogate& surrogate, const fowt::PlantDesign& x_p,
                                      const std::vector<double>& winds, Execution execution) {
  std::vector<Sample> out(winds.size());
  parallel_for(
      winds.size(),
      [&](std::size_t k) {
        auto lin = surrogate.linearize(winds[k], x_p);
        out[k] = {std::move(lin.model), std::move(lin.op)};
      },
      execution);
  return out;
}

PlantLpvFamily build_surrogate_family(const fowt::Surrogate& surrogate, const std::vector<double>& cs_axis,
                                      const std::vector<double>& cd_axis, const std::vector<double>& winds,
                                      Execution execution, PlantInterpolation method) {
  const auto ncd = cd_axis.size();
  const auto nw = winds.size();
  std::vector<std::vector<Sample>> nodes(cs_axis.size() * ncd, std::vector<Sample>(nw));
  parallel_for(
      nodes.size() * nw,
      [&](std::size_t flat) {
        const auto node = flat / nw;
        const auto k = flat % nw;
        const fowt::PlantDesign x_p{cs_axis[node / ncd], cd_axis[node % ncd]};
        auto lin = surrogate.linearize(winds[k], x_p);
        nodes[node][k] = {std::move(lin.model), std::move(lin.op)};
      },
      execution);
  return PlantLpvFamily::build(cs_axis, cd_axis, std::move(nodes), {}, method);
}

}  // namespace ccd::lpv

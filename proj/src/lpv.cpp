#include "ccd/lpv.hpp"

#include "ccd/model_io.hpp"
#include "ccd/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace ccd::lpv {

namespace {

BoolMatrix nonzero(const Matrix& m, double threshold) { return m.array().abs() >= threshold; }

int count(const BoolMatrix& m) { return static_cast<int>(m.count()); }

int diff(const BoolMatrix& a, const BoolMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return static_cast<int>(std::max(a.size(), b.size()));
  return static_cast<int>((a != b).count());
}

void append_masked(const Matrix& m, const BoolMatrix& mask, Vector& out, Eigen::Index& k) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (mask(r, c)) out(k++) = m(r, c);
}

void fill_masked(Matrix& m, const BoolMatrix& mask, const Vector& in, Eigen::Index& k) {
  m.setZero(mask.rows(), mask.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (mask(r, c)) m(r, c) = in(k++);
}

io::json mask_to_json(const BoolMatrix& m) {
  io::json rows = io::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    io::json row = io::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

BoolMatrix mask_from_json(const io::json& j, Eigen::Index rows, Eigen::Index cols) {
  BoolMatrix m = BoolMatrix::Constant(rows, cols, false);
  if (rows == 0 || cols == 0) return m;
  const Matrix values = io::matrix_from_json(j, "mask");
  if (values.rows() != rows || values.cols() != cols) throw IoError("mask shape mismatch");
  return values.array() != 0.0;
}

void check_structure(const std::vector<Sample>& samples) {
  const auto& ref = samples.front().model;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& m = samples[i].model;
    m.validate();
    if (m.A.rows() != ref.A.rows() || m.B.cols() != ref.B.cols() || m.C.rows() != ref.C.rows() ||
        !(m.labels == ref.labels))
      throw BuildError(fmt::format("sample {} (w = {}) does not share the structure of sample 0", i,
                                   samples[i].op.w));
    if (samples[i].op.xi_o.size() != m.A.rows() || samples[i].op.u_o.size() != m.B.cols())
      throw BuildError(fmt::format("sample {} operating point has wrong dimensions", i));
    if (i > 0 && !(samples[i].op.w > samples[i - 1].op.w))
      throw BuildError(fmt::format("sample wind speeds must be strictly increasing (sample {})", i));
  }
}

}  // namespace

SparsityMasks SparsityMasks::of(const lti::StateSpaceModel& m, double threshold) {
  return {nonzero(m.A, threshold), nonzero(m.B, threshold), nonzero(m.C, threshold),
          nonzero(m.D, threshold)};
}

SparsityMasks SparsityMasks::united(const SparsityMasks& o) const {
  return {A || o.A, B || o.B, C || o.C, D || o.D};
}

int SparsityMasks::mismatches(const SparsityMasks& o) const {
  return diff(A, o.A) + diff(B, o.B) + diff(C, o.C) + diff(D, o.D);
}

int SparsityMasks::nonzeros() const { return count(A) + count(B) + count(C) + count(D); }

bool SparsityMasks::operator==(const SparsityMasks& o) const { return mismatches(o) == 0; }

LpvModel LpvModel::build(std::vector<Sample> samples, const BuildOptions& options) {
  if (samples.size() < 4) throw BuildError("an LPV model needs at least four samples");
  check_structure(samples);
  SparsityMasks mask = SparsityMasks::of(samples.front().model, options.zero_threshold);
  for (const auto& s : samples) mask = mask.united(SparsityMasks::of(s.model, options.zero_threshold));
  return build_with_mask(std::move(samples), mask, options);
}

LpvModel LpvModel::build_with_mask(std::vector<Sample> samples, const SparsityMasks& mask,
                                   const BuildOptions& options) {
  if (samples.size() < 4) throw BuildError("an LPV model needs at least four samples");
  check_structure(samples);
  const auto& ref = samples.front().model;
  if (mask.A.rows() != ref.A.rows() || mask.A.cols() != ref.A.cols() || mask.B.cols() != ref.B.cols() ||
      mask.C.rows() != ref.C.rows())
    throw BuildError("supplied sparsity mask does not match the sample dimensions");

  LpvModel lpv;
  lpv.options_ = options;
  lpv.mask_ = mask;
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index p = ref.C.rows();
  const Eigen::Index nx = ref.A.rows();
  const Eigen::Index nu = ref.B.cols();
  const Eigen::Index channels = mask.nonzeros() + p + nx + nu;
  Matrix values(n, channels);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const auto own = SparsityMasks::of(s.model, options.zero_threshold);
    lpv.mismatches_.push_back(own.mismatches(mask));
    if (!(own.united(mask) == mask))
      throw BuildError(fmt::format("sample at w = {} has nonzeros outside the supplied mask", s.op.w));
    Vector row(channels);
    Eigen::Index k = 0;
    append_masked(s.model.A, mask.A, row, k);
    append_masked(s.model.B, mask.B, row, k);
    append_masked(s.model.C, mask.C, row, k);
    append_masked(s.model.D, mask.D, row, k);
    row.segment(k, p) = s.model.g;
    k += p;
    row.segment(k, nx) = s.op.xi_o;
    k += nx;
    row.segment(k, nu) = s.op.u_o;
    values.row(i) = row.transpose();
    lpv.winds_.push_back(s.op.w);
  }
  lpv.interp_ = Pchip(lpv.winds_, std::move(values));
  lpv.samples_ = std::move(samples);
  return lpv;
}

void LpvModel::check_range(double w, bool allow_extrapolation) const {
  if (!std::isfinite(w)) throw DomainError("LPV evaluated at a non-finite wind speed");
  const double lo = winds_.front(), hi = winds_.back();
  if (w >= lo && w <= hi) return;
  if (!allow_extrapolation)
    throw ExtrapolationError(fmt::format("w = {} outside sample span [{}, {}]", w, lo, hi));
  if (w < lo - options_.max_extrapolation || w > hi + options_.max_extrapolation)
    throw ExtrapolationError(fmt::format("w = {} more than {} m/s outside sample span [{}, {}]", w,
                                         options_.max_extrapolation, lo, hi));
}

void LpvModel::eval_packed(double w, Vector& values, Vector& slopes, bool allow_extrapolation) const {
  check_range(w, allow_extrapolation);
  interp_.evaluate(w, values, slopes);
  // Knots return the stored sample exactly.
  const auto it = std::lower_bound(winds_.begin(), winds_.end(), w);
  if (it != winds_.end() && *it == w) values = interp_(w);
}

Evaluation LpvModel::unpack(const Vector& values, const Vector& slopes, double w) const {
  Evaluation ev;
  Eigen::Index k = 0;
  fill_masked(ev.model.A, mask_.A, values, k);
  fill_masked(ev.model.B, mask_.B, values, k);
  fill_masked(ev.model.C, mask_.C, values, k);
  fill_masked(ev.model.D, mask_.D, values, k);
  const Eigen::Index p = outputs(), nx = states(), nu = inputs();
  ev.model.g = values.segment(k, p);
  k += p;
  ev.op.xi_o = values.segment(k, nx);
  ev.dxi_dw = slopes.segment(k, nx);
  k += nx;
  ev.op.u_o = values.segment(k, nu);
  ev.model.labels = labels();
  ev.op.w = w;
  ev.op.x_p = samples_.front().op.x_p;
  ev.op.extrapolated = w < winds_.front() || w > winds_.back();
  return ev;
}

Evaluation LpvModel::eval(double w, bool allow_extrapolation) const {
  Vector values, slopes;
  eval_packed(w, values, slopes, allow_extrapolation);
  return unpack(values, slopes, w);
}

void LpvModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = "lpv";
  manifest["winds"] = winds_;
  manifest["zero_threshold"] = options_.zero_threshold;
  manifest["max_extrapolation"] = options_.max_extrapolation;
  manifest["mask"] = {{"A", mask_to_json(mask_.A)},
                      {"B", mask_to_json(mask_.B)},
                      {"C", mask_to_json(mask_.C)},
                      {"D", mask_to_json(mask_.D)}};
  manifest["sparsity_mismatches"] = mismatches_;
  io::json files = io::json::array();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto name = fmt::format("sample_{:02d}.json", i);
    io::write_json(dir / name, io::model_to_json(samples_[i].model, samples_[i].op));
    files.push_back(name);
  }
  manifest["files"] = files;
  io::write_json(dir / "manifest.json", manifest);
}

LpvModel LpvModel::load(const std::filesystem::path& dir) {
  const auto manifest = io::read_json(dir / "manifest.json");
  try {
    if (manifest.at("schema_version").get<int>() != 1 || manifest.at("kind").get<std::string>() != "lpv")
      throw IoError(dir.string() + ": not an LPV manifest");
    std::vector<Sample> samples;
    for (const auto& f : manifest.at("files")) {
      auto doc = io::model_from_json(io::read_json(dir / f.get<std::string>()));
      samples.push_back({std::move(doc.model), std::move(doc.op)});
    }
    if (samples.empty()) throw IoError(dir.string() + ": manifest lists no samples");
    BuildOptions options;
    options.zero_threshold = manifest.at("zero_threshold").get<double>();
    options.max_extrapolation = manifest.at("max_extrapolation").get<double>();
    const auto& ref = samples.front().model;
    const auto& mj = manifest.at("mask");
    SparsityMasks mask{mask_from_json(mj.at("A"), ref.A.rows(), ref.A.cols()),
                       mask_from_json(mj.at("B"), ref.B.rows(), ref.B.cols()),
                       mask_from_json(mj.at("C"), ref.C.rows(), ref.C.cols()),
                       mask_from_json(mj.at("D"), ref.D.rows(), ref.D.cols())};
    return build_with_mask(std::move(samples), mask, options);
  } catch (const io::json::exception& e) {
    throw IoError(fmt::format("{}: malformed manifest: {}", dir.string(), e.what()));
  }
}

lti::Trajectory rate_of(const lti::Trajectory& signal) {
  const auto n = signal.size();
  Matrix d(signal.values.rows(), signal.values.cols());
  if (n < 2) {
    d.setZero();
    return {signal.t, d, signal.labels};
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = i == 0 ? 0 : i - 1;
    const auto hi = i + 1 == n ? n - 1 : i + 1;
    d.row(static_cast<Eigen::Index>(i)) =
        (signal.values.row(static_cast<Eigen::Index>(hi)) - signal.values.row(static_cast<Eigen::Index>(lo))) /
        (signal.t[hi] - signal.t[lo]);
  }
  return {signal.t, d, signal.labels};
}

lti::Trajectory simulate_lpv(const LpvModel& lpv, const lti::Trajectory& wind,
                             const lti::Trajectory& u_delta, const Vector& xi_delta0,
                             const std::vector<double>& grid) {
  if (wind.channels() != 1) throw DimensionError("wind trajectory must have one channel");
  if (u_delta.channels() != lpv.inputs()) throw DimensionError("input trajectory channel count");
  if (xi_delta0.size() != lpv.states()) throw DimensionError("initial state dimension");
  if (grid.empty()) throw DomainError("empty simulation grid");
  if (u_delta.start() > grid.front() + 1e-12 || u_delta.end() < grid.back() - 1e-12)
    throw DomainError("input signal does not cover the simulation grid");
  const auto rate = rate_of(wind);
  Vector values, slopes;
  auto rhs = [&](double t, const Vector& x) -> Vector {
    const double w = wind.sample(t, 0);
    lpv.eval_packed(w, values, slopes);
    const auto ev = lpv.unpack(values, slopes, w);
    return ev.model.A * x + ev.model.B * u_delta.sample(t) - ev.dxi_dw * rate.sample(t, 0);
  };
  return lti::Trajectory(grid, lti::integrate_rk4(rhs, xi_delta0, grid), lpv.labels().states);
}

lti::Trajectory lpv_absolute_states(const LpvModel& lpv, const lti::Trajectory& relative,
                                    const lti::Trajectory& wind) {
  lti::Trajectory out = relative;
  for (std::size_t i = 0; i < relative.size(); ++i) {
    const auto ev = lpv.eval(wind.sample(relative.t[i], 0));
    out.values.row(static_cast<Eigen::Index>(i)) += ev.op.xi_o.transpose();
  }
  return out;
}

lti::StateSpaceModel hinf_channels(const lti::StateSpaceModel& m, const ValidationOptions& options) {
  lti::StateSpaceModel out = m;
  if (!options.hinf_outputs.empty()) {
    std::vector<int> rows;
    for (const auto& l : options.hinf_outputs) rows.push_back(m.output_index(l));
    out = m.select_outputs(rows);
  }
  if (!options.hinf_inputs.empty()) {
    Matrix B(out.B.rows(), static_cast<Eigen::Index>(options.hinf_inputs.size()));
    Matrix D(out.D.rows(), B.cols());
    std::vector<std::string> names;
    for (std::size_t k = 0; k < options.hinf_inputs.size(); ++k) {
      const auto& l = options.hinf_inputs[k];
      const auto it = std::find(m.labels.inputs.begin(), m.labels.inputs.end(), l);
      if (it == m.labels.inputs.end()) throw DimensionError("unknown input label '" + l + "'");
      const auto c = it - m.labels.inputs.begin();
      B.col(static_cast<Eigen::Index>(k)) = out.B.col(c);
      D.col(static_cast<Eigen::Index>(k)) = out.D.col(c);
      names.push_back(l);
    }
    out.B = std::move(B);
    out.D = std::move(D);
    out.labels.inputs = std::move(names);
  }
  return out;
}

namespace {

double relative_error(const Matrix& approx, const Matrix& ref) {
  if (approx.size() == 0) return 0.0;
  const double scale = ref.norm();
  const double e = (approx - ref).norm();
  return scale > 0.0 ? e / scale : e;
}

double eig_deviation(const lti::StateSpaceModel& a, const lti::StateSpaceModel& b) {
  const auto ea = lti::eigenvalues(a);
  const auto eb = lti::eigenvalues(b);
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(ea.size(), eb.size()); ++i)
    worst = std::max(worst, std::abs(ea[i] - eb[i]) / std::max(std::abs(eb[i]), 1e-12));
  return worst;
}

}  // namespace

ValidationReport validate(const LpvModel& lpv, const std::vector<Sample>& heldout,
                          const ValidationOptions& options, const StationarityFn& stationarity,
                          const TimeDomainFn& time_domain) {
  ValidationReport report;
  for (int m : lpv.sparsity_mismatches()) report.training_sparsity_mismatch += m;
  if (stationarity)
    for (const auto& s : lpv.samples())
      report.training_stationarity = std::max(report.training_stationarity, stationarity(s.op));

  report.heldout.resize(heldout.size());
  lti::HinfOptions hopt;
  hopt.execution = Execution::serial;
  parallel_for(
      heldout.size(),
      [&](std::size_t i) {
        const auto& s = heldout[i];
        auto& rec = report.heldout[i];
        rec.w = s.op.w;
        const auto& ref = lpv.samples().front().model;
        rec.structure_ok = s.model.A.rows() == ref.A.rows() && s.model.B.cols() == ref.B.cols() &&
                           s.model.C.rows() == ref.C.rows() && s.model.labels == ref.labels;
        if (!rec.structure_ok) {
          rec.pass = false;
          return;
        }
        rec.sparsity_mismatch =
            SparsityMasks::of(s.model, lpv.options().zero_threshold).mismatches(lpv.mask());
        const auto ev = lpv.eval(s.op.w, true);
        if (stationarity) rec.stationarity = stationarity(ev.op);
        rec.rel_error_A = relative_error(ev.model.A, s.model.A);
        rec.rel_error_B = relative_error(ev.model.B, s.model.B);
        rec.rel_error_C = relative_error(ev.model.C, s.model.C);
        rec.rel_error_D = relative_error(ev.model.D, s.model.D);
        const auto a = hinf_channels(ev.model, options);
        const auto b = hinf_channels(s.model, options);
        const auto h = lti::hinf_error_detail(a, b, options.omega_grid, hopt);
        rec.hinf = h.value;
        rec.hinf_omega = h.omega_peak;
        rec.hinf_reference = lti::hinf_norm(b, options.omega_grid, hopt);
        rec.max_eig_deviation = eig_deviation(ev.model, s.model);
        rec.pass = rec.hinf <= options.relative_tolerance * rec.hinf_reference;
      },
      options.execution);

  for (const auto& rec : report.heldout) {
    report.structure_ok = report.structure_ok && rec.structure_ok;
    report.pass = report.pass && rec.pass;
    if (rec.hinf >= report.max_hinf) {
      report.max_hinf = rec.hinf;
      report.w_max_hinf = rec.w;
    }
  }
  report.peak_in_transition = !report.heldout.empty() && report.w_max_hinf >= options.transition_lo &&
                              report.w_max_hinf <= options.transition_hi;
  if (time_domain) report.time_domain = time_domain(lpv);
  return report;
}

nlohmann::json report_to_json(const ValidationReport& r) {
  nlohmann::json j;
  j["pass"] = r.pass;
  j["structure_ok"] = r.structure_ok;
  j["training_sparsity_mismatch"] = r.training_sparsity_mismatch;
  j["training_stationarity"] = r.training_stationarity;
  j["max_hinf"] = r.max_hinf;
  j["w_max_hinf"] = r.w_max_hinf;
  j["peak_in_transition"] = r.peak_in_transition;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& h : r.heldout)
    rows.push_back({{"w", h.w},
                    {"structure_ok", h.structure_ok},
                    {"sparsity_mismatch", h.sparsity_mismatch},
                    {"stationarity", h.stationarity},
                    {"rel_error", {h.rel_error_A, h.rel_error_B, h.rel_error_C, h.rel_error_D}},
                    {"hinf", h.hinf},
                    {"hinf_reference", h.hinf_reference},
                    {"hinf_omega", h.hinf_omega},
                    {"max_eig_deviation", h.max_eig_deviation},
                    {"pass", h.pass}});
  j["heldout"] = rows;
  if (r.time_domain) {
    const auto& t = *r.time_domain;
    j["time_domain"] = {{"channels", t.channels},
                        {"rms_lpv", t.rms_lpv},
                        {"rms_lti", t.rms_lti},
                        {"w_avg", t.w_avg}};
  }
  return j;
}

std::string report_csv(const ValidationReport& r) {
  std::string out =
      "w,hinf,hinf_reference,hinf_omega,rel_error_A,rel_error_B,rel_error_C,rel_error_D,"
      "max_eig_deviation,stationarity,sparsity_mismatch,pass\n";
  for (const auto& h : r.heldout)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", h.w, h.hinf, h.hinf_reference,
                       h.hinf_omega, h.rel_error_A, h.rel_error_B, h.rel_error_C, h.rel_error_D,
                       h.max_eig_deviation, h.stationarity, h.sparsity_mismatch, h.pass ? 1 : 0);
  return out;
}

std::pair<std::vector<Sample>, std::vector<Sample>> alternate_split(const std::vector<Sample>& all) {
  std::pair<std::vector<Sample>, std::vector<Sample>> out;
  for (std::size_t i = 0; i < all.size(); ++i) (i % 2 == 0 ? out.first : out.second).push_back(all[i]);
  return out;
}

}  // namespace ccd::lpv

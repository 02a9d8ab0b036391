#include "ccd/dtqp.hpp"

#include "ccd/model_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace ccd::dtqp {

using Triplet = Eigen::Triplet<double>;

void LinearOcp::validate() const {
  const auto n = points();
  if (n < 2) throw DomainError("mesh needs at least two points");
  for (std::size_t i = 1; i < n; ++i)
    if (!(t[i] > t[i - 1])) throw DomainError("mesh must be strictly increasing");
  if (nx <= 0 || nu < 0) throw DimensionError("state/input dimensions");
  const int w = nx + nu;
  auto sized = [n](const auto& v, const char* name) {
    if (v.size() != n) throw DimensionError(fmt::format("{} needs one entry per mesh point", name));
  };
  sized(A, "A");
  sized(B, "B");
  sized(d, "d");
  sized(Q, "Q");
  sized(q, "q");
  sized(r, "r");
  sized(lo, "lo");
  sized(hi, "hi");
  sized(G, "G");
  sized(g_lo, "g_lo");
  sized(g_hi, "g_hi");
  for (std::size_t i = 0; i < n; ++i) {
    if (A[i].rows() != nx || A[i].cols() != nx || B[i].rows() != nx || B[i].cols() != nu || d[i].size() != nx)
      throw DimensionError(fmt::format("dynamics shape at mesh point {}", i));
    if (Q[i].rows() != w || Q[i].cols() != w || q[i].size() != w || lo[i].size() != w || hi[i].size() != w)
      throw DimensionError(fmt::format("cost or bound shape at mesh point {}", i));
    if (G[i].cols() != w || g_lo[i].size() != G[i].rows() || g_hi[i].size() != G[i].rows())
      throw DimensionError(fmt::format("path row shape at mesh point {}", i));
    if (!A[i].allFinite() || !B[i].allFinite() || !d[i].allFinite())
      throw DomainError(fmt::format("non-finite dynamics at mesh point {}", i));
  }
  if (x_initial.size() != 0 && x_initial.size() != nx) throw DimensionError("initial state size");
  if (x_final.size() != 0 && x_final.size() != nx) throw DimensionError("final state size");
  if (scale.size() != 0 && scale.size() != w) throw DimensionError("scale size");
}

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

TranscribedQp transcribe(const LinearOcp& ocp) {
  ocp.validate();
  const int N = static_cast<int>(ocp.points());
  const int nx = ocp.nx;
  const int W = nx + ocp.nu;
  TranscribedQp tq;
  tq.points = N;
  tq.nx = nx;
  tq.nu = ocp.nu;
  const Eigen::Index n = static_cast<Eigen::Index>(N) * W;
  auto& p = tq.problem;

  const auto weight = trapezoid_weights(ocp.t);
  std::vector<Triplet> th;
  p.c = Vector::Zero(n);
  for (int i = 0; i < N; ++i) {
    const auto base = tq.index(i, 0);
    for (int a = 0; a < W; ++a)
      for (int b = 0; b < W; ++b)
        if (const double v = ocp.Q[i](a, b); v != 0.0) th.emplace_back(base + a, base + b, weight[i] * v);
    p.c.segment(base, W) = weight[i] * ocp.q[i];
    tq.constant += weight[i] * ocp.r[i];
  }
  p.H.resize(n, n);
  p.H.setFromTriplets(th.begin(), th.end());

  tq.defect_rows = (N - 1) * nx;
  tq.initial_rows = static_cast<int>(ocp.x_initial.size());
  tq.terminal_rows = static_cast<int>(ocp.x_final.size());
  const int me = tq.defect_rows + tq.initial_rows + tq.terminal_rows;
  std::vector<Triplet> ta;
  p.b = Vector::Zero(me);
  for (int i = 0; i + 1 < N; ++i) {
    const double h2 = 0.5 * (ocp.t[i + 1] - ocp.t[i]);
    const auto zi = tq.index(i, 0);
    const auto zj = tq.index(i + 1, 0);
    for (int k = 0; k < nx; ++k) {
      const int row = i * nx + k;
      for (int c = 0; c < nx; ++c) {
        const double ai = -h2 * ocp.A[i](k, c) - (c == k ? 1.0 : 0.0);
        const double aj = -h2 * ocp.A[i + 1](k, c) + (c == k ? 1.0 : 0.0);
        if (ai != 0.0) ta.emplace_back(row, zi + c, ai);
        if (aj != 0.0) ta.emplace_back(row, zj + c, aj);
      }
      for (int c = 0; c < ocp.nu; ++c) {
        if (const double bi = ocp.B[i](k, c); bi != 0.0) ta.emplace_back(row, zi + nx + c, -h2 * bi);
        if (const double bj = ocp.B[i + 1](k, c); bj != 0.0) ta.emplace_back(row, zj + nx + c, -h2 * bj);
      }
      p.b(row) = h2 * (ocp.d[i](k) + ocp.d[i + 1](k));
    }
  }
  int row = tq.defect_rows;
  for (int k = 0; k < tq.initial_rows; ++k, ++row) {
    ta.emplace_back(row, tq.index(0, k), 1.0);
    p.b(row) = ocp.x_initial(k);
  }
  for (int k = 0; k < tq.terminal_rows; ++k, ++row) {
    ta.emplace_back(row, tq.index(N - 1, k), 1.0);
    p.b(row) = ocp.x_final(k);
  }
  p.A.resize(me, n);
  p.A.setFromTriplets(ta.begin(), ta.end());

  p.z_lo.resize(n);
  p.z_hi.resize(n);
  p.scale.resize(n);
  Eigen::Index mg = 0;
  for (int i = 0; i < N; ++i) {
    p.z_lo.segment(tq.index(i, 0), W) = ocp.lo[i];
    p.z_hi.segment(tq.index(i, 0), W) = ocp.hi[i];
    p.scale.segment(tq.index(i, 0), W) = ocp.scale.size() ? ocp.scale : Vector::Ones(W);
    mg += ocp.G[i].rows();
  }
  std::vector<Triplet> tg;
  p.g_lo.resize(mg);
  p.g_hi.resize(mg);
  Eigen::Index g = 0;
  for (int i = 0; i < N; ++i)
    for (Eigen::Index k = 0; k < ocp.G[i].rows(); ++k, ++g) {
      for (int c = 0; c < W; ++c)
        if (const double v = ocp.G[i](k, c); v != 0.0) tg.emplace_back(g, tq.index(i, c), v);
      p.g_lo(g) = ocp.g_lo[i](k);
      p.g_hi(g) = ocp.g_hi[i](k);
      tq.row_point.push_back(i);
    }
  p.G.resize(mg, n);
  p.G.setFromTriplets(tg.begin(), tg.end());
  return tq;
}

Matrix unstack(const TranscribedQp& tq, const Vector& z) {
  if (z.size() != static_cast<Eigen::Index>(tq.points) * tq.width())
    throw DimensionError("solution vector does not match the transcription");
  Matrix out(tq.points, tq.width());
  for (int i = 0; i < tq.points; ++i) out.row(i) = z.segment(tq.index(i, 0), tq.width()).transpose();
  return out;
}

void Limits::validate() const {
  for (const double v : {omega_max, theta_max, tau_max, beta_max, shear_max, moment_max})
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("constraint limits must be positive and finite");
}

void OcProblem::validate() const {
  if (!lpv) throw DomainError("control problem has no LPV model");
  wind.validate();
  if (wind.channels() != 1) throw DimensionError("wind trajectory must have one channel");
  if (!(final_time() > 0.0)) throw DomainError("final time must be positive");
  if (mesh < 2) throw DomainError("mesh needs at least two points");
  limits.validate();
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw DomainError("generator efficiency must lie in (0, 1]");
}

const std::vector<std::string>& constraint_names() {
  static const std::vector<std::string> names{"omega_min", "omega_max", "theta_max", "tau_min", "tau_max",
                                              "beta_min",  "beta_max",  "shear_max", "moment_max"};
  return names;
}

namespace {

struct Indices {
  int theta, omega, tau, beta, shear, moment;
};

Indices indices_of(const lpv::LpvModel& lpv) {
  const auto& l = lpv.labels();
  auto find = [](const std::vector<std::string>& v, const char* name) {
    const auto it = std::find(v.begin(), v.end(), name);
    if (it == v.end()) throw DimensionError(fmt::format("LPV model has no channel '{}'", name));
    return static_cast<int>(it - v.begin());
  };
  const int nx = lpv.states();
  return {find(l.states, "Theta_p"), find(l.states, "omega_g"), nx + find(l.inputs, "tau_g"),
          nx + find(l.inputs, "beta"), find(l.outputs, "F_s"), find(l.outputs, "M_s")};
}

struct Assembled {
  LinearOcp ocp;
  std::vector<lpv::Evaluation> evals;
  std::vector<double> wind;
};

Assembled assemble(const OcProblem& pr) {
  pr.validate();
  const auto& lpv = *pr.lpv;
  const Indices ix = indices_of(lpv);
  const int nx = lpv.states();
  const int nu = lpv.inputs();
  const int W = nx + nu;
  const auto N = static_cast<std::size_t>(pr.mesh);
  const double ke = pr.weights.power * pr.efficiency;

  Assembled out;
  auto& o = out.ocp;
  o.t = lti::linspace(pr.wind.start(), pr.wind.end(), N);
  o.nx = nx;
  o.nu = nu;
  const auto rate = lpv::rate_of(pr.wind);

  Matrix Q = Matrix::Zero(W, W);
  Q(ix.tau, ix.omega) = Q(ix.omega, ix.tau) = -ke;
  Q(ix.tau, ix.tau) = 2.0 * pr.weights.tau_penalty;
  Q(ix.beta, ix.beta) = 2.0 * pr.weights.beta_penalty;
  Q(ix.theta, ix.theta) += 2.0 * pr.weights.pitch_penalty;

  // Typical deviation magnitudes: platform and tower motion, rotor speed, torque, pitch.
  o.scale = Vector::Ones(W);
  const Vector typical = (Vector(7) << 0.01, 0.02, 0.05, 0.2, 0.05, 2e6, 0.05).finished();
  if (W == typical.size()) o.scale = typical;

  const auto& lim = pr.limits;
  Vector values, slopes;
  for (std::size_t i = 0; i < N; ++i) {
    const double w = pr.wind.sample(o.t[i], 0);
    const double dw = rate.sample(o.t[i], 0);
    if (!std::isfinite(w) || !std::isfinite(dw))
      throw DomainError(fmt::format("non-finite wind or wind rate at t = {}", o.t[i]));
    lpv.eval_packed(w, values, slopes, pr.allow_extrapolation);
    auto ev = lpv.unpack(values, slopes, w);
    const Vector& xo = ev.op.xi_o;
    const Vector& uo = ev.op.u_o;
    const double theta_o = xo(ix.theta), omega_o = xo(ix.omega);
    const double tau_o = uo(ix.tau - nx), beta_o = uo(ix.beta - nx);

    o.A.push_back(ev.model.A);
    o.B.push_back(ev.model.B);
    o.d.push_back(-ev.dxi_dw * dw);
    o.Q.push_back(Q);
    Vector q = Vector::Zero(W);
    q(ix.omega) += -ke * tau_o;
    q(ix.tau) += -ke * omega_o + 2.0 * pr.weights.tau_penalty * tau_o;
    q(ix.beta) += 2.0 * pr.weights.beta_penalty * beta_o;
    q(ix.theta) += 2.0 * pr.weights.pitch_penalty * theta_o;
    o.q.push_back(std::move(q));
    o.r.push_back(-ke * tau_o * omega_o + pr.weights.tau_penalty * tau_o * tau_o +
                  pr.weights.beta_penalty * beta_o * beta_o + pr.weights.pitch_penalty * theta_o * theta_o);

    Vector lo = Vector::Constant(W, -qp::kInf), hi = Vector::Constant(W, qp::kInf);
    lo(ix.omega) = -omega_o;
    hi(ix.omega) = lim.omega_max - omega_o;
    hi(ix.theta) = lim.theta_max - theta_o;
    lo(ix.tau) = -tau_o;
    hi(ix.tau) = lim.tau_max - tau_o;
    lo(ix.beta) = -beta_o;
    hi(ix.beta) = lim.beta_max - beta_o;
    o.lo.push_back(std::move(lo));
    o.hi.push_back(std::move(hi));

    Matrix G(2, W);
    G << ev.model.C.row(ix.shear), ev.model.D.row(ix.shear), ev.model.C.row(ix.moment), ev.model.D.row(ix.moment);
    o.G.push_back(std::move(G));
    o.g_lo.push_back(Vector::Constant(2, -qp::kInf));
    o.g_hi.push_back(Eigen::Vector2d(lim.shear_max - ev.model.g(ix.shear), lim.moment_max - ev.model.g(ix.moment)));

    out.wind.push_back(w);
    out.evals.push_back(std::move(ev));
  }
  o.x_initial = Vector::Zero(nx);
  return out;
}

double violation(double value, double lo, double hi) {
  const double below = std::isfinite(lo) ? (lo - value) / std::max(1.0, std::abs(lo)) : 0.0;
  const double above = std::isfinite(hi) ? (value - hi) / std::max(1.0, std::abs(hi)) : 0.0;
  return std::max({0.0, below, above});
}

}  // namespace

TranscribedQp transcribe(const OcProblem& problem) { return transcribe(assemble(problem).ocp); }

OcSolution solve_ocp(const OcProblem& pr) {
  const auto built = assemble(pr);
  const auto tq = transcribe(built.ocp);
  const auto qs = qp::solve(tq.problem, pr.solver);
  const auto& lpv = *pr.lpv;
  const Indices ix = indices_of(lpv);
  const int nx = tq.nx;

  OcSolution sol;
  sol.status = qs.status;
  sol.message = qs.message;
  sol.iterations = qs.iterations;
  sol.efficiency = pr.efficiency;
  sol.objective = qs.objective + tq.constant;

  const auto& t = built.ocp.t;
  const Matrix Z = unstack(tq, qs.z);
  Matrix xs(tq.points, nx), us(tq.points, tq.nu), ys(tq.points, lpv.outputs()), ws(tq.points, 1);
  for (int i = 0; i < tq.points; ++i) {
    const auto& ev = built.evals[static_cast<std::size_t>(i)];
    const Vector x = Z.row(i).head(nx).transpose();
    const Vector u = Z.row(i).tail(tq.nu).transpose();
    xs.row(i) = (x + ev.op.xi_o).transpose();
    us.row(i) = (u + ev.op.u_o).transpose();
    ys.row(i) = (ev.model.g + ev.model.C * x + ev.model.D * u).transpose();
    ws(i, 0) = built.wind[static_cast<std::size_t>(i)];
  }
  sol.states = lti::Trajectory(t, xs, lpv.labels().states);
  sol.controls = lti::Trajectory(t, us, lpv.labels().inputs);
  sol.outputs = lti::Trajectory(t, ys, lpv.labels().outputs);
  sol.wind = lti::Trajectory(t, ws, {"w"});

  // Feasibility in each row's own units: defects, initial state, bounds and output rows.
  const auto& p = tq.problem;
  double viol = p.A.rows() ? (p.A * qs.z - p.b).cwiseAbs().maxCoeff() : 0.0;
  const Vector gz = p.G * qs.z;
  for (Eigen::Index k = 0; k < gz.size(); ++k) viol = std::max(viol, violation(gz(k), p.g_lo(k), p.g_hi(k)));
  for (Eigen::Index k = 0; k < qs.z.size(); ++k)
    viol = std::max(viol, violation(qs.z(k), p.z_lo(k), p.z_hi(k)));
  sol.max_violation = viol;

  const auto& lim = pr.limits;
  const int theta = ix.theta, omega = ix.omega, tau = ix.tau - nx, beta = ix.beta - nx;
  const std::vector<std::pair<std::string, std::function<bool(int)>>> tests{
      {"omega_min", [&](int i) { return xs(i, omega) <= 1e-4 * lim.omega_max; }},
      {"omega_max", [&](int i) { return xs(i, omega) >= lim.omega_max * (1 - 1e-4); }},
      {"theta_max", [&](int i) { return xs(i, theta) >= lim.theta_max * (1 - 1e-4); }},
      {"tau_min", [&](int i) { return us(i, tau) <= 1e-4 * lim.tau_max; }},
      {"tau_max", [&](int i) { return us(i, tau) >= lim.tau_max * (1 - 1e-4); }},
      {"beta_min", [&](int i) { return us(i, beta) <= 1e-4 * lim.beta_max; }},
      {"beta_max", [&](int i) { return us(i, beta) >= lim.beta_max * (1 - 1e-4); }},
      {"shear_max", [&](int i) { return ys(i, ix.shear) >= lim.shear_max * (1 - 1e-4); }},
      {"moment_max", [&](int i) { return ys(i, ix.moment) >= lim.moment_max * (1 - 1e-4); }},
  };
  for (const auto& [name, active] : tests) {
    int count = 0;
    for (int i = 0; i < tq.points; ++i) count += active(i) ? 1 : 0;
    sol.active_fraction[name] = static_cast<double>(count) / tq.points;
  }
  if (sol.optimal()) sol.mean_power = average_power(sol);
  return sol;
}

double time_average(const std::vector<double>& t, const Vector& values) {
  if (t.size() < 2 || values.size() != static_cast<Eigen::Index>(t.size()))
    throw DimensionError("time average needs matching samples on at least two points");
  const auto w = trapezoid_weights(t);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) sum += w[i] * values(static_cast<Eigen::Index>(i));
  return sum / (t.back() - t.front());
}

double average_power(const OcSolution& sol) {
  if (!sol.optimal())
    throw DomainError(fmt::format("average power undefined for a {} solution", qp::to_string(sol.status)));
  const Vector tau = sol.controls.values.col(sol.controls.channel("tau_g"));
  const Vector omega = sol.states.values.col(sol.states.channel("omega_g"));
  return time_average(sol.states.t, sol.efficiency * tau.cwiseProduct(omega));
}

std::string solution_csv(const OcSolution& sol) {
  std::string out = "t";
  for (const auto* tr : {&sol.states, &sol.controls, &sol.outputs, &sol.wind})
    for (const auto& l : tr->labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < sol.states.size(); ++i) {
    out += io::format_double(sol.states.t[i]);
    for (const auto* tr : {&sol.states, &sol.controls, &sol.outputs, &sol.wind})
      for (int c = 0; c < tr->channels(); ++c) out += "," + io::format_double(tr->values(static_cast<Eigen::Index>(i), c));
    out += "\n";
  }
  return out;
}

nlohmann::json solution_summary(const OcSolution& sol) {
  nlohmann::json j;
  j["status"] = qp::to_string(sol.status);
  j["message"] = sol.message;
  j["iterations"] = sol.iterations;
  j["objective"] = sol.objective;
  j["mean_power"] = sol.mean_power;
  j["max_violation"] = sol.max_violation;
  j["mesh"] = sol.states.size();
  j["final_time"] = sol.states.size() ? sol.states.t.back() - sol.states.t.front() : 0.0;
  j["active_fraction"] = sol.active_fraction;
  return j;
}

}  // namespace ccd::dtqp

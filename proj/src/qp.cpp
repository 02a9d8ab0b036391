#include "ccd/qp.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace ccd::qp {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::max_iter: return "max_iter";
    case Status::numerical_error: return "numerical_error";
  }
  return "unknown";
}

void Problem::normalize() {
  const auto n = c.size();
  if (H.rows() == 0 && H.cols() == 0) H.resize(n, n);
  if (A.rows() == 0) A.resize(0, n);
  if (b.size() == 0) b.resize(A.rows());
  if (G.rows() == 0) G.resize(0, n);
  if (g_lo.size() == 0) g_lo = Vector::Constant(G.rows(), -kInf);
  if (g_hi.size() == 0) g_hi = Vector::Constant(G.rows(), kInf);
  if (z_lo.size() == 0) z_lo = Vector::Constant(n, -kInf);
  if (z_hi.size() == 0) z_hi = Vector::Constant(n, kInf);
  if (scale.size() == 0) scale = Vector::Ones(n);
}

void Problem::validate() const {
  const auto n = c.size();
  if (H.rows() != n || H.cols() != n) throw DimensionError("QP Hessian must be n x n");
  if (A.cols() != n || b.size() != A.rows()) throw DimensionError("QP equality block shape");
  if (G.cols() != n || g_lo.size() != G.rows() || g_hi.size() != G.rows())
    throw DimensionError("QP inequality block shape");
  if (z_lo.size() != n || z_hi.size() != n || scale.size() != n) throw DimensionError("QP bound shape");
  if ((scale.array() <= 0.0).any() || !scale.allFinite()) throw DomainError("QP scale must be positive");
  if (!c.allFinite() || !b.allFinite()) throw DomainError("QP data must be finite");
}

double objective(const Problem& p, const Vector& z) { return 0.5 * z.dot(p.H * z) + p.c.dot(z); }

double KktResiduals::max() const {
  return std::max({stationarity, primal, complementarity, dual_sign});
}

KktResiduals kkt_residuals(const Problem& problem, const Solution& s) {
  Problem p = problem;
  p.normalize();
  KktResiduals r;
  const Vector grad = p.H * s.z + p.c - p.A.transpose() * s.y - p.G.transpose() * s.nu - s.mu;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  auto side = [&](double value, double lo, double hi, double mult) {
    r.primal = std::max({r.primal, lo - value, value - hi});
    if (mult > 0.0) {
      if (std::isfinite(lo)) r.complementarity = std::max(r.complementarity, mult * std::abs(value - lo));
      else r.dual_sign = std::max(r.dual_sign, mult);
    } else if (mult < 0.0) {
      if (std::isfinite(hi)) r.complementarity = std::max(r.complementarity, -mult * std::abs(hi - value));
      else r.dual_sign = std::max(r.dual_sign, -mult);
    }
  };
  if (p.A.rows() > 0) r.primal = std::max(r.primal, (p.A * s.z - p.b).cwiseAbs().maxCoeff());
  const Vector gz = p.G * s.z;
  for (Eigen::Index i = 0; i < gz.size(); ++i) side(gz(i), p.g_lo(i), p.g_hi(i), s.nu(i));
  for (Eigen::Index j = 0; j < s.z.size(); ++j) side(s.z(j), p.z_lo(j), p.z_hi(j), s.mu(j));
  return r;
}

namespace {

using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

// Internal form: min 1/2 z'Hz + c'z, A z = b, C z >= d.
struct Internal {
  SparseMatrix H;
  Vector c;
  RowMatrix A;
  Vector b;
  RowMatrix C;
  Vector d;
};

// Reduced KKT matrix [[H + C' diag(sigma) C + dw I, A'], [A, -dc I]], lower triangle only.
// The sparsity pattern is fixed; each factorization rewrites values through index maps.
class KktSystem {
 public:
  KktSystem(const Internal& p) : n_(static_cast<int>(p.c.size())), me_(static_cast<int>(p.A.rows())) {
    const int dim = n_ + me_;
    std::vector<Triplet> pattern;
    for (int j = 0; j < n_; ++j)
      for (SparseMatrix::InnerIterator it(p.H, j); it; ++it)
        if (it.row() >= j) pattern.emplace_back(static_cast<int>(it.row()), j, 0.0);
    for (int j = 0; j < dim; ++j) pattern.emplace_back(j, j, 0.0);
    for (int r = 0; r < me_; ++r)
      for (RowMatrix::InnerIterator it(p.A, r); it; ++it) pattern.emplace_back(n_ + r, static_cast<int>(it.col()), 0.0);
    for (int r = 0; r < p.C.rows(); ++r)
      for (RowMatrix::InnerIterator a(p.C, r); a; ++a)
        for (RowMatrix::InnerIterator b(p.C, r); b; ++b)
          if (a.col() >= b.col()) pattern.emplace_back(static_cast<int>(a.col()), static_cast<int>(b.col()), 0.0);
    K_.resize(dim, dim);
    K_.setFromTriplets(pattern.begin(), pattern.end());
    K_.makeCompressed();

    for (int j = 0; j < n_; ++j)
      for (SparseMatrix::InnerIterator it(p.H, j); it; ++it)
        if (it.row() >= j) {
          h_idx_.push_back(index(static_cast<int>(it.row()), j));
          h_val_.push_back(it.value());
        }
    for (int j = 0; j < dim; ++j) diag_.push_back(index(j, j));
    for (int r = 0; r < me_; ++r)
      for (RowMatrix::InnerIterator it(p.A, r); it; ++it) {
        a_idx_.push_back(index(n_ + r, static_cast<int>(it.col())));
        a_val_.push_back(it.value());
      }
    c_ptr_.push_back(0);
    for (int r = 0; r < p.C.rows(); ++r) {
      for (RowMatrix::InnerIterator a(p.C, r); a; ++a)
        for (RowMatrix::InnerIterator b(p.C, r); b; ++b)
          if (a.col() >= b.col()) {
            c_idx_.push_back(index(static_cast<int>(a.col()), static_cast<int>(b.col())));
            c_coef_.push_back(a.value() * b.value());
          }
      c_ptr_.push_back(static_cast<int>(c_idx_.size()));
    }
    ldlt_.analyzePattern(K_);
  }

  /// Factorize with the smallest Hessian shift giving inertia (n, me, 0).
  bool factorize(const Vector& sigma, double& last_shift) {
    double shift = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      assemble(sigma, shift);
      ldlt_.factorize(K_);
      if (ldlt_.info() == Eigen::Success && inertia_ok()) {
        if (shift > 0.0) last_shift = shift;
        shift_ = shift;
        return true;
      }
      if (shift == 0.0)
        shift = last_shift == 0.0 ? 1e-4 : std::max(1e-20, last_shift / 3.0);
      else
        shift *= last_shift == 0.0 ? 100.0 : 8.0;
      if (shift > 1e40) break;
    }
    return false;
  }

  double shift() const { return shift_; }

  Vector solve(const Vector& rhs) const {
    Vector x = ldlt_.solve(rhs);
    // Refine against the system without the dual regularization.
    for (int k = 0; k < 2; ++k) {
      Vector r = rhs - K_.selfadjointView<Eigen::Lower>() * x;
      r.tail(me_) -= kDualReg * x.tail(me_);
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  static constexpr double kDualReg = 1e-10;

  int index(int row, int col) const {
    const auto* inner = K_.innerIndexPtr();
    const auto begin = K_.outerIndexPtr()[col];
    const auto end = K_.outerIndexPtr()[col + 1];
    const auto* it = std::lower_bound(inner + begin, inner + end, row);
    return static_cast<int>(it - inner);
  }

  void assemble(const Vector& sigma, double shift) {
    double* v = K_.valuePtr();
    std::fill(v, v + K_.nonZeros(), 0.0);
    for (std::size_t k = 0; k < h_idx_.size(); ++k) v[h_idx_[k]] += h_val_[k];
    for (int j = 0; j < n_; ++j) v[diag_[j]] += shift;
    for (int r = 0; r < me_; ++r) v[diag_[n_ + r]] -= kDualReg;
    for (std::size_t k = 0; k < a_idx_.size(); ++k) v[a_idx_[k]] += a_val_[k];
    for (Eigen::Index r = 0; r < sigma.size(); ++r)
      for (int k = c_ptr_[r]; k < c_ptr_[r + 1]; ++k) v[c_idx_[k]] += sigma(r) * c_coef_[k];
  }

  bool inertia_ok() const {
    const Vector& D = ldlt_.vectorD();
    int pos = 0, neg = 0;
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      if (!std::isfinite(D(i))) return false;
      if (D(i) > 0.0) ++pos;
      else if (D(i) < 0.0) ++neg;
    }
    return pos == n_ && neg == me_;
  }

  int n_, me_;
  SparseMatrix K_;
  std::vector<int> h_idx_, diag_, a_idx_, c_ptr_, c_idx_;
  std::vector<double> h_val_, a_val_, c_coef_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  double shift_ = 0.0;
};

struct CoreResult {
  Status status = Status::numerical_error;
  Vector z, y, lambda, s;
  int iterations = 0;
  bool suspect_infeasible = false;
  std::string message;
};

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double max_step(const Vector& x, const Vector& dx) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) alpha = std::min(alpha, -x(i) / dx(i));
  return alpha;
}

CoreResult interior_point(const Internal& p, const Options& opt, const Vector& z_start) {
  const auto n = p.c.size();
  const auto mi = p.C.rows();
  CoreResult res;
  KktSystem kkt(p);

  Vector z = z_start;
  Vector y = Vector::Zero(p.A.rows());
  Vector s = (p.C * z - p.d).cwiseMax(1.0);
  Vector lambda = Vector::Ones(mi);

  const double primal_scale = 1.0 + std::max(inf_norm(p.b), inf_norm(p.d));
  const double dual_scale = 1.0 + inf_norm(p.c);
  double last_shift = 0.0;
  int stalls = 0;

  for (int it = 0; it <= opt.max_iter; ++it) {
    res.iterations = it;
    const Vector hz = p.H * z;
    const Vector r_d = hz + p.c - p.A.transpose() * y - p.C.transpose() * lambda;
    const Vector r_p = p.A * z - p.b;
    const Vector r_i = p.C * z - s - p.d;
    const double mu = mi > 0 ? s.dot(lambda) / static_cast<double>(mi) : 0.0;
    const double comp = mi > 0 ? (s.array() * lambda.array()).maxCoeff() : 0.0;
    const double pr = std::max(inf_norm(r_p), inf_norm(r_i));
    const double du = inf_norm(r_d);

    if (pr <= opt.tolerance * primal_scale && du <= opt.tolerance * dual_scale && comp <= opt.tolerance) {
      res.status = Status::optimal;
      break;
    }
    if (std::max(inf_norm(lambda), inf_norm(y)) > opt.dual_divergence) {
      res.suspect_infeasible = true;
      res.status = Status::infeasible;
      res.message = "dual iterates diverged";
      break;
    }
    if (it == opt.max_iter) {
      res.status = Status::max_iter;
      res.suspect_infeasible = pr > std::sqrt(opt.tolerance) * primal_scale;
      res.message = fmt::format("iteration limit (primal {:.2e}, dual {:.2e}, mu {:.2e})", pr, du, mu);
      break;
    }

    const Vector sigma = lambda.cwiseQuotient(s);
    if (!kkt.factorize(sigma, last_shift)) {
      res.status = Status::numerical_error;
      res.message = "KKT factorization failed";
      break;
    }

    struct Direction {
      Vector dz, dy, ds, dl;
    };
    auto direction = [&](const Vector& r_c) {
      Vector rhs(n + p.A.rows());
      rhs.head(n) = -r_d - p.C.transpose() * (r_c + lambda.cwiseProduct(r_i)).cwiseQuotient(s);
      rhs.tail(p.A.rows()) = -r_p;
      const Vector sol = kkt.solve(rhs);
      Direction d;
      d.dz = sol.head(n);
      d.dy = -sol.tail(p.A.rows());
      d.ds = p.C * d.dz + r_i;
      d.dl = -(r_c + lambda.cwiseProduct(d.ds)).cwiseQuotient(s);
      return d;
    };

    Direction step;
    if (mi > 0) {
      const Vector sl = s.cwiseProduct(lambda);
      const Direction aff = direction(sl);
      const double a_aff = std::min(max_step(s, aff.ds), max_step(lambda, aff.dl));
      const double mu_aff =
          (s + a_aff * aff.ds).dot(lambda + a_aff * aff.dl) / static_cast<double>(mi);
      const double centering = std::pow(mu_aff / mu, 3);
      step = direction(sl + aff.ds.cwiseProduct(aff.dl) - Vector::Constant(mi, centering * mu));
    } else {
      step = direction(Vector::Zero(0));
    }
    if (!step.dz.allFinite() || !step.dy.allFinite() || !step.ds.allFinite() || !step.dl.allFinite()) {
      res.status = Status::numerical_error;
      res.message = "non-finite search direction";
      break;
    }
    double alpha = 1.0;
    if (mi > 0)
      alpha = std::min(1.0, opt.fraction_to_boundary * std::min(max_step(s, step.ds), max_step(lambda, step.dl)));
    z += alpha * step.dz;
    y += alpha * step.dy;
    if (mi > 0) {
      s += alpha * step.ds;
      lambda += alpha * step.dl;
    }
    stalls = alpha < 1e-10 ? stalls + 1 : 0;
    if (stalls >= 5) {
      res.status = Status::numerical_error;
      res.suspect_infeasible = true;
      res.message = "step length collapsed";
      break;
    }
  }
  res.z = std::move(z);
  res.y = std::move(y);
  res.lambda = std::move(lambda);
  res.s = std::move(s);
  return res;
}

// Elastic feasibility problem: min sum(p + q + e) s.t. A z + p - q = b, C z + e >= d.
bool confirm_infeasible(const Internal& p, const Options& opt, const Vector& z_start) {
  const auto n = p.c.size();
  const auto me = p.A.rows();
  const auto mi = p.C.rows();
  const auto nv = n + 2 * me + mi;
  Internal el;
  el.H.resize(nv, nv);
  el.c = Vector::Zero(nv);
  el.c.tail(2 * me + mi).setOnes();
  std::vector<Triplet> ta, tc;
  for (Eigen::Index r = 0; r < me; ++r) {
    for (RowMatrix::InnerIterator it(p.A, r); it; ++it) ta.emplace_back(r, it.col(), it.value());
    ta.emplace_back(r, n + r, 1.0);
    ta.emplace_back(r, n + me + r, -1.0);
  }
  for (Eigen::Index r = 0; r < mi; ++r) {
    for (RowMatrix::InnerIterator it(p.C, r); it; ++it) tc.emplace_back(r, it.col(), it.value());
    tc.emplace_back(r, n + 2 * me + r, 1.0);
  }
  for (Eigen::Index k = 0; k < 2 * me + mi; ++k) tc.emplace_back(mi + k, n + k, 1.0);
  el.A.resize(me, nv);
  el.A.setFromTriplets(ta.begin(), ta.end());
  el.b = p.b;
  el.C.resize(mi + 2 * me + mi, nv);
  el.C.setFromTriplets(tc.begin(), tc.end());
  el.d = Vector::Zero(el.C.rows());
  el.d.head(mi) = p.d;

  Vector start = Vector::Zero(nv);
  start.head(n) = z_start;
  Options o = opt;
  o.max_iter = std::max(opt.max_iter, 200);
  const auto r = interior_point(el, o, start);
  if (r.status != Status::optimal) return r.suspect_infeasible;
  const double violation = inf_norm(r.z.tail(2 * me + mi));
  return violation > 1e-6 * (1.0 + std::max(inf_norm(p.b), inf_norm(p.d)));
}

std::optional<std::string> presolve(const Problem& p) {
  const double tol = 1e-9;
  auto slack = [&](double v) { return tol * std::max(1.0, std::abs(v)); };
  for (Eigen::Index j = 0; j < p.z_lo.size(); ++j)
    if (p.z_lo(j) > p.z_hi(j) + slack(p.z_hi(j)))
      return fmt::format("bounds of variable {} are contradictory", j);
  for (Eigen::Index i = 0; i < p.g_lo.size(); ++i)
    if (p.g_lo(i) > p.g_hi(i) + slack(p.g_hi(i)))
      return fmt::format("inequality row {} has lower limit above upper limit", i);
  // Singleton equality rows fix a variable; check against its bounds and other fixings.
  const RowMatrix A = p.A;
  std::map<Eigen::Index, double> fixed;
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    int count = 0;
    Eigen::Index col = 0;
    double coef = 0.0;
    for (RowMatrix::InnerIterator it(A, r); it; ++it)
      if (it.value() != 0.0) {
        ++count;
        col = it.col();
        coef = it.value();
      }
    if (count == 0) {
      if (std::abs(p.b(r)) > slack(0.0)) return fmt::format("empty equality row {} with nonzero right side", r);
      continue;
    }
    if (count != 1) continue;
    const double v = p.b(r) / coef;
    if (v < p.z_lo(col) - slack(p.z_lo(col)) || v > p.z_hi(col) + slack(p.z_hi(col)))
      return fmt::format("equality row {} fixes variable {} at {} outside its bounds [{}, {}]", r, col, v,
                         p.z_lo(col), p.z_hi(col));
    const auto [it, inserted] = fixed.emplace(col, v);
    if (!inserted && std::abs(it->second - v) > slack(v))
      return fmt::format("variable {} fixed to two different values", col);
  }
  return std::nullopt;
}

}  // namespace

Solution solve(Problem problem, const Options& opt) {
  problem.normalize();
  problem.validate();
  const auto n = problem.c.size();
  Solution out;
  out.z = Vector::Zero(n);
  out.y = Vector::Zero(problem.A.rows());
  out.nu = Vector::Zero(problem.G.rows());
  out.mu = Vector::Zero(n);

  if (auto why = presolve(problem)) {
    out.status = Status::infeasible;
    out.message = "presolve: " + *why;
    return out;
  }

  // Variable scaling, objective scaling, row equilibration.
  const Vector& dz = problem.scale;
  Internal p;
  p.H = dz.asDiagonal() * problem.H * dz.asDiagonal();
  p.c = dz.cwiseProduct(problem.c);
  double obj_mag = inf_norm(p.c);
  for (int k = 0; k < p.H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p.H, k); it; ++it) obj_mag = std::max(obj_mag, std::abs(it.value()));
  const double sf = obj_mag > 0.0 ? std::clamp(1.0 / obj_mag, 1e-8, 1e10) : 1.0;
  p.H *= sf;
  p.c *= sf;

  const RowMatrix a_scaled = RowMatrix(problem.A * dz.asDiagonal());
  Vector ra = Vector::Ones(a_scaled.rows());
  if (opt.equilibrate)
    for (Eigen::Index r = 0; r < a_scaled.rows(); ++r) {
      double m = 0.0;
      for (RowMatrix::InnerIterator it(a_scaled, r); it; ++it) m = std::max(m, std::abs(it.value()));
      if (m > 0.0) ra(r) = 1.0 / m;
    }
  p.A = ra.asDiagonal() * a_scaled;
  p.b = ra.cwiseProduct(problem.b);

  const RowMatrix g_scaled = RowMatrix(problem.G * dz.asDiagonal());
  Vector rg = Vector::Ones(g_scaled.rows());
  if (opt.equilibrate)
    for (Eigen::Index r = 0; r < g_scaled.rows(); ++r) {
      double m = 0.0;
      for (RowMatrix::InnerIterator it(g_scaled, r); it; ++it) m = std::max(m, std::abs(it.value()));
      if (m > 0.0) rg(r) = 1.0 / m;
    }

  // Inequality rows C z >= d, remembering where each came from.
  struct Origin {
    bool bound;
    bool upper;
    Eigen::Index index;
    double row_scale;
  };
  std::vector<Origin> origin;
  std::vector<Triplet> tc;
  std::vector<double> d;
  Vector z0 = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = problem.z_lo(j) / dz(j), hi = problem.z_hi(j) / dz(j);
    if (std::isfinite(lo)) {
      tc.emplace_back(static_cast<int>(d.size()), j, 1.0);
      d.push_back(lo);
      origin.push_back({true, false, j, 1.0 / dz(j)});
    }
    if (std::isfinite(hi)) {
      tc.emplace_back(static_cast<int>(d.size()), j, -1.0);
      d.push_back(-hi);
      origin.push_back({true, true, j, 1.0 / dz(j)});
    }
    if (std::isfinite(lo) && std::isfinite(hi)) z0(j) = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) z0(j) = std::max(0.0, lo + 1.0);
    else if (std::isfinite(hi)) z0(j) = std::min(0.0, hi - 1.0);
  }
  for (Eigen::Index r = 0; r < g_scaled.rows(); ++r) {
    for (const bool upper : {false, true}) {
      const double limit = upper ? problem.g_hi(r) : problem.g_lo(r);
      if (!std::isfinite(limit)) continue;
      const double sign = upper ? -1.0 : 1.0;
      for (RowMatrix::InnerIterator it(g_scaled, r); it; ++it)
        tc.emplace_back(static_cast<int>(d.size()), it.col(), sign * rg(r) * it.value());
      d.push_back(sign * rg(r) * limit);
      origin.push_back({false, upper, r, rg(r)});
    }
  }
  p.C.resize(static_cast<Eigen::Index>(d.size()), n);
  p.C.setFromTriplets(tc.begin(), tc.end());
  p.d = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));

  auto core = interior_point(p, opt, z0);
  out.iterations = core.iterations;
  out.message = core.message;
  out.status = core.status;
  if (core.status != Status::optimal && core.suspect_infeasible) {
    if (!opt.verify_infeasible) {
      out.status = Status::infeasible;
    } else if (confirm_infeasible(p, opt, z0)) {
      out.status = Status::infeasible;
      out.message = "elastic phase-1 confirms infeasibility (" + core.message + ")";
    } else if (core.status == Status::infeasible) {
      out.status = Status::numerical_error;
      out.message = "dual divergence but phase-1 found a feasible point";
    }
  }

  out.z = dz.cwiseProduct(core.z);
  out.y = ra.cwiseProduct(core.y) / sf;
  for (std::size_t k = 0; k < origin.size(); ++k) {
    const auto& o = origin[k];
    const double m = o.row_scale * core.lambda(static_cast<Eigen::Index>(k)) / sf * (o.upper ? -1.0 : 1.0);
    (o.bound ? out.mu : out.nu)(o.index) += m;
  }
  out.objective = objective(problem, out.z);
  return out;
}

}  // namespace ccd::qp

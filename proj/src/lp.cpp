#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "invopt/rng.hpp"
#include "invopt/solvers.hpp"

namespace invopt {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

void check_blocks(Eigen::Index n, const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                  const Eigen::MatrixXd& E, const Eigen::VectorXd& f, const Eigen::VectorXd& lo,
                  const Eigen::VectorXd& hi) {
  if (G.size() > 0 && G.cols() != n) throw DimensionError("inequality matrix has wrong width");
  if (G.rows() != h.size()) throw DimensionError("inequality rhs length mismatch");
  if (E.size() > 0 && E.cols() != n) throw DimensionError("equality matrix has wrong width");
  if (E.rows() != f.size()) throw DimensionError("equality rhs length mismatch");
  if (lo.size() != 0 && lo.size() != n) throw DimensionError("lower bound length mismatch");
  if (hi.size() != 0 && hi.size() != n) throw DimensionError("upper bound length mismatch");
  if (!h.allFinite() || !f.allFinite()) throw DimensionError("non-finite constraint rhs");
  if (!G.allFinite() || !E.allFinite()) throw DimensionError("non-finite constraint matrix");
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CanonResult {
  SolveStatus status = SolveStatus::infeasible;
  Eigen::VectorXd x;  // primal values
  Eigen::VectorXd y;  // row multipliers, >= 0
  long iterations = 0;
};

// min c'x  s.t.  A x <= b (rows flagged in `eq`: A x = b), x >= 0.
// Dense two-phase tableau.
class Tableau {
 public:
  // `perturb` > 0 relaxes row i by perturb * (1 + |b_i|) * u_i, u_i in [1, 2)
  // from a fixed hash, so degenerate vertices split apart. The unperturbed
  // right-hand side rides along as a second column.
  Tableau(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
          const std::vector<char>& eq, const LpOptions& opts, double perturb)
      : c_(c), m_(A.rows()), n_(A.cols()), opts_(opts) {
    Eigen::VectorXd bp = b;
    std::uint64_t state = 0x9e3779b97f4a7c15ULL ^ std::uint64_t(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double u = 1.0 + double(splitmix64(state) >> 11) * 0x1.0p-53;
      if (!eq[std::size_t(i)]) bp[i] += perturb * (1.0 + std::abs(b[i])) * u;
    }
    for (Eigen::Index i = 0; i < m_; ++i)
      if (bp[i] < 0 || eq[std::size_t(i)]) ++na_;
    const double entries = double(m_ + 1) * double(n_ + m_ + na_ + 2);
    if (entries > double(opts.max_tableau_entries))
      throw SolverError("dense tableau too large: " + std::to_string(m_) + " rows x " +
                        std::to_string(n_ + m_ + na_) + " columns");
    rhs_ = n_ + m_ + na_;
    orig_ = rhs_ + 1;
    T_.setZero(m_ + 1, orig_ + 1);
    basis_.resize(m_);
    sgn_.resize(m_);
    art_of_.assign(std::size_t(m_), -1);
    blocked_.assign(std::size_t(n_ + m_), 0);
    Eigen::Index art = n_ + m_;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sgn = bp[i] < 0 ? -1.0 : 1.0;
      const bool is_eq = eq[std::size_t(i)];
      sgn_[i] = sgn;
      T_.row(i).head(n_) = sgn * A.row(i);
      if (is_eq)
        blocked_[std::size_t(n_ + i)] = 1;
      else
        T_(i, n_ + i) = sgn;
      T_(i, rhs_) = sgn * bp[i];
      T_(i, orig_) = sgn * b[i];
      if (sgn < 0 || is_eq) {
        T_(i, art) = 1.0;
        art_of_[std::size_t(i)] = art;
        basis_[i] = art++;
      } else {
        basis_[i] = n_ + i;
      }
    }
    cscale_ = std::max(1.0, c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0);
    bscale_ = std::max(1.0, b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0);
    max_iter_ = opts.max_iterations > 0 ? opts.max_iterations : 50 * (m_ + n_) + 1000;
  }

  /// Basic values for the unperturbed data are nonnegative (to tolerance).
  bool original_feasible() const {
    for (Eigen::Index i = 0; i < m_; ++i)
      if (T_(i, orig_) < -1e-9 * bscale_) return false;
    return true;
  }

  CanonResult run() {
    CanonResult out;
    if (na_ > 0) {
      T_.row(m_).setZero();
      for (Eigen::Index i = 0; i < m_; ++i)
        if (basis_[i] >= n_ + m_) T_.row(m_) -= T_.row(i);
      for (Eigen::Index a = n_ + m_; a < rhs_; ++a) T_(m_, a) = 0.0;
      const auto st = iterate(rhs_, 1.0, 1);
      if (st != SolveStatus::optimal) throw SolverError("phase one did not terminate", log());
      const double w = -T_(m_, orig_);
      if (w > 1e-9 * bscale_ * std::max<double>(1.0, double(m_))) {
        out.status = SolveStatus::infeasible;
        out.iterations = iters_;
        return out;
      }
      drive_out_artificials();
    }
    T_.row(m_).setZero();
    T_.row(m_).head(n_) = c_.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[i];
      if (j < n_ && c_[j] != 0.0) T_.row(m_) -= c_[j] * T_.row(i);
    }
    const auto st = iterate(n_ + m_, cscale_, 2);
    out.iterations = iters_;
    if (st == SolveStatus::unbounded) {
      out.status = SolveStatus::unbounded;
      return out;
    }
    out.status = SolveStatus::optimal;
    out.x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[i] < n_) out.x[basis_[i]] = std::max(0.0, T_(i, orig_));
    out.y.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i)
      out.y[i] = blocked_[std::size_t(n_ + i)] ? sgn_[i] * T_(m_, art_of_[std::size_t(i)])
                                                : std::max(0.0, T_(m_, n_ + i));
    return out;
  }

  std::vector<std::string> log() const { return {log_.begin(), log_.end()}; }

 private:
  SolveStatus iterate(Eigen::Index ncols, double scale, int phase) {
    const double dtol = 1e-9 * scale;
    const double ptol = 1e-9;
    const double ztol = 1e-11 * bscale_;
    int streak = 0;
    while (true) {
      const bool bland = streak > opts_.degenerate_switch;
      Eigen::Index e = -1;
      double best = -dtol;
      for (Eigen::Index j = 0; j < ncols; ++j) {
        if (j < n_ + m_ && blocked_[std::size_t(j)]) continue;
        const double d = T_(m_, j);
        if (d < best) {
          e = j;
          if (bland) break;
          best = d;
        }
      }
      if (e < 0) return SolveStatus::optimal;
      Eigen::Index r = -1;
      double rmin = kInf, rpiv = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = T_(i, e);
        if (a <= ptol) continue;
        // roundoff-level rhs is degenerate; exact zeros keep Bland's ties exact
        const double bi = T_(i, rhs_);
        const double ratio = bi <= ztol ? 0.0 : bi / a;
        if (r < 0 || ratio < rmin - 1e-12 * (1.0 + rmin)) {
          r = i, rmin = ratio, rpiv = a;
        } else if (ratio <= rmin + 1e-12 * (1.0 + rmin)) {
          const bool take = bland ? basis_[i] < basis_[r] : a > rpiv;
          if (take) r = i, rmin = std::min(rmin, ratio), rpiv = a;
        }
      }
      if (r < 0) return SolveStatus::unbounded;
      streak = rmin == 0.0 ? streak + 1 : 0;
      record(phase, e, r, rpiv);
      pivot(r, e);
      if (++iters_ > max_iter_)
        throw SolverError("simplex iteration limit reached (" + std::to_string(max_iter_) + ")",
                          log());
      if (!std::isfinite(T_(m_, rhs_)))
        throw SolverError("simplex breakdown: non-finite objective", log());
    }
  }

  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_ + m_) continue;
      Eigen::Index best = -1;
      double mag = 1e-9;
      for (Eigen::Index j = 0; j < n_ + m_; ++j)
        if (!blocked_[std::size_t(j)] && std::abs(T_(i, j)) > mag) mag = std::abs(T_(i, j)), best = j;
      if (best >= 0) {
        record(1, best, i, T_(i, best));
        pivot(i, best);
      }
    }
  }

  void pivot(Eigen::Index r, Eigen::Index e) {
    T_.row(r) /= T_(r, e);
    T_(r, e) = 1.0;
    // block-structured programs give sparse pivot rows
    const Eigen::Index w = T_.cols();
    nz_.clear();
    const double* pr = T_.row(r).data();
    for (Eigen::Index j = 0; j < w; ++j)
      if (pr[j] != 0.0) nz_.push_back(j);
    const bool sparse = double(nz_.size()) < 0.3 * double(w);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = T_(i, e);
      if (f == 0.0) continue;
      if (sparse) {
        double* pi = T_.row(i).data();
        for (Eigen::Index j : nz_) pi[j] -= f * pr[j];
      } else {
        T_.row(i) -= f * T_.row(r);
      }
      T_(i, e) = 0.0;
    }
    basis_[r] = e;
  }

  void record(int phase, Eigen::Index e, Eigen::Index r, double piv) {
    std::ostringstream os;
    os << "it=" << iters_ << " phase=" << phase << " enter=" << e << " leave=" << basis_[r]
       << " row=" << r << " pivot=" << piv << " obj=" << -T_(m_, orig_);
    log_.push_back(os.str());
    if (log_.size() > 40) log_.pop_front();
  }

  Eigen::VectorXd c_;
  Eigen::Index m_, n_, na_ = 0, rhs_ = 0, orig_ = 0;
  LpOptions opts_;
  RowMat T_;
  std::vector<Eigen::Index> basis_;
  Eigen::VectorXd sgn_;
  std::vector<Eigen::Index> art_of_;
  std::vector<char> blocked_;
  std::vector<Eigen::Index> nz_;
  double cscale_ = 1.0, bscale_ = 1.0;
  long iters_ = 0, max_iter_ = 0;
  std::deque<std::string> log_;
};

CanonResult simplex(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                    const std::vector<char>& eq, const LpOptions& opts) {
  // perturbed first; if the final basis does not fit the original data,
  // shrink the perturbation, and finally run unperturbed under Bland
  long spent = 0;
  for (double perturb : {1e-7, 1e-10, 0.0}) {
    Tableau t(c, A, b, eq, opts, perturb);
    CanonResult r = t.run();
    r.iterations += spent;
    if (perturb == 0.0 || r.status == SolveStatus::unbounded) return r;
    if (r.status == SolveStatus::infeasible || t.original_feasible()) return r;
    spent = r.iterations;
  }
  return {};
}

// One original variable expressed through nonnegative canonical columns.
struct VarMap {
  double offset = 0.0;
  Eigen::Index col = -1;  // first canonical column
  double sign = 1.0;      // x = offset + sign * x'
  bool split = false;     // x = x'[col] - x'[col+1]
  Eigen::Index box_row = -1;
};

}  // namespace

void LinearProgramSpec::validate() const {
  if (!objective.allFinite()) throw DimensionError("objective has non-finite entries");
  check_blocks(objective.size(), ineq_matrix, ineq_rhs, eq_matrix, eq_rhs, lower, upper);
}

std::string dump_lp(const LinearProgramSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "\n");
  os << "vars " << spec.num_vars() << "\nobjective\n" << spec.objective.transpose().format(fmt);
  os << "\nineq " << spec.ineq_matrix.rows() << "\n";
  for (Eigen::Index i = 0; i < spec.ineq_matrix.rows(); ++i)
    os << spec.ineq_matrix.row(i).format(fmt) << " <= " << spec.ineq_rhs[i] << "\n";
  os << "eq " << spec.eq_matrix.rows() << "\n";
  for (Eigen::Index i = 0; i < spec.eq_matrix.rows(); ++i)
    os << spec.eq_matrix.row(i).format(fmt) << " = " << spec.eq_rhs[i] << "\n";
  os << "bounds\n";
  for (Eigen::Index j = 0; j < spec.num_vars(); ++j) {
    const double l = spec.lower.size() ? spec.lower[j] : -kInf;
    const double u = spec.upper.size() ? spec.upper[j] : kInf;
    os << j << " [" << l << ", " << u << "]\n";
  }
  return os.str();
}

SolveResult solve_lp(const LinearProgramSpec& spec, const LpOptions& opts) {
  spec.validate();
  const Eigen::Index n = spec.num_vars();
  const Eigen::Index mg = spec.ineq_matrix.rows(), me = spec.eq_matrix.rows();
  const Eigen::VectorXd lo = spec.lower.size() ? spec.lower : Eigen::VectorXd::Constant(n, -kInf);
  const Eigen::VectorXd hi = spec.upper.size() ? spec.upper : Eigen::VectorXd::Constant(n, kInf);

  SolveResult res;
  for (Eigen::Index j = 0; j < n; ++j)
    if (lo[j] > hi[j] || lo[j] == kInf || hi[j] == -kInf) return res;  // infeasible

  // Canonical columns and box rows.
  std::vector<VarMap> vm(n);
  Eigen::Index ncol = 0, nbox = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& v = vm[j];
    v.col = ncol;
    if (std::isfinite(lo[j])) {
      v.offset = lo[j];
      ncol += 1;
      if (std::isfinite(hi[j])) v.box_row = nbox++;
    } else if (std::isfinite(hi[j])) {
      v.offset = hi[j], v.sign = -1.0;
      ncol += 1;
    } else {
      v.split = true;
      ncol += 2;
    }
  }
  Eigen::VectorXd offset(n);
  for (Eigen::Index j = 0; j < n; ++j) offset[j] = vm[j].offset;

  const Eigen::Index mc = mg + me + nbox;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(mc, ncol);
  Eigen::VectorXd b(mc);
  Eigen::VectorXd c(ncol);
  auto put_column = [&](Eigen::Index j, const auto& colG, const auto& colE) {
    const auto& v = vm[j];
    if (v.split) {
      A.col(v.col).head(mg) = colG;
      A.col(v.col + 1).head(mg) = -colG;
      A.col(v.col).segment(mg, me) = colE;
      A.col(v.col + 1).segment(mg, me) = -colE;
      c[v.col] = spec.objective[j];
      c[v.col + 1] = -spec.objective[j];
    } else {
      A.col(v.col).head(mg) = v.sign * colG;
      A.col(v.col).segment(mg, me) = v.sign * colE;
      c[v.col] = v.sign * spec.objective[j];
      if (v.box_row >= 0) A(mg + me + v.box_row, v.col) = 1.0;
    }
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd colG = mg ? Eigen::VectorXd(spec.ineq_matrix.col(j)) : Eigen::VectorXd();
    const Eigen::VectorXd colE = me ? Eigen::VectorXd(spec.eq_matrix.col(j)) : Eigen::VectorXd();
    put_column(j, colG, colE);
  }
  if (mg) b.head(mg) = spec.ineq_rhs - spec.ineq_matrix * offset;
  if (me) {
    const Eigen::VectorXd fr = spec.eq_rhs - spec.eq_matrix * offset;
    b.segment(mg, me) = fr;
  }
  for (Eigen::Index j = 0; j < n; ++j)
    if (vm[j].box_row >= 0) b[mg + me + vm[j].box_row] = hi[j] - lo[j];
  std::vector<char> eq(std::size_t(mc), 0);
  std::fill(eq.begin() + mg, eq.begin() + mg + me, 1);

  // Route: the smaller tableau.
  const double primal_size = double(mc) * double(ncol + mc + me);
  const double dual_size = double(ncol) * double(mc + me + ncol);
  bool use_dual = dual_size < primal_size;
  if (opts.route == LpOptions::Route::primal) use_dual = false;
  if (opts.route == LpOptions::Route::dual) use_dual = true;

  CanonResult cr;
  if (!use_dual) {
    cr = simplex(c, A, b, eq, opts);
  } else {
    // min b'y  s.t. -A'y <= c, y >= 0 except the free equality multipliers,
    // which are split into two columns (the second block at the end)
    Eigen::MatrixXd At(ncol, mc + me);
    At.leftCols(mc) = -A.transpose();
    At.rightCols(me) = A.middleRows(mg, me).transpose();
    Eigen::VectorXd bd(mc + me);
    bd.head(mc) = b;
    bd.tail(me) = -b.segment(mg, me);
    const std::vector<char> none(std::size_t(ncol), 0);
    CanonResult d = simplex(bd, At, c, none, opts);
    cr.iterations = d.iterations;
    if (d.status == SolveStatus::optimal) {
      cr.status = SolveStatus::optimal;
      cr.x = d.y;
      cr.y = d.x.head(mc);
      cr.y.segment(mg, me) -= d.x.tail(me);
    } else if (d.status == SolveStatus::unbounded) {
      cr.status = SolveStatus::infeasible;
    } else {
      CanonResult feas = simplex(bd, At, Eigen::VectorXd::Zero(ncol), none, opts);
      cr.iterations += feas.iterations;
      cr.status = feas.status == SolveStatus::optimal ? SolveStatus::unbounded
                                                      : SolveStatus::infeasible;
    }
    res.solved_dual = true;
  }
  res.iterations = cr.iterations;
  res.status = cr.status;
  if (cr.status != SolveStatus::optimal) return res;

  // Map back.
  res.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& v = vm[j];
    res.x[j] = v.split ? cr.x[v.col] - cr.x[v.col + 1] : v.offset + v.sign * cr.x[v.col];
  }
  res.ineq_duals = cr.y.head(mg);
  res.eq_duals = me ? Eigen::VectorXd(cr.y.segment(mg, me)) : Eigen::VectorXd();
  res.objective = spec.objective.dot(res.x);

  Eigen::VectorXd g = spec.objective;
  if (mg) g += spec.ineq_matrix.transpose() * res.ineq_duals;
  if (me) g += spec.eq_matrix.transpose() * res.eq_duals;
  res.lower_duals = Eigen::VectorXd::Zero(n);
  res.upper_duals = Eigen::VectorXd::Zero(n);
  double dres = 0.0, comp = 0.0, pres = 0.0;
  double dual_obj = 0.0;
  if (mg) dual_obj -= spec.ineq_rhs.dot(res.ineq_duals);
  if (me) dual_obj -= spec.eq_rhs.dot(res.eq_duals);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (g[j] >= 0) {
      if (std::isfinite(lo[j])) {
        res.lower_duals[j] = g[j];
        dual_obj += lo[j] * g[j];
        comp = std::max(comp, std::abs(g[j] * (res.x[j] - lo[j])));
      } else {
        dres = std::max(dres, g[j]);
      }
    } else {
      if (std::isfinite(hi[j])) {
        res.upper_duals[j] = -g[j];
        dual_obj += hi[j] * g[j];
        comp = std::max(comp, std::abs(g[j] * (hi[j] - res.x[j])));
      } else {
        dres = std::max(dres, -g[j]);
      }
    }
    pres = std::max({pres, lo[j] - res.x[j], res.x[j] - hi[j]});
  }
  if (mg) {
    const Eigen::VectorXd slack = spec.ineq_rhs - spec.ineq_matrix * res.x;
    pres = std::max(pres, (-slack).maxCoeff());
    comp = std::max(comp, (slack.array() * res.ineq_duals.array()).abs().maxCoeff());
  }
  if (me) pres = std::max(pres, (spec.eq_matrix * res.x - spec.eq_rhs).lpNorm<Eigen::Infinity>());
  res.dual_objective = dual_obj;
  res.primal_residual = std::max(0.0, pres);
  res.dual_residual = dres;
  res.complementarity = comp;
  return res;
}

}  // namespace invopt

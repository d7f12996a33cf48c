#include "invopt/reformulate.hpp"

#include <algorithm>
#include <cmath>

namespace invopt {

namespace {

// Dense program over x = (theta, beta, extra...) with the regularizer applied
// to the theta block.
struct Program {
  int p = 0;
  int N = 0;
  Eigen::Index n = 0;
  std::vector<Eigen::VectorXd> g_rows, e_rows;
  std::vector<double> g_rhs, e_rhs;
  Eigen::VectorXd lower, upper;
};

void check_size(double rows, double cols, const TrainerOptions& opt) {
  if (rows * cols > opt.max_matrix_entries)
    throw ConfigError("training program too large: " + std::to_string(long(rows)) + " rows x " +
                      std::to_string(long(cols)) + " columns exceeds max_matrix_entries");
}

TrainerSolution solve_program(Program& prog, const TrainerOptions& opt, const Eigen::VectorXd* start) {
  const int p = prog.p, N = prog.N;
  const bool l1 = opt.regularizer == Regularizer::l1 && opt.kappa > 0;
  const Eigen::Index base = prog.n;
  const Eigen::Index n = base + (l1 ? p : 0);
  const Eigen::Index mg = Eigen::Index(prog.g_rows.size()) + (l1 ? 2 * p : 0);
  const Eigen::Index me = Eigen::Index(prog.e_rows.size());

  QpSpec qp;
  qp.q = Eigen::VectorXd::Zero(n);
  qp.q.segment(p, N).setConstant(1.0 / N);
  qp.P = Eigen::MatrixXd::Zero(n, n);
  if (opt.regularizer == Regularizer::half_sq_l2) qp.P.topLeftCorner(p, p).diagonal().setConstant(opt.kappa);
  qp.ineq_matrix = Eigen::MatrixXd::Zero(mg, n);
  qp.ineq_rhs = Eigen::VectorXd::Zero(mg);
  for (std::size_t r = 0; r < prog.g_rows.size(); ++r) {
    qp.ineq_matrix.row(Eigen::Index(r)).head(base) = prog.g_rows[r].transpose();
    qp.ineq_rhs[Eigen::Index(r)] = prog.g_rhs[r];
  }
  if (l1) {
    const Eigen::Index r0 = Eigen::Index(prog.g_rows.size());
    for (int k = 0; k < p; ++k) {
      qp.ineq_matrix(r0 + k, k) = 1.0;
      qp.ineq_matrix(r0 + k, base + k) = -1.0;
      qp.ineq_matrix(r0 + p + k, k) = -1.0;
      qp.ineq_matrix(r0 + p + k, base + k) = -1.0;
    }
    qp.q.tail(p).setConstant(opt.kappa);
  }
  qp.eq_matrix = Eigen::MatrixXd::Zero(me, n);
  qp.eq_rhs = Eigen::VectorXd::Zero(me);
  for (std::size_t r = 0; r < prog.e_rows.size(); ++r) {
    qp.eq_matrix.row(Eigen::Index(r)).head(base) = prog.e_rows[r].transpose();
    qp.eq_rhs[Eigen::Index(r)] = prog.e_rhs[r];
  }
  qp.lower = Eigen::VectorXd::Constant(n, -kInf);
  qp.upper = Eigen::VectorXd::Constant(n, kInf);
  qp.lower.head(base) = prog.lower;
  qp.upper.head(base) = prog.upper;

  QpOptions qo;
  if (start) {
    qo.start = Eigen::VectorXd::Zero(n);
    qo.start.head(base) = *start;
    if (l1) qo.start.tail(p) = start->head(p).cwiseAbs();
  }
  const SolveResult r = solve_qp(qp, qo);

  TrainerSolution sol;
  sol.rows = mg + me;
  sol.status = r.status;
  sol.certificate = r;
  if (r.status == SolveStatus::unbounded) throw ConfigError("training problem is unbounded below");
  if (r.status == SolveStatus::infeasible) throw InconsistentDataError("training program is infeasible");
  if (r.status != SolveStatus::optimal) return sol;
  sol.theta = r.x.head(p);
  sol.slacks = r.x.segment(p, N);
  sol.objective = opt.kappa * regularizer_value(opt.regularizer, sol.theta) + sol.slacks.mean();
  return sol;
}

void theta_bounds(Program& prog, const ThetaSet& set) {
  set.validate();
  prog.lower.head(prog.p) = set.lower(prog.p);
  prog.upper.head(prog.p) = set.upper(prog.p);
  if (set.unit_sum) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(prog.n);
    e.head(prog.p).setOnes();
    prog.e_rows.push_back(e);
    prog.e_rhs.push_back(1.0);
  }
}

// Large strongly convex programs: solve on a working subset of rows, add the
// rows still violated (a few per instance), repeat. The restricted optimum
// satisfying every row is the optimum of the full program.
constexpr std::size_t kRowGenerationThreshold = 2000;

TrainerSolution solve_by_row_generation(const Program& full, const TrainerOptions& opt,
                                        const Eigen::VectorXd& start) {
  const int p = full.p, N = full.N;
  const std::size_t R = full.g_rows.size();
  std::vector<int> owner(R);
  for (std::size_t r = 0; r < R; ++r)
    for (int i = 0; i < N; ++i)
      if (full.g_rows[r][p + i] != 0.0) owner[r] = i;
  std::vector<char> active(R, 0);
  auto add_worst = [&](const Eigen::VectorXd& x, double tol, int per_instance) {
    std::vector<std::vector<std::pair<double, std::size_t>>> viol(static_cast<std::size_t>(N));
    for (std::size_t r = 0; r < R; ++r) {
      if (active[r]) continue;
      const double v = full.g_rows[r].dot(x) - full.g_rhs[r];
      if (v > tol) viol[std::size_t(owner[r])].emplace_back(-v, r);
    }
    std::size_t added = 0;
    for (auto& list : viol) {
      const std::size_t k = std::min(list.size(), std::size_t(per_instance));
      std::partial_sort(list.begin(), list.begin() + long(k), list.end());
      for (std::size_t j = 0; j < k; ++j) active[list[j].second] = 1, ++added;
    }
    return added;
  };
  // first round: the rows defining beta at the start point
  Eigen::VectorXd x = start;
  x.segment(p, N).setConstant(-kInf);
  for (std::size_t r = 0; r < R; ++r) x[p + owner[r]] = std::max(x[p + owner[r]], full.g_rows[r].head(p).dot(start.head(p)) - full.g_rhs[r]);
  for (std::size_t r = 0; r < R; ++r)
    if (full.g_rows[r].head(p).dot(start.head(p)) - full.g_rhs[r] >= x[p + owner[r]]) active[r] = 1;

  for (int round = 0;; ++round) {
    Program sub = full;
    sub.g_rows.clear();
    sub.g_rhs.clear();
    for (std::size_t r = 0; r < R; ++r)
      if (active[r]) sub.g_rows.push_back(full.g_rows[r]), sub.g_rhs.push_back(full.g_rhs[r]);
    TrainerSolution sol = solve_program(sub, opt, &start);
    if (sol.status != SolveStatus::optimal) return sol;
    x.head(p) = sol.theta;
    x.segment(p, N) = sol.slacks;
    const double tol = 1e-10 * (1.0 + x.lpNorm<Eigen::Infinity>());
    if (add_worst(x, tol, 3) == 0) {
      double worst = 0.0;
      for (std::size_t r = 0; r < R; ++r) worst = std::max(worst, full.g_rows[r].dot(x) - full.g_rhs[r]);
      sol.certificate.primal_residual = std::max(sol.certificate.primal_residual, worst);
      return sol;
    }
    if (round > 10000) throw SolverError("row generation did not settle");
  }
}

}  // namespace

TrainerSolution train_asl_enumerated(const IODataset& ds, const FeatureMap& phi, const DistanceFn& d,
                                     const TrainerOptions& opt) {
  if (!(opt.kappa >= 0.0)) throw ConfigError("kappa must be nonnegative");
  if (ds.empty()) throw DimensionError("dataset is empty");
  const int p = phi.dimension, N = int(ds.size());

  Program prog;
  prog.p = p;
  prog.N = N;
  prog.n = p + N;
  prog.lower = Eigen::VectorXd::Constant(prog.n, -kInf);
  prog.upper = Eigen::VectorXd::Constant(prog.n, kInf);
  if (opt.hinge) prog.lower.segment(p, N).setZero();
  theta_bounds(prog, opt.theta_set);

  const CostVector theta0 = opt.theta_set.project(Eigen::VectorXd::Zero(p));
  Eigen::VectorXd start = Eigen::VectorXd::Zero(prog.n);
  start.head(p) = theta0;
  start.segment(p, N).setConstant(opt.hinge ? 0.0 : -kInf);

  for (int i = 0; i < N; ++i) {
    const IOInstance& inst = ds[std::size_t(i)];
    if (!inst.oracle || !inst.oracle->enumerable())
      throw OracleError("the epigraph trainer needs finite-enumerable oracles");
    const Eigen::VectorXd fh = phi(inst.signal, inst.response);
    const auto X = inst.oracle->enumerate(inst.signal);
    check_size(double(prog.g_rows.size() + X.size()), double(prog.n), opt);
    for (const Response& x : X) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(prog.n);
      row.head(p) = fh - phi(inst.signal, x);
      row[p + i] = -1.0;
      const double dist = d(inst.response, x);
      start[p + i] = std::max(start[p + i], row.head(p).dot(theta0) + dist);
      prog.g_rows.push_back(std::move(row));
      prog.g_rhs.push_back(-dist);
    }
    if (X.empty()) start[p + i] = std::max(start[p + i], 0.0);
  }
  const bool quadratic = opt.regularizer == Regularizer::half_sq_l2 && opt.kappa > 0;
  if (!quadratic || !opt.row_generation || prog.g_rows.size() <= kRowGenerationThreshold) return solve_program(prog, opt, &start);
  return solve_by_row_generation(prog, opt, start);
}

double mixed_integer_inner_primal(const MixedIntegerOracle& oracle, const Signal& s, const Eigen::VectorXi& z,
                                  const CostVector& theta, const Eigen::VectorXd& h) {
  const auto& H = oracle.hypothesis();
  Eigen::MatrixXd Ay;
  Eigen::VectorXd by;
  MixedIntegerOracle::y_polytope(s, z, Ay, by);
  LinearProgramSpec lp;
  lp.objective = H.Q(theta) * H.phi1(s.w, z) + h;
  lp.ineq_matrix = Ay;
  lp.ineq_rhs = by;
  const SolveResult r = solve_lp(lp);
  if (r.status == SolveStatus::infeasible) return -kInf;
  if (r.status != SolveStatus::optimal) throw SolverError("inner y problem ended with status " + to_string(r.status));
  return -r.objective;
}

namespace {

// One dualized block of the mixed-integer program: instance i, the j-th z of
// Z(w_i) and the k-th y-penalty direction h.
struct MiBlock {
  int i;
  std::size_t j;
  int k;
};

struct MiInstance {
  Eigen::VectorXd fh;
  std::vector<Eigen::MatrixXd> Ay;
  std::vector<Eigen::VectorXd> by, f1, f2;
  std::vector<double> dz;
  std::vector<char> feasible;
};

constexpr std::size_t kBlockGenerationThreshold = 120;

}  // namespace

TrainerSolution train_asl_mixed_integer_lp(const IODataset& ds, const DistanceFn& dz, const TrainerOptions& opt) {
  if (!(opt.kappa >= 0.0)) throw ConfigError("kappa must be nonnegative");
  if (ds.empty()) throw DimensionError("dataset is empty");
  const auto* first = dynamic_cast<const MixedIntegerOracle*>(ds[0].oracle.get());
  if (!first) throw OracleError("the mixed-integer trainer needs MixedIntegerOracle instances");
  const LinearHypothesis H = first->hypothesis();
  const bool pen = first->penalize_y();
  const int p = H.dimension(), N = int(ds.size()), u = H.u;
  const int K = pen && u > 0 ? 2 * u : 1;

  std::vector<Eigen::VectorXd> hs;
  if (K == 1) {
    hs.push_back(Eigen::VectorXd::Zero(u));
  } else {
    for (int k = 0; k < 2 * u; ++k) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(u);
      h[k % u] = k < u ? 1.0 : -1.0;
      hs.push_back(h);
    }
  }

  // per-instance data; z whose y polytope is empty contribute nothing (the
  // inner maximum over them is -inf) and are left out of the program
  const FeatureMap phi = H.feature_map();
  std::vector<MiInstance> data(static_cast<std::size_t>(N));
  std::vector<MiBlock> all_blocks;
  for (int i = 0; i < N; ++i) {
    const IOInstance& inst = ds[std::size_t(i)];
    const auto* o = dynamic_cast<const MixedIntegerOracle*>(inst.oracle.get());
    if (!o) throw OracleError("the mixed-integer trainer needs MixedIntegerOracle instances");
    if (o->hypothesis().u != u || o->hypothesis().m != H.m || o->hypothesis().r != H.r || o->penalize_y() != pen)
      throw DimensionError("instances disagree on the hypothesis");
    const Signal& s = inst.signal;
    if (s.A.cols() != u) throw DimensionError("A columns must equal u");
    if (s.z_set.empty()) throw OracleError("empty discrete set Z(w)");
    MiInstance& d = data[std::size_t(i)];
    d.fh = phi(s, inst.response);
    const Response zhat(Eigen::VectorXd(), inst.response.z);
    for (std::size_t j = 0; j < s.z_set.size(); ++j) {
      Eigen::MatrixXd Ay;
      Eigen::VectorXd by;
      MixedIntegerOracle::y_polytope(s, s.z_set[j], Ay, by);
      d.f1.push_back(H.phi1(s.w, s.z_set[j]));
      d.f2.push_back(H.phi2(s.w, s.z_set[j]));
      if (d.f1.back().size() != H.m || d.f2.back().size() != H.r)
        throw DimensionError("phi1/phi2 output does not match the Q/q blocks");
      d.dz.push_back(dz(zhat, Response(Eigen::VectorXd(), s.z_set[j])));
      bool feasible;
      if (u == 0) {
        feasible = by.size() == 0 || by.minCoeff() >= -MixedIntegerOracle::kFeasTol;
      } else {
        LinearProgramSpec lp;
        lp.objective = Eigen::VectorXd::Zero(u);
        lp.ineq_matrix = Ay;
        lp.ineq_rhs = by;
        feasible = solve_lp(lp).status != SolveStatus::infeasible;
      }
      d.Ay.push_back(std::move(Ay));
      d.by.push_back(std::move(by));
      d.feasible.push_back(feasible);
      if (feasible)
        for (int k = 0; k < K; ++k) all_blocks.push_back({i, j, k});
    }
  }

  // program over a subset of blocks: columns theta, beta, one lambda per block
  auto build = [&](const std::vector<MiBlock>& blocks, std::vector<Eigen::Index>& offset) {
    Program prog;
    prog.p = p;
    prog.N = N;
    prog.n = p + N;
    offset.clear();
    for (const MiBlock& b : blocks) {
      offset.push_back(prog.n);
      prog.n += data[std::size_t(b.i)].by[b.j].size();
    }
    check_size(double(blocks.size()) * double(1 + u), double(prog.n), opt);
    prog.lower = Eigen::VectorXd::Constant(prog.n, -kInf);
    prog.upper = Eigen::VectorXd::Constant(prog.n, kInf);
    prog.lower.tail(prog.n - p - N).setZero();
    if (opt.hinge) prog.lower.segment(p, N).setZero();
    theta_bounds(prog, opt.theta_set);
    std::vector<Eigen::VectorXd> e_rows;
    std::vector<double> e_rhs;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto [i, j, k] = blocks[b];
      const MiInstance& d = data[std::size_t(i)];
      const Eigen::Index lam = offset[b];
      const Eigen::VectorXd& h = hs[std::size_t(k)];
      Eigen::VectorXd row = Eigen::VectorXd::Zero(prog.n);
      row.head(p) = d.fh;
      row.segment(p - H.r, H.r) -= d.f2[j];
      row.segment(lam, d.by[j].size()) = d.by[j];
      row[p + i] = -1.0;
      prog.g_rows.push_back(std::move(row));
      prog.g_rhs.push_back(-(h.dot(ds[std::size_t(i)].response.y) + d.dz[j]));
      for (int a = 0; a < u; ++a) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(prog.n);
        for (int c = 0; c < H.m; ++c) e[a + u * c] = d.f1[j][c];
        e.segment(lam, d.by[j].size()) = d.Ay[j].col(a);
        e_rows.push_back(std::move(e));
        e_rhs.push_back(-h[a]);
      }
    }
    // the unit-sum row (if any) goes last
    prog.e_rows.insert(prog.e_rows.begin(), e_rows.begin(), e_rows.end());
    prog.e_rhs.insert(prog.e_rhs.begin(), e_rhs.begin(), e_rhs.end());
    return prog;
  };

  // Inner value of a block at theta: the block's row with the best lambda,
  // i.e. the maximum over y of the dualized inner problem.
  auto block_value = [&](const MiBlock& b, const CostVector& theta) {
    const MiInstance& d = data[std::size_t(b.i)];
    const IOInstance& inst = ds[std::size_t(b.i)];
    const Eigen::VectorXd& h = hs[std::size_t(b.k)];
    const double lin = theta.dot(d.fh) - H.q(theta).dot(d.f2[b.j]) + h.dot(inst.response.y) + d.dz[b.j];
    const double inner =
        u == 0 ? 0.0
               : mixed_integer_inner_primal(static_cast<const MixedIntegerOracle&>(*inst.oracle), inst.signal,
                                            inst.signal.z_set[b.j], theta, h);
    return lin + inner;
  };

  std::vector<MiBlock> active;
  std::vector<Eigen::Index> offset;
  TrainerSolution sol;
  if (!opt.row_generation || all_blocks.size() <= kBlockGenerationThreshold) {
    active = all_blocks;
    Program prog = build(active, offset);
    sol = solve_program(prog, opt, nullptr);
    if (sol.status != SolveStatus::optimal) return sol;
  } else {
    // Block generation. The observed z's blocks bound every beta_i below, so
    // each restricted program is bounded; at a restricted optimum with no
    // violated block the full program is solved too.
    std::vector<char> in(all_blocks.size(), 0);
    for (std::size_t b = 0; b < all_blocks.size(); ++b) {
      const MiBlock& blk = all_blocks[b];
      if (ds[std::size_t(blk.i)].signal.z_set[blk.j] == ds[std::size_t(blk.i)].response.z) in[b] = 1;
    }
    for (int round = 0;; ++round) {
      active.clear();
      for (std::size_t b = 0; b < all_blocks.size(); ++b)
        if (in[b]) active.push_back(all_blocks[b]);
      Program prog = build(active, offset);
      sol = solve_program(prog, opt, nullptr);
      if (sol.status != SolveStatus::optimal) return sol;
      const double tol = 1e-9 * (1.0 + sol.certificate.x.head(p + N).lpNorm<Eigen::Infinity>());
      std::vector<std::vector<std::pair<double, std::size_t>>> viol(static_cast<std::size_t>(N));
      double worst = 0.0;
      for (std::size_t b = 0; b < all_blocks.size(); ++b) {
        if (in[b]) continue;
        const double v = block_value(all_blocks[b], sol.theta) - sol.slacks[all_blocks[b].i];
        worst = std::max(worst, v);
        if (v > tol) viol[std::size_t(all_blocks[b].i)].emplace_back(-v, b);
      }
      std::size_t added = 0;
      for (auto& list : viol) {
        const std::size_t k = std::min<std::size_t>(list.size(), 3);
        std::partial_sort(list.begin(), list.begin() + long(k), list.end());
        for (std::size_t q = 0; q < k; ++q) in[list[q].second] = 1, ++added;
      }
      if (added == 0) {
        sol.certificate.primal_residual = std::max(sol.certificate.primal_residual, worst);
        break;
      }
      if (round > 10000) throw SolverError("block generation did not settle");
    }
  }

  // Multipliers for every (i, j, k). Blocks outside the solved program, and
  // blocks whose row is slack, get the optimal dual of the inner y problem,
  // which keeps the row feasible and makes each block's dual value exact.
  // Empty y polytopes get any stationary multiplier (on the box rows).
  const Eigen::VectorXd& x = sol.certificate.x;
  std::vector<std::vector<std::vector<Eigen::Index>>> where(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    where[std::size_t(i)].assign(ds[std::size_t(i)].signal.z_set.size(), std::vector<Eigen::Index>(std::size_t(K), -1));
  for (std::size_t b = 0; b < active.size(); ++b)
    where[std::size_t(active[b].i)][active[b].j][std::size_t(active[b].k)] = offset[b];
  sol.duals.resize(std::size_t(N));
  for (int i = 0; i < N; ++i) {
    const Signal& s = ds[std::size_t(i)].signal;
    const MiInstance& d = data[std::size_t(i)];
    sol.duals[std::size_t(i)].resize(s.z_set.size());
    for (std::size_t j = 0; j < s.z_set.size(); ++j)
      for (int k = 0; k < K; ++k) {
        const Eigen::Index at = where[std::size_t(i)][j][std::size_t(k)];
        const Eigen::Index w = d.by[j].size();
        Eigen::VectorXd lam = at >= 0 ? Eigen::VectorXd(x.segment(at, w)) : Eigen::VectorXd::Zero(w);
        const Eigen::VectorXd c = H.Q(sol.theta) * d.f1[j] + hs[std::size_t(k)];
        if (u > 0 && !d.feasible[j]) {
          const Eigen::Index t = w - 2 * u;
          lam.setZero();
          lam.segment(t, u) = (-c).cwiseMax(0.0);
          lam.segment(t + u, u) = c.cwiseMax(0.0);
        } else if (u == 0) {
          if (at < 0 || d.by[j].size() == 0 || d.by[j].minCoeff() >= 0.0) lam.setZero();
        } else {
          LinearProgramSpec inner;
          inner.objective = c;
          inner.ineq_matrix = d.Ay[j];
          inner.ineq_rhs = d.by[j];
          const SolveResult r = solve_lp(inner);
          if (!r.optimal()) throw SolverError("inner y problem ended with status " + to_string(r.status));
          if (at < 0 || d.by[j].dot(r.ineq_duals) <= d.by[j].dot(lam)) lam = r.ineq_duals;
        }
        sol.duals[std::size_t(i)][j].push_back(std::move(lam));
      }
  }
  return sol;
}

TrainerSolution train_suboptimality_facets(const IODataset& ds, const FeatureMap& phi, const ThetaSet& set) {
  if (ds.empty()) throw DimensionError("dataset is empty");
  if (set.kind == ThetaSet::Kind::box || set.unit_sum)
    throw ConfigError("facet trainer supports Theta = all or nonneg");
  const int p = phi.dimension, N = int(ds.size());
  const Eigen::Index n = p + N;

  std::vector<Eigen::VectorXd> rows;
  for (int i = 0; i < N; ++i) {
    const IOInstance& inst = ds[std::size_t(i)];
    if (!inst.oracle || !inst.oracle->enumerable())
      throw OracleError("the facet trainer needs finite-enumerable oracles");
    const Eigen::VectorXd fh = phi(inst.signal, inst.response);
    for (const Response& x : inst.oracle->enumerate(inst.signal)) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row.head(p) = fh - phi(inst.signal, x);
      row[p + i] = -1.0;
      rows.push_back(std::move(row));
    }
  }
  check_size(double(rows.size()), double(n), TrainerOptions{});
  LinearProgramSpec lp;
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.objective.tail(N).setConstant(1.0 / N);
  lp.ineq_matrix.resize(Eigen::Index(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) lp.ineq_matrix.row(Eigen::Index(r)) = rows[r].transpose();
  lp.ineq_rhs = Eigen::VectorXd::Zero(Eigen::Index(rows.size()));
  const double lo = set.kind == ThetaSet::Kind::nonneg ? 0.0 : -1.0;

  TrainerSolution best;
  best.status = SolveStatus::infeasible;
  best.objective = kInf;
  for (int k = 0; k < p; ++k) {
    for (double sign : {1.0, -1.0}) {
      if (sign < lo) continue;
      LinearProgramSpec f = lp;
      f.lower = Eigen::VectorXd::Zero(n);
      f.upper = Eigen::VectorXd::Constant(n, kInf);
      f.lower.head(p).setConstant(lo);
      f.upper.head(p).setConstant(1.0);
      f.lower[k] = f.upper[k] = sign;
      const SolveResult r = solve_lp(f);
      if (r.status == SolveStatus::infeasible) continue;
      if (!r.optimal()) throw SolverError("facet LP ended with status " + to_string(r.status));
      if (r.objective < best.objective - 1e-12) {
        best.theta = r.x.head(p);
        best.slacks = r.x.tail(N);
        best.objective = r.objective;
        best.status = SolveStatus::optimal;
        best.certificate = r;
        best.rows = Eigen::Index(rows.size());
      }
    }
  }
  if (best.status != SolveStatus::optimal) throw InconsistentDataError("every facet program is infeasible");
  return best;
}

AffineForm tu_inner_rewrite(const Eigen::VectorXi& xhat, const CostVector& theta) {
  if (xhat.size() != theta.size()) throw DimensionError("xhat and theta lengths differ");
  if (((xhat.array() != 0) && (xhat.array() != 1)).any()) throw DimensionError("xhat must be binary");
  const Eigen::VectorXd xh = xhat.cast<double>();
  AffineForm out;
  out.c_lin = Eigen::VectorXd::Ones(xh.size()) - 2 * xh - theta;
  out.c_const = theta.dot(xh) + xh.sum();
  return out;
}

double asl_tu_lp(const CostVector& theta, const Signal& s, const Eigen::VectorXi& xhat) {
  const AffineForm f = tu_inner_rewrite(xhat, theta);
  LinearProgramSpec lp;
  lp.objective = -f.c_lin;
  lp.ineq_matrix = s.A;
  lp.ineq_rhs = s.rhs;
  lp.lower = Eigen::VectorXd::Zero(xhat.size());
  lp.upper = Eigen::VectorXd::Ones(xhat.size());
  const SolveResult r = solve_lp(lp);
  if (!r.optimal()) throw OracleError("relaxed inner problem ended with status " + to_string(r.status));
  return -r.objective + f.c_const;
}

}  // namespace invopt

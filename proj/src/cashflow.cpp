#include "mscf/cashflow.hpp"

#include <algorithm>
#include <cmath>

#include "mscf/parallel.hpp"
#include "mscf/rng.hpp"

namespace mscf {

namespace {

void require_grid(const GridPtr& a, const GridPtr& b, const char* what) {
  if (!same_grid(a, b)) throw Error(std::string(what) + ": grid mismatch");
}

/// B_j(t_m) for every state and grid point.
Eigen::MatrixXd sojourn_table(const PaymentSpec& pay, const EventGrid& grid, int n_states) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(grid.size(), n_states);
  for (int j = 0; j < n_states && j < static_cast<int>(pay.sojourn.size()); ++j) {
    const auto& measure = pay.sojourn[static_cast<std::size_t>(j)];
    if (measure.empty()) continue;
    for (Index m = 0; m < grid.size(); ++m) b(m, j) = measure.cumulative(grid[m]);
  }
  return b;
}

CashFlowCurve make_curve(GridPtr grid, Eigen::VectorXd values, std::string method, double eps) {
  CashFlowCurve cf;
  cf.values = Curve(std::move(grid), std::move(values));
  cf.method = std::move(method);
  cf.eps = eps;
  return cf;
}

}  // namespace

CashFlowCurve saj_cashflow(const OccupationCurve& p, const HazardBundle1D& hazards, const PaymentSpec& pay) {
  require_grid(p.grid, hazards.grid, "saj_cashflow");
  const int J = hazards.n_states();
  if (static_cast<int>(pay.sojourn.size()) != J) throw Error("saj_cashflow: payments do not match the state space");
  const auto& grid = *p.grid;
  const Index M = grid.size();
  const Eigen::MatrixXd b = sojourn_table(pay, grid, J);
  Eigen::VectorXd a(M);
  a[0] = pay.b0;
  for (Index m = 1; m < M; ++m) {
    double inc = 0.0;
    for (int j = 0; j < J; ++j) {
      const double pj = p.p(m - 1, j);
      if (pj == 0.0) continue;
      double term = b(m, j) - b(m - 1, j);
      for (int k = 0; k < J; ++k) {
        if (k == j || !pay.has_transition_payment(j, k)) continue;
        const double d = hazards.increment(m, j, k);
        if (d != 0.0) term += pay.transition_payment(j, k, grid[m]) * d;
      }
      inc += pj * term;
    }
    a[m] = a[m - 1] + inc;
  }
  return make_curve(p.grid, std::move(a), hazards.scaled ? "saj" : "aj", hazards.eps);
}

CashFlowCurve saj_cashflow_freepolicy6(const OccupationCurve& p, const HazardBundle1D& hazards,
                                       const PaymentSpec& pay) {
  require_grid(p.grid, hazards.grid, "saj_cashflow_freepolicy6");
  if (hazards.n_states() != 6 || pay.sojourn.size() != 6) throw Error("freepolicy6: six states required");
  constexpr int active = 0, free_policy = 1, surrender = 2, fp_surrender = 4;
  const auto& grid = *p.grid;
  const Index M = grid.size();
  const auto& b1 = pay.sojourn[active];
  const auto& b2 = pay.sojourn[free_policy];
  Eigen::VectorXd a(M);
  a[0] = pay.b0;
  for (Index m = 1; m < M; ++m) {
    const double t = grid[m], s = grid[m - 1];
    const double first = p.p(m - 1, active) * (b1.cumulative(t) - b1.cumulative(s) +
                                               pay.transition_payment(active, surrender, t) *
                                                   hazards.increment(m, active, surrender));
    const double second = p.p(m - 1, free_policy) * (b2.cumulative(t) - b2.cumulative(s) +
                                                      pay.transition_payment(free_policy, fp_surrender, t) *
                                                          hazards.increment(m, free_policy, fp_surrender));
    a[m] = a[m - 1] + first + second;
  }
  return make_curve(p.grid, std::move(a), "saj", hazards.eps);
}

namespace {

bool relevant(const StateSpace& states, const Transition& x, const Transition& y) {
  return states.is_pre(x.from) && states.is_post(x.to) && (states.is_post(y.from) || states.is_post(y.to));
}

}  // namespace

std::vector<StatePair> cashflow_pairs(const Empirical2D& e) {
  std::vector<StatePair> out;
  for (const auto& c : e.cells) {
    const auto& x = e.transitions[static_cast<std::size_t>(c.first)];
    const auto& y = e.transitions[static_cast<std::size_t>(c.second)];
    if (relevant(e.states, x, y)) out.push_back({x.from, y.from});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CashFlowCurve twodim_cashflow(const Surface2D& surfaces, const HazardBundle2D& hazards2, const OccupationCurve& p,
                              const HazardBundle1D& hazards, const PaymentSpec& pay) {
  if (!hazards2.empirical) throw Error("twodim_cashflow: hazards without empirical data");
  const auto& e = *hazards2.empirical;
  require_grid(p.grid, hazards.grid, "twodim_cashflow");
  require_grid(p.grid, e.grid, "twodim_cashflow");
  if (hazards.scaled) throw Error("twodim_cashflow: needs the ordinary one-dimensional estimator");
  const auto& states = e.states;
  const int J = states.size();
  if (static_cast<int>(pay.sojourn.size()) != J) throw Error("twodim_cashflow: payments do not match the state space");
  const auto& grid = *p.grid;
  const Index M = grid.size();
  const Eigen::MatrixXd b = sojourn_table(pay, grid, J);

  // Ordinary estimators on J0; exercise payments carry rho.
  Eigen::VectorXd a(M);
  a[0] = pay.b0;
  for (Index m = 1; m < M; ++m) {
    double inc = 0.0;
    for (int j = 0; j < J; ++j) {
      if (!states.is_pre(j)) continue;
      const double pj = p.p(m - 1, j);
      if (pj == 0.0) continue;
      double term = b(m, j) - b(m - 1, j);
      for (int k = 0; k < J; ++k) {
        if (k == j || !pay.has_transition_payment(j, k)) continue;
        const double d = hazards.increment(m, j, k);
        if (d == 0.0) continue;
        const double scale = states.is_post(k) ? pay.rho(grid[m], j, k) : 1.0;
        term += scale * pay.transition_payment(j, k, grid[m]) * d;
      }
      inc += pj * term;
    }
    a[m] = a[m - 1] + inc;
  }

  // Cell contributions enter from gnomon max(m1, m2) onwards: a weight on
  // the later increments of B_j plus the part B_j((t_{m2}, t_g]) at once.
  Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(M, J);
  Eigen::VectorXd immediate = Eigen::VectorXd::Zero(M);
  for (std::size_t c = 0; c < e.cells.size(); ++c) {
    const auto& cell = e.cells[c];
    const auto& x = e.transitions[static_cast<std::size_t>(cell.first)];
    const auto& y = e.transitions[static_cast<std::size_t>(cell.second)];
    if (!relevant(states, x, y)) continue;
    const double d = hazards2.increments[c];
    if (d == 0.0) continue;
    const double corner = surfaces.corner[c];
    if (std::isnan(corner))
      throw Error("twodim_cashflow: surface (" + states.label(x.from) + "," + states.label(y.from) +
                  ") was not computed");
    const double f = pay.rho(grid[cell.m1], x.from, x.to) * corner * d;
    const Index g = std::max(cell.m1, cell.m2);
    if (states.is_post(y.to)) {
      weight(g, y.to) += f;
      immediate[g] += f * (b(g, y.to) - b(cell.m2, y.to));
    }
    if (states.is_post(y.from)) {
      weight(g, y.from) -= f;
      immediate[g] -= f * (b(g, y.from) - b(cell.m2, y.from));
      if (pay.has_transition_payment(y.from, y.to)) immediate[g] += f * pay.transition_payment(y.from, y.to, grid[cell.m2]);
    }
  }
  Eigen::RowVectorXd w = weight.row(0);
  double extra = immediate[0];
  a[0] += extra;
  for (Index m = 1; m < M; ++m) {
    extra += w.dot(b.row(m) - b.row(m - 1)) + immediate[m];
    w += weight.row(m);
    a[m] += extra;
  }
  return make_curve(p.grid, std::move(a), "2daj", hazards2.eps);
}

ReserveValue reserve(const CashFlowCurve& cf, const Curve& kappa) {
  require_grid(cf.values.grid_ptr(), kappa.grid_ptr(), "reserve");
  if (kappa.values().minCoeff() <= 0.0) throw Error("reserve: kappa must be positive");
  double v = cf.values.at(0);
  for (Index m = 1; m < kappa.size(); ++m) v += cf.values.increment(m) / kappa.at(m);
  return {v, kappa};
}

ReserveValue reserve(const CashFlowCurve& cf, const std::function<double(double)>& kappa) {
  const auto& grid = cf.values.grid();
  Eigen::VectorXd k(grid.size());
  for (Index m = 0; m < grid.size(); ++m) k[m] = kappa(grid[m]);
  return reserve(cf, Curve(cf.values.grid_ptr(), std::move(k)));
}

std::vector<double> path_payments(const StatePath& path, const StateSpace& states, const PaymentSpec& pay,
                                  std::span<const double> times) {
  std::vector<double> out(times.size(), pay.b0);
  double h = 1.0;
  double start = 0.0;
  int j = path.initial;
  bool exercised = false;
  auto add_sojourn = [&](int state, double from, double to, double scale) {
    if (state >= static_cast<int>(pay.sojourn.size())) return;
    const auto& measure = pay.sojourn[static_cast<std::size_t>(state)];
    if (measure.empty()) return;
    const double base = measure.cumulative(from);
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] <= from) continue;
      out[i] += scale * (measure.cumulative(std::min(times[i], to)) - base);
    }
  };
  for (const auto& jump : path.jumps) {
    add_sojourn(j, start, jump.time, h);
    if (!exercised && states.is_pre(jump.from) && states.is_post(jump.to)) {
      h = pay.rho(jump.time, jump.from, jump.to);
      exercised = true;
    }
    if (pay.has_transition_payment(jump.from, jump.to)) {
      const double amount = h * pay.transition_payment(jump.from, jump.to, jump.time);
      for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= jump.time) out[i] += amount;
    }
    start = jump.time;
    j = jump.to;
  }
  add_sojourn(j, start, std::numeric_limits<double>::infinity(), h);
  return out;
}

CashFlowCurve mc_oracle(const Model& model, std::size_t n_mc, std::uint64_t seed, GridPtr grid, unsigned threads) {
  if (n_mc == 0) throw Error("mc_oracle: need at least one path");
  constexpr std::size_t chunk = 1024;
  const std::size_t chunks = (n_mc + chunk - 1) / chunk;
  const auto K = static_cast<std::size_t>(grid->size());
  const auto times = grid->times();
  std::vector<std::vector<double>> sums(chunks), squares(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<double> s(K, 0.0), q(K, 0.0);
    const std::size_t end = std::min(n_mc, (c + 1) * chunk);
    for (std::size_t l = c * chunk; l < end; ++l) {
      const auto path = simulate_path(model.hazards, model.states.initial(), grid->horizon(),
                                      derive_seed(seed, SeedStage::oracle, l));
      const auto b = path_payments(path, model.states, model.payments, times);
      for (std::size_t i = 0; i < K; ++i) {
        s[i] += b[i];
        q[i] += b[i] * b[i];
      }
    }
    sums[c] = std::move(s);
    squares[c] = std::move(q);
  });
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(grid->size()), se(grid->size());
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(grid->size());
  for (std::size_t c = 0; c < chunks; ++c)
    for (std::size_t i = 0; i < K; ++i) {
      mean[static_cast<Index>(i)] += sums[c][i];
      sq[static_cast<Index>(i)] += squares[c][i];
    }
  const double n = static_cast<double>(n_mc);
  mean /= n;
  for (Index i = 0; i < mean.size(); ++i) {
    const double var = n > 1 ? std::max(0.0, (sq[i] - n * mean[i] * mean[i]) / (n - 1.0)) : 0.0;
    se[i] = std::sqrt(var / n);
  }
  CashFlowCurve cf = make_curve(grid, std::move(mean), "mc", 0.0);
  cf.n = n_mc;
  cf.seed = seed;
  cf.std_error = Curve(grid, std::move(se));
  return cf;
}

Band bootstrap_band(const Dataset& data, const CurveEstimator& estimate, GridPtr report, std::size_t replicates,
                    double level, std::uint64_t seed, unsigned threads) {
  if (replicates < 2) throw Error("bootstrap_band: need at least two replicates");
  if (!(level > 0.0 && level < 1.0)) throw Error("bootstrap_band: level must be in (0, 1)");
  if (data.empty()) throw Error("bootstrap_band: empty dataset");
  const Index K = report->size();
  Eigen::MatrixXd draws(K, static_cast<Index>(replicates));
  parallel_for(replicates, threads, [&](std::size_t r) {
    Rng rng(derive_seed(seed, SeedStage::bootstrap, r));
    Dataset sample;
    sample.states = data.states;
    sample.obs.reserve(data.size());
    for (std::size_t l = 0; l < data.size(); ++l) sample.obs.push_back(data.obs[rng.below(data.size())]);
    const Eigen::VectorXd v = estimate(sample);
    if (v.size() != K) throw Error("bootstrap_band: estimator returned a curve of the wrong length");
    draws.col(static_cast<Index>(r)) = v;
  });
  // Type-7 quantiles.
  auto quantile = [](std::vector<double>& xs, double q) {
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
  };
  Eigen::VectorXd lower(K), upper(K);
  std::vector<double> row(replicates);
  for (Index i = 0; i < K; ++i) {
    for (std::size_t r = 0; r < replicates; ++r) row[r] = draws(i, static_cast<Index>(r));
    lower[i] = quantile(row, (1.0 - level) / 2.0);
    upper[i] = quantile(row, (1.0 + level) / 2.0);
  }
  return {Curve(report, std::move(lower)), Curve(report, std::move(upper)), level};
}

}  // namespace mscf

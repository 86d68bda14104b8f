#include "mscf/empirical.hpp"

#include <algorithm>
#include <tuple>

#include "mscf/parallel.hpp"

namespace mscf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Increment {
  Index m;
  double value;
  friend auto operator<=>(const Increment&, const Increment&) = default;
};

/// Cumulative sums of increments, each grid point summed in sorted order so
/// the result does not depend on the order of the individuals.
Eigen::VectorXd cumulate(std::vector<Increment>& incs, Index size, double scale) {
  std::sort(incs.begin(), incs.end());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(size);
  for (const auto& inc : incs) d[inc.m] += inc.value;
  Eigen::VectorXd out(size);
  double acc = 0.0;
  for (Index m = 0; m < size; ++m) {
    acc += d[m];
    out[m] = acc * scale;
  }
  return out;
}

}  // namespace

HAtJump parse_h_at_jump(const std::string& text) {
  if (text == "right") return HAtJump::right;
  if (text == "left") return HAtJump::left;
  throw ConfigError("--h-at-jump must be 'right' or 'left'");
}

double exercise_scale(const CensoredObservation& o, const StateSpace& states, const PaymentSpec& pay) {
  const auto ex = o.exercise(states);
  if (!ex) return 1.0;
  const auto& j = o.jumps[*ex];
  return pay.rho(j.time, j.from, j.to);
}

GridPtr event_grid(const Dataset& data, double theta, std::span<const double> extra) {
  std::vector<double> points(extra.begin(), extra.end());
  for (const auto& o : data.obs) {
    for (const auto& j : o.jumps) points.push_back(j.time);
    if (std::isfinite(o.censor)) points.push_back(o.censor);
  }
  return make_grid(EventGrid::from_points(std::move(points), theta));
}

Curve Empirical1D::at_risk_curve(int j, bool scaled) const {
  return Curve(grid, (scaled ? at_risk : at_risk_unscaled).col(j));
}

Curve Empirical1D::event_curve(int j, int k, bool scaled) const {
  return Curve(grid, (scaled ? events : events_unscaled).col(column(j, k)));
}

Curve Empirical1D::censor_curve(int j, bool scaled) const {
  return Curve(grid, (scaled ? censored : censored_unscaled).col(j));
}

Empirical1D build_1d(const Dataset& data, const PaymentSpec& pay, GridPtr grid, HAtJump convention) {
  if (data.empty()) throw Error("build_1d: empty dataset (averages undefined)");
  validate(data);
  const auto& states = data.states;
  const int J = states.size();
  const Index M = grid->size();
  const double theta = grid->horizon();
  const auto JJ = static_cast<std::size_t>(J * J);

  std::vector<std::vector<Increment>> ar(J), ar_u(J), ev(JJ), ev_u(JJ), ce(J), ce_u(J);
  for (const auto& o : data.obs) {
    const auto ex = o.exercise(states);
    const double rho = exercise_scale(o, states, pay);
    double h = 1.0;
    double a = 0.0;
    int s = o.initial;
    for (std::size_t i = 0; i <= o.jumps.size(); ++i) {
      const double b = i < o.jumps.size() ? o.jumps[i].time : kInf;
      const double end = std::min(b, o.censor);
      if (a < end && a <= theta) {
        const Index ma = grid->index_of(a);
        ar[s].push_back({ma, h});
        ar_u[s].push_back({ma, 1.0});
        if (end <= theta) {
          const Index me = grid->index_of(end);
          ar[s].push_back({me, -h});
          ar_u[s].push_back({me, -1.0});
        }
      }
      if (i == o.jumps.size()) break;
      const Jump& jump = o.jumps[i];
      const double h_before = h;
      if (ex && *ex == i) h = rho;
      if (jump.time <= theta) {
        const Index m = grid->index_of(jump.time);
        const auto col = static_cast<std::size_t>(jump.from * J + jump.to);
        ev[col].push_back({m, convention == HAtJump::right ? h : h_before});
        ev_u[col].push_back({m, 1.0});
      }
      a = jump.time;
      s = jump.to;
    }
    if (o.censor <= theta) {
      const Index m = grid->index_of(o.censor);
      ce[s].push_back({m, h});
      ce_u[s].push_back({m, 1.0});
    }
  }

  Empirical1D e;
  e.grid = std::move(grid);
  e.states = states;
  e.n = data.size();
  e.convention = convention;
  const double scale = 1.0 / static_cast<double>(e.n);
  e.at_risk.resize(M, J);
  e.at_risk_unscaled.resize(M, J);
  e.censored.resize(M, J);
  e.censored_unscaled.resize(M, J);
  e.events.resize(M, J * J);
  e.events_unscaled.resize(M, J * J);
  for (int j = 0; j < J; ++j) {
    e.at_risk.col(j) = cumulate(ar[j], M, scale);
    e.at_risk_unscaled.col(j) = cumulate(ar_u[j], M, scale);
    e.censored.col(j) = cumulate(ce[j], M, scale);
    e.censored_unscaled.col(j) = cumulate(ce_u[j], M, scale);
  }
  for (std::size_t c = 0; c < JJ; ++c) {
    e.events.col(static_cast<Index>(c)) = cumulate(ev[c], M, scale);
    e.events_unscaled.col(static_cast<Index>(c)) = cumulate(ev_u[c], M, scale);
  }
  return e;
}

int Empirical2D::transition_index(int from, int to) const {
  const Transition key{from, to};
  auto it = std::lower_bound(transitions.begin(), transitions.end(), key);
  if (it == transitions.end() || *it != key) return -1;
  return static_cast<int>(it - transitions.begin());
}

Surface Empirical2D::at_risk_surface(int j1, int j2) const {
  if (!surfaces) throw Error("Empirical2D: no evaluation grid");
  return Surface(surfaces->grid, surfaces->grid, surfaces->at_risk[static_cast<std::size_t>(j1 * states.size() + j2)]);
}

Surface Empirical2D::event_surface(int j1, int k1, int j2, int k2) const {
  if (!surfaces) throw Error("Empirical2D: no evaluation grid");
  const int a = transition_index(j1, k1), b = transition_index(j2, k2);
  if (a < 0 || b < 0) return Surface::zeros(surfaces->grid, surfaces->grid);
  const auto T = transitions.size();
  return Surface(surfaces->grid, surfaces->grid, surfaces->events[static_cast<std::size_t>(a) * T + static_cast<std::size_t>(b)]);
}

GridPtr thin_grid(const EventGrid& grid, std::size_t max_points) {
  if (max_points < 2) throw Error("thin_grid: need at least two points");
  const auto M = static_cast<std::size_t>(grid.size());
  if (M <= max_points) return make_grid(grid);
  const std::size_t stride = (M - 1 + max_points - 2) / (max_points - 1);
  std::vector<double> pts;
  for (std::size_t m = 0; m < M; m += stride) pts.push_back(grid[static_cast<Index>(m)]);
  if (pts.back() != grid.horizon()) pts.push_back(grid.horizon());
  return make_grid(EventGrid(std::move(pts)));
}

namespace {

void build_surfaces(Empirical2D& e, const Dataset& data, GridPtr eval, unsigned threads) {
  const int J = e.states.size();
  const auto T = e.transitions.size();
  const Index K = eval->size();
  const double theta = e.grid->horizon();
  Surfaces2D s;
  s.grid = eval;
  s.at_risk.assign(static_cast<std::size_t>(J * J), Eigen::MatrixXd::Zero(K, K));
  s.events.assign(T * T, Eigen::MatrixXd::Zero(K, K));
  s.events3.assign(T * T, Eigen::MatrixXd::Zero(K, K));
  s.events1.assign(T, Eigen::MatrixXd::Zero(K, K));
  s.events2.assign(T, Eigen::MatrixXd::Zero(K, K));
  s.marginal.assign(T, Eigen::VectorXd::Zero(K));
  s.censored_any = Eigen::MatrixXd::Zero(K, K);

  // Per individual: state at each evaluation point and, per jump, the first
  // evaluation index counting it.
  struct Prepared {
    std::vector<int> state;
    std::vector<std::pair<Index, int>> jumps;  // (first index, transition)
    double censor;
  };
  std::vector<Prepared> prep(data.size());
  parallel_for(data.size(), threads, [&](std::size_t l) {
    const auto& o = data.obs[l];
    Prepared p;
    p.censor = o.censor;
    p.state.resize(static_cast<std::size_t>(K));
    for (Index i = 0; i < K; ++i) p.state[static_cast<std::size_t>(i)] = o.state_at((*eval)[i]);
    for (const auto& j : o.jumps) {
      if (j.time > theta) break;
      const auto times = eval->times();
      const auto first = static_cast<Index>(std::lower_bound(times.begin(), times.end(), j.time) - times.begin());
      if (first < K) p.jumps.push_back({first, e.transition_index(j.from, j.to)});
    }
    prep[l] = std::move(p);
  });

  parallel_for(static_cast<std::size_t>(K), threads, [&](std::size_t row) {
    const auto i1 = static_cast<Index>(row);
    const double t1 = (*eval)[i1];
    for (const auto& p : prep) {
      const int s1 = p.state[row];
      for (Index i2 = 0; i2 < K; ++i2) {
        const double t2 = (*eval)[i2];
        const bool censored = p.censor <= std::max(t1, t2);
        if (censored)
          s.censored_any(i1, i2) += 1.0;
        else
          s.at_risk[static_cast<std::size_t>(s1 * J + p.state[static_cast<std::size_t>(i2)])](i1, i2) += 1.0;
        for (const auto& [f1, a] : p.jumps) {
          const bool in1 = f1 <= i1;
          const bool in2 = f1 <= i2;
          if (censored) {
            if (in1) s.events1[static_cast<std::size_t>(a)](i1, i2) += 1.0;
            if (in2) s.events2[static_cast<std::size_t>(a)](i1, i2) += 1.0;
          }
          if (!in1) continue;
          for (const auto& [f2, b] : p.jumps) {
            if (f2 > i2) continue;
            const auto idx = static_cast<std::size_t>(a) * T + static_cast<std::size_t>(b);
            s.events[idx](i1, i2) += 1.0;
            if (censored) s.events3[idx](i1, i2) += 1.0;
          }
        }
      }
    }
  });
  for (const auto& p : prep)
    for (const auto& [f, a] : p.jumps) s.marginal[static_cast<std::size_t>(a)].tail(K - f).array() += 1.0;

  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto* group : {&s.at_risk, &s.events, &s.events3, &s.events1, &s.events2})
    for (auto& m : *group) m *= scale;
  for (auto& v : s.marginal) v *= scale;
  s.censored_any *= scale;
  e.surfaces = std::move(s);
}

}  // namespace

Empirical2D build_2d(const Dataset& data, GridPtr grid, GridPtr eval_grid, unsigned threads) {
  if (data.empty()) throw Error("build_2d: empty dataset (averages undefined)");
  validate(data);
  Empirical2D e;
  e.grid = grid;
  e.states = data.states;
  e.n = data.size();
  const double theta = grid->horizon();

  for (const auto& o : data.obs)
    for (const auto& j : o.jumps)
      if (j.time <= theta) e.transitions.push_back({j.from, j.to});
  std::sort(e.transitions.begin(), e.transitions.end());
  e.transitions.erase(std::unique(e.transitions.begin(), e.transitions.end()), e.transitions.end());

  using Key = std::tuple<Index, Index, int, int>;
  std::vector<Key> keys;
  std::vector<std::pair<Index, int>> own;
  for (const auto& o : data.obs) {
    own.clear();
    for (const auto& j : o.jumps)
      if (j.time <= theta) own.push_back({grid->index_of(j.time), e.transition_index(j.from, j.to)});
    for (const auto& [m1, a] : own)
      for (const auto& [m2, b] : own) keys.emplace_back(m1, m2, a, b);
  }
  std::sort(keys.begin(), keys.end(), [](const Key& x, const Key& y) {
    const auto gx = std::min(std::get<0>(x), std::get<1>(x));
    const auto gy = std::min(std::get<0>(y), std::get<1>(y));
    return std::tie(gx, x) < std::tie(gy, y);
  });
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const auto& [m1, m2, a, b] = keys[i];
    e.cells.push_back({m1, m2, a, b, static_cast<std::int64_t>(j - i), 0});
    i = j;
  }

  // At-risk counts at the lower-left corner, one brute-force pass over the
  // individuals per distinct (corner, source pair).
  using Corner = std::tuple<Index, Index, int, int>;
  std::vector<Corner> corners;
  corners.reserve(e.cells.size());
  for (const auto& c : e.cells)
    corners.emplace_back(c.m1 - 1, c.m2 - 1, e.transitions[static_cast<std::size_t>(c.first)].from,
                         e.transitions[static_cast<std::size_t>(c.second)].from);
  std::vector<Corner> unique = corners;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<std::int64_t> counts(unique.size(), 0);
  parallel_for(unique.size(), threads, [&](std::size_t u) {
    const auto& [c1, c2, a1, a2] = unique[u];
    const double s1 = (*grid)[c1], s2 = (*grid)[c2];
    const double latest = std::max(s1, s2);
    std::int64_t count = 0;
    for (const auto& o : data.obs)
      if (latest < o.censor && o.state_at(s1) == a1 && o.state_at(s2) == a2) ++count;
    counts[u] = count;
  });
  for (std::size_t i = 0; i < e.cells.size(); ++i) {
    const auto it = std::lower_bound(unique.begin(), unique.end(), corners[i]);
    e.cells[i].at_risk = counts[static_cast<std::size_t>(it - unique.begin())];
  }

  if (eval_grid) build_surfaces(e, data, std::move(eval_grid), threads);
  return e;
}

LinkReport check_links(const Empirical1D& e1, const Empirical2D* e2) {
  LinkReport report;
  const auto& states = e1.states;
  const int J = states.size();
  const int z0 = states.initial();
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd rhs = -e1.censored.col(j);
    if (states.is_pre(j)) {
      if (j == z0) rhs.array() += 1.0;
      for (int k = 0; k < J; ++k) {
        if (k == j) continue;
        if (states.is_pre(k))
          rhs += e1.events.col(e1.column(k, j)) - e1.events.col(e1.column(j, k));
        else
          rhs -= e1.events_unscaled.col(e1.column(j, k));
      }
      report.pre_exercise = std::max(report.pre_exercise, (e1.at_risk.col(j) - rhs).cwiseAbs().maxCoeff());
    } else {
      for (int k = 0; k < J; ++k) {
        if (k == j) continue;
        rhs += e1.events.col(e1.column(k, j));
        if (states.is_post(k)) rhs -= e1.events.col(e1.column(j, k));
      }
      report.post_exercise = std::max(report.post_exercise, (e1.at_risk.col(j) - rhs).cwiseAbs().maxCoeff());
    }
  }

  if (e2 && e2->surfaces) {
    const auto& s = *e2->surfaces;
    const auto& tr = e2->transitions;
    const auto T = tr.size();
    const Index K = s.grid->size();
    auto sign = [&](std::size_t a, int j) { return tr[a].to == j ? 1.0 : (tr[a].from == j ? -1.0 : 0.0); };
    for (int j1 = 0; j1 < J; ++j1) {
      for (int j2 = 0; j2 < J; ++j2) {
        const double a1 = j1 == z0 ? 1.0 : 0.0, a2 = j2 == z0 ? 1.0 : 0.0;
        Eigen::MatrixXd rhs = a1 * a2 * (Eigen::MatrixXd::Ones(K, K) - s.censored_any);
        for (std::size_t a = 0; a < T; ++a) {
          const double s1 = sign(a, j1), s2 = sign(a, j2);
          if (s1 != 0.0 && a2 != 0.0)
            rhs += a2 * s1 * (s.marginal[a].rowwise().replicate(K) - s.events1[a]);
          if (s2 != 0.0 && a1 != 0.0)
            rhs += a1 * s2 * (s.marginal[a].transpose().colwise().replicate(K) - s.events2[a]);
          if (s1 == 0.0) continue;
          for (std::size_t b = 0; b < T; ++b) {
            const double sb = sign(b, j2);
            if (sb != 0.0) rhs += s1 * sb * (s.events[a * T + b] - s.events3[a * T + b]);
          }
        }
        const auto& lhs = s.at_risk[static_cast<std::size_t>(j1 * J + j2)];
        report.two_dimensional = std::max(report.two_dimensional, (lhs - rhs).cwiseAbs().maxCoeff());
      }
    }
  }
  return report;
}

}  // namespace mscf

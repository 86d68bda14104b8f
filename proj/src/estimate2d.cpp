#include "mscf/estimate2d.hpp"

#include <barrier>
#include <cmath>
#include <set>
#include <thread>

namespace mscf {

HazardBundle2D nelson_aalen_2d(const Empirical2D& e, double eps) {
  if (!(eps >= 0.0)) throw Error("nelson_aalen_2d: eps must be nonnegative");
  HazardBundle2D h;
  h.empirical = &e;
  h.eps = eps;
  h.increments.resize(e.cells.size(), 0.0);
  const double n = static_cast<double>(e.n);
  for (std::size_t c = 0; c < e.cells.size(); ++c) {
    const auto& cell = e.cells[c];
    const double share = static_cast<double>(cell.at_risk) / n;
    if (cell.at_risk > 0 && share >= eps)
      h.increments[c] = static_cast<double>(cell.count) / static_cast<double>(cell.at_risk);
    else if (eps > 0.0)
      h.increments[c] = (static_cast<double>(cell.count) / n) / eps;
    else
      ++h.warnings;
  }
  return h;
}

Surface HazardBundle2D::cumulative(int j1, int k1, int j2, int k2, GridPtr eval) const {
  const auto& e = *empirical;
  const int a = e.transition_index(j1, k1), b = e.transition_index(j2, k2);
  const Index K = eval->size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(K, K);
  if (a >= 0 && b >= 0) {
    for (std::size_t c = 0; c < e.cells.size(); ++c) {
      const auto& cell = e.cells[c];
      if (cell.first != a || cell.second != b) continue;
      const double t1 = (*e.grid)[cell.m1], t2 = (*e.grid)[cell.m2];
      if (t1 > eval->horizon() || t2 > eval->horizon()) continue;
      // First evaluation point at or after the cell's upper corner.
      const auto times = eval->times();
      const auto i1 = std::lower_bound(times.begin(), times.end(), t1) - times.begin();
      const auto i2 = std::lower_bound(times.begin(), times.end(), t2) - times.begin();
      d(i1, i2) += increments[c];
    }
  }
  for (Index i = 0; i < K; ++i)
    for (Index j = 0; j < K; ++j)
      d(i, j) += (i > 0 ? d(i - 1, j) : 0.0) + (j > 0 ? d(i, j - 1) : 0.0) - (i > 0 && j > 0 ? d(i - 1, j - 1) : 0.0);
  return Surface(eval, eval, std::move(d));
}

bool Surface2D::has(StatePair pair) const {
  return std::find(computed.begin(), computed.end(), pair) != computed.end();
}

const Surface& Surface2D::surface(StatePair pair) const {
  auto it = surfaces.find(pair);
  if (it == surfaces.end())
    throw Error("2dAJ surface (" + std::to_string(pair.first) + "," + std::to_string(pair.second) +
                ") was not materialized");
  return it->second;
}

namespace {

// The traversal accumulates in extended precision: every entry of an edge
// is updated once per gnomon, and the cash flow multiplies the corners by
// large payments.
using Real = long double;
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

struct Delta {
  Index i;
  Real value;
};

/// Per-pair state of the traversal: col[i] = p(t_i, t_g), row[i] = p(t_g, t_i)
/// for i >= g, where g is the current gnomon.
struct PairState {
  StatePair pair;
  RealVector col, row;
  std::vector<Delta> dcol, drow;
  Real ddiag = 0.0;
  Real diag = 0.0;
};

}  // namespace

Surface2D aalen_johansen_2d(const HazardBundle2D& hazards, const OccupationCurve& boundary, int z0,
                            const AalenJohansen2DOptions& options) {
  if (!hazards.empirical) throw Error("aalen_johansen_2d: hazards without empirical data");
  const auto& e = *hazards.empirical;
  if (!same_grid(boundary.grid, e.grid)) throw Error("aalen_johansen_2d: boundary grid mismatch");
  const int J = e.states.size();
  const Index M = e.grid->size();
  const auto& tr = e.transitions;
  const auto pair_id = [J](StatePair p) { return p.first * J + p.second; };

  // Dependency closure: target (j1, j2) receives mass from the source of any
  // cell whose transition pair touches it.
  std::set<std::pair<int, int>> kinds;
  for (const auto& c : e.cells) kinds.insert({c.first, c.second});
  std::vector<bool> needed(static_cast<std::size_t>(J * J), options.all_pairs);
  std::vector<StatePair> work;
  for (const auto& p : options.pairs) {
    if (p.first < 0 || p.second < 0 || p.first >= J || p.second >= J) throw Error("aalen_johansen_2d: pair out of range");
    work.push_back(p);
  }
  if (options.all_pairs) work.clear();
  while (!work.empty()) {
    const StatePair t = work.back();
    work.pop_back();
    if (needed[static_cast<std::size_t>(pair_id(t))]) continue;
    needed[static_cast<std::size_t>(pair_id(t))] = true;
    for (const auto& [a, b] : kinds) {
      const auto& x = tr[static_cast<std::size_t>(a)];
      const auto& y = tr[static_cast<std::size_t>(b)];
      const bool touches1 = t.first == x.from || t.first == x.to;
      const bool touches2 = t.second == y.from || t.second == y.to;
      if (touches1 && touches2) work.push_back({x.from, y.from});
    }
  }

  Surface2D out;
  out.grid = e.grid;
  std::vector<PairState> states;
  std::vector<int> slot(static_cast<std::size_t>(J * J), -1);
  const MatrixXld bp = boundary.p_ext.rows() == M ? boundary.p_ext : MatrixXld(boundary.p.cast<Real>());
  for (int j1 = 0; j1 < J; ++j1) {
    for (int j2 = 0; j2 < J; ++j2) {
      if (!needed[static_cast<std::size_t>(j1 * J + j2)]) continue;
      PairState s;
      s.pair = {j1, j2};
      s.col = j2 == z0 ? RealVector(bp.col(j1)) : RealVector::Zero(M);
      s.row = j1 == z0 ? RealVector(bp.col(j2)) : RealVector::Zero(M);
      slot[static_cast<std::size_t>(j1 * J + j2)] = static_cast<int>(states.size());
      states.push_back(std::move(s));
      out.computed.push_back({j1, j2});
    }
  }

  // Positions of the dense evaluation points in the event grid.
  GridPtr dense_grid = options.eval ? options.eval : e.grid;
  std::vector<Index> eval_pos(static_cast<std::size_t>(dense_grid->size()));
  std::vector<Index> eval_at(static_cast<std::size_t>(M), -1);
  for (Index i = 0; i < dense_grid->size(); ++i) {
    eval_pos[static_cast<std::size_t>(i)] = e.grid->index_of((*dense_grid)[i]);
    eval_at[static_cast<std::size_t>(eval_pos[static_cast<std::size_t>(i)])] = i;
  }
  std::vector<std::pair<int, Eigen::MatrixXd*>> dense_targets;
  if (options.dense) {
    for (const auto& p : options.pairs) {
      if (out.surfaces.contains(p)) continue;
      auto [it, inserted] = out.surfaces.emplace(p, Surface::zeros(dense_grid, dense_grid));
      dense_targets.push_back({slot[static_cast<std::size_t>(pair_id(p))], &it->second.values()});
    }
  }
  auto write_dense = [&](Index gp) {
    const Index e_here = eval_at[static_cast<std::size_t>(gp)];
    if (e_here < 0) return;
    const Index K = dense_grid->size();
    for (auto& [s, values] : dense_targets) {
      const auto& st = states[static_cast<std::size_t>(s)];
      for (Index i = e_here; i < K; ++i) {
        const Index pos = eval_pos[static_cast<std::size_t>(i)];
        (*values)(i, e_here) = static_cast<double>(st.col[pos]);
        (*values)(e_here, i) = static_cast<double>(st.row[pos]);
      }
    }
  };
  write_dense(0);

  // With eps = 0 the increment is a ratio of integer counts, formed here in
  // extended precision; floored denominators fall back to the bundle.
  const Real n_real = static_cast<Real>(e.n);
  // Exact count ratio when it is what the bundle holds; edited bundles are
  // taken as given.
  auto increment = [&](std::size_t c) -> Real {
    const auto& cell = e.cells[c];
    if (cell.count == 0 || cell.at_risk == 0 || static_cast<Real>(cell.at_risk) / n_real < hazards.eps)
      return hazards.increments[c];
    const Real r = static_cast<Real>(cell.count) / static_cast<Real>(cell.at_risk);
    return static_cast<double>(r) == hazards.increments[c] ? r : static_cast<Real>(hazards.increments[c]);
  };

  out.corner.assign(e.cells.size(), std::numeric_limits<double>::quiet_NaN());
  std::size_t cursor = 0;

  // Gathers the increments of gnomon g' = g + 1 from the current crosses.
  auto gather = [&](Index gp) {
    const Index g = gp - 1;
    for (auto& s : states) {
      s.dcol.clear();
      s.drow.clear();
      s.ddiag = 0.0;
    }
    while (cursor < e.cells.size() && std::min(e.cells[cursor].m1, e.cells[cursor].m2) == gp) {
      const auto& cell = e.cells[cursor];
      const auto& x = tr[static_cast<std::size_t>(cell.first)];
      const auto& y = tr[static_cast<std::size_t>(cell.second)];
      const int src = slot[static_cast<std::size_t>(x.from * J + y.from)];
      if (src >= 0) {
        const auto& ss = states[static_cast<std::size_t>(src)];
        const Real corner = cell.m2 - 1 == g ? ss.col[cell.m1 - 1] : ss.row[cell.m2 - 1];
        out.corner[cursor] = static_cast<double>(corner);
        const Real v = corner * increment(cursor);
        if (v != 0.0) {
          const std::pair<StatePair, Real> targets[4] = {
              {{x.to, y.to}, v}, {{x.to, y.from}, -v}, {{x.from, y.to}, -v}, {{x.from, y.from}, v}};
          for (const auto& [target, value] : targets) {
            const int ts = slot[static_cast<std::size_t>(pair_id(target))];
            if (ts < 0) continue;
            auto& ts_state = states[static_cast<std::size_t>(ts)];
            if (cell.m1 == gp && cell.m2 == gp)
              ts_state.ddiag += value;
            else if (cell.m2 == gp)
              ts_state.dcol.push_back({cell.m1, value});
            else
              ts_state.drow.push_back({cell.m2, value});
          }
        }
      }
      ++cursor;
    }
    for (auto& s : states) s.diag = s.col[gp] + s.row[gp] - s.row[g] + s.ddiag;
  };

  // One edge of one pair: cells (i, g') for the column, (g', i) for the row.
  auto sweep = [&](PairState& s, bool column, Index gp) {
    RealVector& v = column ? s.col : s.row;
    const auto& deltas = column ? s.dcol : s.drow;
    Real d = s.diag - v[gp];
    v[gp] = s.diag;
    std::size_t k = 0;
    for (Index i = gp + 1; i < M; ++i) {
      while (k < deltas.size() && deltas[k].i == i) d += deltas[k++].value;
      v[i] += d;
    }
  };

  // Cells are ordered by gnomon; sort deltas by position within each edge.
  auto sort_deltas = [&]() {
    for (auto& s : states) {
      auto by_i = [](const Delta& a, const Delta& b) { return a.i < b.i; };
      std::stable_sort(s.dcol.begin(), s.dcol.end(), by_i);
      std::stable_sort(s.drow.begin(), s.drow.end(), by_i);
    }
  };

  const std::size_t tasks = states.size() * 2;
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(options.threads == 0 ? std::thread::hardware_concurrency() : options.threads, tasks));
  if (workers <= 1) {
    for (Index gp = 1; gp < M; ++gp) {
      gather(gp);
      sort_deltas();
      for (auto& s : states) {
        sweep(s, true, gp);
        sweep(s, false, gp);
      }
      write_dense(gp);
    }
  } else {
    // Worker 0 gathers; all workers sweep their fixed share of edges.
    std::barrier sync(static_cast<std::ptrdiff_t>(workers));
    auto run = [&](unsigned w) {
      for (Index gp = 1; gp < M; ++gp) {
        if (w == 0) {
          gather(gp);
          sort_deltas();
        }
        sync.arrive_and_wait();
        for (std::size_t t = w; t < tasks; t += workers) sweep(states[t / 2], t % 2 == 0, gp);
        sync.arrive_and_wait();
        if (w == 0) write_dense(gp);
      }
    };
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
  }
  return out;
}

}  // namespace mscf

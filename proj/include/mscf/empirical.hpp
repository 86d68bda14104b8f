#pragma once

// Empirical at-risk, event and censoring processes in one and two time
// arguments, and the identities linking them.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "mscf/model.hpp"
#include "mscf/simulate.hpp"
#include "mscf/timegrid.hpp"

namespace mscf {

/// Which value of H weights an exercise jump in ∫ H dN: the post-jump
/// value (right-continuous H, default) or the pre-jump value.
enum class HAtJump { right, left };

HAtJump parse_h_at_jump(const std::string& text);

/// Scale reached at exercise, rho(tau, Z_{tau-}, Z_tau); 1 if never exercised.
double exercise_scale(const CensoredObservation& o, const StateSpace& states, const PaymentSpec& pay);

/// 0, every jump and censoring time in (0, theta], theta and the extra points.
GridPtr event_grid(const Dataset& data, double theta, std::span<const double> extra = {});

struct Empirical1D {
  GridPtr grid;
  StateSpace states;
  std::size_t n = 0;
  HAtJump convention = HAtJump::right;
  /// M x J: I^rho_j(t_m) and its H = 1 twin.
  Eigen::MatrixXd at_risk, at_risk_unscaled;
  /// M x J*J, column j*J + k: N^rho_jk(t_m) and twin.
  Eigen::MatrixXd events, events_unscaled;
  /// M x J: C^rho_j(t_m) and twin.
  Eigen::MatrixXd censored, censored_unscaled;

  int n_states() const { return states.size(); }
  Index column(int j, int k) const { return static_cast<Index>(j) * n_states() + k; }
  Curve at_risk_curve(int j, bool scaled = true) const;
  Curve event_curve(int j, int k, bool scaled = true) const;
  Curve censor_curve(int j, bool scaled = true) const;
};

/// Builds all one-dimensional processes on `grid`. Throws for n = 0 and for
/// observations failing validate().
Empirical1D build_1d(const Dataset& data, const PaymentSpec& pay, GridPtr grid, HAtJump convention = HAtJump::right);

struct Transition {
  int from;
  int to;
  friend auto operator<=>(const Transition&, const Transition&) = default;
};

/// One cell (t_{m1-1}, t_{m1}] x (t_{m2-1}, t_{m2}] carrying joint events of
/// transition pair `pair` = (transitions[first], transitions[second]).
struct EventCell {
  Index m1;
  Index m2;
  int first;
  int second;
  /// Number of individuals with both jumps in the cell.
  std::int64_t count;
  /// Number of individuals in (from1, from2) at (t_{m1-1}, t_{m2-1}) and
  /// uncensored beyond both times.
  std::int64_t at_risk;
};

/// Surfaces of the two-dimensional processes on an evaluation grid. All
/// entries are integer counts divided by n.
struct Surfaces2D {
  GridPtr grid;
  /// J*J: I_(j1,j2).
  std::vector<Eigen::MatrixXd> at_risk;
  /// T*T: N_(a)(b), N3_(a)(b).
  std::vector<Eigen::MatrixXd> events, events3;
  /// T: N1_a, N2_a.
  std::vector<Eigen::MatrixXd> events1, events2;
  /// T: marginal N_a(t).
  std::vector<Eigen::VectorXd> marginal;
  /// n^{-1} sum 1{R <= t1 v t2}.
  Eigen::MatrixXd censored_any;
};

struct Empirical2D {
  GridPtr grid;
  StateSpace states;
  std::size_t n = 0;
  /// Observed transition types, sorted.
  std::vector<Transition> transitions;
  /// Sorted by (min(m1, m2), m1, m2, first, second).
  std::vector<EventCell> cells;
  /// Present when build_2d was given an evaluation grid.
  std::optional<Surfaces2D> surfaces;

  int transition_index(int from, int to) const;
  Surface at_risk_surface(int j1, int j2) const;
  Surface event_surface(int j1, int k1, int j2, int k2) const;
};

/// Sparse joint-event cells on `grid` (O(n) work per distinct cell). When
/// `eval_grid` is given, the dense surfaces on it are built as well.
Empirical2D build_2d(const Dataset& data, GridPtr grid, GridPtr eval_grid = nullptr, unsigned threads = 0);

/// Evaluation grid with at most `max_points` points taken at a regular stride
/// from `grid` (always keeping 0 and the last point).
GridPtr thin_grid(const EventGrid& grid, std::size_t max_points);

struct LinkReport {
  double pre_exercise = 0.0;
  double post_exercise = 0.0;
  double two_dimensional = 0.0;

  double max() const { return std::max({pre_exercise, post_exercise, two_dimensional}); }
};

/// Maximal absolute deviations of the one-dimensional identities (J0 and J1)
/// over the grid, and of the two-dimensional identity over the evaluation
/// grid of e2 (zero when e2 has no surfaces).
LinkReport check_links(const Empirical1D& e1, const Empirical2D* e2 = nullptr);

}  // namespace mscf

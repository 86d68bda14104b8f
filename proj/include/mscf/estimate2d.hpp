#pragma once

// Two-dimensional Nelson-Aalen increments and the two-dimensional
// Aalen-Johansen occupation surfaces, traversed gnomon by gnomon.

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mscf/empirical.hpp"
#include "mscf/estimate1d.hpp"

namespace mscf {

using StatePair = std::pair<int, int>;

/// ΔΛ on the sparse event cells of an Empirical2D.
struct HazardBundle2D {
  const Empirical2D* empirical = nullptr;
  double eps = 0.0;
  /// One increment per cell of empirical->cells.
  std::vector<double> increments;
  std::size_t warnings = 0;

  /// Λ_(j1k1)(j2k2) on the product of `eval` with itself, by prefix sums.
  Surface cumulative(int j1, int k1, int j2, int k2, GridPtr eval) const;
};

/// ΔΛ(cell) = ΔN(cell) / (I_(j1,j2)(lower-left corner) v eps).
HazardBundle2D nelson_aalen_2d(const Empirical2D& e, double eps = 0.0);

struct AalenJohansen2DOptions {
  /// Pairs whose surfaces are wanted; their dependency closure is computed.
  std::vector<StatePair> pairs;
  /// Compute every pair in J x J instead of the closure.
  bool all_pairs = false;
  /// Store surfaces for the requested pairs, on `eval` if given (a subset of
  /// the event grid) and on the full event grid otherwise.
  bool dense = false;
  GridPtr eval;
  unsigned threads = 1;
};

struct Surface2D {
  GridPtr grid;
  /// Pairs that were computed.
  std::vector<StatePair> computed;
  /// Dense surfaces (only with options.dense).
  std::map<StatePair, Surface> surfaces;
  /// p_(from1, from2) at the lower-left corner of each event cell; NaN when
  /// that pair was not computed.
  std::vector<double> corner;

  bool has(StatePair pair) const;
  const Surface& surface(StatePair pair) const;
};

/// Volterra difference recursion with boundary p(t, 0) = p_{j1}(t) 1{j2 = z0},
/// p(0, t) = 1{j1 = z0} p_{j2}(t) from the ordinary one-dimensional estimator.
/// Cells are visited in gnomons of equal min(m1, m2); the two edges of every
/// pair in a gnomon are independent and run in parallel.
Surface2D aalen_johansen_2d(const HazardBundle2D& hazards, const OccupationCurve& boundary, int z0,
                            const AalenJohansen2DOptions& options);

}  // namespace mscf

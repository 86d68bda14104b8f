#pragma once

// Small datasets and brute-force oracles shared by the unit tests. The
// oracles work on raw observations and never touch the estimator code.

#include <cmath>
#include <limits>
#include <vector>

#include "mscf/pipeline.hpp"
#include "mscf/rng.hpp"

namespace mscf::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline CensoredObservation make_obs(int initial, std::vector<Jump> jumps, double r = kInf) {
  CensoredObservation o;
  o.initial = initial;
  o.jumps = std::move(jumps);
  o.censor = r;
  return o;
}

/// Two pre-exercise states: alive (0) and dead (1).
inline StateSpace alive_dead() { return StateSpace({"alive", "dead"}, {false, false}, 0); }

/// Four states: active (0), dead (1), exercised (2, J1), exercised dead (3, J1).
inline StateSpace option_states() {
  return StateSpace({"active", "dead", "paid_up", "paid_up_dead"}, {false, false, true, true}, 0);
}

/// Payment spec on option_states() with a time-dependent exercise factor.
inline PaymentSpec option_payments(double rho_slope = 0.02) {
  PaymentSpec pay(4);
  pay.b0 = 50.0;
  pay.sojourn[0].add_rate(0.0, 5.0, -10.0).add_lump(3.0, 7.0);
  pay.sojourn[2].add_rate(2.0, kInf, 4.0);
  pay.transition[{0, 1}] = [](double t) { return 100.0 + t; };
  pay.transition[{2, 3}] = [](double t) { return 30.0 - t; };
  pay.scaling = [rho_slope](double t, int j, int k) {
    return j == 0 && k == 2 ? 0.3 + rho_slope * t : 1.0;
  };
  return pay;
}

/// Model on option_states() with constant hazards.
inline Model option_model(double rho_slope = 0.02) {
  Model m;
  m.states = option_states();
  m.horizon = 10.0;
  m.hazards = HazardSet(4);
  m.hazards.set(0, 1, Hazard{{HazardTerm::constant(0.1)}});
  m.hazards.set(0, 2, Hazard{{HazardTerm::constant(0.15)}});
  m.hazards.set(2, 3, Hazard{{HazardTerm::constant(0.2)}});
  m.payments = option_payments(rho_slope);
  m.rho_bound = scaling_bound(m.states, m.payments, m.horizon);
  return m;
}

/// H(t) of one observation under right-continuous exercise scaling.
inline double h_of(const CensoredObservation& o, const StateSpace& s, const PaymentSpec& pay, double t) {
  for (const auto& j : o.jumps)
    if (s.is_pre(j.from) && s.is_post(j.to)) return j.time <= t ? pay.rho(j.time, j.from, j.to) : 1.0;
  return 1.0;
}

inline int state_of(const CensoredObservation& o, double t) {
  int z = o.initial;
  for (const auto& j : o.jumps)
    if (j.time <= t) z = j.to;
  return z;
}

/// n^{-1} Σ H(t) 1{Z_t = j} (no censoring assumed).
inline double direct_occupation(const Dataset& d, const PaymentSpec& pay, int j, double t) {
  double s = 0.0;
  for (const auto& o : d.obs)
    if (state_of(o, t) == j) s += h_of(o, d.states, pay, t);
  return s / static_cast<double>(d.size());
}

/// n^{-1} Σ 1{Z_t1 = j1} 1{Z_t2 = j2}.
inline double direct_pair(const Dataset& d, int j1, int j2, double t1, double t2) {
  double s = 0.0;
  for (const auto& o : d.obs)
    if (state_of(o, t1) == j1 && state_of(o, t2) == j2) s += 1.0;
  return s / static_cast<double>(d.size());
}

/// Accumulated payments B(t) of one complete observation, H right-continuous.
inline double direct_payments(const CensoredObservation& o, const StateSpace& s, const PaymentSpec& pay, double t) {
  double total = pay.b0;
  double start = 0.0;
  int z = o.initial;
  auto sojourn = [&](int state, double a, double b) {
    // B_j((a, b]); the point 0 belongs to the first sojourn.
    const double lo = a == 0.0 ? -1.0 : a;
    const double hi = std::min(b, t);
    if (hi <= lo || hi < 0.0) return 0.0;
    const auto& m = pay.sojourn[static_cast<std::size_t>(state)];
    return m.cumulative(hi) - (lo < 0.0 ? 0.0 : m.cumulative(lo));
  };
  for (const auto& j : o.jumps) {
    total += h_of(o, s, pay, start) * sojourn(z, start, j.time);
    if (j.time <= t) total += h_of(o, s, pay, j.time) * pay.transition_payment(j.from, j.to, j.time);
    start = j.time;
    z = j.to;
  }
  total += h_of(o, s, pay, start) * sojourn(z, start, kInf);
  return total;
}

inline double direct_cashflow(const Dataset& d, const PaymentSpec& pay, double t) {
  double s = 0.0;
  for (const auto& o : d.obs) s += direct_payments(o, d.states, pay, t);
  return s / static_cast<double>(d.size());
}

/// Simulated dataset from `model`.
inline Dataset simulated(const Model& model, std::size_t n, std::uint64_t seed, Censoring c = {}) {
  return simulate_dataset(model, n, seed, c, 1);
}

}  // namespace mscf::testing

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mscf/error.hpp"

namespace mscf {

/// a + 10^(b + c (t + age_offset)).
struct Makeham {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double age_offset = 0.0;

  double operator()(double t) const { return a + std::pow(10.0, b + c * (t + age_offset)); }
};

/// One closed-form intensity piece, active on [t_from, t_to) in calendar
/// time and [u_from, u_to) in duration since entry to the current state.
struct HazardTerm {
  enum class Kind { constant, makeham };

  Kind kind = Kind::constant;
  double value = 0.0;
  Makeham makeham{};
  double t_from = 0.0;
  double t_to = std::numeric_limits<double>::infinity();
  double u_from = 0.0;
  double u_to = std::numeric_limits<double>::infinity();

  static HazardTerm constant(double value, double t_from = 0.0,
                             double t_to = std::numeric_limits<double>::infinity()) {
    HazardTerm h;
    h.value = value;
    h.t_from = t_from;
    h.t_to = t_to;
    return h;
  }

  static HazardTerm gompertz_makeham(Makeham m) {
    HazardTerm h;
    h.kind = Kind::makeham;
    h.makeham = m;
    return h;
  }

  HazardTerm& in_duration(double from, double to) {
    u_from = from;
    u_to = to;
    return *this;
  }

  double operator()(double t, double u) const {
    if (t < t_from || t >= t_to || u < u_from || u >= u_to) return 0.0;
    return kind == Kind::constant ? value : makeham(t);
  }

  /// Supremum over t in [0, horizon] and all durations.
  double sup(double horizon) const { return sup_on(0.0, horizon); }

  /// Supremum over t in [from, to] and all durations.
  double sup_on(double from, double to) const {
    const double lo = std::max(from, t_from);
    const double hi = std::min(to, t_to);
    if (lo > hi) return 0.0;
    if (kind == Kind::constant) return value;
    // 10^(b + c t) is monotone in t.
    return std::max(makeham(lo), makeham(hi));
  }

  bool duration_dependent() const { return u_from > 0.0 || std::isfinite(u_to); }
};

/// Sum of hazard terms; the zero hazard when empty.
struct Hazard {
  std::vector<HazardTerm> terms;

  double operator()(double t, double u) const {
    double s = 0.0;
    for (const auto& term : terms) s += term(t, u);
    return s;
  }

  double bound(double horizon) const {
    double s = 0.0;
    for (const auto& term : terms) s += term.sup(horizon);
    return s;
  }

  double bound_on(double from, double to) const {
    double s = 0.0;
    for (const auto& term : terms) s += term.sup_on(from, to);
    return s;
  }

  bool empty() const { return terms.empty(); }
};

/// Transition intensities mu_jk(t, u) of a semi-Markov model.
class HazardSet {
 public:
  HazardSet() = default;
  explicit HazardSet(int n_states) : n_(n_states), hazards_(static_cast<std::size_t>(n_states * n_states)) {}

  int n_states() const { return n_; }

  void set(int from, int to, Hazard h) {
    check(from, to);
    if (from == to) throw Error("HazardSet: diagonal hazard");
    for (const auto& term : h.terms) {
      const bool bad = term.kind == HazardTerm::Kind::constant ? !(term.value >= 0.0) : !(term.makeham.a >= 0.0);
      if (bad) throw Error("HazardSet: negative intensity");
    }
    hazards_[idx(from, to)] = std::move(h);
  }

  const Hazard& get(int from, int to) const {
    check(from, to);
    return hazards_[idx(from, to)];
  }

  bool allowed(int from, int to) const { return from != to && !get(from, to).empty(); }

 private:
  void check(int from, int to) const {
    if (from < 0 || to < 0 || from >= n_ || to >= n_) throw Error("HazardSet: state out of range");
  }
  std::size_t idx(int from, int to) const { return static_cast<std::size_t>(from * n_ + to); }

  int n_ = 0;
  std::vector<Hazard> hazards_;
};

}  // namespace mscf

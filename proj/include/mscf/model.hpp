#pragma once

// State space, payments, scaling factor and the survival-model technical
// basis used to set the free-policy factor and surrender values.

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mscf/hazard.hpp"

namespace mscf {

/// Finite state space split into pre-exercise states (J0) and
/// post-exercise states (J1). J1 is absorbing as a set.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(std::vector<std::string> labels, std::vector<bool> post_exercise, int initial);

  int size() const { return static_cast<int>(labels_.size()); }
  int initial() const { return initial_; }
  bool is_post(int j) const { return post_[static_cast<std::size_t>(j)]; }
  bool is_pre(int j) const { return !is_post(j); }
  const std::string& label(int j) const { return labels_[static_cast<std::size_t>(j)]; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Throws ConfigError for unknown labels.
  int index_of(const std::string& label) const;

  /// Transitions J1 -> J0 are structurally impossible.
  bool transition_allowed(int from, int to) const { return from != to && !(is_post(from) && is_pre(to)); }

  /// Copy with an extra post-exercise cemetery state appended (label "nabla").
  StateSpace with_cemetery() const;

  friend bool operator==(const StateSpace&, const StateSpace&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<bool> post_;
  int initial_ = 0;
};

/// Deterministic sojourn payment measure B_j: piecewise-constant rates plus
/// lump sums. cumulative(t) = B_j([0, t]).
class SojournMeasure {
 public:
  struct RatePiece {
    double from;
    double to;
    double rate;
  };
  struct Lump {
    double time;
    double amount;
  };

  SojournMeasure() = default;
  SojournMeasure& add_rate(double from, double to, double rate);
  SojournMeasure& add_lump(double time, double amount);

  double cumulative(double t) const;
  bool empty() const { return pieces_.empty() && lumps_.empty(); }
  const std::vector<RatePiece>& pieces() const { return pieces_; }
  const std::vector<Lump>& lumps() const { return lumps_; }

  /// Same measure with every amount multiplied by factor.
  SojournMeasure scaled(double factor) const;

 private:
  std::vector<RatePiece> pieces_;
  std::vector<Lump> lumps_;
};

using TransitionPayment = std::function<double(double)>;
/// rho(t, j, k): factor applied from an exercise j -> k at time t onwards.
using ScalingFactor = std::function<double(double, int, int)>;

/// Contractual payments: b0 at time 0, sojourn measures B_j, transition
/// payments b_jk and the scaling factor rho.
struct PaymentSpec {
  double b0 = 0.0;
  std::vector<SojournMeasure> sojourn;
  std::map<std::pair<int, int>, TransitionPayment> transition;
  ScalingFactor scaling;

  explicit PaymentSpec(int n_states = 0) : sojourn(static_cast<std::size_t>(n_states)) {}

  double rho(double t, int from, int to) const { return scaling ? scaling(t, from, to) : 1.0; }
  double transition_payment(int from, int to, double t) const {
    auto it = transition.find({from, to});
    return it == transition.end() ? 0.0 : it->second(t);
  }
  bool has_transition_payment(int from, int to) const { return transition.contains({from, to}); }

  /// Payments with every amount multiplied by factor (rho unchanged).
  PaymentSpec scaled(double factor) const;
};

/// Survival-model technical basis.
struct TechnicalBasis {
  Makeham mortality{0.005, 5.728 - 10.0, 0.038, 40.0};
  double interest = 0.0;
  double retirement = 25.0;
  double premium_rate = 10'000.0;
  double initial_premium = 100'000.0;
  /// Policy years after which no further benefits are paid.
  double horizon = 70.0;
  /// Step of the composite trapezoid rule.
  double step = 1.0 / 512.0;
};

struct TechnicalReserves {
  /// V*(t): benefits less future premiums.
  double with_premiums;
  /// V*+(t): benefits only.
  double benefits_only;
};

/// Precomputed survival integrals of a technical basis. Reserves at any t
/// cost O(1) after construction.
class ReserveTable {
 public:
  explicit ReserveTable(const TechnicalBasis& basis);

  const TechnicalBasis& basis() const { return basis_; }
  /// ∫_{max(t, retirement)}^{horizon} S(t, s) ds, S including interest.
  double benefit_annuity(double t) const;
  /// ∫_t^{retirement} S(t, s) ds (zero past retirement).
  double premium_annuity(double t) const;
  TechnicalReserves reserves(double benefit_rate, double t) const;

 private:
  struct Point {
    double log_survival;  // ∫_0^t (mu + r)
    double cumulative;    // ∫_0^t exp(-log_survival)
  };
  Point at(double t) const;

  TechnicalBasis basis_;
  std::vector<double> nodes_;
  std::vector<double> log_survival_;
  std::vector<double> cumulative_;
};

TechnicalReserves technical_reserves(const TechnicalBasis& basis, double benefit_rate, double t);

/// Benefit rate making expected premiums (including the initial premium)
/// equal expected benefits at inception. Bisection to 1e-12 relative.
double solve_equivalence_benefit(const TechnicalBasis& basis);

/// rho(t) = V*(t) / V*+(t).
double free_policy_factor(const TechnicalBasis& basis, double benefit_rate, double t);
double free_policy_factor(const ReserveTable& table, double benefit_rate, double t);

/// Complete model: states, simulation hazards, payments, estimation horizon.
struct Model {
  StateSpace states;
  HazardSet hazards;
  PaymentSpec payments;
  /// Estimation horizon theta.
  double horizon = 40.0;
  std::optional<TechnicalBasis> basis;
  double benefit_rate = std::numeric_limits<double>::quiet_NaN();
  /// Name of a hard-coded cash-flow decomposition ("freepolicy6") or empty.
  std::string cashflow_preset;
  /// sup of rho over [0, horizon] and all J0 -> J1 pairs.
  double rho_bound = 1.0;
};

/// Six-state free-policy/surrender model with the technical basis above.
Model freepolicy6_model();

/// Reads a JSON model description (see configs/README in the repository).
Model load_model(const std::string& path);
Model parse_model(const std::string& json_text);

/// sup of rho(t, j, k) over a 1/512 grid of [0, horizon] and J0 -> J1 pairs.
double scaling_bound(const StateSpace& states, const PaymentSpec& pay, double horizon);

}  // namespace mscf

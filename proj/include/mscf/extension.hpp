#pragma once

// Estimators for general adapted scaling processes H (discounting,
// state-dependent interest, option exercise) via forward rates.

#include <Eigen/Dense>

#include <memory>
#include <string>

#include "mscf/model.hpp"
#include "mscf/simulate.hpp"
#include "mscf/timegrid.hpp"

namespace mscf {

/// A rule computing H on an observed path: H(0), a continuous decay while
/// sojourning in a state and a multiplicative factor at each jump.
class AdaptedScaler {
 public:
  virtual ~AdaptedScaler() = default;
  virtual double initial(const CensoredObservation& o) const = 0;
  /// H(to-) / H(from) while in `state` on [from, to].
  virtual double decay(int state, double from, double to) const = 0;
  /// H(s) / H(s-) at a jump; `exercise` marks the first J0 -> J1 jump.
  virtual double jump_factor(const Jump& jump, bool exercise) const = 0;
};

/// H(t) = rho(tau, Z_{tau-}, Z_tau)^{1{tau <= t}}.
class ExerciseScaler final : public AdaptedScaler {
 public:
  explicit ExerciseScaler(PaymentSpec pay) : pay_(std::move(pay)) {}
  double initial(const CensoredObservation&) const override { return 1.0; }
  double decay(int, double, double) const override { return 1.0; }
  double jump_factor(const Jump& j, bool exercise) const override {
    return exercise ? pay_.rho(j.time, j.from, j.to) : 1.0;
  }

 private:
  PaymentSpec pay_;
};

/// H(t) = exp(-∫_0^t delta_{Z_s} ds) with a constant rate per state.
class DiscountScaler final : public AdaptedScaler {
 public:
  explicit DiscountScaler(std::vector<double> delta);
  double initial(const CensoredObservation&) const override { return 1.0; }
  double decay(int state, double from, double to) const override;
  double jump_factor(const Jump&, bool) const override { return 1.0; }

 private:
  std::vector<double> delta_;
};

/// "exercise" or "discount:delta=<x>[,<state>=<x>]...".
std::unique_ptr<AdaptedScaler> parse_scaler(const std::string& text, const Model& model);

struct BarBundle {
  GridPtr grid;
  StateSpace states;
  std::size_t n = 0;
  double mean_initial = 1.0;
  /// M x J: n^{-1} Σ H(t_m) 1{Z_{t_m} = j} 1{t_m < R} and its left limit.
  Eigen::MatrixXd at_risk, at_risk_left;
  /// M x J: Ī_j(t_m-) / Ī_j(t_{m-1}), 1 where undefined.
  Eigen::MatrixXd decay;
  /// M x J: ΔH̄_j(t_m).
  Eigen::MatrixXd dH;
  /// M x J*J: ΔΛ̄_jk(t_m), diagonal ΔH̄_j - Σ_k ΔΛ̄_jk.
  Eigen::MatrixXd dLambda;
  std::size_t warnings = 0;

  Index column(int j, int k) const { return static_cast<Index>(j) * states.size() + k; }
};

BarBundle bar_estimators(const Dataset& data, const AdaptedScaler& scaler, GridPtr grid, unsigned threads = 0);

/// p̄(t_m-) = p̄(t_{m-1}) ∘ decay(t_m), p̄(t_m) = p̄(t_m-) (Id + ΔΛ̄(t_m)),
/// p̄(0) = e_{z0} mean H(0). Returns M x J.
Eigen::MatrixXd forward_solve(const BarBundle& bundle);

}  // namespace mscf

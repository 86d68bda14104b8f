#pragma once

// Plug-in expected accumulated cash flows, prospective reserves, the Monte
// Carlo oracle and bootstrap bands.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "mscf/estimate1d.hpp"
#include "mscf/estimate2d.hpp"
#include "mscf/simulate.hpp"

namespace mscf {

struct Band {
  Curve lower;
  Curve upper;
  double level = 0.0;
};

struct CashFlowCurve {
  /// t -> Â(t); Â(0) = b0.
  Curve values;
  std::string method;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double eps = 0.0;
  std::optional<Band> band;
  /// Pointwise standard errors (Monte Carlo oracle only).
  std::optional<Curve> std_error;
};

/// Â(t) = b0 + Σ_j ∫ p^rho_j(s-) [B_j(ds) + Σ_k b_jk(s) Λ^rho_jk(ds)].
/// With an unscaled bundle this is the ordinary plug-in estimator.
CashFlowCurve saj_cashflow(const OccupationCurve& p, const HazardBundle1D& hazards, const PaymentSpec& pay);

/// The six-state free-policy decomposition written out term by term:
/// p_1 (B_1 + b_13 Λ_13) + p^rho_2 (B_2 + b_25 Λ^rho_25).
CashFlowCurve saj_cashflow_freepolicy6(const OccupationCurve& p, const HazardBundle1D& hazards,
                                       const PaymentSpec& pay);

/// Pairs (from1, from2) whose 2dAJ surfaces enter twodim_cashflow.
std::vector<StatePair> cashflow_pairs(const Empirical2D& e);

/// Two-dimensional representation: ordinary estimators on J0 plus double
/// integrals of rho(u1) p_(a1,a2)(u-) Λ_(a1b1)(a2b2)(du) against the J1
/// sojourn and transition payments.
CashFlowCurve twodim_cashflow(const Surface2D& surfaces, const HazardBundle2D& hazards2,
                              const OccupationCurve& p, const HazardBundle1D& hazards, const PaymentSpec& pay);

struct ReserveValue {
  double value;
  Curve kappa;
};

/// V(0-) = Â(0) + ∫_(0,T] κ(t)^{-1} Â(dt), κ on the grid of the cash flow.
ReserveValue reserve(const CashFlowCurve& cf, const Curve& kappa);
ReserveValue reserve(const CashFlowCurve& cf, const std::function<double(double)>& kappa);

/// Accumulated payments of one path at the given times (H right-continuous).
std::vector<double> path_payments(const StatePath& path, const StateSpace& states, const PaymentSpec& pay,
                                  std::span<const double> times);

/// Average of B^l(t) over n_mc uncensored paths on `grid`.
CashFlowCurve mc_oracle(const Model& model, std::size_t n_mc, std::uint64_t seed, GridPtr grid, unsigned threads = 0);

using CurveEstimator = std::function<Eigen::VectorXd(const Dataset&)>;

/// Resamples individuals B times (seeds from (seed, bootstrap, b)), applies
/// `estimate` (which must return values on a fixed report grid) and returns
/// pointwise (1 - level)/2 and (1 + level)/2 quantiles.
Band bootstrap_band(const Dataset& data, const CurveEstimator& estimate, GridPtr report, std::size_t replicates,
                    double level, std::uint64_t seed, unsigned threads = 0);

}  // namespace mscf

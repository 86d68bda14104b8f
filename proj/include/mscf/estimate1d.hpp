#pragma once

// Scaled Nelson-Aalen and Aalen-Johansen estimators, their unscaled twins,
// and the cemetery-state transform behind the change-of-measure comparator.

#include <Eigen/Dense>

#include <cstdint>

#include "mscf/empirical.hpp"

namespace mscf {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// Cumulative hazard increments on a grid, diagonal included.
struct HazardBundle1D {
  GridPtr grid;
  StateSpace states;
  double eps = 0.0;
  bool scaled = false;
  /// M x J*J, column j*J + k: ΔΛ_jk(t_m). Row 0 is zero.
  Eigen::MatrixXd increments;
  /// The same in extended precision. For the ordinary estimator these are
  /// count ratios rounded once.
  MatrixXld increments_ext;
  /// Event increments met with a zero denominator.
  std::size_t warnings = 0;

  int n_states() const { return states.size(); }
  Index column(int j, int k) const { return static_cast<Index>(j) * n_states() + k; }
  double increment(Index m, int j, int k) const { return increments(m, column(j, k)); }
  Curve cumulative(int j, int k) const;
};

struct OccupationCurve {
  GridPtr grid;
  /// M x J.
  Eigen::MatrixXd p;
  /// Extended-precision twin of p; empty when not available.
  MatrixXld p_ext;

  Curve curve(int j) const { return Curve(grid, p.col(j)); }
};

/// ΔΛ^{rho,eps}_jk(t_m) = ΔN^rho_jk(t_m) / (I^rho_j(t_{m-1}) v eps). The
/// diagonal is minus the unscaled row sum on J0 and minus the scaled row sum
/// on J1.
HazardBundle1D nelson_aalen_scaled(const Empirical1D& e, double eps = 0.0);

/// The ordinary estimator (H = 1).
HazardBundle1D nelson_aalen(const Empirical1D& e, double eps = 0.0);

/// p(t_m) = p(t_{m-1}) (Id + ΔΛ(t_m)), p(0) = e_{z0}.
OccupationCurve aalen_johansen(const HazardBundle1D& hazards, int z0);

/// Sends each exercised path to the cemetery "nabla" at tau when U > rho,
/// U ~ Unif(0, 1) drawn from (aux_seed, auxiliary, l). Later jumps are
/// dropped. Throws if some rho exceeds 1.
Dataset cmaj_transform(const Dataset& data, const PaymentSpec& pay, std::uint64_t aux_seed);

/// Payments on J with an extra payment-free cemetery state and rho = 1.
PaymentSpec cmaj_payments(const PaymentSpec& pay);

}  // namespace mscf

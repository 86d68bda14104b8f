#include "mscf/estimate1d.hpp"

#include <cmath>

#include "mscf/rng.hpp"

namespace mscf {

Curve HazardBundle1D::cumulative(int j, int k) const {
  Eigen::VectorXd v(increments.rows());
  double acc = 0.0;
  for (Index m = 0; m < v.size(); ++m) {
    acc += increments(m, column(j, k));
    v[m] = acc;
  }
  return Curve(grid, std::move(v));
}

namespace {

HazardBundle1D nelson_aalen_impl(const Empirical1D& e, double eps, bool scaled) {
  if (!(eps >= 0.0)) throw Error("nelson_aalen: eps must be nonnegative");
  const auto& states = e.states;
  const int J = states.size();
  const Index M = e.grid->size();
  HazardBundle1D h;
  h.grid = e.grid;
  h.states = states;
  h.eps = eps;
  h.scaled = scaled;
  h.increments = Eigen::MatrixXd::Zero(M, J * J);
  h.increments_ext = MatrixXld::Zero(M, J * J);
  // Unscaled processes are integer counts times 1/n; recover the integers.
  const long double n = static_cast<long double>(e.n);
  const auto exact = [&](double x) { return scaled ? static_cast<long double>(x) : std::nearbyint(x * n) / n; };
  const auto& at_risk = scaled ? e.at_risk : e.at_risk_unscaled;
  const auto& events = scaled ? e.events : e.events_unscaled;
  for (Index m = 1; m < M; ++m) {
    for (int j = 0; j < J; ++j) {
      const double denom = std::max(at_risk(m - 1, j), eps);
      const double denom_u = std::max(e.at_risk_unscaled(m - 1, j), eps);
      double diag = 0.0;
      long double diag_ext = 0.0L;
      for (int k = 0; k < J; ++k) {
        if (k == j) continue;
        const Index c = e.column(j, k);
        const double dn = events(m, c) - events(m - 1, c);
        if (dn == 0.0) continue;
        if (denom > 0.0) {
          h.increments(m, c) = dn / denom;
          const long double d_ext = at_risk(m - 1, j) >= eps ? exact(at_risk(m - 1, j)) : static_cast<long double>(eps);
          h.increments_ext(m, c) = (exact(events(m, c)) - exact(events(m - 1, c))) / d_ext;
        } else {
          ++h.warnings;
        }
        if (scaled && states.is_pre(j)) {
          const double dn_u = e.events_unscaled(m, c) - e.events_unscaled(m - 1, c);
          if (denom_u > 0.0) {
            diag -= dn_u / denom_u;
            diag_ext -= static_cast<long double>(dn_u) / denom_u;
          }
        } else {
          diag -= h.increments(m, c);
          diag_ext -= h.increments_ext(m, c);
        }
      }
      h.increments(m, h.column(j, j)) = diag;
      h.increments_ext(m, h.column(j, j)) = diag_ext;
    }
  }
  return h;
}

}  // namespace

HazardBundle1D nelson_aalen_scaled(const Empirical1D& e, double eps) { return nelson_aalen_impl(e, eps, true); }

HazardBundle1D nelson_aalen(const Empirical1D& e, double eps) { return nelson_aalen_impl(e, eps, false); }

OccupationCurve aalen_johansen(const HazardBundle1D& hazards, int z0) {
  const int J = hazards.n_states();
  const Index M = hazards.grid->size();
  if (z0 < 0 || z0 >= J) throw Error("aalen_johansen: initial state out of range");
  OccupationCurve out;
  out.grid = hazards.grid;
  const bool ext = hazards.increments_ext.rows() == M;
  out.p_ext = MatrixXld::Zero(M, J);
  using Row = Eigen::Matrix<long double, 1, Eigen::Dynamic>;
  Row p = Row::Zero(J);
  p[z0] = 1.0L;
  out.p_ext.row(0) = p;
  Row next(J);
  for (Index m = 1; m < M; ++m) {
    next = p;
    for (int j = 0; j < J; ++j) {
      if (p[j] == 0.0L) continue;
      for (int k = 0; k < J; ++k) {
        const Index c = hazards.column(j, k);
        const long double d = ext ? hazards.increments_ext(m, c) : static_cast<long double>(hazards.increments(m, c));
        if (d != 0.0L) next[k] += p[j] * d;
      }
    }
    p = next;
    out.p_ext.row(m) = p;
  }
  out.p = out.p_ext.cast<double>();
  return out;
}

Dataset cmaj_transform(const Dataset& data, const PaymentSpec& pay, std::uint64_t aux_seed) {
  Dataset out;
  out.states = data.states.with_cemetery();
  const int nabla = data.states.size();
  out.obs.reserve(data.size());
  for (std::size_t l = 0; l < data.size(); ++l) {
    CensoredObservation o = data.obs[l];
    if (const auto ex = o.exercise(data.states)) {
      const Jump& j = o.jumps[*ex];
      const double rho = pay.rho(j.time, j.from, j.to);
      if (rho > 1.0) throw ConfigError("cmaj: scaling factor exceeds 1; reparametrize the model");
      if (rho < 0.0) throw ConfigError("cmaj: negative scaling factor");
      Rng rng(derive_seed(aux_seed, SeedStage::auxiliary, l));
      if (rng.uniform() > rho) {
        o.jumps[*ex].to = nabla;
        o.jumps.resize(*ex + 1);
        o.absorbed = true;
      }
    }
    out.obs.push_back(std::move(o));
  }
  return out;
}

PaymentSpec cmaj_payments(const PaymentSpec& pay) {
  PaymentSpec out = pay;
  out.sojourn.emplace_back();
  out.scaling = nullptr;
  return out;
}

}  // namespace mscf

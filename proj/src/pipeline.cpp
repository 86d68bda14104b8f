#include "mscf/pipeline.hpp"

#include <cmath>

namespace mscf {

SajRun run_saj(const Dataset& data, const Model& model, const PipelineOptions& opt) {
  const GridPtr grid = event_grid(data, model.horizon, opt.report);
  SajRun r{build_1d(data, model.payments, grid, opt.convention), {}, {}, {}, {}, {}};
  r.scaled = nelson_aalen_scaled(r.empirical, opt.eps);
  r.plain = nelson_aalen(r.empirical, opt.eps);
  r.p_scaled = aalen_johansen(r.scaled, data.states.initial());
  r.p_plain = aalen_johansen(r.plain, data.states.initial());
  r.cashflow = model.cashflow_preset == "freepolicy6" ? saj_cashflow_freepolicy6(r.p_scaled, r.scaled, model.payments)
                                                      : saj_cashflow(r.p_scaled, r.scaled, model.payments);
  r.cashflow.n = data.size();
  return r;
}

CmajRun run_cmaj(const Dataset& data, const Model& model, const PipelineOptions& opt) {
  CmajRun r;
  r.transformed = cmaj_transform(data, model.payments, opt.aux_seed);
  const PaymentSpec pay = cmaj_payments(model.payments);
  const GridPtr grid = event_grid(r.transformed, model.horizon, opt.report);
  const Empirical1D e = build_1d(r.transformed, pay, grid, opt.convention);
  r.hazards = nelson_aalen(e, opt.eps);
  r.p = aalen_johansen(r.hazards, data.states.initial());
  r.cashflow = saj_cashflow(r.p, r.hazards, pay);
  r.cashflow.method = "cmaj";
  r.cashflow.n = data.size();
  r.cashflow.seed = opt.aux_seed;
  return r;
}

TwoDimRun run_2daj(const Dataset& data, const Model& model, const PipelineOptions& opt,
                   const std::vector<StatePair>& surfaces, GridPtr surface_grid) {
  const GridPtr grid = event_grid(data, model.horizon, opt.report);
  TwoDimRun r;
  r.empirical = build_1d(data, model.payments, grid, opt.convention);
  r.plain = nelson_aalen(r.empirical, opt.eps);
  r.p_plain = aalen_johansen(r.plain, data.states.initial());
  r.empirical2d = std::make_unique<Empirical2D>(build_2d(data, grid, nullptr, opt.threads));
  r.hazards2 = nelson_aalen_2d(*r.empirical2d, opt.eps);
  AalenJohansen2DOptions o;
  o.pairs = cashflow_pairs(*r.empirical2d);
  for (const auto& p : surfaces) o.pairs.push_back(p);
  o.threads = opt.threads;
  if (!surfaces.empty()) {
    o.dense = true;
    o.eval = surface_grid;
  }
  r.surfaces = aalen_johansen_2d(r.hazards2, r.p_plain, data.states.initial(), o);
  r.cashflow = twodim_cashflow(r.surfaces, r.hazards2, r.p_plain, r.plain, model.payments);
  r.cashflow.n = data.size();
  return r;
}

BarRun run_barsaj(const Dataset& data, const Model& model, const AdaptedScaler& scaler, const PipelineOptions& opt) {
  const GridPtr grid = event_grid(data, model.horizon, opt.report);
  BarRun r{bar_estimators(data, scaler, grid, opt.threads), {}};
  r.p = forward_solve(r.bundle);
  return r;
}

std::vector<double> report_times(double theta, double step) {
  if (!(step > 0.0)) throw ConfigError("report step must be positive");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor(theta / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(static_cast<double>(i) * step);
  if (out.back() < theta) out.push_back(theta);
  return out;
}

Eigen::VectorXd sample(const Curve& f, std::span<const double> times) {
  Eigen::VectorXd v(static_cast<Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i) v[static_cast<Index>(i)] = f(times[i]);
  return v;
}

}  // namespace mscf

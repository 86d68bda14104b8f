#pragma once

// End-to-end estimation runs shared by the command line, the benchmark and
// the acceptance checks.

#include <cstdint>
#include <span>
#include <vector>

#include "mscf/cashflow.hpp"
#include "mscf/empirical.hpp"
#include "mscf/estimate1d.hpp"
#include "mscf/estimate2d.hpp"
#include "mscf/extension.hpp"

namespace mscf {

struct PipelineOptions {
  double eps = 0.0;
  HAtJump convention = HAtJump::right;
  /// Extra grid points (report times) added to the event grid.
  std::vector<double> report;
  unsigned threads = 0;
  std::uint64_t aux_seed = 0;
};

struct SajRun {
  Empirical1D empirical;
  HazardBundle1D scaled, plain;
  OccupationCurve p_scaled, p_plain;
  CashFlowCurve cashflow;
  std::size_t warnings() const { return scaled.warnings + plain.warnings; }
};

SajRun run_saj(const Dataset& data, const Model& model, const PipelineOptions& opt);

struct CmajRun {
  Dataset transformed;
  HazardBundle1D hazards;
  OccupationCurve p;
  CashFlowCurve cashflow;
};

CmajRun run_cmaj(const Dataset& data, const Model& model, const PipelineOptions& opt);

struct TwoDimRun {
  Empirical1D empirical;
  HazardBundle1D plain;
  OccupationCurve p_plain;
  /// Heap-allocated so the bundle's pointer stays valid when the run moves.
  std::unique_ptr<Empirical2D> empirical2d;
  HazardBundle2D hazards2;
  Surface2D surfaces;
  CashFlowCurve cashflow;
  std::size_t warnings() const { return plain.warnings + hazards2.warnings; }
};

/// `surfaces` adds pairs to materialize densely on `surface_grid`.
TwoDimRun run_2daj(const Dataset& data, const Model& model, const PipelineOptions& opt,
                   const std::vector<StatePair>& surfaces = {}, GridPtr surface_grid = nullptr);

struct BarRun {
  BarBundle bundle;
  Eigen::MatrixXd p;
};

BarRun run_barsaj(const Dataset& data, const Model& model, const AdaptedScaler& scaler, const PipelineOptions& opt);

/// 0, step, 2 step, ... up to and including theta.
std::vector<double> report_times(double theta, double step);

/// Values of a step function at the given times.
Eigen::VectorXd sample(const Curve& f, std::span<const double> times);

}  // namespace mscf

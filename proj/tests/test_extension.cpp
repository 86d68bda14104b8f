#include "doctest.h"
#include "support.hpp"

using namespace mscf;
using namespace mscf::testing;

namespace {

Model alive_dead_model(double mu) {
  Model m;
  m.states = alive_dead();
  m.horizon = 30.0;
  m.hazards = HazardSet(2);
  m.hazards.set(0, 1, Hazard{{HazardTerm::constant(mu)}});
  m.payments = PaymentSpec(2);
  return m;
}

/// exp(-∫_0^t delta_{Z_s} ds) along one observation.
double discount_factor(const CensoredObservation& o, const std::vector<double>& delta, double t) {
  double integral = 0.0, start = 0.0;
  int z = o.initial;
  for (const auto& j : o.jumps) {
    if (j.time > t) break;
    integral += delta[static_cast<std::size_t>(z)] * (j.time - start);
    start = j.time;
    z = j.to;
  }
  integral += delta[static_cast<std::size_t>(z)] * (t - start);
  return std::exp(-integral);
}

PipelineOptions single_thread() {
  PipelineOptions opt;
  opt.threads = 1;
  return opt;
}

}  // namespace

TEST_CASE("unit scaling gives the ordinary estimators") {
  const Model m = option_model();
  const Dataset d = simulated(m, 300, 51, Censoring::uniform(2, 12));
  const DiscountScaler none(std::vector<double>(4, 0.0));
  const BarRun bar = run_barsaj(d, m, none, single_thread());
  CHECK(bar.bundle.dH.isZero(0.0));
  const auto grid = bar.bundle.grid;
  const auto plain = nelson_aalen(build_1d(d, m.payments, grid));
  const auto p = aalen_johansen(plain, 0);
  CHECK((bar.p - p.p).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((bar.bundle.dLambda - plain.increments).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exercise scaling agrees with the scaled estimator") {
  for (const auto& [model, censoring] :
       std::vector<std::pair<Model, Censoring>>{{option_model(), Censoring::uniform(2, 12)},
                                                 {freepolicy6_model(), Censoring::uniform(20, 80)}}) {
    const Dataset d = simulated(model, 1000, 52, censoring);
    const ExerciseScaler scaler(model.payments);
    const BarRun bar = run_barsaj(d, model, scaler, single_thread());
    const SajRun saj = run_saj(d, model, single_thread());
    REQUIRE(*bar.bundle.grid == *saj.p_scaled.grid);
    CHECK((bar.p - saj.p_scaled.p).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("deterministic discount factorizes") {
  const Model m = alive_dead_model(0.1);
  const Dataset d = simulated(m, 500, 53);
  const double delta = 0.03;
  const DiscountScaler scaler({delta, delta});
  const BarRun bar = run_barsaj(d, m, scaler, single_thread());
  const auto& g = *bar.bundle.grid;
  double worst = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    double alive = 0.0;
    for (const auto& o : d.obs) alive += state_of(o, g[i]) == 0 ? 1.0 : 0.0;
    alive /= static_cast<double>(d.size());
    worst = std::max(worst, std::abs(bar.p(i, 0) - std::exp(-delta * g[i]) * alive));
    worst = std::max(worst, std::abs(bar.p(i, 1) - std::exp(-delta * g[i]) * (1.0 - alive)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("state-dependent discount equals the direct average without censoring") {
  const Model m = option_model();
  const Dataset d = simulated(m, 400, 54);
  const std::vector<double> delta{0.03, 0.0, 0.05, 0.01};
  const auto scaler = parse_scaler("discount:delta=0.01,active=0.03,paid_up=0.05,dead=0", m);
  const BarRun bar = run_barsaj(d, m, *scaler, single_thread());
  const auto& g = *bar.bundle.grid;
  double worst = 0.0;
  for (Index i = 0; i < g.size(); ++i)
    for (int j = 0; j < 4; ++j) {
      double direct = 0.0;
      for (const auto& o : d.obs)
        if (state_of(o, g[i]) == j) direct += discount_factor(o, delta, g[i]);
      worst = std::max(worst, std::abs(bar.p(i, j) - direct / static_cast<double>(d.size())));
    }
  CHECK(worst < 1e-10);
  CHECK(bar.bundle.mean_initial == 1.0);
}

TEST_CASE("scaler specifications") {
  const Model m = option_model();
  CHECK(dynamic_cast<const ExerciseScaler*>(parse_scaler("exercise", m).get()) != nullptr);
  CHECK(dynamic_cast<const DiscountScaler*>(parse_scaler("discount:delta=0.02", m).get()) != nullptr);
  CHECK_THROWS_AS(parse_scaler("interest", m), ConfigError);
  CHECK_THROWS_AS(parse_scaler("discount:", m), ConfigError);
  CHECK_THROWS_AS(parse_scaler("discount:delta=abc", m), ConfigError);
  CHECK_THROWS_AS(parse_scaler("discount:nowhere=0.1", m), ConfigError);
  const DiscountScaler s({0.1, 0.2});
  CHECK(s.decay(1, 1.0, 3.0) == doctest::Approx(std::exp(-0.4)));
}

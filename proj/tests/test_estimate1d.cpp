#include <algorithm>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace mscf;
using namespace mscf::testing;

namespace {

Dataset dataset(const StateSpace& s, std::vector<CensoredObservation> obs) {
  Dataset d;
  d.states = s;
  d.obs = std::move(obs);
  return d;
}

PaymentSpec constant_rho(int states, double rho) {
  PaymentSpec pay(states);
  pay.scaling = [rho](double, int j, int k) { return j == 0 && k == 2 ? rho : 1.0; };
  return pay;
}

/// Product-limit estimator coded from raw data: at each distinct event time
/// P <- P (I + dA) with dA_jk = d_jk / Y_j.
Eigen::MatrixXd classical_aj(const Dataset& d, const std::vector<double>& times) {
  const int J = d.states.size();
  std::vector<double> events;
  for (const auto& o : d.obs)
    for (const auto& j : o.jumps) events.push_back(j.time);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Zero(J);
  p[d.states.initial()] = 1.0;
  Eigen::MatrixXd out(static_cast<Index>(times.size()), J);
  std::size_t next = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    while (next < events.size() && events[next] <= times[i]) {
      const double s = events[next++];
      Eigen::VectorXd y = Eigen::VectorXd::Zero(J);
      Eigen::MatrixXd dn = Eigen::MatrixXd::Zero(J, J);
      for (const auto& o : d.obs) {
        if (o.censor >= s) y[state_of(o, std::nextafter(s, 0.0))] += 1.0;
        for (const auto& j : o.jumps)
          if (j.time == s) dn(j.from, j.to) += 1.0;
      }
      Eigen::MatrixXd step = Eigen::MatrixXd::Identity(J, J);
      for (int a = 0; a < J; ++a)
        for (int b = 0; b < J; ++b)
          if (a != b && dn(a, b) > 0.0) {
            step(a, b) += dn(a, b) / y[a];
            step(a, a) -= dn(a, b) / y[a];
          }
      p = p * step;
    }
    out.row(static_cast<Index>(i)) = p;
  }
  return out;
}

}  // namespace

TEST_CASE("Nelson-Aalen hand computations") {
  const StateSpace s = alive_dead();
  PaymentSpec pay(2);
  SUBCASE("one path, one jump") {
    const Dataset d = dataset(s, {make_obs(0, {{1.0, 0, 1}})});
    const auto g = event_grid(d, 5.0);
    const auto h = nelson_aalen_scaled(build_1d(d, pay, g));
    CHECK(h.increment(g->index_of(1.0), 0, 1) == 1.0);
    CHECK(h.increment(g->index_of(1.0), 0, 0) == -1.0);
  }
  SUBCASE("two paths, one jump") {
    const Dataset d = dataset(s, {make_obs(0, {{1.0, 0, 1}}), make_obs(0, {})});
    const auto g = event_grid(d, 5.0);
    const auto h = nelson_aalen_scaled(build_1d(d, pay, g));
    CHECK(h.increment(g->index_of(1.0), 0, 1) == 0.5);
    CHECK(h.cumulative(0, 1)(4.0) == 0.5);
    CHECK(h.warnings == 0);
  }
}

TEST_CASE("zero denominators are counted and floored") {
  const StateSpace s = alive_dead();
  PaymentSpec pay(2);
  const Dataset d = dataset(s, {make_obs(0, {{1.0, 0, 1}})});
  const auto g = event_grid(d, 5.0);
  auto e = build_1d(d, pay, g);
  // Force a zero denominator in front of the event.
  e.at_risk(0, 0) = 0.0;
  e.at_risk_unscaled(0, 0) = 0.0;
  const auto h = nelson_aalen_scaled(e);
  CHECK(h.warnings == 1);
  CHECK(h.increment(1, 0, 1) == 0.0);
  const auto floored = nelson_aalen_scaled(e, 0.25);
  CHECK(floored.increment(1, 0, 1) == 4.0);
}

TEST_CASE("Aalen-Johansen with zero hazards") {
  const Dataset d = dataset(option_states(), {make_obs(0, {}, 4.0), make_obs(0, {})});
  const auto g = event_grid(d, 10.0);
  const auto p = aalen_johansen(nelson_aalen_scaled(build_1d(d, option_payments(), g)), 0);
  CHECK(p.p.col(0).isOnes(0.0));
  CHECK(p.p.rightCols(3).isZero(0.0));
}

TEST_CASE("uncensored scaled occupation equals the direct average") {
  const Model m = option_model();
  const Dataset d = simulated(m, 300, 17);
  const auto g = event_grid(d, m.horizon);
  const auto p = aalen_johansen(nelson_aalen_scaled(build_1d(d, m.payments, g)), 0);
  double worst = 0.0;
  for (Index i = 0; i < g->size(); ++i)
    for (int j = 0; j < 4; ++j) worst = std::max(worst, std::abs(p.p(i, j) - direct_occupation(d, m.payments, j, (*g)[i])));
  CHECK(worst < 1e-12);
}

TEST_CASE("unit scaling reduces to the classical product-limit estimator") {
  const Model m = option_model();
  for (std::uint64_t seed : {2u, 3u}) {
    const Dataset d = simulated(m, 250, seed, Censoring::uniform(2, 12));
    const auto g = event_grid(d, m.horizon);
    const auto p = aalen_johansen(nelson_aalen_scaled(build_1d(d, constant_rho(4, 1.0), g)), 0);
    const Eigen::MatrixXd ref = classical_aj(d, std::vector<double>(g->times().begin(), g->times().end()));
    CHECK((p.p - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    const auto plain = aalen_johansen(nelson_aalen(build_1d(d, m.payments, g)), 0);
    CHECK((plain.p - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("estimates do not depend on the order of individuals") {
  const Model m = option_model();
  Dataset d = simulated(m, 400, 5, Censoring::uniform(2, 12));
  const auto g = event_grid(d, m.horizon);
  const auto p1 = aalen_johansen(nelson_aalen_scaled(build_1d(d, m.payments, g)), 0);
  std::mt19937 shuffle_rng(3);
  std::shuffle(d.obs.begin(), d.obs.end(), shuffle_rng);
  const auto p2 = aalen_johansen(nelson_aalen_scaled(build_1d(d, m.payments, event_grid(d, m.horizon))), 0);
  CHECK(p1.p == p2.p);
}

TEST_CASE("three individuals") {
  // Exercise at tau3 < tau1 < tau2, death of I at sigma1, censoring of II at
  // R2, death of III at sigma3. Deaths after exercise are 2 -> 6.
  const Model m = freepolicy6_model();
  const double tau3 = 5, tau1 = 10, tau2 = 15, sigma1 = 20, r2 = 30, sigma3 = 35;
  const Dataset d = dataset(m.states, {make_obs(0, {{tau1, 0, 1}, {sigma1, 1, 5}}),
                                       make_obs(0, {{tau2, 0, 1}}, r2),
                                       make_obs(0, {{tau3, 0, 1}, {sigma3, 1, 5}})});
  PipelineOptions opt;
  opt.threads = 1;
  const SajRun run = run_saj(d, m, opt);
  const auto& g = *run.empirical.grid;
  auto ratio = [&](int j, double t, bool left) {
    Index i = g.index_of(t);
    if (left) --i;
    return run.p_scaled.p(i, j) / run.empirical.at_risk(i, j);
  };
  const auto rho = [&](double t) { return m.payments.rho(t, 0, 1); };
  const double four_terms = rho(tau3) * ratio(0, 0.0, false) / 3 + rho(tau1) * ratio(0, tau3, false) / 3 +
                            rho(tau2) * ratio(0, tau1, false) / 3 - rho(tau1) * ratio(1, sigma1, true) / 3;
  const double p2 = run.p_scaled.curve(1)(r2);
  CHECK(p2 == doctest::Approx(four_terms).epsilon(1e-14));
  CHECK(p2 == doctest::Approx((rho(tau3) + rho(tau2)) / 3.0).epsilon(1e-14));
  // Â(sigma3-) - Â(R2) = p^rho_2(R2) (B_2(sigma3) - B_2(R2)).
  const double db2 = m.payments.sojourn[1].cumulative(sigma3) - m.payments.sojourn[1].cumulative(r2);
  const double da = run.cashflow.values(sigma3) - run.cashflow.values(r2);
  CHECK(da == doctest::Approx(p2 * db2).epsilon(1e-12));
}

TEST_CASE("cemetery transform") {
  const Model m = option_model();
  const Dataset d = simulated(m, 300, 9, Censoring::uniform(2, 12));
  SUBCASE("unit scaling is the identity") {
    const Dataset t = cmaj_transform(d, constant_rho(4, 1.0), 1);
    CHECK(t.states.size() == 5);
    for (std::size_t l = 0; l < d.size(); ++l) CHECK(t.obs[l].jumps == d.obs[l].jumps);
  }
  SUBCASE("zero scaling sends every exercised path to the cemetery") {
    const Dataset t = cmaj_transform(d, constant_rho(4, 0.0), 1);
    for (std::size_t l = 0; l < d.size(); ++l) {
      const auto ex = d.obs[l].exercise(d.states);
      if (!ex) {
        CHECK(t.obs[l].jumps == d.obs[l].jumps);
        continue;
      }
      REQUIRE(t.obs[l].jumps.size() == *ex + 1);
      CHECK(t.obs[l].jumps.back().to == 4);
      CHECK(t.obs[l].jumps.back().time == d.obs[l].jumps[*ex].time);
    }
  }
  SUBCASE("factors above one are rejected") {
    CHECK_THROWS_AS(cmaj_transform(d, constant_rho(4, 1.5), 1), ConfigError);
  }
  SUBCASE("the auxiliary seed changes the transform") {
    const PaymentSpec half = constant_rho(4, 0.5);
    const Dataset a = cmaj_transform(d, half, 1), b = cmaj_transform(d, half, 1), c = cmaj_transform(d, half, 2);
    CHECK(a.obs == b.obs);
    CHECK_FALSE(a.obs == c.obs);
  }
}

TEST_CASE("scaled hazard of the free-policy surrender against a large sample") {
  // Reference: the same estimator on 100,000 uncensored paths. Noise scale:
  // pointwise standard deviation over 20 replicate datasets of size 2000.
  const Model m = freepolicy6_model();
  const std::vector<double> times = report_times(35.0, 0.5);
  PipelineOptions opt;
  opt.threads = 0;
  opt.report = times;
  auto lambda25 = [&](const Dataset& d) {
    const SajRun r = run_saj(d, m, opt);
    return sample(r.scaled.cumulative(1, 4), times);
  };
  const Eigen::VectorXd ref = lambda25(simulate_dataset(m, 100'000, 77, {}, 0));
  Eigen::MatrixXd reps(static_cast<Index>(times.size()), 20);
  for (int r = 0; r < 20; ++r)
    reps.col(r) = lambda25(simulate_dataset(m, 2000, derive_seed(78, SeedStage::replicate, r), Censoring::uniform(20, 80), 0));
  const Eigen::VectorXd mean = reps.rowwise().mean();
  const Eigen::VectorXd sd = ((reps.colwise() - mean).array().square().rowwise().sum() / 19.0).sqrt();
  const double dist = (reps.col(0) - ref).cwiseAbs().maxCoeff();
  CHECK(dist < 3.0 * sd.maxCoeff());

  const SajRun r = run_saj(simulate_dataset(m, 2000, 79, Censoring::uniform(20, 80), 0), m, opt);
  CHECK(r.warnings() == 0);
}

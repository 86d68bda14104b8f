#include <cstring>

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

struct Fixture {
  Dataset data;
  GridPtr grid;
  Empirical1D e1;
  OccupationCurve p;
  Empirical2D e2;

  Fixture(Dataset d, double theta, const PaymentSpec& pay, GridPtr eval = nullptr)
      : data(std::move(d)),
        grid(event_grid(data, theta, eval ? eval->times() : std::span<const double>{})),
        e1(build_1d(data, pay, grid)),
        p(aalen_johansen(nelson_aalen(e1), data.states.initial())),
        e2(build_2d(data, grid, eval, 1)) {}
};

double count_in(const CensoredObservation& o, Transition tr, double lo, double hi) {
  double c = 0.0;
  for (const auto& j : o.jumps)
    if (j.from == tr.from && j.to == tr.to && j.time > lo && j.time <= std::min(hi, o.censor)) c += 1.0;
  return c;
}

}  // namespace

TEST_CASE("no joint events give zero surfaces") {
  const Fixture f(dataset(option_states(), {make_obs(0, {}, 3.0), make_obs(0, {})}), 10.0, option_payments());
  const auto h = nelson_aalen_2d(f.e2);
  CHECK(h.increments.empty());
  CHECK(h.cumulative(0, 2, 2, 3, f.grid).values().isZero(0.0));
}

TEST_CASE("one path with an exercise and a later death") {
  const double s1 = 2.0, s2 = 6.0;
  const Fixture f(dataset(option_states(), {make_obs(0, {{s1, 0, 2}, {s2, 2, 3}})}), 10.0, option_payments());
  const auto h = nelson_aalen_2d(f.e2);
  const Surface c = h.cumulative(0, 2, 2, 3, f.grid);
  for (Index i = 0; i < f.grid->size(); ++i)
    for (Index j = 0; j < f.grid->size(); ++j)
      CHECK(c.at(i, j) == ((*f.grid)[i] >= s1 && (*f.grid)[j] >= s2 ? 1.0 : 0.0));
  // Mirrored pair: in state 2 before s2 and in state 0 before s1.
  const Surface r = h.cumulative(2, 3, 0, 2, f.grid);
  for (Index i = 0; i < f.grid->size(); ++i)
    for (Index j = 0; j < f.grid->size(); ++j)
      CHECK(r.at(i, j) == ((*f.grid)[i] >= s2 && (*f.grid)[j] >= s1 ? 1.0 : 0.0));
}

TEST_CASE("two-dimensional hazards against a brute-force division") {
  const Model m = option_model();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Fixture f(simulated(m, 5, seed, Censoring::uniform(2, 12)), m.horizon, m.payments);
    const auto h = nelson_aalen_2d(f.e2);
    const auto& g = *f.grid;
    const Index M = g.size();
    for (const auto& a : f.e2.transitions)
      for (const auto& b : f.e2.transitions) {
        // Cell increments, then cumulative sums.
        Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(M, M);
        for (Index i = 1; i < M; ++i)
          for (Index j = 1; j < M; ++j) {
            double num = 0.0, den = 0.0;
            for (const auto& o : f.data.obs) {
              num += count_in(o, a, g[i - 1], g[i]) * count_in(o, b, g[j - 1], g[j]);
              if (std::max(g[i - 1], g[j - 1]) < o.censor && state_of(o, g[i - 1]) == a.from &&
                  state_of(o, g[j - 1]) == b.from)
                den += 1.0;
            }
            const double inc = num == 0.0 ? 0.0 : num / den;
            cum(i, j) = inc + cum(i - 1, j) + cum(i, j - 1) - cum(i - 1, j - 1);
          }
        const Surface c = h.cumulative(a.from, a.to, b.from, b.to, f.grid);
        CHECK((c.values() - cum).cwiseAbs().maxCoeff() < 1e-12);
      }
  }
}

TEST_CASE("uncensored surfaces equal direct pair frequencies") {
  const Model m = option_model();
  const Fixture f(simulated(m, 60, 31), m.horizon, m.payments);
  const auto h = nelson_aalen_2d(f.e2);
  AalenJohansen2DOptions opt;
  opt.all_pairs = true;
  opt.dense = true;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) opt.pairs.push_back({a, b});
  const Surface2D s = aalen_johansen_2d(h, f.p, 0, opt);
  const auto& g = *f.grid;
  double worst = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Surface& surf = s.surface({a, b});
      for (Index i = 0; i < g.size(); ++i)
        for (Index j = 0; j < g.size(); ++j)
          worst = std::max(worst, std::abs(surf.at(i, j) - direct_pair(f.data, a, b, g[i], g[j])));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("zero two-dimensional hazards keep the interior at the boundary values") {
  const Model m = option_model();
  const Fixture f(simulated(m, 80, 32, Censoring::uniform(2, 12)), m.horizon, m.payments);
  auto h = nelson_aalen_2d(f.e2);
  std::fill(h.increments.begin(), h.increments.end(), 0.0);
  AalenJohansen2DOptions opt;
  opt.pairs = {{0, 0}, {0, 2}, {2, 2}};
  opt.dense = true;
  const Surface2D s = aalen_johansen_2d(h, f.p, 0, opt);
  for (auto [a, b] : opt.pairs) {
    const auto& v = s.surface({a, b}).values();
    const Index M = v.rows();
    // Axes carry the one-dimensional estimator.
    for (Index i = 0; i < M; ++i) {
      CHECK(v(i, 0) == doctest::Approx(f.p.p(i, a) * (b == 0)).epsilon(1e-14));
      CHECK(v(0, i) == doctest::Approx((a == 0) * f.p.p(i, b)).epsilon(1e-14));
    }
    for (Index i = 1; i < M; ++i)
      for (Index j = 1; j < M; ++j) CHECK(std::abs(v(i, j) - (v(i, 0) + v(0, j) - v(0, 0))) < 1e-12);
  }
}

TEST_CASE("gnomon traversal is bit-identical across thread counts") {
  const Model m = freepolicy6_model();
  const Dataset d = simulated(m, 400, 33, Censoring::uniform(20, 80));
  const Fixture f(d, m.horizon, m.payments);
  const auto h = nelson_aalen_2d(f.e2);
  AalenJohansen2DOptions opt;
  opt.all_pairs = true;
  opt.dense = true;
  opt.pairs = {{0, 0}, {0, 1}};
  opt.eval = thin_grid(*f.grid, 60);
  opt.threads = 1;
  const Surface2D a = aalen_johansen_2d(h, f.p, 0, opt);
  opt.threads = 4;
  const Surface2D b = aalen_johansen_2d(h, f.p, 0, opt);
  opt.threads = 3;
  opt.all_pairs = false;
  const Surface2D c = aalen_johansen_2d(h, f.p, 0, opt);
  for (std::size_t i = 0; i < a.corner.size(); ++i) {
    CHECK(std::memcmp(&a.corner[i], &b.corner[i], sizeof(double)) == 0);
    if (!std::isnan(c.corner[i])) CHECK(c.corner[i] == a.corner[i]);
  }
  for (auto pair : opt.pairs) {
    CHECK(a.surface(pair).values() == b.surface(pair).values());
    CHECK(a.surface(pair).values() == c.surface(pair).values());
  }
  CHECK_THROWS(c.surface({3, 3}));
}

TEST_CASE("free-policy pair probability against a large sample") {
  // P(Z_10 = 1, Z_20 = 2). Censoring starts at 20, so the estimate and the
  // reference are both binomial frequencies; the tolerance combines both.
  const Model m = freepolicy6_model();
  const Dataset d = simulated(m, 2000, 34, Censoring::uniform(20, 80));
  const Fixture f(d, m.horizon, m.payments, make_grid(EventGrid({0.0, 10.0, 20.0})));
  AalenJohansen2DOptions opt;
  opt.pairs = {{0, 1}};
  opt.dense = true;
  opt.eval = f.e2.surfaces->grid;
  const Surface2D s = aalen_johansen_2d(nelson_aalen_2d(f.e2), f.p, 0, opt);
  const double est = s.surface({0, 1})(10.0, 20.0);
  const Dataset big = simulate_dataset(m, 100'000, 35, {}, 0);
  const double ref = direct_pair(big, 0, 1, 10.0, 20.0);
  const double se = std::sqrt(ref * (1 - ref) / 2000.0 + ref * (1 - ref) / 100'000.0);
  CHECK(std::abs(est - ref) < 3.0 * se);
}

#include "mscf/extension.hpp"

#include <cmath>
#include <sstream>

#include "mscf/parallel.hpp"

namespace mscf {

DiscountScaler::DiscountScaler(std::vector<double> delta) : delta_(std::move(delta)) {
  for (double d : delta_)
    if (!std::isfinite(d)) throw ConfigError("discount scaler: rates must be finite");
}

double DiscountScaler::decay(int state, double from, double to) const {
  const double d = delta_.at(static_cast<std::size_t>(state));
  return d == 0.0 ? 1.0 : std::exp(-d * (to - from));
}

std::unique_ptr<AdaptedScaler> parse_scaler(const std::string& text, const Model& model) {
  if (text == "exercise") return std::make_unique<ExerciseScaler>(model.payments);
  constexpr std::string_view prefix = "discount:";
  if (text.rfind(prefix, 0) != 0) throw ConfigError("scaler must be 'exercise' or 'discount:delta=<x>', got '" + text + "'");
  std::vector<double> delta(static_cast<std::size_t>(model.states.size()), 0.0);
  std::stringstream ss(text.substr(prefix.size()));
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("discount scaler: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw ConfigError("discount scaler: bad number in '" + item + "'");
    }
    if (key == "delta")
      std::fill(delta.begin(), delta.end(), value);
    else
      delta[static_cast<std::size_t>(model.states.index_of(key))] = value;
    any = true;
  }
  if (!any) throw ConfigError("discount scaler: no rate given");
  return std::make_unique<DiscountScaler>(std::move(delta));
}

namespace {

/// H along one observed path as a list of segments [start, end) in a state.
struct Segment {
  double start;
  double end;
  int state;
  double h_start;
  /// H(start) / H(start-) when a jump starts the segment.
  double jump_ratio;
  int from;  // state before the jump that starts the segment, -1 at time 0
};

std::vector<Segment> segments(const CensoredObservation& o, const StateSpace& states, const AdaptedScaler& scaler) {
  std::vector<Segment> out;
  const auto ex = o.exercise(states);
  double h = scaler.initial(o);
  double start = 0.0;
  int state = o.initial;
  int from = -1;
  double ratio = 1.0;
  for (std::size_t i = 0; i <= o.jumps.size(); ++i) {
    const double end = i < o.jumps.size() ? o.jumps[i].time : std::numeric_limits<double>::infinity();
    out.push_back({start, end, state, h, ratio, from});
    if (i == o.jumps.size()) break;
    const double h_minus = h * scaler.decay(state, start, end);
    ratio = scaler.jump_factor(o.jumps[i], ex && *ex == i);
    h = h_minus * ratio;
    from = state;
    state = o.jumps[i].to;
    start = end;
  }
  return out;
}

}  // namespace

BarBundle bar_estimators(const Dataset& data, const AdaptedScaler& scaler, GridPtr grid, unsigned threads) {
  if (data.empty()) throw Error("bar_estimators: empty dataset");
  validate(data);
  const auto& states = data.states;
  const int J = states.size();
  const Index M = grid->size();
  std::vector<std::vector<Segment>> segs(data.size());
  double h0 = 0.0;
  for (std::size_t l = 0; l < data.size(); ++l) {
    segs[l] = segments(data.obs[l], states, scaler);
    h0 += segs[l].front().h_start;
  }

  BarBundle b;
  b.grid = grid;
  b.states = states;
  b.n = data.size();
  b.mean_initial = h0 / static_cast<double>(b.n);
  b.at_risk = Eigen::MatrixXd::Zero(M, J);
  b.at_risk_left = Eigen::MatrixXd::Zero(M, J);
  b.decay = Eigen::MatrixXd::Ones(M, J);
  b.dH = Eigen::MatrixXd::Zero(M, J);
  b.dLambda = Eigen::MatrixXd::Zero(M, J * J);
  Eigen::MatrixXd jumpH = Eigen::MatrixXd::Zero(M, J);
  Eigen::MatrixXd events = Eigen::MatrixXd::Zero(M, J * J);

  // Each grid point sums over individuals in dataset order.
  parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t mi) {
    const auto m = static_cast<Index>(mi);
    const double t = (*grid)[m];
    for (std::size_t l = 0; l < data.size(); ++l) {
      const auto& o = data.obs[l];
      const auto& sg = segs[l];
      std::size_t s = 0;
      while (s + 1 < sg.size() && sg[s + 1].start <= t) ++s;
      const Segment& cur = sg[s];
      const double h_t = cur.h_start * scaler.decay(cur.state, cur.start, t);
      if (t < o.censor) b.at_risk(m, cur.state) += h_t;
      if (m == 0 || t > o.censor) continue;
      if (cur.start == t && cur.from >= 0) {
        // Jump at t: left limit sits in the previous segment.
        const Segment& prev = sg[s - 1];
        const double h_minus = prev.h_start * scaler.decay(prev.state, prev.start, t);
        b.at_risk_left(m, prev.state) += h_minus;
        jumpH(m, prev.state) += h_t - h_minus;
        events(m, prev.state * J + cur.state) += h_t;
      } else {
        b.at_risk_left(m, cur.state) += h_t;
      }
    }
  });

  const double inv_n = 1.0 / static_cast<double>(b.n);
  b.at_risk *= inv_n;
  b.at_risk_left *= inv_n;
  jumpH *= inv_n;
  events *= inv_n;
  for (Index m = 1; m < M; ++m) {
    for (int j = 0; j < J; ++j) {
      const double prev = b.at_risk(m - 1, j);
      const double left = b.at_risk_left(m, j);
      if (prev > 0.0) b.decay(m, j) = left / prev;
      double diag = 0.0;
      if (left > 0.0) {
        b.dH(m, j) = jumpH(m, j) / left;
        diag = b.dH(m, j);
      } else if (jumpH(m, j) != 0.0) {
        ++b.warnings;
      }
      for (int k = 0; k < J; ++k) {
        if (k == j) continue;
        const double dn = events(m, j * J + k);
        if (dn == 0.0) continue;
        if (left > 0.0) {
          b.dLambda(m, b.column(j, k)) = dn / left;
          diag -= dn / left;
        } else {
          ++b.warnings;
        }
      }
      b.dLambda(m, b.column(j, j)) = diag;
    }
  }
  return b;
}

Eigen::MatrixXd forward_solve(const BarBundle& bundle) {
  const int J = bundle.states.size();
  const Index M = bundle.grid->size();
  Eigen::MatrixXd out(M, J);
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Zero(J);
  p[bundle.states.initial()] = bundle.mean_initial;
  out.row(0) = p;
  Eigen::RowVectorXd next(J);
  for (Index m = 1; m < M; ++m) {
    p = p.cwiseProduct(bundle.decay.row(m));
    next = p;
    for (int j = 0; j < J; ++j) {
      if (p[j] == 0.0) continue;
      for (int k = 0; k < J; ++k) {
        const double d = bundle.dLambda(m, bundle.column(j, k));
        if (d != 0.0) next[k] += p[j] * d;
      }
    }
    p = next;
    out.row(m) = p;
  }
  return out;
}

}  // namespace mscf

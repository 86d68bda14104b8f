#include "mscf/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mscf {

StateSpace::StateSpace(std::vector<std::string> labels, std::vector<bool> post_exercise, int initial)
    : labels_(std::move(labels)), post_(std::move(post_exercise)), initial_(initial) {
  if (labels_.empty()) throw ConfigError("state space is empty");
  if (post_.size() != labels_.size()) throw ConfigError("state space: one J0/J1 flag per state required");
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size())
    throw ConfigError("state space: duplicate state label");
  if (initial_ < 0 || initial_ >= size()) throw ConfigError("state space: initial state out of range");
  if (is_post(initial_)) throw ConfigError("state space: initial state must be pre-exercise");
}

int StateSpace::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ConfigError("unknown state '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

StateSpace StateSpace::with_cemetery() const {
  auto labels = labels_;
  auto post = post_;
  labels.emplace_back("nabla");
  post.push_back(true);
  return {std::move(labels), std::move(post), initial_};
}

SojournMeasure& SojournMeasure::add_rate(double from, double to, double rate) {
  if (!(to > from) || from < 0.0) throw ConfigError("sojourn payment: empty or negative rate interval");
  pieces_.push_back({from, to, rate});
  return *this;
}

SojournMeasure& SojournMeasure::add_lump(double time, double amount) {
  if (!(time > 0.0)) throw ConfigError("sojourn payment: lump sums must be at positive times");
  lumps_.push_back({time, amount});
  return *this;
}

double SojournMeasure::cumulative(double t) const {
  double s = 0.0;
  for (const auto& p : pieces_) {
    const double hi = std::min(t, p.to);
    if (hi > p.from) s += p.rate * (hi - p.from);
  }
  for (const auto& l : lumps_)
    if (l.time <= t) s += l.amount;
  return s;
}

SojournMeasure SojournMeasure::scaled(double factor) const {
  SojournMeasure out = *this;
  for (auto& p : out.pieces_) p.rate *= factor;
  for (auto& l : out.lumps_) l.amount *= factor;
  return out;
}

PaymentSpec PaymentSpec::scaled(double factor) const {
  PaymentSpec out = *this;
  out.b0 *= factor;
  for (auto& s : out.sojourn) s = s.scaled(factor);
  for (auto& [key, fn] : out.transition) fn = [inner = fn, factor](double t) { return factor * inner(t); };
  return out;
}

ReserveTable::ReserveTable(const TechnicalBasis& basis) : basis_(basis) {
  if (!(basis.step > 0.0) || !(basis.horizon > 0.0)) throw ConfigError("technical basis: step and horizon must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(basis.horizon / basis.step - 1e-9));
  nodes_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) nodes_[i] = std::min(basis.horizon, static_cast<double>(i) * basis.step);
  log_survival_.assign(n + 1, 0.0);
  cumulative_.assign(n + 1, 0.0);
  auto intensity = [&](double t) { return basis_.mortality(t) + basis_.interest; };
  double prev_rate = intensity(0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double h = nodes_[i] - nodes_[i - 1];
    const double rate = intensity(nodes_[i]);
    log_survival_[i] = log_survival_[i - 1] + 0.5 * h * (prev_rate + rate);
    cumulative_[i] = cumulative_[i - 1] + 0.5 * h * (std::exp(-log_survival_[i - 1]) + std::exp(-log_survival_[i]));
    prev_rate = rate;
  }
}

ReserveTable::Point ReserveTable::at(double t) const {
  if (t < 0.0) throw Error("technical reserves: negative time");
  if (t >= basis_.horizon) return {log_survival_.back(), cumulative_.back()};
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  const auto i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double h = t - nodes_[i];
  if (h == 0.0) return {log_survival_[i], cumulative_[i]};
  const double rate_lo = basis_.mortality(nodes_[i]) + basis_.interest;
  const double rate_hi = basis_.mortality(t) + basis_.interest;
  const double log_s = log_survival_[i] + 0.5 * h * (rate_lo + rate_hi);
  const double cum = cumulative_[i] + 0.5 * h * (std::exp(-log_survival_[i]) + std::exp(-log_s));
  return {log_s, cum};
}

double ReserveTable::benefit_annuity(double t) const {
  if (t >= basis_.horizon) return 0.0;
  const Point now = at(t);
  const Point start = at(std::max(t, basis_.retirement));
  const Point end = at(basis_.horizon);
  return std::exp(now.log_survival) * (end.cumulative - start.cumulative);
}

double ReserveTable::premium_annuity(double t) const {
  if (t >= basis_.retirement) return 0.0;
  const Point now = at(t);
  const Point end = at(basis_.retirement);
  return std::exp(now.log_survival) * (end.cumulative - now.cumulative);
}

TechnicalReserves ReserveTable::reserves(double benefit_rate, double t) const {
  if (benefit_rate < 0.0) throw Error("technical reserves: negative benefit rate");
  const double plus = benefit_rate * benefit_annuity(t);
  return {plus - basis_.premium_rate * premium_annuity(t), plus};
}

TechnicalReserves technical_reserves(const TechnicalBasis& basis, double benefit_rate, double t) {
  return ReserveTable(basis).reserves(benefit_rate, t);
}

double solve_equivalence_benefit(const TechnicalBasis& basis) {
  const ReserveTable table(basis);
  // V*(0) must equal the initial premium.
  auto excess = [&](double beta) { return table.reserves(beta, 0.0).with_premiums - basis.initial_premium; };
  double lo = 0.0;
  double hi = 1.0;
  if (excess(lo) > 0.0) throw Error("equivalence benefit: no sign change in bracket");
  if (excess(lo) == 0.0) return 0.0;
  int expansions = 0;
  while (excess(hi) < 0.0) {
    hi *= 2.0;
    if (++expansions > 200) throw Error("equivalence benefit: no sign change in bracket");
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double free_policy_factor(const ReserveTable& table, double benefit_rate, double t) {
  const auto v = table.reserves(benefit_rate, t);
  if (v.benefits_only == 0.0) throw Error("free policy factor: benefit reserve is zero");
  return v.with_premiums / v.benefits_only;
}

double free_policy_factor(const TechnicalBasis& basis, double benefit_rate, double t) {
  return free_policy_factor(ReserveTable(basis), benefit_rate, t);
}

double scaling_bound(const StateSpace& states, const PaymentSpec& pay, double horizon) {
  double sup = 0.0;
  const int steps = static_cast<int>(std::ceil(horizon * 512.0));
  for (int j = 0; j < states.size(); ++j) {
    if (!states.is_pre(j)) continue;
    for (int k = 0; k < states.size(); ++k) {
      if (!states.is_post(k)) continue;
      for (int i = 0; i <= steps; ++i) {
        const double r = pay.rho(std::min(horizon, i / 512.0), j, k);
        if (!std::isfinite(r)) throw ConfigError("scaling factor is not bounded on the horizon");
        if (r < 0.0) throw ConfigError("scaling factor must be nonnegative");
        sup = std::max(sup, r);
      }
    }
  }
  return sup;
}

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

Makeham parse_makeham(const json& j, const Makeham& fallback) {
  return {number_or(j, "a", fallback.a), number_or(j, "b", fallback.b), number_or(j, "c", fallback.c),
          number_or(j, "age_offset", fallback.age_offset)};
}

TechnicalBasis parse_basis(const json& j) {
  TechnicalBasis b;
  if (j.contains("mortality")) b.mortality = parse_makeham(j.at("mortality"), b.mortality);
  b.interest = number_or(j, "interest", b.interest);
  b.retirement = number_or(j, "retirement", b.retirement);
  b.premium_rate = number_or(j, "premium_rate", b.premium_rate);
  b.initial_premium = number_or(j, "initial_premium", b.initial_premium);
  b.horizon = number_or(j, "horizon", b.horizon);
  b.step = number_or(j, "step", b.step);
  return b;
}

HazardTerm parse_term(const json& j, const std::optional<TechnicalBasis>& basis) {
  const std::string type = j.value("type", "constant");
  HazardTerm term;
  if (type == "constant") {
    term = HazardTerm::constant(number_or(j, "value", 0.0));
  } else if (type == "makeham") {
    term = HazardTerm::gompertz_makeham(parse_makeham(j, Makeham{}));
  } else if (type == "technical_mortality") {
    if (!basis) throw ConfigError("hazard term 'technical_mortality' needs a technical_basis");
    term = HazardTerm::gompertz_makeham(basis->mortality);
  } else {
    throw ConfigError("unknown hazard term type '" + type + "'");
  }
  term.t_from = number_or(j, "t_from", 0.0);
  term.t_to = number_or(j, "t_to", kInf);
  term.u_from = number_or(j, "u_from", 0.0);
  term.u_to = number_or(j, "u_to", kInf);
  return term;
}

}  // namespace

Model parse_model(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  try {
    if (root.value("preset", "") == "freepolicy6" && !root.contains("states")) {
      Model m = freepolicy6_model();
      m.horizon = number_or(root, "horizon", m.horizon);
      return m;
    }
    Model m;
    const auto labels = root.at("states").get<std::vector<std::string>>();
    std::vector<bool> post(labels.size(), false);
    for (const auto& s : root.value("post_exercise", std::vector<std::string>{})) {
      auto it = std::find(labels.begin(), labels.end(), s);
      if (it == labels.end()) throw ConfigError("post_exercise: unknown state '" + s + "'");
      post[static_cast<std::size_t>(it - labels.begin())] = true;
    }
    const auto initial_label = root.value("initial", labels.front());
    auto init_it = std::find(labels.begin(), labels.end(), initial_label);
    if (init_it == labels.end()) throw ConfigError("initial: unknown state '" + initial_label + "'");
    m.states = StateSpace(labels, post, static_cast<int>(init_it - labels.begin()));
    m.horizon = number_or(root, "horizon", m.horizon);
    if (root.contains("technical_basis")) m.basis = parse_basis(root.at("technical_basis"));

    const int n = m.states.size();
    m.hazards = HazardSet(n);
    for (const auto& h : root.value("hazards", json::array())) {
      const int from = m.states.index_of(h.at("from").get<std::string>());
      const int to = m.states.index_of(h.at("to").get<std::string>());
      if (!m.states.transition_allowed(from, to)) throw ConfigError("hazard from a post-exercise to a pre-exercise state");
      Hazard hz;
      for (const auto& t : h.at("terms")) hz.terms.push_back(parse_term(t, m.basis));
      m.hazards.set(from, to, std::move(hz));
    }

    std::shared_ptr<const ReserveTable> table;
    if (m.basis) table = std::make_shared<const ReserveTable>(*m.basis);

    const json pay = root.value("payments", json::object());
    if (pay.contains("benefit")) {
      const auto& b = pay.at("benefit");
      if (b.is_string() && b.get<std::string>() == "equivalence") {
        if (!m.basis) throw ConfigError("benefit 'equivalence' needs a technical_basis");
        m.benefit_rate = solve_equivalence_benefit(*m.basis);
      } else if (b.is_number()) {
        m.benefit_rate = b.get<double>();
      } else {
        throw ConfigError("payments.benefit must be a number or \"equivalence\"");
      }
    }
    auto amount = [&](const json& v) -> double {
      if (v.is_number()) return v.get<double>();
      if (v.is_string() && v.get<std::string>() == "benefit") {
        if (std::isnan(m.benefit_rate)) throw ConfigError("payment refers to 'benefit' but no benefit rate is set");
        return m.benefit_rate;
      }
      throw ConfigError("payment amount must be a number or \"benefit\"");
    };

    m.payments = PaymentSpec(n);
    m.payments.b0 = number_or(pay, "b0", 0.0);
    const json sojourn = pay.value("sojourn", json::object());
    for (const auto& [label, pieces] : sojourn.items()) {
      auto& measure = m.payments.sojourn[static_cast<std::size_t>(m.states.index_of(label))];
      for (const auto& p : pieces) {
        if (p.contains("lump")) {
          measure.add_lump(number_or(p, "time", 0.0), amount(p.at("lump")));
        } else {
          measure.add_rate(number_or(p, "from", 0.0), number_or(p, "to", kInf), amount(p.at("rate")));
        }
      }
    }
    for (const auto& t : pay.value("transition", json::array())) {
      const int from = m.states.index_of(t.at("from").get<std::string>());
      const int to = m.states.index_of(t.at("to").get<std::string>());
      const auto& v = t.at("value");
      TransitionPayment fn;
      if (v.is_number()) {
        fn = [c = v.get<double>()](double) { return c; };
      } else if (v.is_string() && (v == "technical_reserve" || v == "technical_reserve_benefits")) {
        if (!table || std::isnan(m.benefit_rate)) throw ConfigError("technical reserve payments need a basis and a benefit");
        const bool benefits_only = v == "technical_reserve_benefits";
        fn = [table, beta = m.benefit_rate, benefits_only](double s) {
          const auto r = table->reserves(beta, s);
          return benefits_only ? r.benefits_only : r.with_premiums;
        };
      } else {
        throw ConfigError("unknown transition payment value");
      }
      m.payments.transition[{from, to}] = std::move(fn);
    }

    const json scaling = root.value("scaling", json::object());
    const std::string stype = scaling.value("type", "none");
    if (stype == "free_policy_factor") {
      if (!table || std::isnan(m.benefit_rate)) throw ConfigError("free_policy_factor needs a basis and a benefit");
      const StateSpace states = m.states;
      m.payments.scaling = [table, beta = m.benefit_rate, states](double t, int j, int k) {
        return states.is_pre(j) && states.is_post(k) ? free_policy_factor(*table, beta, t) : 1.0;
      };
    } else if (stype == "constant") {
      const double c = number_or(scaling, "value", 1.0);
      const StateSpace states = m.states;
      m.payments.scaling = [c, states](double, int j, int k) { return states.is_pre(j) && states.is_post(k) ? c : 1.0; };
    } else if (stype != "none") {
      throw ConfigError("unknown scaling type '" + stype + "'");
    }
    m.cashflow_preset = root.value("cashflow_preset", "");
    m.rho_bound = scaling_bound(m.states, m.payments, m.horizon);
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

Model freepolicy6_model() {
  Model m;
  m.states = StateSpace({"1", "2", "3", "4", "5", "6"}, {false, true, false, false, true, true}, 0);
  m.horizon = 40.0;
  m.basis = TechnicalBasis{};
  const TechnicalBasis& basis = *m.basis;
  m.benefit_rate = solve_equivalence_benefit(basis);

  constexpr int active = 0, free_policy = 1, surrender = 2, dead = 3, fp_surrender = 4, fp_dead = 5;
  m.hazards = HazardSet(6);
  m.hazards.set(active, dead, Hazard{{HazardTerm::gompertz_makeham(basis.mortality)}});
  m.hazards.set(free_policy, fp_dead, Hazard{{HazardTerm::gompertz_makeham(basis.mortality)}});
  m.hazards.set(active, free_policy, Hazard{{HazardTerm::constant(0.1, 0.0, 25.0)}});
  m.hazards.set(active, surrender, Hazard{{HazardTerm::constant(0.05, 0.0, 25.0)}});
  m.hazards.set(free_policy, fp_surrender,
                Hazard{{HazardTerm::constant(0.05, 0.0, 25.0), HazardTerm::constant(0.2, 0.0, 25.0).in_duration(0.5, 2.5)}});

  auto table = std::make_shared<const ReserveTable>(basis);
  const double beta = m.benefit_rate;
  m.payments = PaymentSpec(6);
  m.payments.b0 = 100'000.0;
  m.payments.sojourn[active].add_rate(0.0, basis.retirement, -basis.premium_rate).add_rate(basis.retirement, kInf, beta);
  m.payments.sojourn[free_policy].add_rate(basis.retirement, kInf, beta);
  m.payments.transition[{active, surrender}] = [table, beta](double t) { return table->reserves(beta, t).with_premiums; };
  m.payments.transition[{free_policy, fp_surrender}] = [table, beta](double t) {
    return table->reserves(beta, t).benefits_only;
  };
  const StateSpace states = m.states;
  m.payments.scaling = [table, beta, states](double t, int j, int k) {
    return states.is_pre(j) && states.is_post(k) ? free_policy_factor(*table, beta, t) : 1.0;
  };
  m.cashflow_preset = "freepolicy6";
  m.rho_bound = scaling_bound(m.states, m.payments, m.horizon);
  return m;
}

}  // namespace mscf

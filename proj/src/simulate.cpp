#include "mscf/simulate.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mscf/parallel.hpp"
#include "mscf/rng.hpp"
#include "mscf/timegrid.hpp"

namespace mscf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int state_after(int initial, const std::vector<Jump>& jumps, double t) {
  int j = initial;
  for (const auto& jump : jumps) {
    if (jump.time > t) break;
    j = jump.to;
  }
  return j;
}

bool has_exit(const HazardSet& hazards, int j) {
  for (int k = 0; k < hazards.n_states(); ++k)
    if (hazards.allowed(j, k)) return true;
  return false;
}

}  // namespace

int StatePath::state_at(double t) const { return state_after(initial, jumps, t); }

int CensoredObservation::state_at(double t) const { return state_after(initial, jumps, t); }

std::optional<std::size_t> CensoredObservation::exercise(const StateSpace& states) const {
  for (std::size_t i = 0; i < jumps.size(); ++i)
    if (states.is_pre(jumps[i].from) && states.is_post(jumps[i].to)) return i;
  return std::nullopt;
}

void validate(const Dataset& data) {
  const auto& states = data.states;
  for (std::size_t l = 0; l < data.obs.size(); ++l) {
    const auto& o = data.obs[l];
    const std::string where = "observation " + std::to_string(l) + ": ";
    if (!(o.censor > 0.0)) throw Error(where + "censoring time must be positive");
    if (o.initial < 0 || o.initial >= states.size()) throw Error(where + "initial state out of range");
    int current = o.initial;
    double last = 0.0;
    for (const auto& j : o.jumps) {
      if (!(j.time > last)) throw Error(where + "jump times must be positive and strictly increasing");
      if (j.time > o.censor) throw Error(where + "jump after the censoring time");
      if (j.from != current) throw Error(where + "jump does not start in the current state");
      if (j.to < 0 || j.to >= states.size()) throw Error(where + "state out of range");
      if (!states.transition_allowed(j.from, j.to)) throw Error(where + "transition not allowed");
      current = j.to;
      last = j.time;
    }
  }
}

StatePath simulate_path(const HazardSet& hazards, int z0, double horizon, std::uint64_t seed) {
  constexpr double window = 1.0;
  const int n = hazards.n_states();
  if (z0 < 0 || z0 >= n) throw Error("simulate_path: initial state out of range");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error("simulate_path: horizon must be positive and finite");
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (j != k && !std::isfinite(hazards.get(j, k).bound(horizon)))
        throw Error("simulate_path: hazard is not bounded on the horizon");

  Rng rng(seed);
  StatePath path;
  path.initial = z0;
  path.simulated_to = horizon;
  int j = z0;
  double t = 0.0;
  double entry = 0.0;
  std::vector<double> rates(static_cast<std::size_t>(n));
  while (t < horizon) {
    if (!has_exit(hazards, j)) {
      path.absorption = entry;
      break;
    }
    const double end = std::min(t + window, horizon);
    double bound = 0.0;
    for (int k = 0; k < n; ++k)
      if (k != j) bound += hazards.get(j, k).bound_on(t, end);
    if (!(bound > 0.0)) {
      t = end;
      continue;
    }
    const double s = t + rng.exponential(bound);
    if (s > end) {
      // Memorylessness lets us restart at the window end with a new bound.
      t = end;
      continue;
    }
    t = s;
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      rates[static_cast<std::size_t>(k)] = k == j ? 0.0 : hazards.get(j, k)(t, t - entry);
      total += rates[static_cast<std::size_t>(k)];
    }
    if (rng.uniform() * bound >= total) continue;
    double u = rng.uniform() * total;
    int next = -1;
    for (int k = 0; k < n; ++k) {
      const double r = rates[static_cast<std::size_t>(k)];
      if (r <= 0.0) continue;
      next = k;
      if (u < r) break;
      u -= r;
    }
    path.jumps.push_back({t, j, next});
    j = next;
    entry = t;
  }
  return path;
}

CensoredObservation censor(const StatePath& path, double r) {
  CensoredObservation o;
  o.initial = path.initial;
  o.censor = r;
  for (const auto& j : path.jumps)
    if (j.time <= r) o.jumps.push_back(j);
  o.absorbed = path.absorption <= r;
  return o;
}

Censoring Censoring::parse(const std::string& text) {
  if (text == "none") return {};
  constexpr std::string_view prefix = "unif:";
  if (text.rfind(prefix, 0) == 0) {
    const auto body = text.substr(prefix.size());
    const auto comma = body.find(',');
    if (comma != std::string::npos) {
      try {
        std::size_t used_lo = 0, used_hi = 0;
        const std::string lo_text = body.substr(0, comma), hi_text = body.substr(comma + 1);
        const double lo = std::stod(lo_text, &used_lo);
        const double hi = std::stod(hi_text, &used_hi);
        if (used_lo == lo_text.size() && used_hi == hi_text.size()) return uniform(lo, hi);
      } catch (const std::logic_error&) {
      }
    }
  }
  throw ConfigError("censoring must be 'none' or 'unif:<lo>,<hi>', got '" + text + "'");
}

Censoring Censoring::uniform(double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) throw ConfigError("censoring: need 0 < lo < hi < inf");
  return {Kind::uniform, lo, hi};
}

double Censoring::simulation_horizon(double theta) const {
  return kind == Kind::none ? theta : std::max(theta, hi);
}

Dataset simulate_dataset(const Model& model, std::size_t n, std::uint64_t seed, const Censoring& censoring,
                         unsigned threads) {
  Dataset data;
  data.states = model.states;
  data.obs.resize(n);
  const double sim_horizon = censoring.simulation_horizon(model.horizon);
  parallel_for(n, threads, [&](std::size_t l) {
    const StatePath path =
        simulate_path(model.hazards, model.states.initial(), sim_horizon, derive_seed(seed, SeedStage::path, l));
    double r = kInf;
    if (censoring.kind == Censoring::Kind::uniform) {
      Rng rng(derive_seed(seed, SeedStage::censoring, l));
      r = rng.uniform(censoring.lo, censoring.hi);
    }
    data.obs[l] = censor(path, r);
  });
  return data;
}

void write_dataset(std::ostream& os, const Dataset& data) {
  const auto& states = data.states;
  os << "id,event_time,from_state,to_state\n";
  for (std::size_t l = 0; l < data.obs.size(); ++l) {
    const auto& o = data.obs[l];
    for (const auto& j : o.jumps)
      os << l << ',' << format_double(j.time) << ',' << states.label(j.from) << ',' << states.label(j.to) << '\n';
    const int last = o.jumps.empty() ? o.initial : o.jumps.back().to;
    os << l << ',' << format_double(o.censor) << ',' << states.label(last) << ",CENSOR\n";
  }
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_dataset(out, data);
  if (!out) throw Error("write to '" + path + "' failed");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_time(const std::string& text, std::size_t line_no) {
  if (text == "inf") return kInf;
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(value))
    throw ParseError(line_no, "bad time '" + text + "'");
  return value;
}

}  // namespace

Dataset read_dataset(std::istream& is, const Model& model) {
  Dataset data;
  data.states = model.states;
  const auto& states = data.states;
  auto state = [&](const std::string& label, std::size_t line_no) {
    try {
      return states.index_of(label);
    } catch (const ConfigError&) {
      throw ParseError(line_no, "unknown state '" + label + "'");
    }
  };

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw ParseError(1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,event_time,from_state,to_state") throw ParseError(line_no, "unexpected header '" + line + "'");

  CensoredObservation current;
  bool open = false;
  std::string current_id;
  std::size_t closed_count = 0;
  std::string last_closed_id;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw ParseError(line_no, "expected 4 fields");
    if (f[0].empty()) throw ParseError(line_no, "empty id");
    const double t = parse_time(f[1], line_no);
    const int from = state(f[2], line_no);
    if (!open) {
      if (closed_count > 0 && f[0] == last_closed_id) throw ParseError(line_no, "rows after the CENSOR row of id " + f[0]);
      current = CensoredObservation{};
      current.initial = from;
      current_id = f[0];
      open = true;
    } else if (f[0] != current_id) {
      throw ParseError(line_no, "id " + current_id + " has no CENSOR row");
    }
    const int at = current.jumps.empty() ? current.initial : current.jumps.back().to;
    if (from != at) throw ParseError(line_no, "from_state does not match the current state");
    const double last = current.jumps.empty() ? 0.0 : current.jumps.back().time;
    if (f[3] == "CENSOR") {
      if (!(t > 0.0) || t < last) throw ParseError(line_no, "censoring time before the last jump");
      current.censor = t;
      if (model.hazards.n_states() == states.size()) {
        bool exits = false;
        for (int k = 0; k < states.size(); ++k) exits = exits || model.hazards.allowed(at, k);
        current.absorbed = !exits;
      }
      data.obs.push_back(std::move(current));
      open = false;
      last_closed_id = current_id;
      ++closed_count;
      continue;
    }
    const int to = state(f[3], line_no);
    if (!(t > last) || !std::isfinite(t)) throw ParseError(line_no, "jump times must be finite and increasing");
    if (!states.transition_allowed(from, to)) throw ParseError(line_no, "transition not allowed");
    current.jumps.push_back({t, from, to});
  }
  if (open) throw ParseError(line_no, "id " + current_id + " has no CENSOR row");
  return data;
}

Dataset read_dataset(const std::string& path, const Model& model) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return read_dataset(in, model);
}

}  // namespace mscf

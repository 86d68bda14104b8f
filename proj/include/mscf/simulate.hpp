#pragma once

// Semi-Markov path simulation by thinning, entirely random right-censoring
// and the line-oriented dataset format.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mscf/hazard.hpp"
#include "mscf/model.hpp"

namespace mscf {

struct Jump {
  double time;
  int from;
  int to;

  friend bool operator==(const Jump&, const Jump&) = default;
};

/// Full trajectory on [0, simulated_to].
struct StatePath {
  int initial = 0;
  std::vector<Jump> jumps;
  /// Entry time into a state without outgoing hazards; +inf if none.
  double absorption = std::numeric_limits<double>::infinity();
  double simulated_to = 0.0;

  int state_at(double t) const;
};

/// A path observed up to its censoring time R. All jumps satisfy time <= R.
struct CensoredObservation {
  int initial = 0;
  std::vector<Jump> jumps;
  double censor = std::numeric_limits<double>::infinity();
  /// Absorption happened at or before R.
  bool absorbed = false;

  /// Z_t (right-continuous).
  int state_at(double t) const;
  /// Index into jumps of the first J0 -> J1 transition.
  std::optional<std::size_t> exercise(const StateSpace& states) const;

  friend bool operator==(const CensoredObservation&, const CensoredObservation&) = default;
};

struct Dataset {
  StateSpace states;
  std::vector<CensoredObservation> obs;

  std::size_t size() const { return obs.size(); }
  bool empty() const { return obs.empty(); }
};

/// Throws when a jump lies after R, times are not increasing, the chain of
/// states is broken or a J1 -> J0 transition occurs.
void validate(const Dataset& data);

/// Ogata thinning with piecewise bounds; destinations drawn proportionally
/// to the intensities at the accepted time.
StatePath simulate_path(const HazardSet& hazards, int z0, double horizon, std::uint64_t seed);

CensoredObservation censor(const StatePath& path, double r);

struct Censoring {
  enum class Kind { none, uniform };
  Kind kind = Kind::none;
  double lo = 0.0;
  double hi = 0.0;

  /// "none" or "unif:<lo>,<hi>".
  static Censoring parse(const std::string& text);
  static Censoring uniform(double lo, double hi);
  /// Time up to which paths must be simulated to be censored correctly.
  double simulation_horizon(double theta) const;
};

/// n censored paths. Path l uses seeds derived from (seed, path, l) and
/// (seed, censoring, l), so output does not depend on the thread count.
Dataset simulate_dataset(const Model& model, std::size_t n, std::uint64_t seed, const Censoring& censoring,
                         unsigned threads = 0);

/// Header "id,event_time,from_state,to_state"; one row per jump followed by
/// one "CENSOR" row at R (value "inf" when uncensored).
void write_dataset(std::ostream& os, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);
/// Labels are resolved against `model.states`; the absorbed flag is
/// recomputed from the model hazards.
Dataset read_dataset(std::istream& is, const Model& model);
Dataset read_dataset(const std::string& path, const Model& model);

}  // namespace mscf

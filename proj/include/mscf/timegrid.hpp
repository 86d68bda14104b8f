#pragma once

// Right-continuous piecewise-constant functions of one and two time
// arguments over sorted event grids, and Lebesgue-Stieltjes integration
// against them.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mscf/error.hpp"

namespace mscf {

using Index = Eigen::Index;

/// Sorted, strictly increasing event times starting at 0.
class EventGrid {
 public:
  EventGrid() : times_{0.0} {}

  explicit EventGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty() || times_.front() != 0.0) throw Error("EventGrid: first time must be 0");
    for (std::size_t i = 0; i < times_.size(); ++i) {
      if (!std::isfinite(times_[i])) throw Error("EventGrid: non-finite time");
      if (i > 0 && !(times_[i] > times_[i - 1])) throw Error("EventGrid: times must be strictly increasing");
    }
  }

  /// Grid made of 0, every point in (0, horizon] and the horizon itself.
  /// Duplicates collapse into one grid point.
  static EventGrid from_points(std::vector<double> points, double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error("EventGrid: horizon must be positive and finite");
    std::erase_if(points, [horizon](double t) { return !(t > 0.0) || t > horizon; });
    points.push_back(0.0);
    points.push_back(horizon);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return EventGrid(std::move(points));
  }

  Index size() const { return static_cast<Index>(times_.size()); }
  double operator[](Index m) const { return times_[static_cast<std::size_t>(m)]; }
  double horizon() const { return times_.back(); }
  std::span<const double> times() const { return times_; }

  /// Largest m with times[m] <= t. Times past the horizon map to the last point.
  Index index_at(double t) const {
    if (t < 0.0 || std::isnan(t)) throw Error("EventGrid: evaluation at negative time");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<Index>(it - times_.begin()) - 1;
  }

  /// Index of a time that must be a grid point.
  Index index_of(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.end() || *it != t) throw Error("EventGrid: time is not a grid point");
    return static_cast<Index>(it - times_.begin());
  }

  bool contains(double t) const { return std::binary_search(times_.begin(), times_.end(), t); }

  friend bool operator==(const EventGrid& a, const EventGrid& b) { return a.times_ == b.times_; }

 private:
  std::vector<double> times_;
};

using GridPtr = std::shared_ptr<const EventGrid>;

inline GridPtr make_grid(EventGrid grid) { return std::make_shared<const EventGrid>(std::move(grid)); }

inline bool same_grid(const GridPtr& a, const GridPtr& b) { return a == b || (a && b && *a == *b); }

/// Càdlàg step function: values[m] holds on [t_m, t_{m+1}).
template <typename Scalar = double>
class Step1D {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Step1D() = default;
  Step1D(GridPtr grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw Error("Step1D: null grid");
    if (values_.size() != grid_->size()) throw Error("Step1D: one value per grid point required");
  }

  static Step1D zeros(GridPtr grid) {
    const Index n = grid->size();
    return Step1D(std::move(grid), Vector::Zero(n));
  }

  const EventGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  Index size() const { return values_.size(); }

  Scalar operator()(double t) const { return values_[grid_->index_at(t)]; }
  Scalar at(Index m) const { return values_[m]; }
  /// Value on [t_{m-1}, t_m); at m = 0 the value at 0.
  Scalar left_limit(Index m) const { return values_[m == 0 ? 0 : m - 1]; }
  /// Jump at t_m; zero at m = 0.
  Scalar increment(Index m) const { return m == 0 ? Scalar(0) : values_[m] - values_[m - 1]; }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

 private:
  GridPtr grid_;
  Vector values_;
};

/// Step function of two arguments: values(m1, m2) holds on
/// [t_{m1}, t_{m1+1}) x [s_{m2}, s_{m2+1}).
template <typename Scalar = double>
class Step2D {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Step2D() = default;
  Step2D(GridPtr grid1, GridPtr grid2, Matrix values)
      : grid1_(std::move(grid1)), grid2_(std::move(grid2)), values_(std::move(values)) {
    if (!grid1_ || !grid2_) throw Error("Step2D: null grid");
    if (values_.rows() != grid1_->size() || values_.cols() != grid2_->size())
      throw Error("Step2D: value matrix does not match the product grid");
  }

  static Step2D zeros(GridPtr grid1, GridPtr grid2) {
    const Index r = grid1->size(), c = grid2->size();
    return Step2D(std::move(grid1), std::move(grid2), Matrix::Zero(r, c));
  }

  const EventGrid& grid1() const { return *grid1_; }
  const EventGrid& grid2() const { return *grid2_; }
  const GridPtr& grid1_ptr() const { return grid1_; }
  const GridPtr& grid2_ptr() const { return grid2_; }

  Scalar operator()(double t1, double t2) const { return values_(grid1_->index_at(t1), grid2_->index_at(t2)); }
  Scalar at(Index m1, Index m2) const { return values_(m1, m2); }

  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }

 private:
  GridPtr grid1_, grid2_;
  Matrix values_;
};

using Curve = Step1D<double>;
using Surface = Step2D<double>;

/// ∫_(0, t_M] integrand(s-) integrator(ds); exact for step functions.
template <typename Scalar>
Scalar stieltjes_integrate(const Step1D<Scalar>& integrand, const Step1D<Scalar>& integrator) {
  if (!same_grid(integrand.grid_ptr(), integrator.grid_ptr())) throw Error("stieltjes_integrate: grid mismatch");
  const auto& f = integrand.values();
  const auto& g = integrator.values();
  const Index n = f.size();
  if (n < 2) return Scalar(0);
  return f.head(n - 1).dot(g.tail(n - 1) - g.head(n - 1));
}

/// t_m -> ∫_(0, t_m] integrand(s-) integrator(ds).
template <typename Scalar>
Step1D<Scalar> stieltjes_cumulative(const Step1D<Scalar>& integrand, const Step1D<Scalar>& integrator) {
  if (!same_grid(integrand.grid_ptr(), integrator.grid_ptr())) throw Error("stieltjes_cumulative: grid mismatch");
  auto out = Step1D<Scalar>::zeros(integrand.grid_ptr());
  Scalar acc(0);
  for (Index m = 1; m < out.size(); ++m) {
    acc += integrand.at(m - 1) * integrator.increment(m);
    out.values()[m] = acc;
  }
  return out;
}

/// Rectangular increment over the cell (t_{m1}, t_{m1+1}] x (s_{m2}, s_{m2+1}].
template <typename Scalar>
Scalar increment_2d(const Step2D<Scalar>& f, Index m1, Index m2) {
  const auto& v = f.values();
  if (m1 < 0 || m2 < 0 || m1 + 1 >= v.rows() || m2 + 1 >= v.cols()) throw Error("increment_2d: cell out of range");
  return v(m1 + 1, m2 + 1) - v(m1 + 1, m2) - v(m1, m2 + 1) + v(m1, m2);
}

/// Shortest round-trip decimal representation; "inf" for +infinity.
inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <typename Scalar>
void write_csv(std::ostream& os, const Step1D<Scalar>& f, const std::string& value_name = "value") {
  os << "t," << value_name << '\n';
  for (Index m = 0; m < f.size(); ++m) os << format_double(f.grid()[m]) << ',' << format_double(f.at(m)) << '\n';
}

/// Long format: one (t1, t2, value) row per grid point.
template <typename Scalar>
void write_csv(std::ostream& os, const Step2D<Scalar>& f, const std::string& value_name = "value") {
  os << "t1,t2," << value_name << '\n';
  for (Index i = 0; i < f.values().rows(); ++i)
    for (Index j = 0; j < f.values().cols(); ++j)
      os << format_double(f.grid1()[i]) << ',' << format_double(f.grid2()[j]) << ',' << format_double(f.at(i, j))
         << '\n';
}

}  // namespace mscf

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "gtvtest/errors.hpp"

namespace gtvtest {

using Rational = boost::rational<std::int64_t>;

/// A sample location in R^d.
struct Point {
  std::vector<double> coords;

  Point() = default;
  Point(std::initializer_list<double> c) : coords(c) {}
  explicit Point(std::vector<double> c) : coords(std::move(c)) {}

  std::size_t dim() const { return coords.size(); }
  double operator[](std::size_t k) const { return coords[k]; }
  bool operator==(const Point&) const = default;
};

inline double squared_distance(const Point& p, const Point& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.coords.size(); ++k) {
    const double diff = p.coords[k] - q.coords[k];
    s += diff * diff;
  }
  return s;
}

enum class Label : std::uint8_t { X, Y };

/// Pooled two-sample point cloud. The X block comes first, then the Y block;
/// every vertex index used elsewhere refers to this order.
///
/// The assignment vector is kept both as exact rationals (a_i = 1/n1 or
/// -1/n2) and as the integer vector n1*n2*a, so a_int_i is n2 or -n1.
class TwoSample {
 public:
  TwoSample(std::vector<Point> x_points, std::vector<Point> y_points) {
    if (x_points.empty() || y_points.empty())
      throw EmptySample("both samples must be non-empty");
    n1_ = x_points.size();
    n2_ = y_points.size();
    dim_ = x_points.front().dim();
    if (dim_ == 0) throw DimensionMismatch("points must have d >= 1");
    points_.reserve(n1_ + n2_);
    for (auto& p : x_points) points_.push_back(std::move(p));
    for (auto& p : y_points) points_.push_back(std::move(p));
    for (const auto& p : points_) {
      if (p.dim() != dim_)
        throw DimensionMismatch("expected dimension " + std::to_string(dim_) +
                                ", got " + std::to_string(p.dim()));
      for (double c : p.coords)
        if (!std::isfinite(c)) throw Error("non-finite coordinate");
    }
  }

  std::size_t n() const { return points_.size(); }
  std::size_t n1() const { return n1_; }
  std::size_t n2() const { return n2_; }
  std::size_t dim() const { return dim_; }
  const std::vector<Point>& points() const { return points_; }
  const Point& point(std::size_t i) const { return points_[i]; }

  Label label(std::size_t i) const { return i < n1_ ? Label::X : Label::Y; }

  /// n1 * n2, the common denominator of the assignment vector.
  std::int64_t scale() const {
    return static_cast<std::int64_t>(n1_) * static_cast<std::int64_t>(n2_);
  }

  Rational a(std::size_t i) const {
    return i < n1_ ? Rational(1, static_cast<std::int64_t>(n1_))
                   : Rational(-1, static_cast<std::int64_t>(n2_));
  }

  std::int64_t a_int(std::size_t i) const {
    return i < n1_ ? static_cast<std::int64_t>(n2_)
                   : -static_cast<std::int64_t>(n1_);
  }

  std::vector<Rational> assignment() const {
    std::vector<Rational> out(n());
    for (std::size_t i = 0; i < n(); ++i) out[i] = a(i);
    return out;
  }

  std::vector<std::int64_t> assignment_int() const {
    std::vector<std::int64_t> out(n());
    for (std::size_t i = 0; i < n(); ++i) out[i] = a_int(i);
    return out;
  }

  /// Same points with the roles of X and Y exchanged.
  TwoSample swapped() const {
    std::vector<Point> xs(points_.begin() + static_cast<std::ptrdiff_t>(n1_),
                          points_.end());
    std::vector<Point> ys(points_.begin(),
                          points_.begin() + static_cast<std::ptrdiff_t>(n1_));
    return TwoSample(std::move(xs), std::move(ys));
  }

 private:
  std::vector<Point> points_;
  std::size_t n1_ = 0;
  std::size_t n2_ = 0;
  std::size_t dim_ = 0;
};

inline TwoSample build_two_sample(std::vector<Point> x_points,
                                  std::vector<Point> y_points) {
  return TwoSample(std::move(x_points), std::move(y_points));
}

/// Integer assignment weights for an arbitrary labelling: +n2 for X-labelled
/// vertices and -n1 for Y-labelled ones. Used by permutation calibration.
inline std::vector<std::int64_t> assignment_for_labels(
    std::span<const Label> labels) {
  std::int64_t n1 = 0, n2 = 0;
  for (Label l : labels) (l == Label::X ? n1 : n2)++;
  std::vector<std::int64_t> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    w[i] = labels[i] == Label::X ? n2 : -n1;
  return w;
}

}  // namespace gtvtest

#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace subcalc {

/* Point/direction in R^1 or R^2.  The ambient dimension is part of the value;
 * mixing dimensions in any binary operation throws. */
class Vec {
 public:
  Vec() : dim_(1), c_{0.0, 0.0} {}
  explicit Vec(double x) : dim_(1), c_{x, 0.0} {}
  Vec(double x, double y) : dim_(2), c_{x, y} {}

  static Vec zero(int dim) {
    if (dim == 1) return Vec(0.0);
    if (dim == 2) return Vec(0.0, 0.0);
    throw std::invalid_argument("Vec: dimension must be 1 or 2");
  }

  int dim() const { return dim_; }
  double x() const { return c_[0]; }
  double y() const {
    if (dim_ != 2) throw std::logic_error("Vec: y() on a 1D vector");
    return c_[1];
  }
  double operator[](int i) const { return c_[i]; }

  Vec operator+(const Vec& o) const {
    check(o);
    return make(dim_, c_[0] + o.c_[0], c_[1] + o.c_[1]);
  }
  Vec operator-(const Vec& o) const {
    check(o);
    return make(dim_, c_[0] - o.c_[0], c_[1] - o.c_[1]);
  }
  Vec operator*(double s) const { return make(dim_, s * c_[0], s * c_[1]); }
  Vec operator-() const { return make(dim_, -c_[0], -c_[1]); }

  double dot(const Vec& o) const {
    check(o);
    return c_[0] * o.c_[0] + c_[1] * o.c_[1];
  }
  double norm() const { return std::sqrt(dot(*this)); }

  Vec normalized() const {
    double n = norm();
    if (n == 0.0) throw std::invalid_argument("Vec: normalizing zero vector");
    return *this * (1.0 / n);
  }

  /* 2D only: rotate by +90 degrees. */
  Vec perp() const {
    if (dim_ != 2) throw std::logic_error("Vec: perp() on a 1D vector");
    return Vec(-c_[1], c_[0]);
  }

  /* 2D cross product z-component; 0 for collinear. */
  double cross(const Vec& o) const {
    check(o);
    if (dim_ != 2) throw std::logic_error("Vec: cross() on 1D vectors");
    return c_[0] * o.c_[1] - c_[1] * o.c_[0];
  }

  std::string str() const {
    std::ostringstream os;
    if (dim_ == 1) {
      os << c_[0];
    } else {
      os << "(" << c_[0] << ", " << c_[1] << ")";
    }
    return os.str();
  }

 private:
  static Vec make(int dim, double x, double y) {
    Vec v;
    v.dim_ = dim;
    v.c_ = {x, y};
    return v;
  }
  void check(const Vec& o) const {
    if (dim_ != o.dim_) throw std::invalid_argument("Vec: dimension mismatch");
  }

  int dim_;
  std::array<double, 2> c_;
};

inline Vec operator*(double s, const Vec& v) { return v * s; }

inline std::ostream& operator<<(std::ostream& os, const Vec& v) { return os << v.str(); }

} // namespace subcalc

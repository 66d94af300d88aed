#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace subcalc {

/* Extended reals in [-inf, +inf] with the conventions used throughout:
 * 0 * (+-inf) = 0 and (+inf) + (-inf) = +inf.  Plain IEEE doubles give NaN
 * for both, so all arithmetic funnels through this wrapper. */
class ExtReal {
 public:
  ExtReal() : v_(0.0) {}
  ExtReal(double v) : v_(v) {
    if (std::isnan(v)) throw std::invalid_argument("ExtReal: NaN");
  }

  static ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
  static ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

  double value() const { return v_; }
  bool is_finite() const { return std::isfinite(v_); }
  bool is_pos_inf() const { return std::isinf(v_) && v_ > 0; }
  bool is_neg_inf() const { return std::isinf(v_) && v_ < 0; }

  /* "upper" addition: +inf wins over -inf */
  ExtReal operator+(ExtReal o) const {
    if (is_pos_inf() || o.is_pos_inf()) return pos_inf();
    if (is_neg_inf() || o.is_neg_inf()) return neg_inf();
    return ExtReal(v_ + o.v_);
  }
  ExtReal operator-() const { return ExtReal(-v_); }
  ExtReal operator-(ExtReal o) const { return *this + (-o); }

  ExtReal operator*(ExtReal o) const {
    if (v_ == 0.0 || o.v_ == 0.0) return ExtReal(0.0);
    if (std::isinf(v_) || std::isinf(o.v_)) {
      double sign = (v_ > 0 ? 1.0 : -1.0) * (o.v_ > 0 ? 1.0 : -1.0);
      return sign > 0 ? pos_inf() : neg_inf();
    }
    return ExtReal(v_ * o.v_);
  }

  bool operator<(ExtReal o) const { return v_ < o.v_; }
  bool operator<=(ExtReal o) const { return v_ <= o.v_; }
  bool operator>(ExtReal o) const { return v_ > o.v_; }
  bool operator>=(ExtReal o) const { return v_ >= o.v_; }
  bool operator==(ExtReal o) const { return v_ == o.v_; }
  bool operator!=(ExtReal o) const { return v_ != o.v_; }

  std::string str() const {
    if (is_pos_inf()) return "+inf";
    if (is_neg_inf()) return "-inf";
    std::ostringstream os;
    os << v_;
    return os.str();
  }

 private:
  double v_;
};

inline std::ostream& operator<<(std::ostream& os, ExtReal x) { return os << x.str(); }

} // namespace subcalc

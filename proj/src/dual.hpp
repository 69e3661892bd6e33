#pragma once

// Forward-mode dual numbers with four partials, used for the gradients of the
// IoU-family baseline losses.

#include <array>
#include <cmath>

namespace objectbox::detail {

struct Dual {
  double v = 0.0;
  std::array<double, 4> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constant promotion
  static Dual variable(double value, int index) {
    Dual x(value);
    x.d[index] = 1.0;
    return x;
  }
};

inline Dual operator+(Dual a, const Dual& b) {
  a.v += b.v;
  for (int i = 0; i < 4; ++i) a.d[i] += b.d[i];
  return a;
}

inline Dual operator-(Dual a, const Dual& b) {
  a.v -= b.v;
  for (int i = 0; i < 4; ++i) a.d[i] -= b.d[i];
  return a;
}

inline Dual operator-(Dual a) {
  a.v = -a.v;
  for (auto& x : a.d) x = -x;
  return a;
}

inline Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}

inline Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  const double inv2 = 1.0 / (b.v * b.v);
  for (int i = 0; i < 4; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
  return r;
}

inline Dual atan(const Dual& a) {
  Dual r(std::atan(a.v));
  const double k = 1.0 / (1.0 + a.v * a.v);
  for (int i = 0; i < 4; ++i) r.d[i] = k * a.d[i];
  return r;
}

inline double value(const Dual& a) { return a.v; }
inline double value(double a) { return a; }

}  // namespace objectbox::detail

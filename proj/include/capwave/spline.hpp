/// @file spline.hpp
/// @brief Cubic spline interpolation and 1D quadrature helpers used by the
///        surface/bottom curve machinery.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace capwave {

struct geometry_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cubic spline through (x_i, y_i) with not-a-knot end conditions.
/// Not-a-knot keeps the second derivative meaningful at the end nodes,
/// which the contact-corner curvature extraction relies on.
class CubicSpline {
public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n)
      throw geometry_error("CubicSpline: need >= 3 nodes");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw geometry_error("CubicSpline: abscissae must be strictly increasing");
    build();
  }

  double xmin() const { return x_.front(); }
  double xmax() const { return x_.back(); }
  const std::vector<double>& nodes_x() const { return x_; }
  const std::vector<double>& nodes_y() const { return y_; }

  double value(double x) const {
    const std::size_t i = segment(x);
    const double t = x - x_[i];
    return y_[i] + t * (b_[i] + t * (c_[i] + t * d_[i]));
  }
  double deriv(double x) const {
    const std::size_t i = segment(x);
    const double t = x - x_[i];
    return b_[i] + t * (2.0 * c_[i] + 3.0 * t * d_[i]);
  }
  double deriv2(double x) const {
    const std::size_t i = segment(x);
    const double t = x - x_[i];
    return 2.0 * c_[i] + 6.0 * t * d_[i];
  }
  double deriv3(double x) const {
    const std::size_t i = segment(x);
    return 6.0 * d_[i];
  }

private:
  std::size_t segment(double x) const {
    // clamped lookup; evaluation slightly outside the range extrapolates the
    // end cubic, callers guard the domain themselves
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
  }

  void build() {
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];
    std::vector<double> m(n, 0.0);  // m_i = y''(x_i)/2

    if (n == 3) {
      // single parabola through the three points
      const double d0 = (y_[1] - y_[0]) / h[0], d1 = (y_[2] - y_[1]) / h[1];
      const double m_all = (d1 - d0) / (h[0] + h[1]);
      m[0] = m[1] = m[2] = m_all;
    } else {
      // not-a-knot: eliminate m_0 and m_{n-1} via the third-derivative
      // continuity conditions, leaving a diagonally dominant tridiagonal
      // system for m_1 .. m_{n-2}
      const std::size_t k = n - 2;  // number of interior unknowns
      std::vector<double> a(k, 0.0), b(k, 0.0), c(k, 0.0), r(k, 0.0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t j = i - 1;
        a[j] = h[i - 1];
        b[j] = 2.0 * (h[i - 1] + h[i]);
        c[j] = h[i];
        r[j] = 3.0 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
      }
      // substitute m0 = ((h0+h1)m1 - h0 m2)/h1 into the first row
      b[0] += a[0] * (h[0] + h[1]) / h[1];
      c[0] -= a[0] * h[0] / h[1];
      a[0] = 0.0;
      // substitute m_{n-1} = ((h_{n-2}+h_{n-3})m_{n-2} - h_{n-2}m_{n-3})/h_{n-3}
      const double hl = h[n - 2], hp = h[n - 3];
      b[k - 1] += c[k - 1] * (hl + hp) / hp;
      a[k - 1] -= c[k - 1] * hl / hp;
      c[k - 1] = 0.0;

      // Thomas sweep
      std::vector<double> cp(k, 0.0), rp(k, 0.0);
      cp[0] = c[0] / b[0];
      rp[0] = r[0] / b[0];
      for (std::size_t i = 1; i < k; ++i) {
        const double den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        rp[i] = (r[i] - a[i] * rp[i - 1]) / den;
      }
      std::vector<double> mi(k);
      mi[k - 1] = rp[k - 1];
      for (std::size_t i = k - 1; i-- > 0;) mi[i] = rp[i] - cp[i] * mi[i + 1];
      for (std::size_t i = 0; i < k; ++i) m[i + 1] = mi[i];
      m[0] = ((h[0] + h[1]) * m[1] - h[0] * m[2]) / h[1];
      m[n - 1] = ((hl + hp) * m[n - 2] - hl * m[n - 3]) / hp;
    }

    b_.resize(n - 1);
    c_.resize(n - 1);
    d_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      c_[i] = m[i];
      d_[i] = (m[i + 1] - m[i]) / (3.0 * h[i]);
      b_[i] = (y_[i + 1] - y_[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 3.0;
    }
  }

  std::vector<double> x_, y_;
  std::vector<double> b_, c_, d_;  // per-segment cubic coefficients
};

/// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-12, int max_depth = 40) {
  struct Impl {
    const std::function<double(double)>& f;
    int max_depth;
    double recurse(double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth >= max_depth || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
      return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
             recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Impl{f, max_depth}.recurse(a, b, fa, fm, fb, whole, tol, 0);
}

/// Gauss-Legendre nodes/weights on [-1,1] for n in {2,3,4,5}.
inline const std::vector<std::pair<double, double>>& gauss_legendre(int n) {
  static const std::vector<std::pair<double, double>> g2 = {
      {-0.5773502691896257, 1.0}, {0.5773502691896257, 1.0}};
  static const std::vector<std::pair<double, double>> g3 = {
      {-0.7745966692414834, 5.0 / 9.0},
      {0.0, 8.0 / 9.0},
      {0.7745966692414834, 5.0 / 9.0}};
  static const std::vector<std::pair<double, double>> g4 = {
      {-0.8611363115940526, 0.3478548451374538},
      {-0.3399810435848563, 0.6521451548625461},
      {0.3399810435848563, 0.6521451548625461},
      {0.8611363115940526, 0.3478548451374538}};
  static const std::vector<std::pair<double, double>> g5 = {
      {-0.9061798459386640, 0.2369268850561891},
      {-0.5384693101056831, 0.4786286704993665},
      {0.0, 0.5688888888888889},
      {0.5384693101056831, 0.4786286704993665},
      {0.9061798459386640, 0.2369268850561891}};
  switch (n) {
    case 2: return g2;
    case 3: return g3;
    case 4: return g4;
    default: return g5;
  }
}

}  // namespace capwave

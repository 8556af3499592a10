/// @file geometry.hpp
/// @brief Moving corner domain: bottom profile, surface curve, frames,
///        curvature and the contact state.
///
/// Orientation conventions (fixed once, everything downstream depends on
/// them): on the free surface the unit tangent tau_t points toward the
/// contact point (decreasing x) and n_t points out of the fluid (up); on the
/// bottom tau_b points away from the contact point (increasing arclength)
/// and n_b points out of the fluid (down).  With these,
///   cos(omega) = -tau_t . tau_b,   v_c = -v . tau_b at the contact point,
/// and the graph curvature is kappa = -eta'' / (1+eta'^2)^{3/2}.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "capwave/spline.hpp"

namespace capwave {

using Vec2 = std::array<double, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }
inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rigid bottom: inclined line of slope angle alpha for x <= x0, horizontal
/// z = -h for x >= x1, C2 quintic blend on [x0, x1].  The blend endpoints
/// carry zero second derivative so b is C2 everywhere; the line elevation is
/// fixed by the monotonicity of the blend (drop equals slope*width).
class BottomProfile {
public:
  BottomProfile() = default;
  BottomProfile(double slope_angle, double blend_start, double blend_end,
                double far_depth)
      : alpha_(slope_angle), x0_(blend_start), x1_(blend_end), h_(far_depth) {
    if (!(alpha_ > 0.0 && alpha_ < 1.2))
      throw config_error("BottomProfile: slope angle out of range");
    if (!(x1_ > x0_)) throw config_error("BottomProfile: blend interval empty");
    if (!(h_ > 0.0)) throw config_error("BottomProfile: far depth must be positive");
    m_ = std::tan(alpha_);
    v0_ = -h_ + m_ * (x1_ - x0_);  // line value at x0; makes the blend monotone
  }

  double slope_angle() const { return alpha_; }
  double blend_start() const { return x0_; }
  double blend_end() const { return x1_; }
  double far_depth() const { return h_; }

  double value(double x) const {
    if (x <= x0_) return v0_ - m_ * (x - x0_);
    if (x >= x1_) return -h_;
    const double w = x1_ - x0_, t = (x - x0_) / w;
    const double D = v0_ + h_;
    return -h_ + D * blendA(t) - (m_ * w) * blendB(t);
  }
  double deriv(double x) const {
    if (x <= x0_) return -m_;
    if (x >= x1_) return 0.0;
    const double w = x1_ - x0_, t = (x - x0_) / w;
    const double D = v0_ + h_;
    return (D * blendAp(t) - (m_ * w) * blendBp(t)) / w;
  }
  double deriv2(double x) const {
    if (x <= x0_ || x >= x1_) return 0.0;
    const double w = x1_ - x0_, t = (x - x0_) / w;
    const double D = v0_ + h_;
    return (D * blendApp(t) - (m_ * w) * blendBpp(t)) / (w * w);
  }

  /// Unit tangent pointing away from the contact point (increasing x).
  Vec2 tangent(double x) const {
    const double bp = deriv(x), w = std::sqrt(1.0 + bp * bp);
    return {1.0 / w, bp / w};
  }
  /// Unit outward normal (out of the fluid, downward).
  Vec2 normal(double x) const {
    const double bp = deriv(x), w = std::sqrt(1.0 + bp * bp);
    return {bp / w, -1.0 / w};
  }
  /// d(tangent)/ds and d(normal)/ds along arclength; zero on the straight
  /// pieces, nonzero only inside the blend.
  Vec2 dtangent_ds(double x) const {
    const double bp = deriv(x), bpp = deriv2(x);
    const double w2 = 1.0 + bp * bp;
    const double curv = bpp / (w2 * std::sqrt(w2));  // graph curvature of b
    Vec2 n = normal(x);
    return {curv * (-n[0]), curv * (-n[1])};  // T' = k * (inward normal)
  }
  Vec2 dnormal_ds(double x) const {
    const double bp = deriv(x), bpp = deriv2(x);
    const double w2 = 1.0 + bp * bp;
    const double curv = bpp / (w2 * std::sqrt(w2));
    Vec2 tg = tangent(x);
    return {curv * tg[0], curv * tg[1]};  // N' = -k * T with N = -inward
  }

private:
  // quintic blend bases: A carries the value drop, B the slope release;
  // both have vanishing slope+curvature where required for a C2 join
  static double blendA(double t) { return 1.0 - (10 * t * t * t - 15 * t * t * t * t + 6 * t * t * t * t * t); }
  static double blendAp(double t) { return -(30 * t * t - 60 * t * t * t + 30 * t * t * t * t); }
  static double blendApp(double t) { return -(60 * t - 180 * t * t + 120 * t * t * t); }
  static double blendB(double t) { return t - 6 * t * t * t + 8 * t * t * t * t - 3 * t * t * t * t * t; }
  static double blendBp(double t) { return 1 - 18 * t * t + 32 * t * t * t - 15 * t * t * t * t; }
  static double blendBpp(double t) { return -36 * t + 96 * t * t - 60 * t * t * t; }

  double alpha_ = 0.0, x0_ = 0.0, x1_ = 0.0, h_ = 0.0;
  double m_ = 0.0, v0_ = 0.0;
};

/// Free surface stored as a graph z = eta(x) through marker points; the
/// first marker sits at the contact abscissa.
class SurfaceCurve {
public:
  SurfaceCurve() = default;
  SurfaceCurve(std::vector<double> xs, std::vector<double> etas)
      : spline_(std::move(xs), std::move(etas)) {}

  double contact_abscissa() const { return spline_.xmin(); }
  double wall_abscissa() const { return spline_.xmax(); }
  std::size_t n_markers() const { return spline_.nodes_x().size(); }
  const std::vector<double>& marker_x() const { return spline_.nodes_x(); }
  const std::vector<double>& marker_eta() const { return spline_.nodes_y(); }

  double value(double x) const { return spline_.value(x); }
  double deriv(double x) const { return spline_.deriv(x); }
  double deriv2(double x) const { return spline_.deriv2(x); }

  /// Unit tangent pointing toward the contact point (decreasing x).
  Vec2 tangent(double x) const {
    const double ep = deriv(x), w = std::sqrt(1.0 + ep * ep);
    return {-1.0 / w, -ep / w};
  }
  /// Unit outward normal (out of the fluid, up).
  Vec2 normal(double x) const {
    const double ep = deriv(x), w = std::sqrt(1.0 + ep * ep);
    return {-ep / w, 1.0 / w};
  }

  /// Arclength from the contact point to abscissa x.
  double arclength(double x) const {
    return adaptive_simpson(
        [this](double t) { return std::sqrt(1.0 + deriv(t) * deriv(t)); },
        contact_abscissa(), x, 1e-13);
  }
  double total_arclength() const { return arclength(wall_abscissa()); }

  /// Inverse arclength: abscissa at arclength s from the contact point.
  double abscissa_at_arclength(double s) const {
    const double a = contact_abscissa(), b = wall_abscissa();
    if (s <= 0.0) return a;
    double x = std::min(b, a + s);  // initial guess: arclength >= dx
    for (int it = 0; it < 60; ++it) {
      const double f = arclength(x) - s;
      const double fp = std::sqrt(1.0 + deriv(x) * deriv(x));
      double step = f / fp;
      x = std::clamp(x - step, a, b);
      if (std::abs(step) < 1e-14 * std::max(1.0, b - a)) break;
    }
    return x;
  }

private:
  CubicSpline spline_;
};

/// Signed curvature of the free surface under the frame convention above:
/// a concave-down crest (fluid below) has kappa > 0.
inline double curvature(const SurfaceCurve& s, double x) {
  if (x < s.contact_abscissa() - 1e-12 || x > s.wall_abscissa() + 1e-12)
    throw geometry_error("curvature: abscissa outside surface");
  const double ep = s.deriv(x), epp = s.deriv2(x);
  const double w = 1.0 + ep * ep;
  return -epp / (w * std::sqrt(w));
}

/// In 2D the second fundamental form acts on the tangent line as
/// Pi(tau) = kappa * tau, so it is represented by the scalar kappa.
inline double second_fundamental_form(const SurfaceCurve& s, double x) {
  return curvature(s, x);
}

struct PhysicsParams {
  double sigma = 1.0;    // surface tension coefficient
  double gravity = 1.0;  // scalar gravity, acts along -e_z
  double beta_c = 1.0;   // contact-line friction coefficient
  double omega_s = M_PI / 12.0;  // static contact angle
  double gamma_jump() const { return sigma * std::cos(omega_s); }
  void validate() const {
    if (!(sigma > 0.0)) throw config_error("physics: sigma must be > 0");
    if (!(beta_c > 0.0)) throw config_error("physics: beta_c must be > 0");
    if (!(omega_s > 0.0 && omega_s < M_PI / 6.0))
      throw config_error("physics: omega_s must lie in (0, pi/6)");
  }
};

/// Contact-line law: beta_c * v_c = sigma (cos(omega_s) - cos(omega)),
/// v_c > 0 means the corner advances up-beach.
inline double contact_speed(double omega, const PhysicsParams& p) {
  if (!(p.sigma > 0.0) || !(p.beta_c > 0.0))
    throw config_error("contact_speed: sigma and beta_c must be positive");
  if (!(omega > 0.0 && omega < M_PI))
    throw geometry_error("contact_speed: omega outside (0, pi)");
  return p.sigma * (std::cos(p.omega_s) - std::cos(omega)) / p.beta_c;
}

struct ContactState {
  double abscissa = 0.0;  // c
  Vec2 point{0.0, 0.0};   // X_c = (c, b(c))
  double omega = 0.0;     // contact angle
  double v_c = 0.0;       // signed contact speed from the law
};

enum class DomainKind {
  beach,  // contact corner at the left end, truncation wall at the right
  strip   // rectangular-type test domain, vertical walls on both sides
};

enum class BoundaryTag { top, bottom, wall };

/// The moving fluid domain Omega_t between the surface and the bottom,
/// truncated at x = L.  Immutable after construction.
class CornerDomain {
public:
  CornerDomain(SurfaceCurve surface, BottomProfile bottom, double wall_abscissa,
               DomainKind kind = DomainKind::beach, double h_max = 1e3,
               double omega_min = 1e-3)
      : surface_(std::move(surface)), bottom_(std::move(bottom)),
        wall_(wall_abscissa), kind_(kind) {
    if (std::abs(surface_.wall_abscissa() - wall_) > 1e-9)
      throw geometry_error("CornerDomain: last marker must sit on the wall");
    if (kind_ == DomainKind::beach) {
      const double c = surface_.contact_abscissa();
      if (!(c < wall_)) throw geometry_error("CornerDomain: contact right of wall");
      const double gap = surface_.value(c) - bottom_.value(c);
      if (std::abs(gap) > 1e-10)
        throw geometry_error("CornerDomain: surface does not attach to the bottom");
      contact_.abscissa = c;
      contact_.point = {c, bottom_.value(c)};
      contact_.omega = contact_angle_at(c);
      if (!(contact_.omega > omega_min && contact_.omega < M_PI / 6.0))
        throw geometry_error("CornerDomain: contact angle guard breached");
      // strict positivity of depth away from the corner
      const double eps_geom = 1e-6 * (wall_ - c);
      for (int i = 1; i <= 64; ++i) {
        const double x = c + eps_geom + (wall_ - c - eps_geom) * i / 64.0;
        if (!(surface_.value(x) - bottom_.value(x) > 0.0))
          throw geometry_error("CornerDomain: surface touches bottom away from corner");
        if (surface_.value(x) - bottom_.value(x) > h_max)
          throw geometry_error("CornerDomain: depth exceeds h_max");
      }
    } else {
      for (int i = 0; i <= 64; ++i) {
        const double x = left() + (wall_ - left()) * i / 64.0;
        if (!(surface_.value(x) - bottom_.value(x) > 0.0))
          throw geometry_error("CornerDomain: empty strip");
      }
    }
  }

  const SurfaceCurve& surface() const { return surface_; }
  const BottomProfile& bottom() const { return bottom_; }
  double wall_abscissa() const { return wall_; }
  DomainKind kind() const { return kind_; }
  bool has_corner() const { return kind_ == DomainKind::beach; }
  double left() const { return surface_.contact_abscissa(); }
  const ContactState& contact() const {
    if (!has_corner()) throw geometry_error("CornerDomain: strip has no contact");
    return contact_;
  }

  /// Contact state with the law evaluated for the supplied physics.
  ContactState contact(const PhysicsParams& p) const {
    ContactState cs = contact();
    cs.v_c = contact_speed(cs.omega, p);
    return cs;
  }

  double depth(double x) const { return surface_.value(x) - bottom_.value(x); }

  /// Fluid area by quadrature of (eta - b).
  double area() const {
    return adaptive_simpson([this](double x) { return depth(x); }, left(), wall_,
                            1e-12);
  }

private:
  double contact_angle_at(double c) const {
    const Vec2 tt = surface_.tangent(c);
    const Vec2 tb = bottom_.tangent(c);
    double ct = -dot(tt, tb);
    ct = std::clamp(ct, -1.0, 1.0);
    return std::acos(ct);
  }

  SurfaceCurve surface_;
  BottomProfile bottom_;
  double wall_ = 0.0;
  DomainKind kind_ = DomainKind::beach;
  ContactState contact_;
};

/// Contact angle omega = arccos(-tau_t . tau_b) at the corner.
inline double contact_angle(const CornerDomain& d) { return d.contact().omega; }

/// Boundary frame lookup by tag and abscissa (curves are graphs, so the
/// abscissa parametrizes each boundary segment).
inline std::pair<Vec2, Vec2> frames(const CornerDomain& d, BoundaryTag tag,
                                    double x) {
  switch (tag) {
    case BoundaryTag::top:
      return {d.surface().tangent(x), d.surface().normal(x)};
    case BoundaryTag::bottom:
      return {d.bottom().tangent(x), d.bottom().normal(x)};
    case BoundaryTag::wall:
      // right wall: tangent up the wall, outward normal +x
      return {Vec2{0.0, 1.0}, Vec2{1.0, 0.0}};
  }
  throw geometry_error("frames: invalid boundary tag");
}

/// Redistribute surface markers equispaced in arclength between the contact
/// point and the wall; the spline is re-fit through the new markers.
inline SurfaceCurve arclength_resample(const SurfaceCurve& s, std::size_t n_markers) {
  if (n_markers < 8) throw geometry_error("arclength_resample: need >= 8 markers");
  const double total = s.total_arclength();
  std::vector<double> xs(n_markers), etas(n_markers);
  xs.front() = s.contact_abscissa();
  xs.back() = s.wall_abscissa();
  for (std::size_t j = 1; j + 1 < n_markers; ++j) {
    const double sj = total * static_cast<double>(j) / (n_markers - 1);
    xs[j] = s.abscissa_at_arclength(sj);
    if (!(xs[j] > xs[j - 1]))
      throw geometry_error("arclength_resample: self-intersecting spline");
  }
  for (std::size_t j = 0; j < n_markers; ++j) etas[j] = s.value(xs[j]);
  return SurfaceCurve(std::move(xs), std::move(etas));
}

}  // namespace capwave

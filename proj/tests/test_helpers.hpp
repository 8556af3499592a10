/// Shared fixtures for the test suite: canonical strip and beach domains.
#pragma once

#include <cmath>
#include <vector>

#include "capwave/geometry.hpp"

namespace capwave::test {

/// Flat strip [0, len] x [-depth, 0] as a wall-bounded test domain.
inline CornerDomain flat_strip(double len = 2.0 * M_PI, double depth = 1.0,
                               int n_markers = 65) {
  std::vector<double> xs(n_markers), etas(n_markers, 0.0);
  for (int i = 0; i < n_markers; ++i) xs[i] = len * i / (n_markers - 1);
  // bottom: horizontal at -depth (blend far outside the window)
  BottomProfile bottom(0.3, -1e6, -1e6 + 1.0, depth);
  return CornerDomain(SurfaceCurve(xs, etas), bottom, len, DomainKind::strip);
}

/// Strip with a cosine surface eta = amp*cos(k x).
inline CornerDomain cosine_strip(double amp, double k, double len = 2.0 * M_PI,
                                 double depth = 1.0, int n_markers = 129) {
  std::vector<double> xs(n_markers), etas(n_markers);
  for (int i = 0; i < n_markers; ++i) {
    xs[i] = len * i / (n_markers - 1);
    etas[i] = amp * std::cos(k * xs[i]);
  }
  BottomProfile bottom(0.3, -1e6, -1e6 + 1.0, depth);
  return CornerDomain(SurfaceCurve(xs, etas), bottom, len, DomainKind::strip);
}

/// Beach domain with a flat surface z = 0 meeting the inclined bottom; the
/// contact angle equals the beach slope angle.
inline CornerDomain flat_beach(double alpha, double wall_L = 8.0,
                               double far_depth = 0.6, int n_markers = 65,
                               double blend0 = 2.0, double blend1 = 3.0) {
  BottomProfile bottom(alpha, blend0, blend1, far_depth);
  // contact where the line b(x) crosses z=0
  const double m = std::tan(alpha);
  const double v0 = -far_depth + m * (blend1 - blend0);
  const double c = blend0 + v0 / m;
  std::vector<double> xs(n_markers), etas(n_markers, 0.0);
  for (int i = 0; i < n_markers; ++i)
    xs[i] = c + (wall_L - c) * i / (n_markers - 1);
  return CornerDomain(SurfaceCurve(xs, etas), bottom, wall_L, DomainKind::beach);
}

}  // namespace capwave::test

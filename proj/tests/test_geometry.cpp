#include <catch2/catch_amalgamated.hpp>

#include "capwave/geometry.hpp"
#include "test_helpers.hpp"

using namespace capwave;
using capwave::test::flat_beach;

TEST_CASE("bottom profile is C2 across the blend and monotone") {
  BottomProfile b(M_PI / 10, 1.0, 2.5, 0.8);
  const double eps = 1e-7;
  for (double xj : {1.0, 2.5}) {
    CHECK(b.value(xj - eps) == Catch::Approx(b.value(xj + eps)).margin(1e-12));
    CHECK(b.deriv(xj - eps) == Catch::Approx(b.deriv(xj + eps)).margin(1e-5));
    CHECK(b.deriv2(xj - eps) == Catch::Approx(b.deriv2(xj + eps)).margin(1e-4));
  }
  // second derivative vanishes exactly at the joins
  CHECK(std::abs(b.deriv2(1.0 + 1e-12)) < 1e-8);
  CHECK(std::abs(b.deriv2(2.5 - 1e-12)) < 1e-8);
  for (int i = 0; i < 200; ++i) {
    const double x = 1.0 + 1.5 * i / 199.0;
    CHECK(b.deriv(x) <= 1e-12);
  }
  CHECK(b.value(5.0) == Catch::Approx(-0.8));
  CHECK(b.deriv(5.0) == 0.0);
  // finite-difference check of the slope on the line part
  CHECK(b.deriv(0.5) == Catch::Approx(-std::tan(M_PI / 10)).epsilon(1e-12));
}

TEST_CASE("curvature closed forms") {
  SECTION("flat surface has zero curvature everywhere") {
    std::vector<double> xs(33), etas(33, 0.7);
    for (int i = 0; i < 33; ++i) xs[i] = i / 32.0 * 5.0;
    SurfaceCurve s(xs, etas);
    for (double x : {0.0, 1.3, 2.7, 5.0}) CHECK(curvature(s, x) == Catch::Approx(0.0).margin(1e-13));
  }
  SECTION("cosine surface: kappa(0) = A k^2") {
    const double A = 0.3, k = 2.0;
    std::vector<double> xs(401), etas(401);
    for (int i = 0; i < 401; ++i) {
      xs[i] = -1.0 + 2.0 * i / 400.0;
      etas[i] = A * std::cos(k * xs[i]);
    }
    SurfaceCurve s(xs, etas);
    CHECK(curvature(s, 0.0) == Catch::Approx(A * k * k).epsilon(1e-5));
  }
  SECTION("semicircular cap of radius R: kappa = 1/R on the arc") {
    const double R = 2.0;
    std::vector<double> xs(801), etas(801);
    for (int i = 0; i < 801; ++i) {
      xs[i] = -0.6 * R + 1.2 * R * i / 800.0;  // central part of the cap
      etas[i] = std::sqrt(R * R - xs[i] * xs[i]);
    }
    SurfaceCurve s(xs, etas);
    for (double x : {-0.5 * R, 0.0, 0.4 * R})
      CHECK(curvature(s, x) == Catch::Approx(1.0 / R).epsilon(1e-6));
  }
  SECTION("translation invariance is exact") {
    std::vector<double> xs(101), e1(101), e2(101);
    for (int i = 0; i < 101; ++i) {
      xs[i] = i / 100.0 * 3.0;
      e1[i] = 0.1 * std::sin(2 * xs[i]);
      e2[i] = e1[i] + 4.2;
    }
    SurfaceCurve s1(xs, e1), s2(xs, e2);
    for (double x : {0.3, 1.1, 2.9})
      CHECK(curvature(s1, x) == Catch::Approx(curvature(s2, x)).margin(1e-14));
  }
  SECTION("second fundamental form is kappa, |Pi|^2 = kappa^2") {
    std::vector<double> xs(101), etas(101);
    for (int i = 0; i < 101; ++i) {
      xs[i] = i / 100.0 * 3.0;
      etas[i] = 0.2 * std::cos(xs[i]);
    }
    SurfaceCurve s(xs, etas);
    const double pi2 = second_fundamental_form(s, 1.0);
    CHECK(pi2 == Catch::Approx(curvature(s, 1.0)));
    CHECK(pi2 * pi2 == Catch::Approx(std::pow(curvature(s, 1.0), 2)));
  }
  SECTION("out-of-domain abscissa is a domain error") {
    std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
    std::vector<double> etas{0.0, 0.0, 0.0, 0.0};
    SurfaceCurve s(xs, etas);
    CHECK_THROWS_AS(curvature(s, -0.5), geometry_error);
  }
}

TEST_CASE("frames: orientation conventions and orthonormality") {
  auto d = flat_beach(M_PI / 12);
  SECTION("flat surface frame") {
    auto [tt, nt] = frames(d, BoundaryTag::top, 0.5 * (d.left() + d.wall_abscissa()));
    CHECK(tt[0] == Catch::Approx(-1.0).margin(1e-12));
    CHECK(tt[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(nt[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(nt[1] == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("horizontal bottom frame") {
    auto [tb, nb] = frames(d, BoundaryTag::bottom, 6.0);  // past the blend
    CHECK(tb[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(tb[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(nb[1] == Catch::Approx(-1.0).margin(1e-12));
  }
  SECTION("beach segment frame matches the gradient of (z - b)") {
    const double alpha = M_PI / 12;
    auto [tb, nb] = frames(d, BoundaryTag::bottom, d.left() + 0.05);
    CHECK(tb[0] == Catch::Approx(std::cos(alpha)).margin(1e-12));
    CHECK(tb[1] == Catch::Approx(-std::sin(alpha)).margin(1e-12));
    const double bp = d.bottom().deriv(d.left() + 0.05);
    Vec2 grad{-bp, 1.0};
    const double gn = norm(grad);
    CHECK(std::abs(nb[0] + grad[0] / gn) < 1e-12);
    CHECK(std::abs(nb[1] + grad[1] / gn) < 1e-12);
  }
  SECTION("orthonormality at sampled boundary points") {
    for (int i = 0; i <= 32; ++i) {
      const double x = d.left() + (d.wall_abscissa() - d.left()) * i / 32.0;
      for (auto tag : {BoundaryTag::top, BoundaryTag::bottom}) {
        auto [t, n] = frames(d, tag, x);
        CHECK(std::abs(norm(t) - 1.0) < 1e-12);
        CHECK(std::abs(norm(n) - 1.0) < 1e-12);
        CHECK(std::abs(dot(t, n)) < 1e-12);
      }
    }
  }
  SECTION("invalid tag behaviour is covered by wall frame") {
    auto [tw, nw] = frames(d, BoundaryTag::wall, 0.0);
    CHECK(dot(tw, nw) == Catch::Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("contact angle of a flat surface on a slope-alpha beach equals alpha") {
  for (double alpha : {M_PI / 24, M_PI / 12, M_PI / 8}) {
    auto d = flat_beach(alpha);
    CHECK(contact_angle(d) == Catch::Approx(alpha).margin(1e-10));
  }
}

TEST_CASE("contact angle guard rejects degenerate corners") {
  // surface nearly parallel to the bottom at the corner: omega below the
  // configured floor triggers the guard
  const double alpha = M_PI / 12;
  BottomProfile bottom(alpha, 2.0, 3.0, 0.6);
  const double m = std::tan(alpha);
  const double c = 2.0 + (-0.6 + m * 1.0) / m;
  const double s0 = std::tan(5e-4 - alpha);  // angle 5e-4 above the beach
  const int n = 129;
  std::vector<double> xs(n), etas(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = c + (8.0 - c) * i / (n - 1);
    const double dx = xs[i] - c;
    const double filler = 1.0 - std::exp(-dx);
    etas[i] = bottom.value(c) + s0 * dx * std::exp(-2.0 * dx) +
              0.3 * filler * filler;
  }
  CHECK_THROWS_AS(
      CornerDomain(SurfaceCurve(xs, etas), bottom, 8.0, DomainKind::beach),
      geometry_error);
}

TEST_CASE("contact speed law") {
  PhysicsParams p;
  p.sigma = 1.0;
  p.beta_c = 1.0;
  p.omega_s = M_PI / 12;
  SECTION("equilibrium angle gives zero speed") {
    CHECK(contact_speed(p.omega_s, p) == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("direct evaluation") {
    const double vc = contact_speed(M_PI / 6, p);
    CHECK(vc == Catch::Approx(std::cos(M_PI / 12) - std::cos(M_PI / 6)).epsilon(1e-14));
    CHECK(vc == Catch::Approx(0.09990).margin(5e-6));
  }
  SECTION("sign and strict monotonicity in omega") {
    double prev = contact_speed(0.02, p);
    for (int i = 1; i <= 60; ++i) {
      const double w = 0.02 + (M_PI - 0.05 - 0.02) * i / 60.0;
      const double vc = contact_speed(w, p);
      CHECK(vc > prev);
      prev = vc;
      if (w > p.omega_s) CHECK(vc > 0.0);
      if (w < p.omega_s) CHECK(vc < 0.0);
    }
  }
  SECTION("invalid friction coefficient is a config error") {
    PhysicsParams bad = p;
    bad.beta_c = -1.0;
    CHECK_THROWS_AS(contact_speed(0.3, bad), config_error);
  }
}

TEST_CASE("arclength resample") {
  SECTION("flat equispaced markers are a fixed point") {
    auto d = flat_beach(M_PI / 12, 8.0, 0.6, 33);
    auto r = arclength_resample(d.surface(), 33);
    for (int i = 0; i < 33; ++i) {
      CHECK(r.marker_x()[i] == Catch::Approx(d.surface().marker_x()[i]).margin(1e-9));
      CHECK(r.marker_eta()[i] == Catch::Approx(d.surface().marker_eta()[i]).margin(1e-9));
    }
  }
  SECTION("flat surface spacing is (L-c)/(n-1)") {
    auto d = flat_beach(M_PI / 12, 8.0, 0.6, 17);
    auto r = arclength_resample(d.surface(), 9);
    const double span = (d.wall_abscissa() - d.left()) / 8.0;
    for (int i = 0; i + 1 < 9; ++i)
      CHECK(r.marker_x()[i + 1] - r.marker_x()[i] == Catch::Approx(span).margin(1e-9));
  }
  SECTION("cosine surface: total arclength preserved") {
    std::vector<double> xs(97), etas(97);
    for (int i = 0; i < 97; ++i) {
      xs[i] = i / 96.0 * 6.0;
      etas[i] = 0.2 * std::cos(xs[i]);
    }
    SurfaceCurve s(xs, etas);
    const double before = s.total_arclength();
    auto r = arclength_resample(s, 49);
    CHECK(r.total_arclength() == Catch::Approx(before).epsilon(1e-8));
  }
  SECTION("too few markers rejected") {
    auto d = flat_beach(M_PI / 12);
    CHECK_THROWS_AS(arclength_resample(d.surface(), 4), geometry_error);
  }
}

TEST_CASE("corner domain invariants") {
  auto d = flat_beach(M_PI / 12);
  CHECK(d.contact().abscissa < d.wall_abscissa());
  CHECK(std::abs(d.surface().value(d.left()) - d.bottom().value(d.left())) < 1e-12);
  // attachment violation raises
  auto xs = d.surface().marker_x();
  auto etas = d.surface().marker_eta();
  std::vector<double> bad_etas(etas.begin(), etas.end());
  bad_etas[0] += 1e-3;
  CHECK_THROWS_AS(CornerDomain(SurfaceCurve(xs, bad_etas), d.bottom(),
                               d.wall_abscissa(), DomainKind::beach),
                  geometry_error);
}

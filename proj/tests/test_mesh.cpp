#include <catch2/catch_amalgamated.hpp>
#include <set>
#include <sstream>

#include "capwave/fem.hpp"
#include "capwave/mesh.hpp"
#include "test_helpers.hpp"

using namespace capwave;
using capwave::test::cosine_strip;
using capwave::test::flat_beach;
using capwave::test::flat_strip;

namespace {
int count_tag(const Mesh& m, BoundaryTag t) {
  int n = 0;
  for (const auto& e : m.boundary) n += (e.tag == t);
  return n;
}
}  // namespace

TEST_CASE("rectangular strip mesh satisfies the invariants") {
  auto d = flat_strip(4.0, 1.0);
  MeshSpec spec;
  spec.h_mesh = 0.2;
  auto m = triangulate(d, spec);
  m.check_invariants();
  auto q = quality_report(m, d);
  CHECK(q.min_angle_deg >= 20.0);
  CHECK(q.area_defect_rel < 1e-12);  // polygonal domain, exact
  // boundary vertices on the curves
  for (const auto& e : m.boundary) {
    for (int v : {e.v0, e.v1}) {
      const Vec2 p = m.vertices[v];
      if (e.tag == BoundaryTag::top) CHECK(std::abs(p[1] - d.surface().value(p[0])) < 1e-10);
      if (e.tag == BoundaryTag::bottom) CHECK(std::abs(p[1] - d.bottom().value(p[0])) < 1e-10);
    }
  }
  CHECK(m.corner_vertex == -1);
  CHECK(count_tag(m, BoundaryTag::wall) > 0);
}

TEST_CASE("wedge mesh: corner vertex, grading, quality, count scaling") {
  auto d = flat_beach(M_PI / 8);  // corner angle 22.5 deg
  MeshSpec spec;
  spec.h_mesh = 0.15;
  auto m = triangulate(d, spec);
  auto q = quality_report(m, d);

  // corner vertex is the unique vertex shared by TOP and BOTTOM edges
  std::set<int> top_v, bot_v;
  for (const auto& e : m.boundary) {
    if (e.tag == BoundaryTag::top) { top_v.insert(e.v0); top_v.insert(e.v1); }
    if (e.tag == BoundaryTag::bottom) { bot_v.insert(e.v0); bot_v.insert(e.v1); }
  }
  std::vector<int> shared;
  std::set_intersection(top_v.begin(), top_v.end(), bot_v.begin(), bot_v.end(),
                        std::back_inserter(shared));
  REQUIRE(shared.size() == 1);
  CHECK(shared[0] == m.corner_vertex);

  CHECK(q.min_angle_deg >= 20.0);  // wedge angle 22.5 > 20
  CHECK(q.area_defect_rel < 5e-4);  // blend-region sagitta at this h

  MeshSpec fine = spec;
  fine.h_mesh = spec.h_mesh / 2.0;
  auto m2 = triangulate(d, fine);
  const double ratio = double(m2.triangles.size()) / double(m.triangles.size());
  CHECK(ratio > 2.5);  // ~ h^-2 growth
  CHECK(ratio < 7.0);
}

TEST_CASE("mesh area matches the quadrature of (eta - b)") {
  auto d = cosine_strip(0.05, 1.0, 6.0, 1.0);
  MeshSpec spec;
  spec.h_mesh = 0.02;
  auto m = triangulate(d, spec);
  auto q = quality_report(m, d);
  CHECK(q.area_defect_rel < 1e-6);
}

TEST_CASE("refine_uniform splits in four and preserves tags") {
  auto d = flat_beach(M_PI / 10, 8.0, 0.6, 33);
  MeshSpec spec;
  spec.h_mesh = 0.3;
  auto m = triangulate(d, spec);
  auto r = refine_uniform(m, d);
  CHECK(r.triangles.size() == 4 * m.triangles.size());
  CHECK(count_tag(r, BoundaryTag::top) == 2 * count_tag(m, BoundaryTag::top));
  CHECK(count_tag(r, BoundaryTag::bottom) == 2 * count_tag(m, BoundaryTag::bottom));
  CHECK(r.corner_vertex == m.corner_vertex);
  r.check_invariants();
  // refined boundary vertices sit on the curves again
  for (const auto& e : r.boundary)
    for (int v : {e.v0, e.v1}) {
      const Vec2 p = r.vertices[v];
      if (e.tag == BoundaryTag::top) CHECK(std::abs(p[1] - d.surface().value(p[0])) < 1e-10);
      if (e.tag == BoundaryTag::bottom) CHECK(std::abs(p[1] - d.bottom().value(p[0])) < 1e-10);
    }
}

TEST_CASE("refine_uniform preserves area exactly on a polygonal strip") {
  auto d = flat_strip(3.0, 1.0);
  MeshSpec spec;
  spec.h_mesh = 0.25;
  auto m = triangulate(d, spec);
  auto r = refine_uniform(m, d);
  CHECK(r.total_area() == Catch::Approx(m.total_area()).epsilon(1e-13));
  CHECK(r.vertices.size() > 3 * m.vertices.size());  // ~4x asymptotically
}

TEST_CASE("remesh_from_layout keeps connectivity and fits a deformed domain") {
  auto d0 = flat_beach(M_PI / 12, 8.0, 0.6, 33);
  MeshSpec spec;
  spec.h_mesh = 0.2;
  auto m0 = triangulate(d0, spec);

  // perturb the surface slightly and re-fit
  auto xs = d0.surface().marker_x();
  auto etas = d0.surface().marker_eta();
  std::vector<double> e2(etas.begin(), etas.end());
  for (std::size_t i = 1; i < e2.size(); ++i) {
    const double t = (xs[i] - xs[0]) / (xs.back() - xs[0]);
    e2[i] += 0.01 * std::sin(3.0 * t) * t;
  }
  CornerDomain d1(SurfaceCurve(xs, e2), d0.bottom(), 8.0, DomainKind::beach);
  auto m1 = remesh_from_layout(m0, d1);
  CHECK(m1.triangles.size() == m0.triangles.size());
  m1.check_invariants();
  auto q = quality_report(m1, d1);
  CHECK(q.area_defect_rel < 1e-4);
}

TEST_CASE("field transfer: constants and linears exact, quadratics O(h^2)") {
  auto d = flat_strip(3.0, 1.0);
  MeshSpec coarse;
  coarse.h_mesh = 0.2;
  auto m_old = triangulate(d, coarse);
  MeshSpec other;
  other.h_mesh = 0.13;
  auto m_new = triangulate(d, other);

  FemSystem fs_old(m_old, d);
  SECTION("constant field transfers exactly") {
    ScalarField f{&m_old, Eigen::VectorXd::Constant(m_old.n_nodes(), 3.25), ""};
    auto g = transfer_field(f, m_old, d, m_new);
    for (Eigen::Index i = 0; i < g.coeffs.size(); ++i)
      CHECK(g.coeffs[i] == Catch::Approx(3.25).margin(1e-12));
  }
  SECTION("linear field transfers exactly on P1") {
    ScalarField f{&m_old, fs_old.interpolate([](const Vec2& p) {
                    return 2.0 * p[0] - 0.5 * p[1] + 1.0;
                  }),
                  ""};
    auto g = transfer_field(f, m_old, d, m_new);
    for (std::size_t i = 0; i < m_new.n_nodes(); ++i) {
      const Vec2 p = m_new.node_coord(static_cast<int>(i));
      CHECK(g.coeffs[i] == Catch::Approx(2.0 * p[0] - 0.5 * p[1] + 1.0).margin(1e-11));
    }
  }
  SECTION("smooth quadratic: nodal transfer error drops ~4x per refinement") {
    auto quad_fn = [](const Vec2& p) { return p[0] * p[0] + 0.5 * p[1] * p[1]; };
    double errs[2];
    double h = 0.2;
    for (int lev = 0; lev < 2; ++lev) {
      MeshSpec s1;
      s1.h_mesh = h;
      auto src = triangulate(d, s1);
      FemSystem fs(src, d);
      ScalarField f{&src, fs.interpolate(quad_fn), ""};
      auto g = transfer_field(f, src, d, m_new);
      double sum2 = 0.0;
      for (std::size_t i = 0; i < m_new.n_nodes(); ++i) {
        const double e = g.coeffs[i] - quad_fn(m_new.node_coord(static_cast<int>(i)));
        sum2 += e * e;
      }
      errs[lev] = std::sqrt(sum2 / m_new.n_nodes());
      h /= 2.0;
    }
    CHECK(errs[1] < errs[0] / 2.5);
  }
}

TEST_CASE("transfer rejects far-outside queries") {
  auto d = flat_strip(3.0, 1.0);
  MeshSpec spec;
  spec.h_mesh = 0.25;
  auto m = triangulate(d, spec);
  MeshLocator loc(m);
  CHECK_THROWS_AS(loc.locate({10.0, 10.0}, 0.25), mesh_error);
}

TEST_CASE("OFF-like dump has counts, coordinates and tag lines") {
  auto d = flat_strip(2.0, 1.0);
  MeshSpec spec;
  spec.h_mesh = 0.5;
  auto m = triangulate(d, spec);
  std::ostringstream os;
  m.dump_off(os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "OFF-like");
  std::size_t nv, nt, nb;
  is >> nv >> nt >> nb;
  CHECK(nv == m.vertices.size());
  CHECK(nt == m.triangles.size());
  CHECK(nb == m.boundary.size());
  CHECK(os.str().find("TOP") != std::string::npos);
  CHECK(os.str().find("BOTTOM") != std::string::npos);
  CHECK(os.str().find("WALL") != std::string::npos);
}

TEST_CASE("P2 meshes expose edge nodes at midpoints") {
  auto d = flat_strip(2.0, 1.0);
  MeshSpec spec;
  spec.h_mesh = 0.5;
  spec.order = 2;
  auto m = triangulate(d, spec);
  CHECK(m.n_nodes() > m.n_vertices());
  const auto nodes = m.element_nodes(0);
  const Vec2 mid = m.node_coord(nodes[3]);
  const Vec2 expect = 0.5 * (m.vertices[m.triangles[0][0]] + m.vertices[m.triangles[0][1]]);
  CHECK(mid[0] == Catch::Approx(expect[0]).margin(1e-14));
  CHECK(mid[1] == Catch::Approx(expect[1]).margin(1e-14));
}

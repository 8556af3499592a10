/// @file mesh.hpp
/// @brief Corner-graded triangulation of the moving domain, uniform
///        refinement, field transfer and quality reporting.
///
/// The mesher is column-based: graded abscissae from the contact point,
/// vertical node stacks between the bottom and the surface, and a
/// shorter-diagonal merge between adjacent stacks.  For graph domains this
/// can never tangle, and the layout (column fractions + vertical fractions
/// + connectivity) can be re-instantiated on a deformed domain so that a
/// moving-domain solve sees a mesh that varies smoothly with the geometry.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "capwave/geometry.hpp"

namespace capwave {

struct mesh_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshSpec {
  double h_mesh = 0.1;       // target edge length away from the corner
  double grading = 2.0;      // gamma_g >= 1; 1 = uniform
  double min_angle_deg = 20.0;
  int order = 1;             // element order, 1 or 2
  void validate() const {
    if (!(h_mesh > 0.0)) throw config_error("MeshSpec: h_mesh must be > 0");
    if (!(grading >= 1.0)) throw config_error("MeshSpec: grading must be >= 1");
    if (order != 1 && order != 2) throw config_error("MeshSpec: order must be 1 or 2");
  }
};

struct BoundaryEdge {
  int v0 = -1, v1 = -1;   // vertex ids, oriented with the fluid on the left
  BoundaryTag tag = BoundaryTag::top;
};

/// Conforming triangulation with tagged boundary.  Vertex coordinates plus
/// (for order 2) one node per edge at the straight-edge midpoint; elements
/// are affine triangles throughout.
class Mesh {
public:
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW vertex ids
  std::vector<BoundaryEdge> boundary;
  int corner_vertex = -1;  // unique TOP/BOTTOM shared vertex; -1 for strips
  int order = 1;

  // generating layout, kept so the same combinatorics can be re-fitted to a
  // deformed domain (empty when the mesh came from refine/transfer)
  std::vector<double> layout_xi;                // column positions in [0,1]
  std::vector<std::vector<double>> layout_zeta; // per-column vertical fractions
  std::vector<std::vector<int>> layout_cols;    // vertex ids per column

  std::size_t n_vertices() const { return vertices.size(); }
  std::size_t n_nodes() const {
    return order == 1 ? vertices.size() : vertices.size() + edge_list_.size();
  }

  /// Per-triangle node ids: 3 vertices, then midpoints of edges (0,1),(1,2),(2,0).
  std::array<int, 6> element_nodes(std::size_t t) const {
    const auto& tri = triangles[t];
    std::array<int, 6> n{tri[0], tri[1], tri[2], -1, -1, -1};
    if (order == 2) {
      n[3] = static_cast<int>(vertices.size()) + edge_index(tri[0], tri[1]);
      n[4] = static_cast<int>(vertices.size()) + edge_index(tri[1], tri[2]);
      n[5] = static_cast<int>(vertices.size()) + edge_index(tri[2], tri[0]);
    }
    return n;
  }

  Vec2 node_coord(int id) const {
    if (id < static_cast<int>(vertices.size())) return vertices[id];
    const auto& e = edge_list_[id - vertices.size()];
    return 0.5 * (vertices[e.first] + vertices[e.second]);
  }

  int edge_node(int v0, int v1) const {
    return static_cast<int>(vertices.size()) + edge_index(v0, v1);
  }

  double signed_area(std::size_t t) const {
    const auto& tr = triangles[t];
    const Vec2 &a = vertices[tr[0]], &b = vertices[tr[1]], &c = vertices[tr[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
  }

  double total_area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) s += signed_area(t);
    return s;
  }

  void finalize() {
    build_edges();
    check_invariants();
  }

  void check_invariants() const {
    for (std::size_t t = 0; t < triangles.size(); ++t)
      if (!(signed_area(t) > 0.0))
        throw mesh_error("Mesh: inverted or degenerate triangle");
  }

  const std::vector<std::pair<int, int>>& edge_list() const { return edge_list_; }

  /// Plain-text OFF-like dump: counts, coordinates, connectivity, tag lines.
  void dump_off(std::ostream& os) const {
    os << "OFF-like\n" << vertices.size() << " " << triangles.size() << " "
       << boundary.size() << "\n";
    os.precision(17);
    for (const auto& v : vertices) os << v[0] << " " << v[1] << "\n";
    for (const auto& t : triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    for (const auto& e : boundary) {
      const char* tag = e.tag == BoundaryTag::top ? "TOP"
                        : e.tag == BoundaryTag::bottom ? "BOTTOM" : "WALL";
      os << tag << " " << e.v0 << " " << e.v1 << "\n";
    }
  }

private:
  void build_edges() {
    edge_map_.clear();
    edge_list_.clear();
    for (const auto& t : triangles) {
      for (int k = 0; k < 3; ++k) {
        int a = t[k], b = t[(k + 1) % 3];
        auto key = std::minmax(a, b);
        if (edge_map_.emplace(key, static_cast<int>(edge_list_.size())).second)
          edge_list_.push_back(key);
      }
    }
  }
  int edge_index(int a, int b) const {
    auto it = edge_map_.find(std::minmax(a, b));
    if (it == edge_map_.end()) throw mesh_error("Mesh: unknown edge");
    return it->second;
  }

  std::map<std::pair<int, int>, int> edge_map_;
  std::vector<std::pair<int, int>> edge_list_;
};

namespace detail {

/// Graded column abscissae from the corner: spacing ~ h*(r/R0)^(1-1/gamma).
inline std::vector<double> graded_columns(double c, double L, const MeshSpec& spec,
                                          bool corner_graded) {
  const double R0 = L - c;
  const double e = 1.0 - 1.0 / spec.grading;
  std::vector<double> xs{c};
  if (!corner_graded || e <= 0.0) {
    const int n = std::max(2, static_cast<int>(std::ceil(R0 / spec.h_mesh)));
    for (int i = 1; i <= n; ++i) xs.push_back(c + R0 * i / n);
    return xs;
  }
  // first interval solves r = h*(r/R0)^e
  const double r1 = std::max(std::pow(spec.h_mesh, 1.0 / (1.0 - e)) *
                                 std::pow(R0, -e / (1.0 - e)),
                             1e-4 * spec.h_mesh);
  double x = c + std::min(r1, 0.5 * R0);
  xs.push_back(x);
  while (true) {
    const double r = x - c;
    double step = std::min(spec.h_mesh, spec.h_mesh * std::pow(r / R0, e));
    if (x + 1.5 * step >= L) break;
    x += step;
    xs.push_back(x);
  }
  xs.push_back(L);
  return xs;
}

inline int stack_count(double depth, double target) {
  return std::max(1, static_cast<int>(std::lround(depth / target)));
}

}  // namespace detail

/// Triangulate the domain.  The returned mesh stores its generating layout.
inline Mesh triangulate(const CornerDomain& d, const MeshSpec& spec) {
  spec.validate();
  const double c = d.left(), L = d.wall_abscissa();
  const bool beach = d.has_corner();
  const double R0 = L - c;

  std::vector<double> xs = detail::graded_columns(c, L, spec, beach);
  const std::size_t ncol = xs.size();

  Mesh m;
  m.order = spec.order;
  m.layout_xi.reserve(ncol);
  for (double x : xs) m.layout_xi.push_back((x - c) / R0);

  // vertical stacks
  std::vector<std::vector<int>> col(ncol);
  const double e = 1.0 - 1.0 / spec.grading;
  for (std::size_t k = 0; k < ncol; ++k) {
    const double x = xs[k];
    const double depth = d.depth(x);
    std::vector<double> zeta;
    if (beach && k == 0) {
      zeta = {0.0};  // corner point
    } else {
      double target = spec.h_mesh;
      if (beach && e > 0.0)
        target = std::min(spec.h_mesh,
                          std::max(spec.h_mesh * std::pow((x - c) / R0, e),
                                   1e-4 * spec.h_mesh));
      const int nseg = detail::stack_count(depth, target);
      for (int j = 0; j <= nseg; ++j) zeta.push_back(static_cast<double>(j) / nseg);
    }
    for (double z : zeta) {
      col[k].push_back(static_cast<int>(m.vertices.size()));
      const double b = d.bottom().value(x);
      m.vertices.push_back({x, b + z * (d.surface().value(x) - b)});
    }
    m.layout_zeta.push_back(std::move(zeta));
  }
  m.layout_cols = col;
  if (beach) m.corner_vertex = col[0][0];

  // strip-merge adjacent columns, preferring the shorter diagonal
  for (std::size_t k = 0; k + 1 < ncol; ++k) {
    const auto& Lc = col[k];
    const auto& Rc = col[k + 1];
    std::size_t i = 0, j = 0;
    while (i + 1 < Lc.size() || j + 1 < Rc.size()) {
      const bool can_left = i + 1 < Lc.size();
      const bool can_right = j + 1 < Rc.size();
      bool advance_left;
      if (!can_left) advance_left = false;
      else if (!can_right) advance_left = true;
      else {
        const double dl = norm(m.vertices[Lc[i + 1]] - m.vertices[Rc[j]]);
        const double dr = norm(m.vertices[Rc[j + 1]] - m.vertices[Lc[i]]);
        advance_left = dl <= dr;
      }
      if (advance_left) {
        m.triangles.push_back({Lc[i], Rc[j], Lc[i + 1]});
        ++i;
      } else {
        m.triangles.push_back({Lc[i], Rc[j], Rc[j + 1]});
        ++j;
      }
    }
  }

  // boundary edges: bottom and top chains column-to-column, wall stacks
  for (std::size_t k = 0; k + 1 < ncol; ++k) {
    m.boundary.push_back({col[k].front(), col[k + 1].front(), BoundaryTag::bottom});
    m.boundary.push_back({col[k + 1].back(), col[k].back(), BoundaryTag::top});
  }
  for (std::size_t j = 0; j + 1 < col.back().size(); ++j)
    m.boundary.push_back({col.back()[j], col.back()[j + 1], BoundaryTag::wall});
  if (!beach)
    for (std::size_t j = 0; j + 1 < col.front().size(); ++j)
      m.boundary.push_back({col.front()[j], col.front()[j + 1], BoundaryTag::wall});

  m.finalize();
  return m;
}

/// Re-fit a previously generated layout to a deformed domain: identical
/// connectivity, coordinates recomputed from the current curves.
inline Mesh remesh_from_layout(const Mesh& tmpl, const CornerDomain& d) {
  if (tmpl.layout_xi.empty()) throw mesh_error("remesh_from_layout: mesh has no layout");
  Mesh m = tmpl;
  const double c = d.left(), L = d.wall_abscissa();
  for (std::size_t k = 0; k < tmpl.layout_xi.size(); ++k) {
    const double x = c + tmpl.layout_xi[k] * (L - c);
    const double b = d.bottom().value(x);
    const double depth = d.surface().value(x) - b;
    const auto& ids = tmpl.layout_cols[k];
    for (std::size_t j = 0; j < ids.size(); ++j)
      m.vertices[ids[j]] = {x, b + tmpl.layout_zeta[k][j] * depth};
  }
  m.finalize();
  return m;
}

/// Uniform 4-way refinement; new boundary vertices are projected back onto
/// the generating curves (TOP/BOTTOM by abscissa, WALL kept vertical).
inline Mesh refine_uniform(const Mesh& mesh, const CornerDomain& d) {
  Mesh out;
  out.order = mesh.order;
  out.vertices = mesh.vertices;

  std::map<std::pair<int, int>, BoundaryTag> btag;
  for (const auto& e : mesh.boundary) btag[std::minmax(e.v0, e.v1)] = e.tag;

  std::map<std::pair<int, int>, int> midpoint;
  auto mid_of = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Vec2 p = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    auto bt = btag.find(key);
    if (bt != btag.end()) {
      switch (bt->second) {
        case BoundaryTag::top: p[1] = d.surface().value(p[0]); break;
        case BoundaryTag::bottom: p[1] = d.bottom().value(p[0]); break;
        case BoundaryTag::wall: break;  // already on the vertical line
      }
    }
    int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(p);
    midpoint.emplace(key, id);
    return id;
  };

  for (const auto& t : mesh.triangles) {
    int m01 = mid_of(t[0], t[1]), m12 = mid_of(t[1], t[2]), m20 = mid_of(t[2], t[0]);
    out.triangles.push_back({t[0], m01, m20});
    out.triangles.push_back({m01, t[1], m12});
    out.triangles.push_back({m20, m12, t[2]});
    out.triangles.push_back({m01, m12, m20});
  }
  for (const auto& e : mesh.boundary) {
    int mm = mid_of(e.v0, e.v1);
    out.boundary.push_back({e.v0, mm, e.tag});
    out.boundary.push_back({mm, e.v1, e.tag});
  }
  out.corner_vertex = mesh.corner_vertex;
  out.finalize();
  return out;
}

struct QualityReport {
  double min_angle_deg = 180.0;
  double max_angle_deg = 0.0;
  double min_angle_off_corner_deg = 180.0;  // excluding corner-incident triangles
  double max_aspect = 0.0;
  double area = 0.0;
  double area_defect_rel = 0.0;  // vs quadrature of (eta - b)
  std::size_t n_triangles = 0;
  std::size_t n_vertices = 0;
};

inline QualityReport quality_report(const Mesh& m, const CornerDomain& d) {
  QualityReport q;
  q.n_triangles = m.triangles.size();
  q.n_vertices = m.vertices.size();
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tr = m.triangles[t];
    double lmin = 1e300, lmax = 0.0;
    bool at_corner = false;
    for (int k = 0; k < 3; ++k) {
      if (tr[k] == m.corner_vertex) at_corner = true;
      const Vec2 a = m.vertices[tr[k]], b = m.vertices[tr[(k + 1) % 3]],
                 cpt = m.vertices[tr[(k + 2) % 3]];
      const Vec2 u = b - a, v = cpt - a;
      const double ang = std::acos(std::clamp(
          dot(u, v) / (norm(u) * norm(v)), -1.0, 1.0)) * 180.0 / M_PI;
      q.min_angle_deg = std::min(q.min_angle_deg, ang);
      q.max_angle_deg = std::max(q.max_angle_deg, ang);
      if (!at_corner) q.min_angle_off_corner_deg = std::min(q.min_angle_off_corner_deg, ang);
      lmin = std::min(lmin, norm(u));
      lmax = std::max(lmax, norm(u));
    }
    q.max_aspect = std::max(q.max_aspect, lmax / lmin);
    q.area += m.signed_area(t);
  }
  const double exact = d.area();
  q.area_defect_rel = std::abs(q.area - exact) / std::max(1e-300, std::abs(exact));
  return q;
}

/// Point location with clamped-barycentric fallback for near-boundary
/// queries; throws when the query is farther than about one edge length.
class MeshLocator {
public:
  explicit MeshLocator(const Mesh& m) : mesh_(&m) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& v : m.vertices) {
      xmin = std::min(xmin, v[0]); xmax = std::max(xmax, v[0]);
      ymin = std::min(ymin, v[1]); ymax = std::max(ymax, v[1]);
    }
    x0_ = xmin; y0_ = ymin;
    nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(m.triangles.size()))));
    ny_ = nx_;
    dx_ = std::max(1e-12, (xmax - xmin) / nx_);
    dy_ = std::max(1e-12, (ymax - ymin) / ny_);
    bins_.resize(nx_ * ny_);
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      double txmin = 1e300, txmax = -1e300, tymin = 1e300, tymax = -1e300;
      for (int k = 0; k < 3; ++k) {
        const Vec2& v = m.vertices[m.triangles[t][k]];
        txmin = std::min(txmin, v[0]); txmax = std::max(txmax, v[0]);
        tymin = std::min(tymin, v[1]); tymax = std::max(tymax, v[1]);
      }
      for (std::size_t i = clampi(txmin, x0_, dx_, nx_); i <= clampi(txmax, x0_, dx_, nx_); ++i)
        for (std::size_t j = clampi(tymin, y0_, dy_, ny_); j <= clampi(tymax, y0_, dy_, ny_); ++j)
          bins_[i * ny_ + j].push_back(static_cast<int>(t));
    }
  }

  /// Returns (triangle, barycentric coords).  Barycentrics are clamped to the
  /// closest face when the point lies just outside the mesh.
  std::pair<int, std::array<double, 3>> locate(const Vec2& p, double max_dist) const {
    const std::size_t i = clampi(p[0], x0_, dx_, nx_);
    const std::size_t j = clampi(p[1], y0_, dy_, ny_);
    int best = -1;
    std::array<double, 3> best_lam{};
    double best_neg = -1e300;
    auto consider = [&](int t) {
      auto lam = barycentric(t, p);
      const double neg = std::min({lam[0], lam[1], lam[2]});
      if (neg > best_neg) { best_neg = neg; best = t; best_lam = lam; }
    };
    for (int t : bins_[i * ny_ + j]) consider(t);
    if (best_neg < -1e-12) {
      // widen the search before giving up
      for (std::size_t ii = (i > 0 ? i - 1 : 0); ii <= std::min(i + 1, nx_ - 1); ++ii)
        for (std::size_t jj = (j > 0 ? j - 1 : 0); jj <= std::min(j + 1, ny_ - 1); ++jj)
          for (int t : bins_[ii * ny_ + jj]) consider(t);
    }
    if (best < 0)
      throw mesh_error("MeshLocator: query point outside binned region");
    if (best_neg < 0.0) {
      // estimate the offset distance via the triangle size
      const auto& tr = mesh_->triangles[best];
      const double diam = norm(mesh_->vertices[tr[0]] - mesh_->vertices[tr[1]]);
      if (-best_neg * diam > max_dist)
        throw mesh_error("MeshLocator: query point too far outside the mesh");
      double s = 0.0;
      for (auto& l : best_lam) { l = std::max(0.0, l); s += l; }
      for (auto& l : best_lam) l /= s;
    }
    return {best, best_lam};
  }

private:
  static std::size_t clampi(double v, double o, double d, std::size_t n) {
    const double t = (v - o) / d;
    if (t <= 0.0) return 0;
    const std::size_t i = static_cast<std::size_t>(t);
    return std::min(i, n - 1);
  }
  std::array<double, 3> barycentric(int t, const Vec2& p) const {
    const auto& tr = mesh_->triangles[t];
    const Vec2 &a = mesh_->vertices[tr[0]], &b = mesh_->vertices[tr[1]],
               &c = mesh_->vertices[tr[2]];
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    const double l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
    const double l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  const Mesh* mesh_;
  double x0_ = 0, y0_ = 0, dx_ = 1, dy_ = 1;
  std::size_t nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> bins_;
};

}  // namespace capwave

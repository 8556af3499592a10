/// @file fem.hpp
/// @brief P1/P2 Lagrange finite elements on affine triangles: quadrature,
///        assembly, cached factorizations, traces and dual flux extraction.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include "capwave/mesh.hpp"

namespace capwave {

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline int& global_thread_count() {
  static int n = 1;
  return n;
}

/// Chunked deterministic parallel loop: results must be merged by the caller
/// in chunk order so floating-point sums do not depend on the thread count.
template <typename Body>
void parallel_chunks(std::size_t n, const Body& body) {
  const int nthreads = std::max(1, global_thread_count());
  if (nthreads == 1 || n < 256) {
    body(0, 0, n);
    return;
  }
  const std::size_t nchunks = static_cast<std::size_t>(nthreads);
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < nchunks; ++c) {
    const std::size_t lo = n * c / nchunks, hi = n * (c + 1) / nchunks;
    workers.emplace_back([&body, c, lo, hi] { body(c, lo, hi); });
  }
  for (auto& w : workers) w.join();
}

namespace quad {
struct TriPoint { double l0, l1, l2, w; };  // barycentric + weight (sums to 1)

inline const std::vector<TriPoint>& tri_rule(int degree) {
  static const std::vector<TriPoint> d2 = {
      {2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 3}};
  static const std::vector<TriPoint> d4 = {
      {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
      {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
      {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
      {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
      {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
      {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322}};
  static const std::vector<TriPoint> d5 = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
      {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
      {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
      {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
      {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827},
      {0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827},
      {0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827}};
  if (degree <= 2) return d2;
  if (degree <= 4) return d4;
  return d5;
}
}  // namespace quad

namespace shape {
/// Values of the local basis at barycentric (l0,l1,l2); P2 ordering is
/// vertices then midpoints of edges (0,1),(1,2),(2,0).
inline void values(int order, double l0, double l1, double l2, double* N) {
  if (order == 1) {
    N[0] = l0; N[1] = l1; N[2] = l2;
  } else {
    N[0] = l0 * (2 * l0 - 1);
    N[1] = l1 * (2 * l1 - 1);
    N[2] = l2 * (2 * l2 - 1);
    N[3] = 4 * l0 * l1;
    N[4] = 4 * l1 * l2;
    N[5] = 4 * l2 * l0;
  }
}
/// Barycentric gradients dN/dl (3 components per basis function).
inline void grads_bary(int order, double l0, double l1, double l2, double (*dN)[3]) {
  if (order == 1) {
    dN[0][0] = 1; dN[0][1] = 0; dN[0][2] = 0;
    dN[1][0] = 0; dN[1][1] = 1; dN[1][2] = 0;
    dN[2][0] = 0; dN[2][1] = 0; dN[2][2] = 1;
  } else {
    dN[0][0] = 4 * l0 - 1; dN[0][1] = 0; dN[0][2] = 0;
    dN[1][0] = 0; dN[1][1] = 4 * l1 - 1; dN[1][2] = 0;
    dN[2][0] = 0; dN[2][1] = 0; dN[2][2] = 4 * l2 - 1;
    dN[3][0] = 4 * l1; dN[3][1] = 4 * l0; dN[3][2] = 0;
    dN[4][0] = 0; dN[4][1] = 4 * l2; dN[4][2] = 4 * l1;
    dN[5][0] = 4 * l2; dN[5][1] = 0; dN[5][2] = 4 * l0;
  }
}
}  // namespace shape

/// Nodal scalar field bound to a mesh.
struct ScalarField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd coeffs;
  std::string units;

  void check() const {
    if (!mesh || coeffs.size() != static_cast<Eigen::Index>(mesh->n_nodes()))
      throw solver_error("ScalarField: coefficient length mismatch");
    if (!coeffs.allFinite()) throw solver_error("ScalarField: non-finite entries");
  }
};

struct VectorField {
  ScalarField x, y;
  const Mesh* mesh() const { return x.mesh; }
};

/// Ordered trace of a field on one tagged boundary: node ids sorted along
/// the boundary with abscissa and arclength parameters.
struct BoundaryTrace {
  BoundaryTag tag = BoundaryTag::top;
  std::vector<int> nodes;       // sorted along the boundary
  std::vector<double> param_x;  // abscissa (TOP/BOTTOM) or z (WALL)
  std::vector<double> arclen;   // polygonal arclength from the first node
  Eigen::VectorXd values;

  double value_at(double x) const {
    // piecewise-linear in the stored parameter; adequate for diagnostics
    if (nodes.empty()) throw solver_error("BoundaryTrace: empty");
    auto it = std::lower_bound(param_x.begin(), param_x.end(), x);
    if (it == param_x.begin()) return values[0];
    if (it == param_x.end()) return values[values.size() - 1];
    const std::size_t i = static_cast<std::size_t>(it - param_x.begin());
    const double t = (x - param_x[i - 1]) / (param_x[i] - param_x[i - 1]);
    return (1.0 - t) * values[i - 1] + t * values[i];
  }
};

/// Assembled operators and cached factorizations for one mesh.  All elliptic
/// solves in the project go through this class.
class FemSystem {
public:
  FemSystem(const Mesh& mesh, const CornerDomain& domain)
      : mesh_(&mesh), domain_(&domain), order_(mesh.order),
        nloc_(mesh.order == 1 ? 3 : 6), n_(mesh.n_nodes()) {
    assemble_volume();
    build_boundary();
  }

  const Mesh& mesh() const { return *mesh_; }
  const CornerDomain& domain() const { return *domain_; }
  std::size_t n_nodes() const { return n_; }
  int order() const { return order_; }
  const SpMat& stiffness() const { return K_; }
  const SpMat& mass() const { return M_; }

  const std::vector<int>& tag_nodes(BoundaryTag tag) const {
    return tag_nodes_[static_cast<int>(tag)];
  }

  // ---- load vectors -------------------------------------------------------

  /// L(phi) = integral of f * phi over the domain.
  Eigen::VectorXd load_volume(const std::function<double(const Vec2&)>& f) const {
    return load_volume_elem([&](int, const Vec2& p) { return f(p); });
  }

  /// Element-aware volumetric load (sources built from FE derivatives).
  Eigen::VectorXd load_volume_elem(
      const std::function<double(int, const Vec2&)>& f) const {
    const auto& rule = quad::tri_rule(2 * order_ + 1);
    const std::size_t nt = mesh_->triangles.size();
    std::vector<Eigen::VectorXd> parts(std::max(1, global_thread_count()),
                                       Eigen::VectorXd::Zero(n_));
    parallel_chunks(nt, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
      Eigen::VectorXd& F = parts[chunk];
      double N[6];
      for (std::size_t t = lo; t < hi; ++t) {
        const auto nodes = mesh_->element_nodes(t);
        const double A = mesh_->signed_area(t);
        const auto& tri = mesh_->triangles[t];
        const Vec2 &p0 = mesh_->vertices[tri[0]], &p1 = mesh_->vertices[tri[1]],
                   &p2 = mesh_->vertices[tri[2]];
        for (const auto& q : rule) {
          const Vec2 p = q.l0 * p0 + q.l1 * p1 + q.l2 * p2;
          const double fv = f(static_cast<int>(t), p);
          shape::values(order_, q.l0, q.l1, q.l2, N);
          for (int a = 0; a < nloc_; ++a) F[nodes[a]] += q.w * A * fv * N[a];
        }
      }
    });
    Eigen::VectorXd F = Eigen::VectorXd::Zero(n_);
    for (const auto& part : parts) F += part;
    return F;
  }

  /// L(phi) = integral of g * phi over one tagged boundary chain.
  Eigen::VectorXd load_boundary(BoundaryTag tag,
                                const std::function<double(const Vec2&)>& g) const {
    Eigen::VectorXd F = Eigen::VectorXd::Zero(n_);
    const auto& gl = gauss_legendre(4);
    for (const auto& e : mesh_->boundary) {
      if (e.tag != tag) continue;
      const Vec2 &a = mesh_->vertices[e.v0], &b = mesh_->vertices[e.v1];
      const double len = norm(b - a);
      int ids[3] = {e.v0, e.v1, order_ == 2 ? mesh_->edge_node(e.v0, e.v1) : -1};
      for (const auto& [xi, w] : gl) {
        const double t = 0.5 * (xi + 1.0);
        const Vec2 p = (1.0 - t) * a + t * b;
        const double gv = g(p);
        double Ne[3];
        edge_shapes(t, Ne);
        const int nn = order_ == 1 ? 2 : 3;
        for (int k = 0; k < nn; ++k) F[ids[k]] += 0.5 * w * len * gv * Ne[k];
      }
    }
    return F;
  }

  /// Oblique boundary form B(u,phi) = integral of b0 * (d u / d tau) * phi on
  /// BOTTOM, with b0 given as a function of arclength from the contact point.
  SpMat oblique_form(const std::function<double(double)>& b0_of_arclen) const {
    std::vector<Triplet> trips;
    const auto& gl = gauss_legendre(4);
    for (const auto& e : mesh_->boundary) {
      if (e.tag != BoundaryTag::bottom) continue;
      const Vec2 &a = mesh_->vertices[e.v0], &b = mesh_->vertices[e.v1];
      const double len = norm(b - a);
      const double s0 = bottom_arclen_.at(e.v0);
      int ids[3] = {e.v0, e.v1, order_ == 2 ? mesh_->edge_node(e.v0, e.v1) : -1};
      const int nn = order_ == 1 ? 2 : 3;
      for (const auto& [xi, w] : gl) {
        const double t = 0.5 * (xi + 1.0);
        const double b0 = b0_of_arclen(s0 + t * len);
        if (b0 == 0.0) continue;
        double Ne[3], dNe[3];
        edge_shapes(t, Ne);
        edge_shape_derivs(t, dNe);  // d/dt; d/ds = (1/len) d/dt
        for (int r = 0; r < nn; ++r)
          for (int cidx = 0; cidx < nn; ++cidx)
            trips.emplace_back(ids[r], ids[cidx],
                               0.5 * w * len * b0 * (dNe[cidx] / len) * Ne[r]);
      }
    }
    SpMat B(n_, n_);
    B.setFromTriplets(trips.begin(), trips.end());
    return B;
  }

  // ---- solves --------------------------------------------------------------

  /// Solve A u = F with Dirichlet values pinned on the given nodes.  When A
  /// is the plain stiffness and the constrained set is exactly the TOP chain
  /// the factorization is cached and reused across solves on this mesh.
  Eigen::VectorXd solve_constrained(const SpMat& A, const Eigen::VectorXd& F,
                                    const std::vector<int>& fixed_nodes,
                                    const Eigen::VectorXd& fixed_values,
                                    bool symmetric, bool cacheable) const {
    std::vector<char> is_fixed(n_, 0);
    for (int i : fixed_nodes) is_fixed[i] = 1;
    std::vector<int> free_ids, to_free(n_, -1);
    free_ids.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i)
      if (!is_fixed[i]) {
        to_free[i] = static_cast<int>(free_ids.size());
        free_ids.push_back(static_cast<int>(i));
      }

    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_);
    for (std::size_t k = 0; k < fixed_nodes.size(); ++k)
      u[fixed_nodes[k]] = fixed_values[k];

    // reduced rhs: F_f - A_fc u_c
    Eigen::VectorXd rhs(free_ids.size());
    for (std::size_t k = 0; k < free_ids.size(); ++k) rhs[k] = F[free_ids[k]];
    for (int col = 0; col < A.outerSize(); ++col)
      for (SpMat::InnerIterator it(A, col); it; ++it)
        if (!is_fixed[it.row()] && is_fixed[it.col()])
          rhs[to_free[it.row()]] -= it.value() * u[it.col()];

    Eigen::VectorXd uf;
    if (symmetric && cacheable) {
      if (!ldlt_cache_ || cached_fixed_ != fixed_nodes) {
        ldlt_cache_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
        ldlt_cache_->compute(reduce(A, is_fixed, to_free, free_ids));
        if (ldlt_cache_->info() != Eigen::Success)
          throw solver_error("FemSystem: LDLT factorization failed");
        cached_fixed_ = fixed_nodes;
      }
      uf = ldlt_cache_->solve(rhs);
    } else if (symmetric) {
      Eigen::SimplicialLDLT<SpMat> ldlt(reduce(A, is_fixed, to_free, free_ids));
      if (ldlt.info() != Eigen::Success)
        throw solver_error("FemSystem: LDLT factorization failed");
      uf = ldlt.solve(rhs);
    } else {
      Eigen::SparseLU<SpMat> lu(reduce(A, is_fixed, to_free, free_ids));
      if (lu.info() != Eigen::Success)
        throw solver_error("FemSystem: LU factorization failed");
      uf = lu.solve(rhs);
    }
    for (std::size_t k = 0; k < free_ids.size(); ++k) u[free_ids[k]] = uf[k];
    return u;
  }

  /// Dual flux extraction: the discrete functional lambda on the tagged
  /// boundary satisfying  (lambda, phi)_tag = a(u, phi) - L_vol(phi)  for all
  /// trace test functions phi.  L_vol is the volumetric load used in the
  /// solve (so for Delta u = h pass  -load(h)).
  BoundaryTrace boundary_flux(BoundaryTag tag, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& L_vol) const {
    const auto& nodes = tag_nodes(tag);
    Eigen::VectorXd resid = K_ * u - L_vol;
    Eigen::VectorXd r(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) r[k] = resid[nodes[k]];
    BoundaryTrace tr = make_trace(tag);
    tr.values = boundary_mass_solve(tag, r);
    return tr;
  }

  /// Boundary L2 inner product of two trace-value vectors on a tag.
  double boundary_inner(BoundaryTag tag, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& b) const {
    const auto& Mb = boundary_mass(tag);
    return a.dot(Mb * b);
  }

  BoundaryTrace make_trace(BoundaryTag tag) const {
    BoundaryTrace tr;
    tr.tag = tag;
    tr.nodes = tag_nodes(tag);
    tr.param_x = tag_param_[static_cast<int>(tag)];
    tr.arclen = tag_arclen_[static_cast<int>(tag)];
    tr.values = Eigen::VectorXd::Zero(tr.nodes.size());
    return tr;
  }

  /// Nodal interpolation of a function into the FE space.
  Eigen::VectorXd interpolate(const std::function<double(const Vec2&)>& f) const {
    Eigen::VectorXd v(n_);
    for (std::size_t i = 0; i < n_; ++i) v[i] = f(mesh_->node_coord(static_cast<int>(i)));
    return v;
  }

  /// L2 projection of the elementwise gradient onto the nodal space.
  VectorField project_gradient(const ScalarField& u) const {
    Eigen::VectorXd gx = Eigen::VectorXd::Zero(n_), gy = Eigen::VectorXd::Zero(n_);
    const auto& rule = quad::tri_rule(2 * order_);
    double N[6];
    double dN[6][3];
    for (std::size_t t = 0; t < mesh_->triangles.size(); ++t) {
      const auto nodes = mesh_->element_nodes(t);
      const double A = mesh_->signed_area(t);
      Vec2 gl[3];
      bary_gradients(t, gl);
      for (const auto& q : rule) {
        shape::values(order_, q.l0, q.l1, q.l2, N);
        shape::grads_bary(order_, q.l0, q.l1, q.l2, dN);
        double ux = 0, uy = 0;
        for (int a = 0; a < nloc_; ++a) {
          const double cx = dN[a][0] * gl[0][0] + dN[a][1] * gl[1][0] + dN[a][2] * gl[2][0];
          const double cy = dN[a][0] * gl[0][1] + dN[a][1] * gl[1][1] + dN[a][2] * gl[2][1];
          ux += u.coeffs[nodes[a]] * cx;
          uy += u.coeffs[nodes[a]] * cy;
        }
        for (int a = 0; a < nloc_; ++a) {
          gx[nodes[a]] += q.w * A * ux * N[a];
          gy[nodes[a]] += q.w * A * uy * N[a];
        }
      }
    }
    VectorField g;
    g.x = {mesh_, mass_solve(gx), u.units + "/m"};
    g.y = {mesh_, mass_solve(gy), u.units + "/m"};
    return g;
  }

  Eigen::VectorXd mass_solve(const Eigen::VectorXd& rhs) const {
    if (!mass_ldlt_) {
      mass_ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
      mass_ldlt_->compute(M_);
      if (mass_ldlt_->info() != Eigen::Success)
        throw solver_error("FemSystem: mass factorization failed");
    }
    return mass_ldlt_->solve(rhs);
  }

  // ---- pointwise evaluation -----------------------------------------------

  double eval(const ScalarField& u, int tri, const std::array<double, 3>& lam) const {
    const auto nodes = mesh_->element_nodes(tri);
    double N[6];
    shape::values(order_, lam[0], lam[1], lam[2], N);
    double v = 0;
    for (int a = 0; a < nloc_; ++a) v += u.coeffs[nodes[a]] * N[a];
    return v;
  }

  Vec2 eval_grad(const ScalarField& u, int tri, const std::array<double, 3>& lam) const {
    const auto nodes = mesh_->element_nodes(tri);
    double dN[6][3];
    shape::grads_bary(order_, lam[0], lam[1], lam[2], dN);
    Vec2 gl[3];
    bary_gradients(tri, gl);
    Vec2 g{0, 0};
    for (int a = 0; a < nloc_; ++a) {
      const double c0 = u.coeffs[nodes[a]];
      g[0] += c0 * (dN[a][0] * gl[0][0] + dN[a][1] * gl[1][0] + dN[a][2] * gl[2][0]);
      g[1] += c0 * (dN[a][0] * gl[0][1] + dN[a][1] * gl[1][1] + dN[a][2] * gl[2][1]);
    }
    return g;
  }

  /// Constant-per-element second derivatives (P2); zero for P1.
  std::array<double, 3> eval_hessian(const ScalarField& u, int tri) const {
    if (order_ == 1) return {0.0, 0.0, 0.0};
    const auto nodes = mesh_->element_nodes(tri);
    Vec2 gl[3];
    bary_gradients(tri, gl);
    // second derivatives of the P2 basis in barycentric form:
    // N_i = l_i(2l_i-1): d2N/dl_i2 = 4; edge N: 4 l_a l_b: mixed = 4
    double hxx = 0, hxy = 0, hyy = 0;
    auto add = [&](double coeff, int i, int j) {
      hxx += coeff * gl[i][0] * gl[j][0];
      hxy += coeff * 0.5 * (gl[i][0] * gl[j][1] + gl[i][1] * gl[j][0]);
      hyy += coeff * gl[i][1] * gl[j][1];
    };
    for (int vtx = 0; vtx < 3; ++vtx) add(4.0 * u.coeffs[nodes[vtx]], vtx, vtx);
    add(4.0 * u.coeffs[nodes[3]], 0, 1);
    add(4.0 * u.coeffs[nodes[3]], 1, 0);
    add(4.0 * u.coeffs[nodes[4]], 1, 2);
    add(4.0 * u.coeffs[nodes[4]], 2, 1);
    add(4.0 * u.coeffs[nodes[5]], 2, 0);
    add(4.0 * u.coeffs[nodes[5]], 0, 2);
    // subtract the -l_i part of vertex functions: N_i = 2 l_i^2 - l_i has
    // hessian 4 glgl - 0 (linear part has zero second derivative); edge ok
    return {hxx, hxy, hyy};
  }

  void bary_gradients(std::size_t t, Vec2 gl[3]) const {
    const auto& tri = mesh_->triangles[t];
    const Vec2 &p0 = mesh_->vertices[tri[0]], &p1 = mesh_->vertices[tri[1]],
               &p2 = mesh_->vertices[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
    gl[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
    gl[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
    gl[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
  }

  // ---- integrals ------------------------------------------------------------

  double integrate(const std::function<double(int, const Vec2&)>& f) const {
    const auto& rule = quad::tri_rule(5);
    double s = 0.0;
    for (std::size_t t = 0; t < mesh_->triangles.size(); ++t) {
      const double A = mesh_->signed_area(t);
      const auto& tri = mesh_->triangles[t];
      const Vec2 &p0 = mesh_->vertices[tri[0]], &p1 = mesh_->vertices[tri[1]],
                 &p2 = mesh_->vertices[tri[2]];
      for (const auto& q : rule)
        s += q.w * A * f(static_cast<int>(t), q.l0 * p0 + q.l1 * p1 + q.l2 * p2);
    }
    return s;
  }

  /// Triangle/barycentric pairs of all volume quadrature points (degree 5).
  double field_l2(const ScalarField& u) const {
    double s = integrate([&](int t, const Vec2& p) {
      auto lam = local_bary(t, p);
      const double v = eval(u, t, lam);
      return v * v;
    });
    return std::sqrt(std::max(0.0, s));
  }

  std::array<double, 3> local_bary(int t, const Vec2& p) const {
    const auto& tri = mesh_->triangles[t];
    const Vec2 &a = mesh_->vertices[tri[0]], &b = mesh_->vertices[tri[1]],
               &c = mesh_->vertices[tri[2]];
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    const double l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
    const double l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  const SpMat& boundary_mass(BoundaryTag tag) const {
    return bmass_[static_cast<int>(tag)];
  }

  double bottom_arclength_of(int node) const {
    auto it = bottom_arclen_.find(node);
    if (it == bottom_arclen_.end()) throw solver_error("node not on bottom");
    return it->second;
  }

private:
  static SpMat reduce(const SpMat& A, const std::vector<char>& is_fixed,
                      const std::vector<int>& to_free,
                      const std::vector<int>& free_ids) {
    std::vector<Triplet> trips;
    trips.reserve(A.nonZeros());
    for (int col = 0; col < A.outerSize(); ++col)
      for (SpMat::InnerIterator it(A, col); it; ++it)
        if (!is_fixed[it.row()] && !is_fixed[it.col()])
          trips.emplace_back(to_free[it.row()], to_free[it.col()], it.value());
    SpMat R(free_ids.size(), free_ids.size());
    R.setFromTriplets(trips.begin(), trips.end());
    return R;
  }

  void edge_shapes(double t, double* N) const {
    if (order_ == 1) {
      N[0] = 1.0 - t; N[1] = t; N[2] = 0.0;
    } else {
      N[0] = (1.0 - t) * (1.0 - 2.0 * t);
      N[1] = t * (2.0 * t - 1.0);
      N[2] = 4.0 * t * (1.0 - t);
    }
  }
  void edge_shape_derivs(double t, double* dN) const {
    if (order_ == 1) {
      dN[0] = -1.0; dN[1] = 1.0; dN[2] = 0.0;
    } else {
      dN[0] = 4.0 * t - 3.0;
      dN[1] = 4.0 * t - 1.0;
      dN[2] = 4.0 - 8.0 * t;
    }
  }

  void assemble_volume() {
    const std::size_t nt = mesh_->triangles.size();
    const int nthreads = std::max(1, global_thread_count());
    std::vector<std::vector<Triplet>> ktr(nthreads), mtr(nthreads);
    parallel_chunks(nt, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
      auto& kt = ktr[chunk];
      auto& mt = mtr[chunk];
      const auto& rule = quad::tri_rule(2 * order_);
      double N[6];
      double dN[6][3];
      for (std::size_t t = lo; t < hi; ++t) {
        const auto nodes = mesh_->element_nodes(t);
        const double A = mesh_->signed_area(t);
        Vec2 gl[3];
        bary_gradients(t, gl);
        double Ke[6][6] = {}, Me[6][6] = {};
        for (const auto& q : rule) {
          shape::values(order_, q.l0, q.l1, q.l2, N);
          shape::grads_bary(order_, q.l0, q.l1, q.l2, dN);
          Vec2 g[6];
          for (int a = 0; a < nloc_; ++a)
            g[a] = {dN[a][0] * gl[0][0] + dN[a][1] * gl[1][0] + dN[a][2] * gl[2][0],
                    dN[a][0] * gl[0][1] + dN[a][1] * gl[1][1] + dN[a][2] * gl[2][1]};
          for (int a = 0; a < nloc_; ++a)
            for (int b = 0; b < nloc_; ++b) {
              Ke[a][b] += q.w * A * dot(g[a], g[b]);
              Me[a][b] += q.w * A * N[a] * N[b];
            }
        }
        for (int a = 0; a < nloc_; ++a)
          for (int b = 0; b < nloc_; ++b) {
            kt.emplace_back(nodes[a], nodes[b], Ke[a][b]);
            mt.emplace_back(nodes[a], nodes[b], Me[a][b]);
          }
      }
    });
    std::vector<Triplet> kall, mall;
    for (int c = 0; c < nthreads; ++c) {
      kall.insert(kall.end(), ktr[c].begin(), ktr[c].end());
      mall.insert(mall.end(), mtr[c].begin(), mtr[c].end());
    }
    K_.resize(n_, n_);
    K_.setFromTriplets(kall.begin(), kall.end());
    M_.resize(n_, n_);
    M_.setFromTriplets(mall.begin(), mall.end());
  }

  void build_boundary() {
    // order the boundary chains: TOP/BOTTOM by abscissa, WALL by height
    for (int tg = 0; tg < 3; ++tg) {
      std::vector<std::pair<double, int>> items;  // (sort key, node)
      std::vector<char> seen(n_, 0);
      const BoundaryTag tag = static_cast<BoundaryTag>(tg);
      for (const auto& e : mesh_->boundary) {
        if (e.tag != tag) continue;
        int ids[3] = {e.v0, e.v1, order_ == 2 ? mesh_->edge_node(e.v0, e.v1) : -1};
        const int nn = order_ == 1 ? 2 : 3;
        for (int k = 0; k < nn; ++k) {
          if (seen[ids[k]]) continue;
          seen[ids[k]] = 1;
          const Vec2 p = mesh_->node_coord(ids[k]);
          items.emplace_back(tag == BoundaryTag::wall ? p[1] : p[0], ids[k]);
        }
      }
      std::sort(items.begin(), items.end());
      auto& nl = tag_nodes_[tg];
      auto& px = tag_param_[tg];
      auto& al = tag_arclen_[tg];
      nl.clear(); px.clear(); al.clear();
      double s = 0.0;
      Vec2 prev{};
      for (std::size_t k = 0; k < items.size(); ++k) {
        nl.push_back(items[k].second);
        px.push_back(items[k].first);
        const Vec2 p = mesh_->node_coord(items[k].second);
        if (k > 0) s += norm(p - prev);
        prev = p;
        al.push_back(s);
      }
      // boundary mass matrix on the chain ordering
      std::map<int, int> local;
      for (std::size_t k = 0; k < nl.size(); ++k) local[nl[k]] = static_cast<int>(k);
      std::vector<Triplet> trips;
      const auto& gl = gauss_legendre(4);
      for (const auto& e : mesh_->boundary) {
        if (e.tag != tag) continue;
        const Vec2 &a = mesh_->vertices[e.v0], &b = mesh_->vertices[e.v1];
        const double len = norm(b - a);
        int ids[3] = {e.v0, e.v1, order_ == 2 ? mesh_->edge_node(e.v0, e.v1) : -1};
        const int nn = order_ == 1 ? 2 : 3;
        for (const auto& [xi, w] : gl) {
          const double t = 0.5 * (xi + 1.0);
          double Ne[3];
          edge_shapes(t, Ne);
          for (int r = 0; r < nn; ++r)
            for (int cdx = 0; cdx < nn; ++cdx)
              trips.emplace_back(local[ids[r]], local[ids[cdx]],
                                 0.5 * w * len * Ne[r] * Ne[cdx]);
        }
      }
      bmass_[tg].resize(nl.size(), nl.size());
      bmass_[tg].setFromTriplets(trips.begin(), trips.end());
    }
    // polygonal arclength of bottom nodes from the left end (corner)
    for (std::size_t k = 0; k < tag_nodes_[1].size(); ++k)
      bottom_arclen_[tag_nodes_[1][k]] = tag_arclen_[1][k];
  }

  Eigen::VectorXd boundary_mass_solve(BoundaryTag tag, const Eigen::VectorXd& r) const {
    Eigen::SimplicialLDLT<SpMat> ldlt(bmass_[static_cast<int>(tag)]);
    if (ldlt.info() != Eigen::Success)
      throw solver_error("FemSystem: boundary mass factorization failed");
    return ldlt.solve(r);
  }

  const Mesh* mesh_;
  const CornerDomain* domain_;
  int order_, nloc_;
  std::size_t n_;
  SpMat K_, M_;
  std::array<std::vector<int>, 3> tag_nodes_;
  std::array<std::vector<double>, 3> tag_param_;
  std::array<std::vector<double>, 3> tag_arclen_;
  std::array<SpMat, 3> bmass_;
  std::map<int, double> bottom_arclen_;
  mutable std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_cache_;
  mutable std::vector<int> cached_fixed_;
  mutable std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> mass_ldlt_;
};

/// Pointwise transfer of a nodal field onto a new mesh; nearest-element
/// clamping within about one edge length, error beyond that.
inline ScalarField transfer_field(const ScalarField& f, const Mesh& old_mesh,
                                  const CornerDomain& old_domain, const Mesh& new_mesh) {
  f.check();
  FemSystem fs(old_mesh, old_domain);
  MeshLocator loc(old_mesh);
  double hmax = 0.0;
  for (const auto& e : old_mesh.boundary)
    hmax = std::max(hmax, norm(old_mesh.vertices[e.v0] - old_mesh.vertices[e.v1]));
  ScalarField out;
  out.mesh = &new_mesh;
  out.units = f.units;
  out.coeffs.resize(new_mesh.n_nodes());
  for (std::size_t i = 0; i < new_mesh.n_nodes(); ++i) {
    const auto [tri, lam] = loc.locate(new_mesh.node_coord(static_cast<int>(i)), hmax);
    out.coeffs[i] = fs.eval(f, tri, lam);
  }
  return out;
}

}  // namespace capwave

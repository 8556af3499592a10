/// @file elliptic.hpp
/// @brief The elliptic subproblems: mixed Dirichlet/oblique-Neumann BVP,
///        harmonic extension, Dirichlet-zero inverse Laplacian, the
///        Dirichlet-Neumann operator and the two-sided Neumann system.
///
/// All traces that live on the bottom or feed the DN operator are extracted
/// variationally (dual flux against lifted trace test functions); pointwise
/// gradients are never trusted near the contact corner.
#pragma once

#include "capwave/fem.hpp"

namespace capwave {

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using SpaceFn = std::function<double(const Vec2&)>;
using ElemFn = std::function<double(int, const Vec2&)>;

/// Mixed boundary-value problem
///   Laplace(u) = h,   u|TOP = f,   (d/dn + b0 d/dtau) u|BOTTOM = g,
/// wall sides natural (homogeneous Neumann unless wall data supplied).
struct MixedBVPSpec {
  SpaceFn source;          // h; null means 0
  ElemFn source_elem;      // element-aware alternative to `source`
  SpaceFn dirichlet_top;   // f; null means 0
  SpaceFn neumann_bottom;  // g; null means 0
  std::function<double(double)> oblique_b0;  // b0(arclength from corner); null = 0
  SpaceFn neumann_wall;    // optional inhomogeneous wall flux (benchmarks)
};

namespace detail {
inline Eigen::VectorXd mixed_rhs(const FemSystem& sys, const MixedBVPSpec& spec) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(sys.n_nodes());
  if (spec.source_elem)
    F -= sys.load_volume_elem(spec.source_elem);
  else if (spec.source)
    F -= sys.load_volume(spec.source);
  if (spec.neumann_bottom) F += sys.load_boundary(BoundaryTag::bottom, spec.neumann_bottom);
  if (spec.neumann_wall) F += sys.load_boundary(BoundaryTag::wall, spec.neumann_wall);
  return F;
}
}  // namespace detail

inline ScalarField solve_mixed(const FemSystem& sys, const MixedBVPSpec& spec) {
  Eigen::VectorXd F = detail::mixed_rhs(sys, spec);
  const auto& top = sys.tag_nodes(BoundaryTag::top);
  Eigen::VectorXd fvals = Eigen::VectorXd::Zero(top.size());
  if (spec.dirichlet_top)
    for (std::size_t k = 0; k < top.size(); ++k)
      fvals[k] = spec.dirichlet_top(sys.mesh().node_coord(top[k]));

  ScalarField u;
  u.mesh = &sys.mesh();
  if (spec.oblique_b0) {
    SpMat A = sys.stiffness() + sys.oblique_form(spec.oblique_b0);
    u.coeffs = sys.solve_constrained(A, F, top, fvals, /*symmetric=*/false,
                                     /*cacheable=*/false);
  } else {
    u.coeffs = sys.solve_constrained(sys.stiffness(), F, top, fvals,
                                     /*symmetric=*/true, /*cacheable=*/true);
  }
  u.check();
  return u;
}

/// Harmonic extension: Laplace(Hf)=0, Hf|TOP=f, zero bottom flux.
inline ScalarField harmonic_extension(const FemSystem& sys, const SpaceFn& f_top) {
  MixedBVPSpec spec;
  spec.dirichlet_top = f_top;
  return solve_mixed(sys, spec);
}

/// Harmonic extension from nodal trace values on the TOP chain.
inline ScalarField harmonic_extension(const FemSystem& sys, const Eigen::VectorXd& top_vals) {
  const auto& top = sys.tag_nodes(BoundaryTag::top);
  if (top_vals.size() != static_cast<Eigen::Index>(top.size()))
    throw data_error("harmonic_extension: trace length mismatch");
  ScalarField u;
  u.mesh = &sys.mesh();
  u.coeffs = sys.solve_constrained(sys.stiffness(), Eigen::VectorXd::Zero(sys.n_nodes()),
                                   top, top_vals, true, true);
  u.check();
  return u;
}

/// Inverse Laplacian with zero TOP trace: Laplace(u)=h, u|TOP=0, du/dn|BOTTOM=g.
inline ScalarField laplace_inverse(const FemSystem& sys, const SpaceFn& h,
                                   const SpaceFn& g_bottom) {
  MixedBVPSpec spec;
  spec.source = h;
  spec.neumann_bottom = g_bottom;
  return solve_mixed(sys, spec);
}

inline ScalarField laplace_inverse_elem(const FemSystem& sys, const ElemFn& h,
                                        const SpaceFn& g_bottom) {
  MixedBVPSpec spec;
  spec.source_elem = h;
  spec.neumann_bottom = g_bottom;
  return solve_mixed(sys, spec);
}

/// Dual-consistent normal flux of an already-computed field on a tagged
/// boundary; h is the interior source of the PDE the field solves (null = 0).
inline BoundaryTrace boundary_flux(const FemSystem& sys, const ScalarField& u,
                                   BoundaryTag tag, const SpaceFn& h = nullptr) {
  Eigen::VectorXd L = Eigen::VectorXd::Zero(sys.n_nodes());
  if (h) L -= sys.load_volume(h);
  return sys.boundary_flux(tag, u.coeffs, L);
}

/// Dirichlet-Neumann operator: Nf = d/dn of the harmonic extension on TOP.
inline BoundaryTrace dn_operator(const FemSystem& sys, const SpaceFn& f_top) {
  ScalarField u = harmonic_extension(sys, f_top);
  return sys.boundary_flux(BoundaryTag::top, u.coeffs,
                           Eigen::VectorXd::Zero(sys.n_nodes()));
}

inline BoundaryTrace dn_operator(const FemSystem& sys, const Eigen::VectorXd& top_vals) {
  ScalarField u = harmonic_extension(sys, top_vals);
  return sys.boundary_flux(BoundaryTag::top, u.coeffs,
                           Eigen::VectorXd::Zero(sys.n_nodes()));
}

/// Two-sided Neumann problem
///   Laplace(u) = h,  du/dn|TOP = f,  du/dn|BOTTOM = g,
/// with the compatibility defect projected out of f and the constant fixed
/// by the mean-zero gauge (Lagrange multiplier).
inline ScalarField solve_neumann(const FemSystem& sys, const SpaceFn& f_top_flux,
                                 const SpaceFn& g_bottom_flux, const SpaceFn& h = nullptr,
                                 double compat_tol = 1e-6) {
  const std::size_t n = sys.n_nodes();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(n);
  if (h) F -= sys.load_volume(h);
  if (f_top_flux) F += sys.load_boundary(BoundaryTag::top, f_top_flux);
  if (g_bottom_flux) F += sys.load_boundary(BoundaryTag::bottom, g_bottom_flux);

  // compatibility: sum of all load entries equals -int h + int f + int g
  const double imbalance = F.sum();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < F.size(); ++i) scale += std::abs(F[i]);
  if (std::abs(imbalance) > compat_tol * std::max(1.0, scale))
    throw data_error("solve_neumann: incompatible Neumann data");
  // project out the defect by a uniform correction of the TOP flux
  const auto& topM = sys.boundary_mass(BoundaryTag::top);
  const double top_len = Eigen::VectorXd::Ones(topM.rows()).dot(
      topM * Eigen::VectorXd::Ones(topM.cols()));
  const auto& top = sys.tag_nodes(BoundaryTag::top);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(top.size());
  Eigen::VectorXd corr = topM * ones;  // integral of each top trace function
  for (std::size_t k = 0; k < top.size(); ++k)
    F[top[k]] -= imbalance / top_len * corr[k];

  // bordered system for the mean-zero gauge
  Eigen::VectorXd c = sys.mass() * Eigen::VectorXd::Ones(n);
  std::vector<Triplet> trips;
  const SpMat& K = sys.stiffness();
  for (int col = 0; col < K.outerSize(); ++col)
    for (SpMat::InnerIterator it(K, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (std::size_t i = 0; i < n; ++i) {
    trips.emplace_back(static_cast<int>(i), static_cast<int>(n), c[i]);
    trips.emplace_back(static_cast<int>(n), static_cast<int>(i), c[i]);
  }
  SpMat A(n + 1, n + 1);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = F;
  rhs[n] = 0.0;
  Eigen::SparseLU<SpMat> lu(A);
  if (lu.info() != Eigen::Success)
    throw solver_error("solve_neumann: factorization failed");
  Eigen::VectorXd sol = lu.solve(rhs);
  ScalarField u;
  u.mesh = &sys.mesh();
  u.coeffs = sol.head(n);
  u.check();
  return u;
}

}  // namespace capwave

#pragma once
// Null frames, curvature decompositions, and Bel-Robinson densities.

#include "nullcone/metric.hpp"

namespace nullcone {

// g-orthonormal spatial triad from Gram-Schmidt on the coordinate basis,
// processed in coordinate order. Throws DegenerateMetric on collapse.
std::array<Vec3, 3> spatial_triad(const Mat3& g);

// Past-directed null vector with g(l, T) = 1 and unit g-norm spatial part
// pointing along omega (components w.r.t. the triad). omega must be unit.
Vec4 initial_null_vector(const MetricSample& s, const Vec3& omega);

struct NullFrame {
  Vec4 L{};     // outgoing null, g(L, T) = 1/phi
  Vec4 Lbar{};  // incoming null, g(L, Lbar) = -2, orthogonal to e1, e2
  Vec4 e1{}, e2{};
};

// Frame completion at a point: e1, e2 span the plane g-orthogonal to both L
// and the observer T; Lbar = -phi^2 L - 2 phi T with phi = 1/g(T, L).
NullFrame null_frame(const MetricSample& s, const Vec4& L);

// Frame completion from a prescribed tangent pair (projected off L and
// orthonormalized); Lbar is solved to be null, orthogonal to e1, e2, and
// normalized against L. Throws FrameDegeneracy when the pair collapses.
NullFrame null_frame_from(const MetricSample& s, const Vec4& L, const Vec4& a1,
                          const Vec4& a2);

struct NullCurvatureComponents {
  Mat2 alpha{};       // R(L, e_a, L, e_b)
  Vec2 beta{};        // 1/2 R(e_a, L, Lbar, L)
  double rho = 0.0;   // 1/4 R(Lbar, L, Lbar, L)
  double sigma = 0.0; // 1/4 *R(Lbar, L, Lbar, L)
  Vec2 betabar{};     // 1/2 R(e_a, Lbar, Lbar, L)
  Mat2 alphabar{};    // R(Lbar, e_a, Lbar, e_b)
  double alpha_trace = 0.0;  // recorded; vanishes for vacuum samples
};

NullCurvatureComponents null_decomposition(const MetricSample& s,
                                           const NullFrame& f);

struct EHDecomposition {
  Mat3 E{};  // R(f_a, T, f_b, T)
  Mat3 H{};  // *R(f_a, T, f_b, T)
  std::array<Vec3, 3> triad{};
};

EHDecomposition electric_magnetic(const MetricSample& s);

// Rebuilds lowered frame curvature components from E and H through the
// vacuum relations; returns max abs deviation from the sample's curvature
// expressed in the same frame. Near zero only for vacuum samples.
double curvature_reconstruction_residual(const MetricSample& s,
                                         const EHDecomposition& eh);

// Dense contraction Q(A, B, C, D) of the Bel-Robinson tensor.
double bel_robinson_contract(const MetricSample& s, const Vec4& A,
                             const Vec4& B, const Vec4& C, const Vec4& D);

struct BelRobinsonDensity {
  double q_principal = 0.0;  // quartic in the null components, nonnegative
  double q_remainder = 0.0;  // cross terms from T - T0
  double q_total = 0.0;
};

// Flux density -Q(T, T, T, L) split into the principal quartic evaluated on
// the null components and the remainder driven by phi - 1 and psi.
// T is reconstructed from (phi, psi) in the frame; throws NonTimelikeT if
// that reconstruction is not unit timelike.
BelRobinsonDensity bel_robinson_density(const MetricSample& s,
                                        const NullFrame& f,
                                        const NullCurvatureComponents& c,
                                        double phi, const Vec2& psi);

}  // namespace nullcone

#include "nullcone/frames.hpp"

#include <cmath>
#include <cstring>

namespace nullcone {
namespace {

double dot_g3(const Mat3& g, const Vec3& a, const Vec3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += g[i][j] * a[i] * b[j];
  return s;
}

double dot_g4(const Mat4& g4, const Vec4& a, const Vec4& b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += g4[i][j] * a[i] * b[j];
  return s;
}

// Expresses the lowered curvature in the basis columns of B: out[abcd] =
// R(b_a, b_b, b_c, b_d). One index transformed per pass.
void transform_curvature(const double in[4][4][4][4], const Vec4 basis[4],
                         double out[4][4][4][4]) {
  static thread_local double t1[4][4][4][4], t2[4][4][4][4];
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double s = 0.0;
          for (int m = 0; m < 4; ++m) s += basis[a][m] * in[m][b][c][d];
          t1[a][b][c][d] = s;
        }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double s = 0.0;
          for (int m = 0; m < 4; ++m) s += basis[b][m] * t1[a][m][c][d];
          t2[a][b][c][d] = s;
        }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double s = 0.0;
          for (int m = 0; m < 4; ++m) s += basis[c][m] * t2[a][b][m][d];
          t1[a][b][c][d] = s;
        }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double s = 0.0;
          for (int m = 0; m < 4; ++m) s += basis[d][m] * t1[a][b][c][m];
          out[a][b][c][d] = s;
        }
}

}  // namespace

std::array<Vec3, 3> spatial_triad(const Mat3& g) {
  std::array<Vec3, 3> t{};
  Vec3 basis[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int k = 0; k < 3; ++k) {
    Vec3 v = basis[k];
    for (int m = 0; m < k; ++m) {
      double proj = dot_g3(g, v, t[m]);
      for (int i = 0; i < 3; ++i) v[i] -= proj * t[m][i];
    }
    double nrm2 = dot_g3(g, v, v);
    if (!(nrm2 > 1e-24))
      throw Error(ErrorCode::DegenerateMetric,
                  "triad Gram-Schmidt collapsed at vector " + std::to_string(k));
    double inv = 1.0 / std::sqrt(nrm2);
    for (int i = 0; i < 3; ++i) t[k][i] = v[i] * inv;
  }
  return t;
}

Vec4 initial_null_vector(const MetricSample& s, const Vec3& omega) {
  double onorm = std::sqrt(omega[0] * omega[0] + omega[1] * omega[1] +
                           omega[2] * omega[2]);
  if (std::abs(onorm - 1.0) > 1e-10)
    throw Error(ErrorCode::NullNormalizationFailed, "direction not unit");
  auto triad = spatial_triad(s.jet.g);
  Vec4 l{};
  l[0] = -1.0 / s.jet.n;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i) l[i + 1] += omega[a] * triad[a][i];
  // Contract: g(l, T) = 1 and g(l, l) = 0 with T the unit foliation normal.
  Vec4 T = s.observer();
  double c1 = dot_g4(s.g4, l, T);
  double c2 = dot_g4(s.g4, l, l);
  if (std::abs(c1 - 1.0) > 1e-9 || std::abs(c2) > 1e-9)
    throw Error(ErrorCode::NullNormalizationFailed,
                "null normalization residual too large");
  return l;
}

NullFrame null_frame(const MetricSample& s, const Vec4& L) {
  Vec4 T = s.observer();
  double gLT = dot_g4(s.g4, L, T);
  if (std::abs(gLT) < 1e-12)
    throw Error(ErrorCode::FrameDegeneracy, "g(L,T) vanishes");
  double phi = 1.0 / gLT;

  // Candidate seeds: the spatial triad lifted to spacetime.
  auto triad = spatial_triad(s.jet.g);
  NullFrame f;
  f.L = L;
  int found = 0;
  Vec4 e[2];
  for (int k = 0; k < 3 && found < 2; ++k) {
    Vec4 c{0, triad[k][0], triad[k][1], triad[k][2]};
    // Project into the plane orthogonal to both T and L: c + aL + bT.
    double b = -dot_g4(s.g4, c, L) / gLT;
    double a = (-dot_g4(s.g4, c, T) - b * dot_g4(s.g4, T, T)) / gLT;
    Vec4 v;
    for (int i = 0; i < 4; ++i) v[i] = c[i] + a * L[i] + b * T[i];
    for (int m = 0; m < found; ++m) {
      double proj = dot_g4(s.g4, v, e[m]);
      for (int i = 0; i < 4; ++i) v[i] -= proj * e[m][i];
    }
    double nrm2 = dot_g4(s.g4, v, v);
    if (nrm2 > 1e-12) {
      double inv = 1.0 / std::sqrt(nrm2);
      for (int i = 0; i < 4; ++i) e[found][i] = v[i] * inv;
      ++found;
    }
  }
  if (found < 2)
    throw Error(ErrorCode::FrameDegeneracy, "could not complete tangent pair");
  f.e1 = e[0];
  f.e2 = e[1];
  for (int i = 0; i < 4; ++i) f.Lbar[i] = -phi * phi * L[i] - 2.0 * phi * T[i];
  return f;
}

NullFrame null_frame_from(const MetricSample& s, const Vec4& L, const Vec4& a1,
                          const Vec4& a2) {
  NullFrame f;
  f.L = L;
  Vec4 seeds[2] = {a1, a2};
  Vec4 e[2];
  int found = 0;
  for (int k = 0; k < 2; ++k) {
    Vec4 v = seeds[k];
    for (int m = 0; m < found; ++m) {
      double proj = dot_g4(s.g4, v, e[m]);
      for (int i = 0; i < 4; ++i) v[i] -= proj * e[m][i];
    }
    double nrm2 = dot_g4(s.g4, v, v);
    if (!(nrm2 > 1e-16))
      throw Error(ErrorCode::FrameDegeneracy, "tangent pair collapsed");
    double inv = 1.0 / std::sqrt(nrm2);
    for (int i = 0; i < 4; ++i) e[found][i] = v[i] * inv;
    ++found;
  }
  f.e1 = e[0];
  f.e2 = e[1];

  Vec4 T = s.observer();
  Vec4 V = T;
  for (int m = 0; m < 2; ++m) {
    double proj = dot_g4(s.g4, T, e[m]);
    for (int i = 0; i < 4; ++i) V[i] -= proj * e[m][i];
  }
  double gVL = dot_g4(s.g4, V, L);
  if (std::abs(gVL) < 1e-12)
    throw Error(ErrorCode::FrameDegeneracy, "completion vector null against L");
  double beta = -2.0 / gVL;
  double alpha = -beta * dot_g4(s.g4, V, V) / (2.0 * gVL);
  for (int i = 0; i < 4; ++i) f.Lbar[i] = alpha * L[i] + beta * V[i];
  return f;
}

NullCurvatureComponents null_decomposition(const MetricSample& s,
                                           const NullFrame& f) {
  static thread_local double dual[4][4][4][4];
  dual_curvature(s, dual);
  const Vec4& L = f.L;
  const Vec4& Lb = f.Lbar;
  const Vec4 e[2] = {f.e1, f.e2};
  NullCurvatureComponents c;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      c.alpha[a][b] = contract4(s.riemann, L, e[a], L, e[b]);
      c.alphabar[a][b] = contract4(s.riemann, Lb, e[a], Lb, e[b]);
    }
    c.beta[a] = 0.5 * contract4(s.riemann, e[a], L, Lb, L);
    c.betabar[a] = 0.5 * contract4(s.riemann, e[a], Lb, Lb, L);
  }
  // Symmetrize alpha blocks (exact up to roundoff by pair symmetry).
  c.alpha[0][1] = c.alpha[1][0] = 0.5 * (c.alpha[0][1] + c.alpha[1][0]);
  c.alphabar[0][1] = c.alphabar[1][0] = 0.5 * (c.alphabar[0][1] + c.alphabar[1][0]);
  c.rho = 0.25 * contract4(s.riemann, Lb, L, Lb, L);
  c.sigma = 0.25 * contract4(dual, Lb, L, Lb, L);
  c.alpha_trace = c.alpha[0][0] + c.alpha[1][1];
  return c;
}

EHDecomposition electric_magnetic(const MetricSample& s) {
  static thread_local double dual[4][4][4][4];
  dual_curvature(s, dual);
  EHDecomposition eh;
  eh.triad = spatial_triad(s.jet.g);
  Vec4 T = s.observer();
  Vec4 fvec[3];
  for (int a = 0; a < 3; ++a)
    fvec[a] = Vec4{0, eh.triad[a][0], eh.triad[a][1], eh.triad[a][2]};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      eh.E[a][b] = contract4(s.riemann, fvec[a], T, fvec[b], T);
      eh.H[a][b] = contract4(dual, fvec[a], T, fvec[b], T);
    }
  return eh;
}

double curvature_reconstruction_residual(const MetricSample& s,
                                         const EHDecomposition& eh) {
  Vec4 basis[4];
  basis[0] = s.observer();
  for (int a = 0; a < 3; ++a)
    basis[a + 1] = Vec4{0, eh.triad[a][0], eh.triad[a][1], eh.triad[a][2]};
  static thread_local double rf[4][4][4][4];
  transform_curvature(s.riemann, basis, rf);

  double model[4][4][4][4];
  std::memset(model, 0, sizeof(model));
  const Mat3& E = eh.E;
  const Mat3& H = eh.H;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      model[a + 1][0][b + 1][0] = E[a][b];
      model[0][a + 1][0][b + 1] = E[a][b];
      model[a + 1][0][0][b + 1] = -E[a][b];
      model[0][a + 1][b + 1][0] = -E[a][b];
    }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        double v = 0.0;
        for (int m = 0; m < 3; ++m) v -= levi_civita3(a, b, m) * H[m][c];
        model[a + 1][b + 1][c + 1][0] = v;
        model[a + 1][b + 1][0][c + 1] = -v;
        model[c + 1][0][a + 1][b + 1] = v;
        model[0][c + 1][a + 1][b + 1] = -v;
      }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double del_ac = (a == c) ? 1.0 : 0.0;
          double del_bd = (b == d) ? 1.0 : 0.0;
          double del_ad = (a == d) ? 1.0 : 0.0;
          double del_bc = (b == c) ? 1.0 : 0.0;
          model[a + 1][b + 1][c + 1][d + 1] = del_ac * E[b][d] +
                                              del_bd * E[a][c] -
                                              del_ad * E[b][c] -
                                              del_bc * E[a][d];
        }
  double worst = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d)
          worst = std::max(worst, std::abs(rf[a][b][c][d] - model[a][b][c][d]));
  return worst;
}

double bel_robinson_contract(const MetricSample& s, const Vec4& A,
                             const Vec4& B, const Vec4& C, const Vec4& D) {
  static thread_local double dual[4][4][4][4];
  dual_curvature(s, dual);
  double q = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const double (*R)[4][4][4] =
        pass == 0 ? s.riemann : dual;
    double U[4][4], V[4][4];
    for (int l = 0; l < 4; ++l)
      for (int m = 0; m < 4; ++m) {
        double u = 0.0, v = 0.0;
        for (int a = 0; a < 4; ++a) {
          if (A[a] == 0.0 && B[a] == 0.0) continue;
          for (int c = 0; c < 4; ++c) {
            double r = R[a][l][c][m];
            if (r == 0.0) continue;
            u += A[a] * C[c] * r;
            v += B[a] * D[c] * r;
          }
        }
        U[l][m] = u;
        V[l][m] = v;
      }
    for (int l = 0; l < 4; ++l)
      for (int m = 0; m < 4; ++m)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            q += U[l][m] * V[a][b] * s.g4inv[l][a] * s.g4inv[m][b];
  }
  return q;
}

BelRobinsonDensity bel_robinson_density(const MetricSample& s,
                                        const NullFrame& f,
                                        const NullCurvatureComponents& c,
                                        double phi, const Vec2& psi) {
  double psi2 = psi[0] * psi[0] + psi[1] * psi[1];
  Vec4 T{}, T0{}, X{};
  for (int i = 0; i < 4; ++i) {
    T[i] = -0.5 * phi * (1.0 + psi2) * f.L[i] - 0.5 / phi * f.Lbar[i] +
           psi[0] * f.e1[i] + psi[1] * f.e2[i];
    T0[i] = -0.5 * (f.L[i] + f.Lbar[i]);
    X[i] = T[i] - T0[i];
  }
  double gTT = dot_g4(s.g4, T, T);
  if (std::abs(gTT + 1.0) > 1e-6)
    throw Error(ErrorCode::NonTimelikeT,
                "reconstructed observer not unit timelike");

  BelRobinsonDensity d;
  double a2 = 0.0, b2 = 0.0, bb2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    b2 += c.beta[i] * c.beta[i];
    bb2 += c.betabar[i] * c.betabar[i];
    for (int j = 0; j < 2; ++j) a2 += c.alpha[i][j] * c.alpha[i][j];
  }
  d.q_principal = 0.25 * a2 + 1.5 * b2 +
                  1.5 * (c.rho * c.rho + c.sigma * c.sigma) + 0.5 * bb2;

  double xnorm = std::abs(X[0]) + std::abs(X[1]) + std::abs(X[2]) +
                 std::abs(X[3]);
  if (xnorm > 1e-15) {
    double rem = 2.0 * bel_robinson_contract(s, X, T0, T0, f.L) +
                 bel_robinson_contract(s, T0, T0, X, f.L) +
                 bel_robinson_contract(s, X, X, T0, f.L) +
                 2.0 * bel_robinson_contract(s, X, T0, X, f.L) +
                 bel_robinson_contract(s, X, X, X, f.L);
    d.q_remainder = -rem;
  }
  d.q_total = d.q_principal + d.q_remainder;
  return d;
}

}  // namespace nullcone

#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "nullcone/frames.hpp"

using namespace nullcone;

namespace {

// Flat-space sample with prescribed lapse and spatial metric (no curvature).
MetricSample flat_sample(double n, const Mat3& g) {
  MetricSample s;
  s.p = {0, {0, 0, 0, 0}};
  s.jet.n = n;
  s.jet.g = g;
  s.g4 = Mat4{};
  s.g4[0][0] = -n * n;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.g4[i + 1][j + 1] = g[i][j];
  s.g4inv = Mat4{};
  s.g4inv[0][0] = -1.0 / (n * n);
  Mat3 gi = inverse(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.g4inv[i + 1][j + 1] = gi[i][j];
  return s;
}

// Builds a curvature tensor on the Minkowski background from symmetric
// traceless E and symmetric traceless H through the vacuum relations; this is
// the independent model the production decomposition is checked against.
MetricSample synthetic_vacuum(const Mat3& E, const Mat3& H) {
  MetricSample s = flat_sample(1.0, identity3());
  auto& R = s.riemann;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      R[a + 1][0][b + 1][0] = E[a][b];
      R[0][a + 1][0][b + 1] = E[a][b];
      R[a + 1][0][0][b + 1] = -E[a][b];
      R[0][a + 1][b + 1][0] = -E[a][b];
    }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        double v = 0.0;
        for (int m = 0; m < 3; ++m) v -= levi_civita3(a, b, m) * H[m][c];
        R[a + 1][b + 1][c + 1][0] = v;
        R[a + 1][b + 1][0][c + 1] = -v;
        R[c + 1][0][a + 1][b + 1] = v;
        R[0][c + 1][a + 1][b + 1] = -v;
      }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double del_ac = a == c, del_bd = b == d, del_ad = a == d,
                 del_bc = b == c;
          R[a + 1][b + 1][c + 1][d + 1] = del_ac * E[b][d] + del_bd * E[a][c] -
                                          del_ad * E[b][c] - del_bc * E[a][d];
        }
  return s;
}

Mat3 random_sym_traceless(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) m[i][j] = m[j][i] = u(rng);
  double tr = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
  for (int i = 0; i < 3; ++i) m[i][i] -= tr;
  return m;
}

double bianchi_violation(const MetricSample& s) {
  double worst = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          const auto& R = s.riemann;
          worst = std::max(worst, std::abs(R[a][b][c][d] + R[a][c][d][b] +
                                           R[a][d][b][c]));
          worst = std::max(worst, std::abs(R[a][b][c][d] + R[b][a][c][d]));
          worst = std::max(worst, std::abs(R[a][b][c][d] - R[c][d][a][b]));
        }
  return worst;
}

void check_frame_invariants(const MetricSample& s, const NullFrame& f) {
  CHECK(std::abs(dot(s.g4, f.L, f.L)) < 1e-10);
  CHECK(std::abs(dot(s.g4, f.Lbar, f.Lbar)) < 1e-10);
  CHECK(dot(s.g4, f.L, f.Lbar) == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(std::abs(dot(s.g4, f.L, f.e1)) < 1e-10);
  CHECK(std::abs(dot(s.g4, f.L, f.e2)) < 1e-10);
  CHECK(std::abs(dot(s.g4, f.Lbar, f.e1)) < 1e-10);
  CHECK(std::abs(dot(s.g4, f.Lbar, f.e2)) < 1e-10);
  CHECK(dot(s.g4, f.e1, f.e1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(dot(s.g4, f.e2, f.e2) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(dot(s.g4, f.e1, f.e2)) < 1e-10);
}

}  // namespace

TEST_CASE("spatial triad orthonormalizes anisotropic metrics") {
  Mat3 g{{{4, 0, 0}, {0, 9, 0}, {0, 0, 1}}};
  auto t = spatial_triad(g);
  CHECK(t[0][0] == doctest::Approx(0.5));
  CHECK(t[1][1] == doctest::Approx(1.0 / 3.0));
  CHECK(t[2][2] == doctest::Approx(1.0));
  Mat3 skew{{{2, 0.3, -0.1}, {0.3, 1.5, 0.2}, {-0.1, 0.2, 3.0}}};
  auto u = spatial_triad(skew);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      CHECK(dot(skew, u[a], u[b]) ==
            doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("initial null vector satisfies its two defining contractions") {
  MetricSample mink = flat_sample(1.0, identity3());
  Vec4 l = initial_null_vector(mink, {1, 0, 0});
  CHECK(l[0] == doctest::Approx(-1.0));
  CHECK(l[1] == doctest::Approx(1.0));
  CHECK(l[2] == 0.0);
  CHECK(l[3] == 0.0);

  Mat3 g{{{1.3, 0.2, 0.0}, {0.2, 0.9, -0.1}, {0.0, -0.1, 1.8}}};
  MetricSample s = flat_sample(1.7, g);
  Vec3 omega = normalized(Vec3{0.3, -0.8, 0.5});
  Vec4 lv = initial_null_vector(s, omega);
  Vec4 T = s.observer();
  CHECK(dot(s.g4, lv, T) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(dot(s.g4, lv, lv)) < 1e-12);
  CHECK(lv[0] < 0.0);  // past directed
}

TEST_CASE("null frame completion invariants and volume form") {
  Mat3 g{{{1.3, 0.2, 0.0}, {0.2, 0.9, -0.1}, {0.0, -0.1, 1.8}}};
  MetricSample s = flat_sample(1.25, g);
  Vec4 L = initial_null_vector(s, normalized(Vec3{0.2, 0.5, -0.7}));
  NullFrame f = null_frame(s, L);
  check_frame_invariants(s, f);

  // Volume form contraction eps(L, Lbar, e1, e2) = +-2.
  double vol = 0.0;
  double dens = s.jet.n * std::sqrt(det(s.jet.g));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d)
          vol += dens * levi_civita4(a, b, c, d) * f.L[a] * f.Lbar[b] *
                 f.e1[c] * f.e2[d];
  CHECK(std::abs(vol) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("minkowski frame matches the closed form") {
  MetricSample s = flat_sample(1.0, identity3());
  Vec4 L{-1, 1, 0, 0};
  NullFrame f = null_frame(s, L);
  CHECK(f.Lbar[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(f.Lbar[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(f.Lbar[2]) < 1e-14);
  CHECK(std::abs(f.Lbar[3]) < 1e-14);
}

TEST_CASE("frame completion from a prescribed tangent pair") {
  MetricSample s = flat_sample(1.0, identity3());
  Vec4 L{-1, 1, 0, 0};
  NullFrame f = null_frame_from(s, L, {0, 0, 1, 0.2}, {0, 0, -0.1, 1});
  check_frame_invariants(s, f);
}

TEST_CASE("synthetic vacuum curvature satisfies all algebraic identities") {
  std::mt19937 rng(42);
  MetricSample s = synthetic_vacuum(random_sym_traceless(rng),
                                    random_sym_traceless(rng));
  CHECK(bianchi_violation(s) < 1e-12);
  // Ricci flat.
  for (int b = 0; b < 4; ++b)
    for (int d = 0; d < 4; ++d) {
      double r = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) r += s.g4inv[a][c] * s.riemann[a][b][c][d];
      CHECK(std::abs(r) < 1e-12);
    }
}

TEST_CASE("electric/magnetic extraction round-trips the synthetic model") {
  std::mt19937 rng(7);
  Mat3 E0 = random_sym_traceless(rng);
  Mat3 H0 = random_sym_traceless(rng);
  MetricSample s = synthetic_vacuum(E0, H0);
  EHDecomposition eh = electric_magnetic(s);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(eh.E[i][j] == doctest::Approx(E0[i][j]).epsilon(1e-11));
      CHECK(eh.H[i][j] == doctest::Approx(H0[i][j]).epsilon(1e-11));
    }
  CHECK(curvature_reconstruction_residual(s, eh) < 1e-11);
}

TEST_CASE("curvature norm equals the E/H energy density in vacuum") {
  std::mt19937 rng(11);
  Mat3 E0 = random_sym_traceless(rng);
  Mat3 H0 = random_sym_traceless(rng);
  MetricSample s = synthetic_vacuum(E0, H0);
  std::vector<double> comps;
  comps.reserve(256);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) comps.push_back(s.riemann[a][b][c][d]);
  double r2 = riemannian_norm(comps, 4);
  double eh2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      eh2 += E0[i][j] * E0[i][j] + H0[i][j] * H0[i][j];
  CHECK(r2 * r2 == doctest::Approx(eh2).epsilon(1e-8));
}

TEST_CASE("double dual negates the curvature") {
  std::mt19937 rng(13);
  MetricSample s = synthetic_vacuum(random_sym_traceless(rng),
                                    random_sym_traceless(rng));
  double d1[4][4][4][4], d2[4][4][4][4];
  dual_curvature(s, d1);
  MetricSample s2 = s;
  std::memcpy(s2.riemann, d1, sizeof(d1));
  dual_curvature(s2, d2);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d)
          CHECK(d2[a][b][c][d] ==
                doctest::Approx(-s.riemann[a][b][c][d]).epsilon(1e-10));
}

TEST_CASE("null decomposition is linear in the curvature") {
  std::mt19937 rng(17);
  Mat3 E1 = random_sym_traceless(rng), H1 = random_sym_traceless(rng);
  Mat3 E2 = random_sym_traceless(rng), H2 = random_sym_traceless(rng);
  Mat3 E12{}, H12{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      E12[i][j] = E1[i][j] + E2[i][j];
      H12[i][j] = H1[i][j] + H2[i][j];
    }
  MetricSample sa = synthetic_vacuum(E1, H1);
  MetricSample sb = synthetic_vacuum(E2, H2);
  MetricSample sc = synthetic_vacuum(E12, H12);
  Vec4 L = initial_null_vector(sa, normalized(Vec3{0.6, -0.2, 0.75}));
  NullFrame f = null_frame(sa, L);
  auto ca = null_decomposition(sa, f);
  auto cb = null_decomposition(sb, f);
  auto cc = null_decomposition(sc, f);
  CHECK(cc.rho == doctest::Approx(ca.rho + cb.rho).epsilon(1e-11));
  CHECK(cc.sigma == doctest::Approx(ca.sigma + cb.sigma).epsilon(1e-11));
  for (int a = 0; a < 2; ++a) {
    CHECK(cc.beta[a] == doctest::Approx(ca.beta[a] + cb.beta[a]).epsilon(1e-11));
    CHECK(cc.betabar[a] ==
          doctest::Approx(ca.betabar[a] + cb.betabar[a]).epsilon(1e-11));
    for (int b = 0; b < 2; ++b) {
      CHECK(cc.alpha[a][b] ==
            doctest::Approx(ca.alpha[a][b] + cb.alpha[a][b]).epsilon(1e-11));
      CHECK(cc.alphabar[a][b] ==
            doctest::Approx(ca.alphabar[a][b] + cb.alphabar[a][b])
                .epsilon(1e-11));
    }
  }
  CHECK(std::abs(ca.alpha_trace) < 1e-11);  // vacuum tracelessness
}

TEST_CASE("flat samples give identically zero densities") {
  MetricSample s = flat_sample(1.0, identity3());
  Vec4 L = initial_null_vector(s, {0, 0, 1});
  NullFrame f = null_frame(s, L);
  auto c = null_decomposition(s, f);
  auto d = bel_robinson_density(s, f, c, 1.0, {0.0, 0.0});
  CHECK(d.q_principal == 0.0);
  CHECK(d.q_remainder == 0.0);
  CHECK(d.q_total == 0.0);
}

TEST_CASE("principal quartic equals the dense contraction at the vertex frame") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    MetricSample s = synthetic_vacuum(random_sym_traceless(rng),
                                      random_sym_traceless(rng));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec3 w = normalized(Vec3{u(rng), u(rng), u(rng)});
    Vec4 L = initial_null_vector(s, w);
    NullFrame f = null_frame(s, L);
    auto c = null_decomposition(s, f);
    auto d = bel_robinson_density(s, f, c, 1.0, {0.0, 0.0});
    Vec4 T0;
    for (int i = 0; i < 4; ++i) T0[i] = -0.5 * (f.L[i] + f.Lbar[i]);
    double dense = -bel_robinson_contract(s, T0, T0, T0, f.L);
    CHECK(d.q_remainder == 0.0);
    CHECK(d.q_total == doctest::Approx(dense).epsilon(1e-9));
    CHECK(d.q_total >= -1e-12);
  }
}

TEST_CASE("tilted observer density matches the dense contraction in vacuum") {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 6; ++trial) {
    MetricSample s = synthetic_vacuum(random_sym_traceless(rng),
                                      random_sym_traceless(rng));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec4 L = initial_null_vector(s, normalized(Vec3{u(rng), u(rng), u(rng)}));
    NullFrame f = null_frame(s, L);
    auto c = null_decomposition(s, f);
    double phi = 1.0 + 0.25 * u(rng);
    Vec2 psi{0.2 * u(rng), 0.2 * u(rng)};
    auto d = bel_robinson_density(s, f, c, phi, psi);
    double psi2 = psi[0] * psi[0] + psi[1] * psi[1];
    Vec4 T;
    for (int i = 0; i < 4; ++i)
      T[i] = -0.5 * phi * (1.0 + psi2) * f.L[i] - 0.5 / phi * f.Lbar[i] +
             psi[0] * f.e1[i] + psi[1] * f.e2[i];
    double dense = -bel_robinson_contract(s, T, T, T, f.L);
    CHECK(d.q_total == doctest::Approx(dense).epsilon(1e-9));
    CHECK(d.q_total >= -1e-12);  // positivity for unit timelike T, past L
  }
}

TEST_CASE("corrupted frames are rejected") {
  std::mt19937 rng(31);
  MetricSample s = synthetic_vacuum(random_sym_traceless(rng),
                                    random_sym_traceless(rng));
  Vec4 L = initial_null_vector(s, {0, 1, 0});
  NullFrame f = null_frame(s, L);
  auto c = null_decomposition(s, f);
  NullFrame bad = f;
  for (int i = 0; i < 4; ++i) bad.e1[i] *= 2.0;
  bool threw = false;
  try {
    bel_robinson_density(s, bad, c, 1.0, {0.3, 0.0});
  } catch (const Error& e) {
    threw = true;
    CHECK(e.code() == ErrorCode::NonTimelikeT);
  }
  CHECK(threw);
}

#include <cmath>
#include <memory>

#include "doctest.h"
#include "nullcone/metric.hpp"

using namespace nullcone;

namespace {

double max_riemann_abs(const MetricSample& s) {
  double m = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d)
          m = std::max(m, std::abs(s.riemann[a][b][c][d]));
  return m;
}

double ricci_max_abs(const MetricSample& s) {
  double m = 0.0;
  for (int b = 0; b < 4; ++b)
    for (int d = 0; d < 4; ++d) {
      double r = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) r += s.g4inv[a][c] * s.riemann[a][b][c][d];
      m = std::max(m, std::abs(r));
    }
  return m;
}

double symmetry_violation(const MetricSample& s) {
  double m = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          const auto& R = s.riemann;
          m = std::max(m, std::abs(R[a][b][c][d] + R[b][a][c][d]));
          m = std::max(m, std::abs(R[a][b][c][d] + R[a][b][d][c]));
          m = std::max(m, std::abs(R[a][b][c][d] - R[c][d][a][b]));
          m = std::max(m, std::abs(R[a][b][c][d] + R[a][c][d][b] +
                                   R[a][d][b][c]));
        }
  return m;
}

}  // namespace

TEST_CASE("minkowski sample is exactly flat") {
  auto f = make_field("minkowski", {});
  MetricSample s = sample(*f, {0, {-0.2, 0.3, 0.7, -1.1}});
  CHECK(s.g4[0][0] == doctest::Approx(-1.0));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) CHECK(s.gamma[a][b][c] == 0.0);
  CHECK(max_riemann_abs(s) == 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(s.k[i][j] == 0.0);
}

TEST_CASE("flat torus jets are periodic") {
  FamilyParams p;
  p.period = 1.0;
  auto f = make_field("flat_torus", p);
  Vec4 x{-0.1, 0.3, 0.6, 0.9};
  Vec4 shifted{-0.1, 1.3, 2.6, -0.1};
  MetricSample a = sample(*f, {0, x});
  MetricSample b = sample(*f, {0, shifted});
  CHECK(a.jet.n == b.jet.n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(a.jet.g[i][j] == b.jet.g[i][j]);
  CHECK(max_riemann_abs(a) == 0.0);
}

TEST_CASE("exp_contracting matches the closed-form fundamental form") {
  FamilyParams p;
  p.contraction_rate = 1.0;
  auto f = make_field("exp_contracting", p);
  double t = 0.3;
  MetricSample s = sample(*f, {0, {t, 0.2, -0.4, 0.1}});
  double e = std::exp(-2.0 * t);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double d = (i == j) ? 1.0 : 0.0;
      CHECK(s.jet.g[i][j] == doctest::Approx(e * d).epsilon(1e-14));
      // Artifact convention k = -(2/n) dt g = 4 e^{-2t} delta.
      CHECK(s.k[i][j] == doctest::Approx(4.0 * e * d).epsilon(1e-12));
      // Exact transport form: pi_ij = (1/n) dt g_ij = -2 e^{-2t} delta.
      CHECK(s.pi_lie[i + 1][j + 1] ==
            doctest::Approx(-2.0 * e * d).epsilon(1e-12));
    }
  CHECK(s.pi_lie[0][0] == 0.0);
}

TEST_CASE("spherical cylinder curvature sits in the sphere sector") {
  auto f = make_field("spherical_cylinder", {});
  double th = 1.1;
  MetricSample s = sample(*f, {0, {0.0, th, 2.0, 0.5}});
  double s2 = std::sin(th) * std::sin(th);
  // R_{theta phi theta phi} = sin^2 theta for the unit sphere block.
  CHECK(s.riemann[1][2][1][2] == doctest::Approx(s2).epsilon(1e-12));
  // Any component touching t or z vanishes.
  for (int b = 0; b < 4; ++b)
    for (int c = 0; c < 4; ++c)
      for (int d = 0; d < 4; ++d) {
        CHECK(s.riemann[0][b][c][d] == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(s.riemann[3][b][c][d] == doctest::Approx(0.0).epsilon(1e-14));
      }
  CHECK(symmetry_violation(s) < 1e-12);
}

TEST_CASE("lapse bump jets match finite differences") {
  FamilyParams p;
  p.amplitude = 0.08;
  p.width = 0.3;
  p.center = {0.5, 0.5, 0.5};
  p.period = 1.0;
  auto analytic = make_field("torus_lapse_bump", p);
  auto shared = std::shared_ptr<const MetricField>(
      make_field("torus_lapse_bump", p).release());
  auto fd = finite_difference_provider(shared, 1e-3);
  Vec4 x{-0.2, 0.42, 0.61, 0.37};
  MetricJet ja = analytic->jet(0, x);
  MetricJet jf = fd->jet(0, x);
  CHECK(ja.n == doctest::Approx(jf.n).epsilon(1e-12));
  for (int m = 0; m < 4; ++m)
    CHECK(ja.dn[m] == doctest::Approx(jf.dn[m]).epsilon(1e-8));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      CHECK(ja.d2n[a][b] - jf.d2n[a][b] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("cylinder lapse bump is chart covariant and FD consistent") {
  FamilyParams p;
  p.amplitude = 0.05;
  p.width = 0.5;
  auto f = make_field("spherical_cylinder", p);
  // A point in the overlap region of both charts.
  Vec4 x0{0.0, 1.0, 0.4, 0.3};
  Vec4 x1 = f->transition(0, 1, x0);
  double n0, n1;
  Mat3 g0, g1;
  f->primal(0, x0, n0, g0);
  f->primal(1, x1, n1, g1);
  CHECK(n0 == doctest::Approx(n1).epsilon(1e-12));
  CHECK(n0 > 1.0);

  auto shared =
      std::shared_ptr<const MetricField>(make_field("spherical_cylinder", p).release());
  auto fd = finite_difference_provider(shared, 1e-3);
  for (int chart : {0, 1}) {
    Vec4 x = chart == 0 ? x0 : x1;
    MetricJet ja = f->jet(chart, x);
    MetricJet jf = fd->jet(chart, x);
    for (int m = 0; m < 4; ++m)
      CHECK(ja.dn[m] - jf.dn[m] == doctest::Approx(0.0).epsilon(1e-8));
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        CHECK(ja.d2n[a][b] - jf.d2n[a][b] ==
              doctest::Approx(0.0).epsilon(1e-6));
        for (int i = 0; i < 3; ++i)
          for (int jj = 0; jj < 3; ++jj)
            CHECK(ja.d2g[a][b][i][jj] - jf.d2g[a][b][i][jj] ==
                  doctest::Approx(0.0).epsilon(1e-4));
      }
  }
}

TEST_CASE("torus wave satisfies curvature symmetries and Bianchi") {
  FamilyParams p;
  p.amplitude = 0.01;
  p.period = 1.0;
  p.omega = 2.0;
  auto f = make_field("torus_wave", p);
  MetricSample s = sample(*f, {0, {0.12, 0.33, 0.71, 0.52}});
  CHECK(symmetry_violation(s) < 1e-9);
  CHECK(max_riemann_abs(s) > 1e-4);  // actually curved
}

TEST_CASE("deformation tensor components for a static lapse bump") {
  FamilyParams p;
  p.amplitude = 0.08;
  p.width = 0.3;
  p.center = {0.5, 0.5, 0.5};
  p.period = 1.0;
  auto f = make_field("torus_lapse_bump", p);
  Vec4 x{0.0, 0.42, 0.61, 0.37};
  MetricSample s = sample(*f, {0, x});
  MetricJet j = f->jet(0, x);
  for (int i = 0; i < 3; ++i) {
    // Frame-component convention pi(T, f_i) = d_i n / n (here g = delta).
    CHECK(s.pi_frame[0][i + 1] ==
          doctest::Approx(j.dn[i + 1] / j.n).epsilon(1e-12));
    // Exact transport form pi(T, d_i) = d_i n.
    CHECK(s.pi_lie[0][i + 1] == doctest::Approx(j.dn[i + 1]).epsilon(1e-12));
    for (int k2 = 0; k2 < 3; ++k2)
      CHECK(s.pi_lie[i + 1][k2 + 1] == 0.0);  // static spatial metric
  }
}

TEST_CASE("riemannian norm conventions") {
  // Rank 1: plain component norm over the 4 spacetime slots.
  CHECK(riemannian_norm({0.0, 3.0, 4.0, 0.0}, 1) == doctest::Approx(5.0));
  // Rank 2: Frobenius over 4x4 components.
  std::vector<double> id4(16, 0.0);
  for (int i = 0; i < 4; ++i) id4[5 * i] = 1.0;
  CHECK(riemannian_norm(id4, 2) == doctest::Approx(2.0));
  // Unsupported component counts are rejected.
  CHECK_THROWS_AS(riemannian_norm({1.0, 2.0}, 1), Error);
}

TEST_CASE("budget audit passes Minkowski and flags a tight lapse bound") {
  auto f = make_field("minkowski", {});
  Budget b;
  auto rep = budget_audit(*f, b, 5);
  CHECK(rep.all_pass);

  FamilyParams p;
  p.amplitude = 0.6;  // lapse up to 1.6
  p.width = 0.3;
  p.center = {0.5, 0.5, 0.5};
  p.period = 1.0;
  auto bump = make_field("torus_lapse_bump", p);
  Budget tight;
  tight.N0 = 1.2;
  auto rep2 = budget_audit(*bump, tight, 9);
  CHECK_FALSE(rep2.all_pass);
  bool lapse_flagged = false;
  for (const auto& c : rep2.checks)
    if (!c.pass && c.name.find("lapse") != std::string::npos)
      lapse_flagged = true;
  CHECK(lapse_flagged);
}

TEST_CASE("budget validation rejects nonpositive entries") {
  Budget b;
  b.R0 = -1.0;
  bool threw = false;
  try {
    b.validate();
  } catch (const Error& e) {
    threw = true;
    CHECK(e.code() == ErrorCode::ScenarioInvalid);
  }
  CHECK(threw);
}

TEST_CASE("finite-difference provider reproduces cylinder curvature") {
  auto shared = std::shared_ptr<const MetricField>(
      make_field("spherical_cylinder", {}).release());
  auto fd = finite_difference_provider(shared, 1e-3);
  SpacetimePoint p{0, {0.0, 1.1, 2.0, 0.5}};
  MetricSample sa = sample(*shared, p);
  MetricSample sf = sample(*fd, p);
  double worst = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d)
          worst = std::max(worst, std::abs(sa.riemann[a][b][c][d] -
                                           sf.riemann[a][b][c][d]));
  CHECK(worst < 1e-7);
}

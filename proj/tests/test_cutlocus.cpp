#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "nullcone/cutlocus.hpp"
#include "nullcone/oracles.hpp"

using namespace nullcone;

namespace {

std::shared_ptr<const MetricField> field_of(const std::string& name,
                                            FamilyParams par = {}) {
  return std::shared_ptr<const MetricField>(make_field(name, par));
}

ConeFan torus_fan(std::shared_ptr<const MetricField> field,
                  const SpacetimePoint& p, int level, double s_max) {
  RayOptions opt;
  opt.s_max = s_max;
  return trace_fan(field, p, level, opt, 0);
}

}  // namespace

TEST_CASE("minkowski fan has no crossings and beyond sentinels") {
  auto field = field_of("minkowski");
  SpacetimePoint p{0, {0.0, 0.0, 0.0, 0.0}};
  RayOptions ropt;
  ropt.s_max = 2.5;
  CutOptions copt;
  RadiusReport rep = injectivity_report(field, p, 3, ropt, copt, 0);
  CHECK(rep.events.empty());
  CHECK(rep.ell_star.beyond);
  CHECK(rep.ell_star_t.beyond);
  CHECK(rep.s_star.beyond);
  CHECK(rep.i_star.beyond);
}

TEST_CASE("flat torus cut locus at half the period") {
  FamilyParams par;
  par.period = 1.0;
  auto field = field_of("flat_torus", par);
  SpacetimePoint p{0, {0.0, 0.3, 0.3, 0.3}};
  RayOptions ropt;
  ropt.s_max = 0.9;
  ropt.with_jacobi = true;
  CutOptions copt;
  RadiusReport rep = injectivity_report(field, p, 3, ropt, copt, 0);

  REQUIRE(!rep.events.empty());
  CHECK(rep.ell_star_t.beyond == false);
  CHECK(rep.ell_star_t.value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(rep.ell_star.value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(rep.bar_ell_star_t < 0.05);

  const IntersectionEvent& first = rep.events.front();
  CHECK(std::abs(first.t_event + 0.5) < 1e-8);
  CHECK(first.windings_differ);
  CHECK(!first.near_conjugate);
  CHECK(opposite_angle_check(first) < 1e-6);
  CHECK(first.s_i == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(first.s_j == doctest::Approx(0.5).epsilon(1e-6));

  // no conjugate points on the flat torus: the min rule collapses to ell
  CHECK(rep.s_star.beyond);
  CHECK(!rep.i_star.beyond);
  CHECK(rep.i_star.value == rep.ell_star.value);
}

TEST_CASE("detector events match the all-pairs oracle on the torus") {
  FamilyParams par;
  par.period = 1.0;
  auto field = field_of("flat_torus", par);
  SpacetimePoint p{0, {0.0, 0.3, 0.3, 0.3}};
  ConeFan fan = torus_fan(field, p, 3, 0.8);

  CutOptions copt;
  std::vector<double> levels;
  for (double t = -0.05; t >= -0.62; t -= 0.05) levels.push_back(t);
  std::vector<IntersectionEvent> fast =
      detect_intersections(fan, levels, copt, 0);
  std::vector<IntersectionEvent> slow =
      all_pairs_intersections(fan, -0.62, 400, copt.match_tol, 0);

  REQUIRE(!fast.empty());
  REQUIRE(!slow.empty());
  CHECK(std::abs(fast.front().t_event - slow.front().t_event) < 1e-8);

  auto essential = [](const std::vector<IntersectionEvent>& evs) {
    std::set<std::pair<int, int>> keys;
    for (const IntersectionEvent& e : evs)
      if (e.t_event > -0.52) keys.insert({e.ray_i, e.ray_j});
    return keys;
  };
  CHECK(essential(fast) == essential(slow));
}

TEST_CASE("axis pairs carry the earliest torus events") {
  FamilyParams par;
  par.period = 1.0;
  auto field = field_of("flat_torus", par);
  SpacetimePoint p{0, {0.0, 0.5, 0.5, 0.5}};
  ConeFan fan = torus_fan(field, p, 2, 0.8);
  CutOptions copt;
  std::vector<double> levels;
  for (double t = -0.05; t >= -0.56; t -= 0.05) levels.push_back(t);
  std::vector<IntersectionEvent> evs = detect_intersections(fan, levels, copt, 0);
  REQUIRE(!evs.empty());
  for (const IntersectionEvent& e : evs) {
    if (e.t_event < -0.51) continue;
    // the meeting partners are exact grid antipodes along coordinate axes
    const Vec3& a = fan.grid->verts[e.ray_i];
    const Vec3& b = fan.grid->verts[e.ray_j];
    CHECK(fan.grid->antipode[e.ray_i] == e.ray_j);
    int axis_hits = 0;
    for (int k = 0; k < 3; ++k)
      if (std::abs(std::abs(a[k]) - 1.0) < 1e-12) ++axis_hits;
    CHECK(axis_hits == 1);
    CHECK(std::abs(a[0] + b[0]) < 1e-15);
  }
}

TEST_CASE("slab scan folds pointwise minima") {
  FamilyParams par;
  par.period = 1.0;
  auto field = field_of("flat_torus", par);
  std::vector<SpacetimePoint> pts = {{0, {0.0, 0.3, 0.3, 0.3}},
                                     {0, {0.25, 0.6, 0.4, 0.7}}};
  RayOptions ropt;
  ropt.s_max = 0.9;
  ropt.with_jacobi = true;
  CutOptions copt;
  SlabScan scan = slab_scan(field, pts, 2, ropt, copt, 0);
  REQUIRE(scan.reports.size() == 2);
  CHECK(!scan.min_ell_star_t.beyond);
  CHECK(scan.min_ell_star_t.value == doctest::Approx(0.5).epsilon(1e-6));
  double m = std::min(scan.reports[0].i_star.value,
                      scan.reports[1].i_star.value);
  CHECK(scan.min_i_star.value == doctest::Approx(m));
}

TEST_CASE("ball inclusion margins on exact minkowski") {
  auto field = field_of("minkowski");
  SpacetimePoint p{0, {0.0, 0.0, 0.0, 0.0}};
  BallCheckReport rep = ball_inclusion_check(field, p, -1.0, 0.01, 3, 0);
  CHECK(rep.audited_eps < 1e-14);
  CHECK(rep.inner_ok);
  CHECK(rep.outer_ok);
  CHECK(rep.annulus_ok);
  CHECK(rep.r_minus == doctest::Approx(0.97));
  CHECK(rep.r_plus == doctest::Approx(1.03));
  // straight-segment causality slack: 1 - (1-3e)^2 = 6e - 9e^2
  CHECK(rep.inner_margin ==
        doctest::Approx(6 * 0.01 - 9 * 0.0001).epsilon(1e-9));
  CHECK(rep.outer_margin > 0.0);
  CHECK(rep.annulus_margin > 0.0);

  BallCheckReport tight = ball_inclusion_check(field, p, -1.0, 0.001, 3, 0);
  CHECK(tight.inner_margin < rep.inner_margin);
  CHECK(tight.inner_margin > 0.0);
  CHECK(tight.outer_margin < rep.outer_margin);
}

TEST_CASE("ball inclusion audits the closeness budget") {
  FamilyParams par;
  par.amplitude = 0.05;
  par.width = 0.5;
  auto field = field_of("minkowski_lapse_bump", par);
  SpacetimePoint p{0, {0.0, 0.0, 0.0, 0.0}};
  // declared eps far below the actual lapse deviation on the patch
  CHECK_THROWS_AS(ball_inclusion_check(field, p, -1.0, 0.001, 2, 0),
                  const Error&);
  // honest declaration passes
  BallCheckReport rep = ball_inclusion_check(field, p, -1.0, 0.06, 2, 0);
  CHECK(rep.audited_eps <= 0.06);
  CHECK(rep.audited_eps > 0.01);
  CHECK(rep.inner_ok);
}


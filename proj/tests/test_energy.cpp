#include <doctest.h>

#include <cmath>
#include <memory>

#include "nullcone/energy.hpp"
#include "nullcone/oracles.hpp"

using namespace nullcone;

namespace {

std::shared_ptr<const MetricField> field_of(const std::string& name,
                                            FamilyParams par = {}) {
  return std::shared_ptr<const MetricField>(make_field(name, par));
}

const std::array<Interval, 3> kUnitBox{Interval{-1.0, 1.0},
                                       Interval{-1.0, 1.0},
                                       Interval{-1.0, 1.0}};

}  // namespace

TEST_CASE("slice grids demand a box on unbounded charts") {
  auto mink = field_of("minkowski");
  CHECK_THROWS_AS(make_slice_grid(*mink, 0, 0.0, 8), const Error&);
  SliceGrid grid = make_slice_grid(*mink, 0, 0.0, 8, kUnitBox);
  CHECK(grid.nodes.size() == 512);
  CHECK(grid.cell_measure == doctest::Approx(0.015625).epsilon(1e-12));
  CHECK(grid.nodes[0][0] == doctest::Approx(-0.875).epsilon(1e-12));
  CHECK(grid.nodes[1][2] == doctest::Approx(-0.625).epsilon(1e-12));
  for (double w : grid.dv_weights) CHECK(w == doctest::Approx(1.0));

  auto torus = field_of("flat_torus");
  SliceGrid tg = make_slice_grid(*torus, 0, 0.0, 8);
  CHECK(tg.box[0].lo == doctest::Approx(0.0));
  CHECK(tg.box[0].hi == doctest::Approx(1.0));
  CHECK(tg.nodes[0][0] == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK_THROWS_AS(make_slice_grid(*torus, 0, 0.0, 1), const Error&);
}

TEST_CASE("slice energy separates flat curved and static fields") {
  auto mink = field_of("minkowski");
  SliceGrid mg = make_slice_grid(*mink, 0, 0.0, 6, kUnitBox);
  CHECK(slice_energy(*mink, 0.0, mg) == 0.0);

  FamilyParams par;
  par.period = 1.0;
  par.amplitude = 0.05;
  par.width = 0.4;
  par.center = {0.5, 0.5, 0.5};
  auto bump = field_of("torus_lapse_bump", par);
  SliceGrid b8 = make_slice_grid(*bump, 0, 0.0, 8);
  SliceGrid b12 = make_slice_grid(*bump, 0, 0.0, 12);
  double q8 = slice_energy(*bump, 0.0, b8);
  double q12 = slice_energy(*bump, 0.0, b12);
  CHECK(q12 > 0.05);
  CHECK(std::abs(q8 - q12) < 0.05 * q12);

  // static product metric: no time components in the curvature at all
  auto cyl = field_of("spherical_cylinder");
  SliceGrid cg = make_slice_grid(*cyl, 0, 0.0, 8);
  CHECK(slice_energy(*cyl, 0.0, cg) == 0.0);
}

TEST_CASE("gronwall bound holds with the declared constant") {
  FamilyParams par;
  par.period = 1.0;
  par.amplitude = 0.02;
  par.omega = 2.0 * kPi;
  auto wave = field_of("torus_wave", par);
  Budget budget;
  SliceGrid grid = make_slice_grid(*wave, 0, 0.0, 12);
  EnergyReport rep = gronwall_check(*wave, budget, 0.0, 0.5, 10, grid);
  CHECK(rep.Q_of_t.size() == 11);
  CHECK(rep.verdict);
  double q0 = rep.Q_of_t.at(0.0);
  CHECK(q0 > 0.1);
  CHECK(rep.gronwall_bound.at(0.0) == doctest::Approx(q0));
  CHECK(rep.Q_of_t.at(0.25) > q0);        // the wave actually moves
  CHECK(rep.sup_pi.at(0.0) < 1e-12);      // d/dt a = 0 at t = 0
  CHECK(rep.sup_pi.at(0.25) > 1.0);
  CHECK(rep.gronwall_bound.rbegin()->second > 10.0 * q0);
  // the declared constant is not sharp on this wave
  CHECK(rep.budget_constant > 1.0);
  CHECK(rep.budget_constant < budget.c_gronwall);

  auto mink = field_of("minkowski");
  SliceGrid mg = make_slice_grid(*mink, 0, 0.0, 6, kUnitBox);
  EnergyReport triv = gronwall_check(*mink, budget, 0.0, 0.5, 5, mg);
  CHECK(triv.verdict);
  CHECK(triv.budget_constant == 0.0);
  for (const auto& [t, q] : triv.Q_of_t) CHECK(q == 0.0);
}

TEST_CASE("static fields keep the energy ratio at one") {
  Budget budget;

  FamilyParams par;
  par.period = 1.0;
  par.amplitude = 0.05;
  par.width = 0.4;
  par.center = {0.5, 0.5, 0.5};
  auto torus = field_of("torus_lapse_bump", par);
  SliceGrid tg = make_slice_grid(*torus, 0, 0.0, 10);
  EnergyReport trep = gronwall_check(*torus, budget, 0.0, 0.5, 5, tg);
  double tq0 = trep.Q_of_t.at(0.0);
  CHECK(tq0 > 0.05);
  for (const auto& [t, q] : trep.Q_of_t)
    CHECK(q / tq0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trep.verdict);
  CHECK(trep.budget_constant == 0.0);
  CHECK(trep.sup_pi.at(0.0) > 0.0);  // lapse gradient feeds pi_{0i}

  FamilyParams mpar;
  mpar.amplitude = 0.05;
  mpar.width = 0.5;
  auto mbump = field_of("minkowski_lapse_bump", mpar);
  SliceGrid mg = make_slice_grid(*mbump, 0, 0.0, 10, kUnitBox);
  EnergyReport mrep = gronwall_check(*mbump, budget, 0.0, 0.4, 4, mg);
  double mq0 = mrep.Q_of_t.at(0.0);
  CHECK(mq0 > 0.0);
  for (const auto& [t, q] : mrep.Q_of_t)
    CHECK(q / mq0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mrep.verdict);
}

TEST_CASE("metric equivalence matches the contraction closed form") {
  Budget budget;
  FamilyParams par;
  par.contraction_rate = 1.0;
  par.period = 1.0;
  auto field = field_of("exp_contracting", par);
  SliceGrid grid = make_slice_grid(*field, 0, 0.0, 8);
  EquivalenceReport eq = metric_equivalence(*field, budget, 0, 0.0, 0.1, 8, grid);
  // g = exp(-2t) delta with n = 1: n k has operator norm 4 and Frobenius
  // norm 4 sqrt(3), so the empirical constant over [0, 0.1] is exp(0.2),
  // the half-opnorm transport reproduces it exactly, and the Frobenius
  // budget version overshoots at exp(0.4 sqrt(3)).
  CHECK(eq.i0_measured == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eq.c_empirical == doctest::Approx(std::exp(0.2)).epsilon(1e-9));
  CHECK(eq.c_tight == doctest::Approx(std::exp(0.2)).epsilon(1e-9));
  CHECK(eq.c_predicted ==
        doctest::Approx(std::exp(0.4 * std::sqrt(3.0))).epsilon(1e-9));
  CHECK(eq.pass);
  CHECK(eq.margin > 0.7);

  auto torus = field_of("flat_torus");
  SliceGrid tg = make_slice_grid(*torus, 0, 0.0, 8);
  EquivalenceReport flat = metric_equivalence(*torus, budget, 0, 0.0, 0.5, 5, tg);
  CHECK(flat.c_empirical == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(flat.c_predicted == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(flat.c_tight == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(flat.pass);
}

TEST_CASE("volume radius on the torus follows the lattice closed form") {
  auto torus = field_of("flat_torus");
  VolumeOptions opt;
  opt.level = 4;
  VolumeRadiusReport rep =
      volume_radius(torus, 0.0, {{0, {0.0, 0.2, 0.3, 0.4}}}, 0.7, opt);
  REQUIRE(rep.points.size() == 1);
  const VolumeRadiusPoint& pt = rep.points[0];
  REQUIRE(pt.r_ladder.size() == 12);
  double flat3 = 4.0 * kPi / 3.0;
  for (std::size_t i = 0; i < pt.r_ladder.size(); ++i) {
    double r = pt.r_ladder[i];
    double oracle = torus_ball_volume(1.0, r) / (r * r * r);
    if (r < 0.5) {
      CHECK(pt.ratio[i] == doctest::Approx(flat3).epsilon(1e-12));
    } else {
      CHECK(pt.ratio[i] == doctest::Approx(oracle).epsilon(1e-3));
    }
  }
  CHECK(pt.ratio_monotone);
  CHECK(pt.r_vol == doctest::Approx(pt.ratio.back()).epsilon(1e-12));
  CHECK(pt.r_vol < 3.0);  // the overlap bite is well underway by r = 0.7 L
  CHECK(rep.slice_inf == doctest::Approx(pt.r_vol).epsilon(1e-12));

  auto mink = field_of("minkowski");
  VolumeRadiusReport flat =
      volume_radius(mink, 0.0, {{0, {0.0, 0.1, -0.2, 0.3}}}, 1.5, opt);
  for (double ratio : flat.points[0].ratio)
    CHECK(ratio == doctest::Approx(flat3).epsilon(1e-12));
  CHECK(flat.points[0].r_vol == doctest::Approx(flat3).epsilon(1e-12));
}

TEST_CASE("volume radius on curved slices") {
  double flat3 = 4.0 * kPi / 3.0;
  VolumeOptions opt;
  opt.level = 3;

  auto cyl = field_of("spherical_cylinder");
  VolumeRadiusReport rep =
      volume_radius(cyl, 0.0, {{0, {0.0, kPi / 2.0, 1.0, 0.0}}}, 0.8, opt);
  const VolumeRadiusPoint& pt = rep.points[0];
  // scalar curvature 2 gives a genuine Bishop deficit already at r = 0.05
  CHECK(pt.ratio.front() < flat3 - 1e-4);
  CHECK(pt.ratio.front() > flat3 - 2e-3);
  CHECK(pt.ratio_monotone);
  CHECK(pt.r_vol == doctest::Approx(pt.ratio.back()).epsilon(1e-12));
  CHECK(pt.r_vol > 3.9);
  CHECK(pt.r_vol < 4.02);

  // the t = 0 slice of the contracting family is exactly flat, so the
  // shooting path must reproduce the euclidean ratio at every radius
  FamilyParams par;
  par.contraction_rate = 1.0;
  par.period = 1.0;
  auto expc = field_of("exp_contracting", par);
  VolumeRadiusReport er =
      volume_radius(expc, 0.0, {{0, {0.0, 0.1, 0.2, 0.3}}}, 0.45, opt);
  for (double ratio : er.points[0].ratio)
    CHECK(ratio == doctest::Approx(flat3).epsilon(1e-9));
  CHECK(er.points[0].ratio_monotone);

  // a ball reaching into the hard polar exclusion is refused
  CHECK_THROWS_AS(
      volume_radius(cyl, 0.0, {{0, {0.0, 0.35, 1.0, 0.0}}}, 0.4, opt),
      const Error&);
}

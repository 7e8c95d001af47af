#pragma once

// Slice-level integrals: curvature energy Q(t), Gronwall comparison against
// the declared structural constant, metric-equivalence bounds, and volume
// radius of geodesic balls on a slice.

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "nullcone/metric.hpp"

namespace nullcone {

// Uniform cell-centered quadrature grid on the slice t = t_level of a chart.
struct SliceGrid {
  double t_level = 0.0;
  int chart = 0;
  std::array<int, 3> cells{};
  std::array<Interval, 3> box{};
  double cell_measure = 0.0;       // coordinate volume per node
  std::vector<Vec3> nodes;         // cell centers, z-fastest order
  std::vector<double> dv_weights;  // sqrt(det g) per node at t_level
};

// Periodic axes default to the fundamental cell; unbounded axes require the
// explicit box (UnboundedDomain otherwise).
SliceGrid make_slice_grid(
    const MetricField& field, int chart, double t_level, int resolution,
    const std::optional<std::array<Interval, 3>>& box = std::nullopt);

// Quadrature of (|E|^2 + |H|^2) sqrt(det g) over the grid nodes at t_level.
double slice_energy(const MetricField& field, double t_level,
                    const SliceGrid& grid, int workers = 0);

struct EnergyReport {
  std::map<double, double> Q_of_t;
  std::map<double, double> L2_curvature;    // sqrt(Q)
  std::map<double, double> gronwall_bound;  // Q(t0) exp(c N0 int sup|pi|)
  std::map<double, double> sup_pi;          // measured L-inf of pi per level
  double budget_constant = 0.0;             // tightest empirical c
  bool verdict = false;  // Q(t) <= bound at every ladder level
};

// Checks Q(t) <= Q(t0) exp(c N0 int_{t0}^t sup|pi|) on a uniform t-ladder,
// with c the declared budget constant and the integral by trapezoid.
EnergyReport gronwall_check(const MetricField& field, const Budget& budget,
                            double t_lo, double t_hi, int t_steps,
                            const SliceGrid& grid, int workers = 0);

struct EquivalenceReport {
  double i0_measured = 1.0;   // eigenvalue equivalence at the initial slice
  double c_empirical = 1.0;   // sup over (t,x) of max(eig_max, 1/eig_min)
  double c_predicted = 1.0;   // i0 exp(int sup |nk|_Frobenius)
  double c_tight = 1.0;       // i0 exp(1/2 int sup opnorm(nk))
  bool pass = false;
  double margin = 0.0;  // c_predicted - c_empirical
};

// Two-sided eigenvalue bound on g_ij over the slab against the transported
// Gronwall prediction from the measured |nk|.
EquivalenceReport metric_equivalence(const MetricField& field,
                                     const Budget& budget, int chart,
                                     double t_lo, double t_hi, int t_steps,
                                     const SliceGrid& grid, int workers = 0);

struct VolumeRadiusPoint {
  SpacetimePoint p;
  std::vector<double> r_ladder;  // log-spaced radii up to rho
  std::vector<double> ratio;     // |B_r| / r^3 per ladder entry
  double r_vol = 0.0;            // inf of the ratio over the ladder
  bool ratio_monotone = true;    // ratio nonincreasing in r
};

struct VolumeRadiusReport {
  std::vector<VolumeRadiusPoint> points;
  double slice_inf = 0.0;
};

struct VolumeOptions {
  int ladder = 12;          // log-spaced radii, rho/16 .. rho
  int level = 4;            // icosphere refinement for directions
  int steps_per_unit = 96;  // RK4 steps per unit arclength (curved path)
  int workers = 0;
};

// r_vol(p, rho) = inf_{r <= rho} |B_r(p)|/r^3 with geodesic balls on the
// slice t = t_level.  Spatially flat charts use the exact line-of-sight cut
// distances; curved charts shoot spatial geodesics with Jacobi area elements.
VolumeRadiusReport volume_radius(std::shared_ptr<const MetricField> field,
                                 double t_level,
                                 const std::vector<SpacetimePoint>& points,
                                 double rho, const VolumeOptions& opt = {});

}  // namespace nullcone

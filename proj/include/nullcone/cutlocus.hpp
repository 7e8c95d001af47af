#pragma once
// Fixed-t intersection detection between distinct rays of a cone fan, the
// cut/injectivity radius estimates built on it, and the geometric checks
// (opposite angles, Euclidean ball inclusions) at audited closeness.

#include <vector>

#include "nullcone/geodesics.hpp"

namespace nullcone {

struct IntersectionEvent {
  int ray_i = -1, ray_j = -1;  // fan vertex indices, i < j
  double t_event = 0.0;        // refined meeting time
  double s_i = 0.0, s_j = 0.0;  // affine parameters at the meeting
  double separation = 0.0;      // g-distance at the refined minimum
  double angle_at_q = 0.0;      // leaf-projected angle between velocities
  SpacetimePoint q;             // wrapped representative point
  std::array<long, 3> winding_i{}, winding_j{};
  bool windings_differ = false;
  bool near_conjugate = false;  // within tolerance of a Jacobi zero
  bool unresolved = false;      // within one edge of the angular floor
};

struct CutOptions {
  double match_tol = 1e-8;     // acceptance distance for a crossing
  double ladder_step = 0.05;   // t-ladder spacing in units of length_scale
  double angular_floor = 0.0;  // 0 = auto (2.5 x mean edge angle)
  double cluster_radius = 0.0;  // 0 = auto
};

// Scans the listed t-levels (descending from 0) for distinct-ray crossings.
// Broad phase hashes wrapped slice points per chart; near pairs are refined
// by minimizing the g-distance over the meeting time. Grid-adjacent pairs
// with equal windings below the angular floor approximate one geodesic and
// are excluded.
std::vector<IntersectionEvent> detect_intersections(
    const ConeFan& fan, const std::vector<double>& t_levels,
    const CutOptions& opt, int workers);

struct RadiusReport {
  int level = 0;
  OrBeyond s_star;      // first conjugate value (affine)
  OrBeyond ell_star;    // first cut value (affine)
  OrBeyond ell_star_t;  // first cut in time depth t(p) - t_event
  OrBeyond i_star;      // min(ell_star, s_star)
  double bar_s_star = 0.0;      // two-grid error estimates
  double bar_ell_star_t = 0.0;
  std::vector<IntersectionEvent> events;  // earliest first
};

RadiusReport injectivity_report(std::shared_ptr<const MetricField> field,
                                const SpacetimePoint& p, int level,
                                const RayOptions& ray_opt,
                                const CutOptions& cut_opt, int workers);

// Deviation of the meeting angle from pi; meaningful for the earliest event.
double opposite_angle_check(const IntersectionEvent& ev);

struct BallCheckReport {
  double eps = 0.0;          // declared closeness parameter
  double audited_eps = 0.0;  // measured closeness on the patch
  double t_level = 0.0;
  double r_minus = 0.0, r_plus = 0.0;  // (1 -+ 3 eps) n(p) |t - t(p)|
  bool inner_ok = false, outer_ok = false, annulus_ok = false;
  double inner_margin = 0.0;  // min causality slack of the straight segments
  double outer_margin = 0.0;  // min relative slack inside radius r_plus
  double annulus_margin = 0.0;  // min relative slack outside r_minus
};

BallCheckReport ball_inclusion_check(std::shared_ptr<const MetricField> field,
                                     const SpacetimePoint& p, double t_level,
                                     double eps, int level, int workers);

struct SlabScan {
  std::vector<SpacetimePoint> points;
  std::vector<RadiusReport> reports;
  OrBeyond min_i_star;
  OrBeyond min_ell_star_t;
};

SlabScan slab_scan(std::shared_ptr<const MetricField> field,
                   const std::vector<SpacetimePoint>& points, int level,
                   const RayOptions& ray_opt, const CutOptions& cut_opt,
                   int workers);

}  // namespace nullcone

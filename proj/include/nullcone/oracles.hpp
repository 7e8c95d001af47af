#pragma once

// Independent cross-check implementations: closed forms for the built-in
// families and brute-force counterparts of the optimized searches.  Tests and
// the verify command compare these against the primary code paths.

#include <memory>
#include <vector>

#include "nullcone/cutlocus.hpp"
#include "nullcone/frames.hpp"
#include "nullcone/geodesics.hpp"

namespace nullcone {

// Flux density -Q(T,T,T,v) contracted densely from the curvature sample,
// bypassing null frames and transport scalars entirely.
double dense_flux_density(const MetricSample& ms, const Vec4& v);

// O(N^2) intersection search over all ray pairs on a uniform t-ladder with
// local refinement; no spatial hashing, no probe shortcuts.
std::vector<IntersectionEvent> all_pairs_intersections(
    const ConeFan& fan, double t_deep, int t_scan, double match_tol,
    int workers = 0);

// Spherical cylinder closed forms (unit sphere, tangential = rays in the
// sphere directions, b = asin(omega_z) for mixed rays).
double cylinder_trchi_tangential(double s);
double cylinder_chihat_sq_tangential(double s);
double cylinder_det_tangential(double s);
double cylinder_det_mixed(double s, double b);

// First cut distance of the flat torus in direction w (period L all axes).
double torus_cut_distance(double L, const Vec3& w);

// Geodesic ball volume on the flat 3-torus from the nearest-image lattice
// sum (exact for r <= L/sqrt(2), before edge-cap overlaps).
double torus_ball_volume(double L, double r);

}  // namespace nullcone

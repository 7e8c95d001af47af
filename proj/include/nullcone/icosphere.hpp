#pragma once

// Quasi-uniform direction grids on S^2 by recursive icosahedron subdivision.
//
// The base solid is oriented so that the poles sit at ±z and one ring azimuth
// is chosen so the level>=1 grids contain (±1,0,0) exactly.  Vertices come in
// exact antipodal pairs at every level, which the intersection search relies
// on.  Construction is fully deterministic: same level, same bytes.

#include <vector>

#include "nullcone/core.hpp"

namespace nullcone {

struct Icosphere {
  int level = 0;
  std::vector<Vec3> verts;                  // unit direction per ray
  std::vector<std::array<int, 3>> faces;    // outward-wound triangles
  std::vector<double> weights;              // dual-cell solid angle, sums to 4*pi
  std::vector<std::vector<int>> neighbors;  // sorted adjacency per vertex
  std::vector<int> antipode;                // index of the exact opposite vertex

  static Icosphere build(int level);

  std::size_t size() const { return verts.size(); }

  // Mean geodesic edge length in radians; the grid resolution scale.
  double mean_edge_angle() const;
};

// Solid angle of the spherical triangle with unit corners a, b, c.
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace nullcone

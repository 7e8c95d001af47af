#include <cmath>
#include <set>

#include "doctest.h"
#include "nullcone/icosphere.hpp"

using namespace nullcone;

TEST_CASE("vertex and face counts per level") {
  int expected_v[5] = {12, 42, 162, 642, 2562};
  for (int level = 0; level <= 4; ++level) {
    Icosphere ico = Icosphere::build(level);
    CHECK(int(ico.verts.size()) == expected_v[level]);
    CHECK(int(ico.faces.size()) == 20 * (1 << (2 * level)));
  }
}

TEST_CASE("dual-cell weights are positive and sum to the full sphere") {
  for (int level = 0; level <= 4; ++level) {
    Icosphere ico = Icosphere::build(level);
    double sum = 0.0;
    for (double w : ico.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  }
}

TEST_CASE("antipodal map is exact") {
  for (int level : {0, 2, 3}) {
    Icosphere ico = Icosphere::build(level);
    for (std::size_t i = 0; i < ico.verts.size(); ++i) {
      int j = ico.antipode[i];
      REQUIRE(j >= 0);
      CHECK(ico.verts[j][0] == -ico.verts[i][0]);
      CHECK(ico.verts[j][1] == -ico.verts[i][1]);
      CHECK(ico.verts[j][2] == -ico.verts[i][2]);
      CHECK(ico.antipode[j] == int(i));
    }
  }
}

TEST_CASE("coordinate axis directions and the equator ring") {
  // Poles are exact at every level; +-x appears from level 1 and +-y from
  // level 2 up to normalization roundoff; the z=0 ring is exactly flat.
  for (int level : {1, 2, 3}) {
    Icosphere ico = Icosphere::build(level);
    int hits_z = 0, hits_x = 0, hits_y = 0, equator = 0;
    for (const Vec3& v : ico.verts) {
      if (v[0] == 0.0 && v[1] == 0.0 && std::abs(v[2]) == 1.0) ++hits_z;
      if (std::abs(v[0]) >= 1.0 - 1e-15 && std::abs(v[1]) < 1e-15 &&
          std::abs(v[2]) < 1e-15)
        ++hits_x;
      if (std::abs(v[1]) >= 1.0 - 1e-15 && std::abs(v[0]) < 1e-15 &&
          std::abs(v[2]) < 1e-15)
        ++hits_y;
      if (v[2] == 0.0) ++equator;
    }
    CHECK(hits_z == 2);
    CHECK(hits_x == 2);
    if (level >= 2) CHECK(hits_y == 2);
    CHECK(equator == 10 * (1 << (level - 1)));
  }
}

TEST_CASE("neighbor lists are symmetric with icosahedral degrees") {
  Icosphere ico = Icosphere::build(3);
  int deg5 = 0;
  for (std::size_t i = 0; i < ico.verts.size(); ++i) {
    const auto& nb = ico.neighbors[i];
    CHECK((nb.size() == 5 || nb.size() == 6));
    if (nb.size() == 5) ++deg5;
    for (int j : nb) {
      const auto& back = ico.neighbors[j];
      CHECK(std::find(back.begin(), back.end(), int(i)) != back.end());
    }
  }
  CHECK(deg5 == 12);
}

TEST_CASE("mean edge angle halves per level") {
  double prev = Icosphere::build(1).mean_edge_angle();
  for (int level = 2; level <= 4; ++level) {
    double cur = Icosphere::build(level).mean_edge_angle();
    CHECK(prev / cur == doctest::Approx(2.0).epsilon(0.05));
    prev = cur;
  }
}

TEST_CASE("spherical triangle area of an octant") {
  double a = spherical_triangle_area({1, 0, 0}, {0, 1, 0}, {0, 0, 1});
  CHECK(a == doctest::Approx(kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("deterministic rebuild") {
  Icosphere a = Icosphere::build(3);
  Icosphere b = Icosphere::build(3);
  CHECK(a.verts == b.verts);
  CHECK(a.weights == b.weights);
  CHECK(a.faces == b.faces);
}

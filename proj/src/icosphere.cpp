#include "nullcone/icosphere.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>

namespace nullcone {

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  double num = std::abs(dot(a, cross(b, c)));
  double den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
  return 2.0 * std::atan2(num, den);
}

namespace {

std::vector<Vec3> base_vertices() {
  // Poles on +-z; upper ring azimuths 18 + 72k degrees so that the level-1
  // subdivision produces (1,0,0) exactly; lower ring is the bitwise negation
  // of the upper ring, making every vertex's antipode exact.
  std::vector<Vec3> v;
  v.push_back({0.0, 0.0, 1.0});
  double h = 1.0 / std::sqrt(5.0);
  double r = 2.0 / std::sqrt(5.0);
  for (int k = 0; k < 5; ++k) {
    double az = (18.0 + 72.0 * k) * kPi / 180.0;
    v.push_back({r * std::cos(az), r * std::sin(az), h});
  }
  for (int k = 0; k < 5; ++k) {
    const Vec3& u = v[1 + k];
    v.push_back({-u[0], -u[1], -u[2]});
  }
  v.push_back({0.0, 0.0, -1.0});
  return v;
}

std::vector<std::array<int, 3>> base_faces() {
  // Vertex ids: 0 = north pole, 1..5 upper ring, 6..10 = -(1..5), 11 = south.
  // The lower-ring vertex below the gap between upper k and k+1 is the
  // negation of upper k+3 (azimuth 18+72k+180 = azimuth of -(k+3) ring slot).
  auto up = [](int k) { return 1 + ((k % 5) + 5) % 5; };
  auto lo = [&](int k) { return 5 + up(k + 3); };  // azimuth 54 + 72k
  std::vector<std::array<int, 3>> f;
  for (int k = 0; k < 5; ++k) f.push_back({0, up(k), up(k + 1)});
  for (int k = 0; k < 5; ++k) f.push_back({up(k), lo(k), up(k + 1)});
  for (int k = 0; k < 5; ++k) f.push_back({lo(k), lo(k + 1), up(k + 1)});
  for (int k = 0; k < 5; ++k) f.push_back({11, lo(k + 1), lo(k)});
  return f;
}

}  // namespace

Icosphere Icosphere::build(int level) {
  if (level < 0 || level > 8)
    throw Error(ErrorCode::LevelOutOfRange, "icosphere level out of range");
  Icosphere ico;
  ico.level = level;
  ico.verts = base_vertices();
  ico.faces = base_faces();

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Vec3& va = ico.verts[key.first];
      const Vec3& vb = ico.verts[key.second];
      Vec3 m = normalized(va + vb);
      int id = static_cast<int>(ico.verts.size());
      ico.verts.push_back(m);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(ico.faces.size() * 4);
    for (const auto& f : ico.faces) {
      int ab = mid(f[0], f[1]);
      int bc = mid(f[1], f[2]);
      int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    ico.faces = std::move(next);
  }

  std::size_t n = ico.verts.size();
  ico.weights.assign(n, 0.0);
  for (const auto& f : ico.faces) {
    double a =
        spherical_triangle_area(ico.verts[f[0]], ico.verts[f[1]], ico.verts[f[2]]);
    for (int c = 0; c < 3; ++c) ico.weights[f[c]] += a / 3.0;
  }

  std::vector<std::set<int>> adj(n);
  for (const auto& f : ico.faces)
    for (int c = 0; c < 3; ++c) {
      adj[f[c]].insert(f[(c + 1) % 3]);
      adj[f[c]].insert(f[(c + 2) % 3]);
    }
  ico.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    ico.neighbors[i].assign(adj[i].begin(), adj[i].end());

  // Antipode lookup via exact coordinate match (construction guarantees it).
  std::map<std::array<double, 3>, int> index;
  for (std::size_t i = 0; i < n; ++i)
    index.emplace(std::array<double, 3>{ico.verts[i][0], ico.verts[i][1],
                                        ico.verts[i][2]},
                  static_cast<int>(i));
  ico.antipode.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& v = ico.verts[i];
    auto it = index.find({-v[0], -v[1], -v[2]});
    if (it == index.end())
      throw Error(ErrorCode::FrameDegeneracy, "antipode map incomplete");
    ico.antipode[i] = it->second;
  }
  return ico;
}

double Icosphere::mean_edge_angle() const {
  std::set<std::pair<int, int>> edges;
  for (const auto& f : faces)
    for (int c = 0; c < 3; ++c)
      edges.insert(std::minmax(f[c], f[(c + 1) % 3]));
  double sum = 0.0;
  for (const auto& e : edges)
    sum += std::acos(std::clamp(dot(verts[e.first], verts[e.second]), -1.0, 1.0));
  return sum / static_cast<double>(edges.size());
}

}  // namespace nullcone

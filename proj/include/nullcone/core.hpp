#pragma once

// Small fixed-size linear algebra and shared utilities for the null-cone
// toolkit.  Everything here is value-typed and allocation-free so the hot
// paths (geodesic integration, curvature contractions) stay cheap and
// deterministic.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nullcone {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;
using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

//--- error handling ----------------------------------------------------------

enum class ErrorCode {
  PointOutsideAtlas,
  DegenerateMetric,
  RankUnsupported,
  FrameDegeneracy,
  FrameDrift,
  NonTimelikeT,
  NullNormalizationFailed,
  StepUnderflow,
  AtlasExit,
  LevelOutOfRange,
  ResolutionTooCoarse,
  AssumptionCViolated,
  DeltaBeyondInjectivity,
  BallExitsChart,
  UnboundedDomain,
  ScenarioInvalid,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

//--- Vec3 / Mat3 -------------------------------------------------------------

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double c, const Vec3& a) {
  return {c * a[0], c * a[1], c * a[2]};
}
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  if (n == 0.0) throw Error(ErrorCode::FrameDegeneracy, "zero vector");
  return {a[0] / n, a[1] / n, a[2] / n};
}

inline double dot(const Mat3& g, const Vec3& a, const Vec3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += g[i][j] * a[i] * b[j];
  return s;
}

inline Mat3 identity3() {
  Mat3 m{};
  m[0][0] = m[1][1] = m[2][2] = 1.0;
  return m;
}

inline double det(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Mat3 inverse(const Mat3& m) {
  double d = det(m);
  if (std::abs(d) < 1e-300)
    throw Error(ErrorCode::DegenerateMetric, "singular 3x3 matrix");
  Mat3 inv;
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
  return inv;
}

// Eigenvalues of a symmetric 3x3 matrix (ascending), via the trigonometric
// closed form; robust enough for SPD metric blocks.
std::array<double, 3> sym_eigenvalues(const Mat3& m);

//--- Vec4 / Mat4 -------------------------------------------------------------

inline Vec4 operator+(const Vec4& a, const Vec4& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
inline Vec4 operator-(const Vec4& a, const Vec4& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
inline Vec4 operator*(double c, const Vec4& a) {
  return {c * a[0], c * a[1], c * a[2], c * a[3]};
}
inline Vec4& operator+=(Vec4& a, const Vec4& b) {
  for (int i = 0; i < 4; ++i) a[i] += b[i];
  return a;
}

inline double dot(const Mat4& g, const Vec4& a, const Vec4& b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += g[i][j] * a[i] * b[j];
  return s;
}

inline Vec4 lower(const Mat4& g, const Vec4& v) {
  Vec4 w{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) w[i] += g[i][j] * v[j];
  return w;
}

Mat4 inverse(const Mat4& m);
double det(const Mat4& m);

inline Vec3 spatial(const Vec4& v) { return {v[1], v[2], v[3]}; }
inline Vec4 with_time(double t, const Vec3& x) { return {t, x[0], x[1], x[2]}; }

//--- misc --------------------------------------------------------------------

constexpr double kPi = 3.14159265358979323846;

// Signed permutation symbol on three indices (0-based).
inline int levi_civita3(int a, int b, int c) {
  return (a - b) * (b - c) * (c - a) / 2;
}

// Signed permutation symbol on four indices (0-based).
int levi_civita4(int a, int b, int c, int d);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// Runs fn(i) for i in [0, n) on `workers` threads.  Output must be written
// into per-index slots; reductions are always folded sequentially afterwards
// so results do not depend on the worker count.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace nullcone

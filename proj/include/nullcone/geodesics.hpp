#pragma once
// Null geodesic tracing, Jacobi transport, cone slices, and conjugacy scans.

#include <memory>
#include <vector>

#include "nullcone/frames.hpp"
#include "nullcone/icosphere.hpp"
#include "nullcone/metric.hpp"
#include "nullcone/ode.hpp"

namespace nullcone {

// Value that may lie beyond the scanned horizon (censored observation).
struct OrBeyond {
  double value = 0.0;
  bool beyond = false;
  double horizon = 0.0;  // scan horizon used when beyond is true
  static OrBeyond at(double v) { return {v, false, 0.0}; }
  static OrBeyond past(double h) { return {0.0, true, h}; }
};

double min_value(const OrBeyond& a, const OrBeyond& b);
OrBeyond min_or_beyond(const OrBeyond& a, const OrBeyond& b);

enum class FrameTransport { kParallel, kLeafCorrected };

struct RayOptions {
  double s_max = 3.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.25;
  double t_min = -1e300;     // stop when t(s) drops below
  bool with_jacobi = false;  // 32-state with Jacobi pair + frame
  FrameTransport frame = FrameTransport::kParallel;
};

enum class RayStop { kSMax, kTMin, kAtlasExit, kStepLimit };

struct RaySegment {
  int chart = 0;
  double s_begin = 0.0, s_end = 0.0;
  ode::DensePath path;
};

// A single past null geodesic. State layout per segment:
//   y[0..3] x, y[4..7] v; with Jacobi: y[8..11] J1, y[12..15] W1 (covariant
//   derivative of J1), y[16..19] J2, y[20..23] W2, y[24..27] e1, y[28..31] e2.
struct NullGeodesic {
  std::shared_ptr<const MetricField> field;
  SpacetimePoint origin;
  Vec3 omega{};        // initial direction in the triad at the origin
  int dim = 8;
  RayStop stop = RayStop::kSMax;
  double s_end = 0.0;
  double null_residual_max = 0.0;  // max |g(v,v)| seen at accepted steps
  std::vector<RaySegment> segments;

  int chart_at(double s) const;
  void eval(double s, double* y) const;         // y has dim entries
  SpacetimePoint point_at(double s) const;
  Vec4 velocity_at(double s) const;
  double t_at(double s) const;
  // Inverts the strictly decreasing t(s); throws AtlasExit when the level was
  // never reached before the ray stopped.
  double s_of_t(double t_level) const;
};

NullGeodesic trace_ray(std::shared_ptr<const MetricField> field,
                       const SpacetimePoint& p, const Vec3& omega,
                       const RayOptions& opt);

// Signed transverse determinant det g(J_a, ehat_b) at s (requires Jacobi).
double transverse_det(const NullGeodesic& ray, double s);

struct ConeFan {
  std::shared_ptr<const Icosphere> grid;
  std::vector<NullGeodesic> rays;  // aligned with grid->verts
};

ConeFan trace_fan(std::shared_ptr<const MetricField> field,
                  const SpacetimePoint& p, int level, const RayOptions& opt,
                  int workers);

struct SlicePoint {
  bool covered = false;
  double s = 0.0;
  SpacetimePoint point;       // raw chart coordinates (unwrapped)
  Vec4 velocity{};
  std::array<long, 3> winding{};  // periodic wrap counts of the spatial part
  double det_transverse = 0.0;    // fixed-s slices with Jacobi rays
  double area_element = 0.0;      // sqrt det Gram of the leaf variation
};

struct ConeSlice {
  bool fixed_s = true;
  double level = 0.0;  // s value or t value
  std::vector<SlicePoint> pts;
  double area = 0.0;
  double r_of_s = 0.0;  // sqrt(area / 4 pi)
  int covered_count = 0;
};

ConeSlice slice_fixed_s(const ConeFan& fan, double s);
ConeSlice slice_fixed_t(const ConeFan& fan, double t_level);

// Wraps coordinates of q into the fundamental cell of its chart and records
// winding counts for periodic axes.
Vec4 wrap_position(const MetricField& field, int chart, const Vec4& x,
                   std::array<long, 3>* winding);

struct ConjugacyPoint {
  int ray_index = -1;
  OrBeyond s_first;   // first zero of the transverse determinant
  double t_depth = 0.0;  // t(p) - t at the zero, when found
};

struct ConjugacyScan {
  OrBeyond s_star;       // min over the fan
  OrBeyond s_star_t;     // same in time depth
  std::vector<ConjugacyPoint> per_ray;
  int argmin_ray = -1;
};

ConjugacyScan conjugacy_scan(std::shared_ptr<const MetricField> field,
                             const SpacetimePoint& p, int level,
                             const RayOptions& opt, int workers);

// Velocity and point of the ray where it crosses the slice t = t_level.
struct LevelCrossing {
  double s = 0.0;
  SpacetimePoint point;
  Vec4 velocity{};
};
LevelCrossing reparametrize(const NullGeodesic& ray, double t_level);

}  // namespace nullcone

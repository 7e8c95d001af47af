#include "nullcone/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace nullcone {
namespace {

constexpr double kVertexEps = 1e-6;  // leaf torsion suppressed below this s
constexpr int kMaxSegments = 64;

Mat4 spacetime_metric(double n, const Mat3& g) {
  Mat4 g4{};
  g4[0][0] = -n * n;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g4[i + 1][j + 1] = g[i][j];
  return g4;
}

double dot4(const Mat4& g4, const double* a, const double* b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += g4[i][j] * a[i] * b[j];
  return s;
}

// Offsets of the vector blocks inside the 32-state (after position).
constexpr int kVecOffsets[7] = {4, 8, 12, 16, 20, 24, 28};

struct RayRhs {
  const MetricField* field;
  int chart;
  int dim;
  FrameTransport mode;

  void operator()(double s, const double* y, double* dy) const {
    SpacetimePoint q{chart, {y[0], y[1], y[2], y[3]}};
    MetricSample ms = dim == 8 ? sample_first_order(*field, q)
                               : sample(*field, q);
    const double* v = y + 4;
    for (int i = 0; i < 4; ++i) dy[i] = v[i];

    // Christoffel contraction helper: out[a] = -Gamma^a_{bc} v^b V^c.
    auto transport = [&](const double* V, double* out) {
      for (int a = 0; a < 4; ++a) {
        double acc = 0.0;
        for (int b = 0; b < 4; ++b) {
          if (v[b] == 0.0) continue;
          for (int c = 0; c < 4; ++c)
            acc += ms.gamma[a][b][c] * v[b] * V[c];
        }
        out[a] = -acc;
      }
    };
    transport(v, dy + 4);
    if (dim == 8) return;

    const double* J[2] = {y + 8, y + 16};
    const double* W[2] = {y + 12, y + 20};
    const double* E[2] = {y + 24, y + 28};
    double* dJ[2] = {dy + 8, dy + 16};
    double* dW[2] = {dy + 12, dy + 20};
    double* dE[2] = {dy + 24, dy + 28};

    for (int pair = 0; pair < 2; ++pair) {
      transport(J[pair], dJ[pair]);
      for (int a = 0; a < 4; ++a) dJ[pair][a] += W[pair][a];

      transport(W[pair], dW[pair]);
      double m[4];
      for (int e = 0; e < 4; ++e) {
        double acc = 0.0;
        for (int b = 0; b < 4; ++b) {
          if (v[b] == 0.0) continue;
          for (int c = 0; c < 4; ++c) {
            if (v[c] == 0.0) continue;
            for (int d = 0; d < 4; ++d)
              acc += ms.riemann[e][b][c][d] * v[b] * v[c] * J[pair][d];
          }
        }
        m[e] = acc;
      }
      for (int a = 0; a < 4; ++a) {
        double acc = 0.0;
        for (int e = 0; e < 4; ++e) acc += ms.g4inv[a][e] * m[e];
        dW[pair][a] += acc;
      }
      transport(E[pair], dE[pair]);
    }

    if (mode == FrameTransport::kLeafCorrected && s > kVertexEps) {
      double M[2][2];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) M[a][b] = dot4(ms.g4, J[a], E[b]);
      double det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
      if (std::abs(det) > 1e-30) {
        double Minv[2][2] = {{M[1][1] / det, -M[0][1] / det},
                             {-M[1][0] / det, M[0][0] / det}};
        Vec4 T = ms.observer();
        double V0[4];
        for (int i = 0; i < 4; ++i) V0[i] = T[i];
        for (int m2 = 0; m2 < 2; ++m2) {
          double proj = dot4(ms.g4, T.data(), E[m2]);
          for (int i = 0; i < 4; ++i) V0[i] -= proj * E[m2][i];
        }
        double gVL = dot4(ms.g4, V0, v);
        if (std::abs(gVL) > 1e-14) {
          double beta = -2.0 / gVL;
          double alpha = -beta * dot4(ms.g4, V0, V0) / (2.0 * gVL);
          double Lbar[4];
          for (int i = 0; i < 4; ++i) Lbar[i] = alpha * v[i] + beta * V0[i];
          double zeta[2];
          for (int c = 0; c < 2; ++c) {
            double acc = 0.0;
            for (int a = 0; a < 2; ++a)
              acc += Minv[c][a] * dot4(ms.g4, W[a], Lbar);
            zeta[c] = 0.5 * acc;
          }
          for (int pair = 0; pair < 2; ++pair)
            for (int i = 0; i < 4; ++i) dE[pair][i] -= zeta[pair] * v[i];
        }
      }
    }
  }
};

const RaySegment& segment_for(const NullGeodesic& ray, double s) {
  if (ray.segments.empty())
    throw Error(ErrorCode::StepUnderflow, "empty geodesic");
  for (const auto& seg : ray.segments)
    if (s <= seg.s_end + 1e-12) return seg;
  if (s <= ray.s_end + 1e-9) return ray.segments.back();
  throw Error(ErrorCode::AtlasExit,
              "parameter beyond traced range of the ray");
}

bool try_s_of_t(const NullGeodesic& ray, double t_level, double* s_out) {
  for (const auto& seg : ray.segments) {
    double y[32];
    seg.path.eval(seg.s_begin, y);
    double t_hi = y[0];
    seg.path.eval(seg.s_end, y);
    double t_lo = y[0];
    if (t_level > t_hi + 1e-12) return false;  // above the cone vertex side
    if (t_level < t_lo - 1e-12) continue;      // deeper than this segment
    if (t_hi - t_level <= 0.0) {
      *s_out = seg.s_begin;
      return true;
    }
    if (t_lo - t_level >= 0.0) {
      *s_out = seg.s_end;
      return true;
    }
    auto f = [&](double s) {
      double yy[32];
      seg.path.eval(s, yy);
      return yy[0] - t_level;
    };
    *s_out = ode::find_root(f, seg.s_begin, seg.s_end, 1e-13);
    return true;
  }
  return false;
}

}  // namespace

double min_value(const OrBeyond& a, const OrBeyond& b) {
  double av = a.beyond ? a.horizon : a.value;
  double bv = b.beyond ? b.horizon : b.value;
  return std::min(av, bv);
}

OrBeyond min_or_beyond(const OrBeyond& a, const OrBeyond& b) {
  if (!a.beyond && !b.beyond) return OrBeyond::at(std::min(a.value, b.value));
  if (a.beyond && b.beyond) return OrBeyond::past(std::min(a.horizon, b.horizon));
  return a.beyond ? b : a;
}

int NullGeodesic::chart_at(double s) const { return segment_for(*this, s).chart; }

void NullGeodesic::eval(double s, double* y) const {
  const RaySegment& seg = segment_for(*this, s);
  double sc = std::min(std::max(s, seg.s_begin), seg.s_end);
  seg.path.eval(sc, y);
}

SpacetimePoint NullGeodesic::point_at(double s) const {
  double y[32];
  eval(s, y);
  return SpacetimePoint{chart_at(s), {y[0], y[1], y[2], y[3]}};
}

Vec4 NullGeodesic::velocity_at(double s) const {
  double y[32];
  eval(s, y);
  return Vec4{y[4], y[5], y[6], y[7]};
}

double NullGeodesic::t_at(double s) const {
  double y[32];
  eval(s, y);
  return y[0];
}

double NullGeodesic::s_of_t(double t_level) const {
  double s = 0.0;
  if (!try_s_of_t(*this, t_level, &s))
    throw Error(ErrorCode::AtlasExit, "time level not reached by the ray");
  return s;
}

NullGeodesic trace_ray(std::shared_ptr<const MetricField> field,
                       const SpacetimePoint& p, const Vec3& omega,
                       const RayOptions& opt) {
  NullGeodesic ray;
  ray.field = field;
  ray.origin = p;
  ray.omega = omega;
  ray.dim = opt.with_jacobi ? 32 : 8;

  MetricSample ms0 = sample_first_order(*field, p);
  Vec4 v0 = initial_null_vector(ms0, omega);
  double y[32] = {};
  for (int i = 0; i < 4; ++i) {
    y[i] = p.x[i];
    y[4 + i] = v0[i];
  }
  if (ray.dim == 32) {
    NullFrame f0 = null_frame(ms0, v0);
    for (int i = 0; i < 4; ++i) {
      y[12 + i] = f0.e1[i];  // W1 = e1(0)
      y[20 + i] = f0.e2[i];  // W2 = e2(0)
      y[24 + i] = f0.e1[i];
      y[28 + i] = f0.e2[i];
    }
  }

  int chart = p.chart;
  double s = 0.0;
  int segments_guard = 0;
  while (true) {
    RayRhs rhs{field.get(), chart, ray.dim, opt.frame};
    bool want_switch = false, want_tmin = false, want_atlas = false;
    int next_chart = chart;
    auto cb = [&](const ode::DensePath&, double, double s_now,
                  const double* y_now) {
      (void)s_now;
      double n;
      Mat3 g;
      field->primal(chart, {y_now[0], y_now[1], y_now[2], y_now[3]}, n, g);
      Mat4 g4 = spacetime_metric(n, g);
      double res = std::abs(dot4(g4, y_now + 4, y_now + 4));
      ray.null_residual_max = std::max(ray.null_residual_max, res);
      if (y_now[0] < opt.t_min) {
        want_tmin = true;
        return ode::StepVerdict::kStop;
      }
      Vec4 x{y_now[0], y_now[1], y_now[2], y_now[3]};
      int pref = field->preferred_chart(chart, x);
      if (pref != chart && field->chart_valid(pref, x, 0.0)) {
        want_switch = true;
        next_chart = pref;
        return ode::StepVerdict::kStop;
      }
      if (!field->chart_valid(chart, x, 0.0)) {
        want_atlas = true;
        return ode::StepVerdict::kStop;
      }
      return ode::StepVerdict::kContinue;
    };
    ode::Options oo;
    oo.rel_tol = opt.rel_tol;
    oo.abs_tol = opt.abs_tol;
    oo.max_step = opt.max_step;
    ode::IntegrateResult res =
        ode::integrate(ray.dim, rhs, y, s, opt.s_max, oo, cb);
    if (res.s_end > s) {
      RaySegment seg;
      seg.chart = chart;
      seg.s_begin = s;
      seg.s_end = res.s_end;
      seg.path = std::move(res.path);
      ray.segments.push_back(std::move(seg));
    }
    s = res.s_end;
    std::memcpy(y, res.y_end.data(), sizeof(double) * ray.dim);

    if (res.step_limited) {
      // The stepper hit its budget or the step floor (typically a chart
      // grazing a coordinate degeneracy): keep the integrated part.
      ray.stop = RayStop::kStepLimit;
      break;
    }
    if (!res.stopped_by_callback) {
      ray.stop = RayStop::kSMax;
      break;
    }
    if (want_tmin) {
      // Truncate at the exact t = t_min crossing inside the last step.
      RaySegment& last = ray.segments.back();
      auto t_of = [&](double ss) {
        double yy[32];
        last.path.eval(ss, yy);
        return yy[0] - opt.t_min;
      };
      double s_cross = last.s_end;
      if (t_of(last.s_begin) <= 0.0)
        s_cross = last.s_begin;
      else if (t_of(last.s_end) <= 0.0)
        s_cross = ode::find_root(t_of, last.s_begin, last.s_end, 1e-13);
      last.s_end = s_cross;
      s = s_cross;
      ray.stop = RayStop::kTMin;
      break;
    }
    if (want_atlas) {
      ray.stop = RayStop::kAtlasExit;
      break;
    }
    if (want_switch) {
      Vec4 x{y[0], y[1], y[2], y[3]};
      Mat4 jac = field->transition_jacobian(chart, next_chart, x);
      Vec4 xn = field->transition(chart, next_chart, x);
      for (int i = 0; i < 4; ++i) y[i] = xn[i];
      int nvec = ray.dim == 32 ? 7 : 1;
      for (int k = 0; k < nvec; ++k) {
        double* blk = y + kVecOffsets[k];
        double out[4] = {};
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j) out[i] += jac[i][j] * blk[j];
        for (int i = 0; i < 4; ++i) blk[i] = out[i];
      }
      chart = next_chart;
      if (++segments_guard > kMaxSegments)
        throw Error(ErrorCode::AtlasExit, "chart switch limit exceeded");
      continue;
    }
    ray.stop = RayStop::kSMax;  // defensive
    break;
  }
  ray.s_end = s;
  return ray;
}

double transverse_det(const NullGeodesic& ray, double s) {
  if (ray.dim != 32)
    throw Error(ErrorCode::RankUnsupported, "ray traced without Jacobi state");
  double y[32];
  ray.eval(s, y);
  double n;
  Mat3 g;
  ray.field->primal(ray.chart_at(s), {y[0], y[1], y[2], y[3]}, n, g);
  Mat4 g4 = spacetime_metric(n, g);
  const double* J[2] = {y + 8, y + 16};
  const double* E[2] = {y + 24, y + 28};
  double M[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) M[a][b] = dot4(g4, J[a], E[b]);
  return M[0][0] * M[1][1] - M[0][1] * M[1][0];
}

ConeFan trace_fan(std::shared_ptr<const MetricField> field,
                  const SpacetimePoint& p, int level, const RayOptions& opt,
                  int workers) {
  ConeFan fan;
  fan.grid = std::make_shared<Icosphere>(Icosphere::build(level));
  int n = static_cast<int>(fan.grid->verts.size());
  fan.rays.resize(n);
  parallel_for(n, workers, [&](int i) {
    fan.rays[i] = trace_ray(field, p, fan.grid->verts[i], opt);
  });
  return fan;
}

Vec4 wrap_position(const MetricField& field, int chart, const Vec4& x,
                   std::array<long, 3>* winding) {
  ChartInfo info = field.chart_info(chart);
  Vec4 w = x;
  for (int i = 0; i < 3; ++i) {
    if (winding) (*winding)[i] = 0;
    if (!info.period[i]) continue;
    double L = *info.period[i];
    double f = std::floor(x[i + 1] / L);
    w[i + 1] = x[i + 1] - f * L;
    if (winding) (*winding)[i] = static_cast<long>(f);
  }
  return w;
}

ConeSlice slice_fixed_s(const ConeFan& fan, double s) {
  ConeSlice slice;
  slice.fixed_s = true;
  slice.level = s;
  slice.pts.resize(fan.rays.size());
  for (size_t i = 0; i < fan.rays.size(); ++i) {
    const NullGeodesic& ray = fan.rays[i];
    SlicePoint& sp = slice.pts[i];
    if (s > ray.s_end + 1e-12) continue;
    sp.covered = true;
    sp.s = s;
    sp.point = ray.point_at(s);
    sp.velocity = ray.velocity_at(s);
    wrap_position(*ray.field, sp.point.chart, sp.point.x, &sp.winding);
    if (ray.dim == 32) {
      sp.det_transverse = transverse_det(ray, s);
      sp.area_element = std::abs(sp.det_transverse);
      slice.area += fan.grid->weights[i] * sp.area_element;
    }
    ++slice.covered_count;
  }
  slice.r_of_s = std::sqrt(std::max(slice.area, 0.0) / (4.0 * kPi));
  return slice;
}

ConeSlice slice_fixed_t(const ConeFan& fan, double t_level) {
  ConeSlice slice;
  slice.fixed_s = false;
  slice.level = t_level;
  slice.pts.resize(fan.rays.size());
  for (size_t i = 0; i < fan.rays.size(); ++i) {
    const NullGeodesic& ray = fan.rays[i];
    SlicePoint& sp = slice.pts[i];
    double s = 0.0;
    if (!try_s_of_t(ray, t_level, &s)) continue;
    sp.covered = true;
    sp.s = s;
    sp.point = ray.point_at(s);
    sp.velocity = ray.velocity_at(s);
    wrap_position(*ray.field, sp.point.chart, sp.point.x, &sp.winding);
    if (ray.dim == 32) {
      double y[32];
      ray.eval(s, y);
      double n;
      Mat3 g;
      ray.field->primal(sp.point.chart, sp.point.x, n, g);
      Mat4 g4 = spacetime_metric(n, g);
      const double* v = y + 4;
      double Jhat[2][4];
      for (int a = 0; a < 2; ++a) {
        const double* J = y + 8 + 8 * a;
        double c = J[0] / v[0];
        for (int k = 0; k < 4; ++k) Jhat[a][k] = J[k] - c * v[k];
      }
      double G[2][2];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) G[a][b] = dot4(g4, Jhat[a], Jhat[b]);
      double det = G[0][0] * G[1][1] - G[0][1] * G[1][0];
      sp.area_element = std::sqrt(std::max(det, 0.0));
      slice.area += fan.grid->weights[i] * sp.area_element;
    }
    ++slice.covered_count;
  }
  slice.r_of_s = std::sqrt(std::max(slice.area, 0.0) / (4.0 * kPi));
  return slice;
}

ConjugacyScan conjugacy_scan(std::shared_ptr<const MetricField> field,
                             const SpacetimePoint& p, int level,
                             const RayOptions& opt, int workers) {
  RayOptions ropt = opt;
  ropt.with_jacobi = true;
  ropt.frame = FrameTransport::kParallel;
  ConeFan fan = trace_fan(field, p, level, ropt, workers);

  ConjugacyScan scan;
  int n = static_cast<int>(fan.rays.size());
  scan.per_ray.resize(n);
  double h_scan = 0.02 * field->length_scale();
  parallel_for(n, workers, [&](int i) {
    const NullGeodesic& ray = fan.rays[i];
    ConjugacyPoint cp;
    cp.ray_index = i;
    cp.s_first = OrBeyond::past(ray.s_end);
    double s_prev = std::min(1e-3, 0.5 * ray.s_end);
    double d_prev = transverse_det(ray, s_prev);
    for (double sc = s_prev + h_scan; sc <= ray.s_end + 1e-12;
         sc += h_scan) {
      double snow = std::min(sc, ray.s_end);
      double d = transverse_det(ray, snow);
      if (d_prev > 0.0 && d <= 0.0) {
        auto f = [&](double ss) { return transverse_det(ray, ss); };
        double root = ode::find_root(f, s_prev, snow, 1e-12);
        cp.s_first = OrBeyond::at(root);
        cp.t_depth = p.x[0] - ray.t_at(root);
        break;
      }
      s_prev = snow;
      d_prev = d;
      if (snow >= ray.s_end) break;
    }
    scan.per_ray[i] = cp;
  });

  bool any = false;
  double best = 0.0, best_t = 0.0, horizon = 1e300;
  for (int i = 0; i < n; ++i) {
    const ConjugacyPoint& cp = scan.per_ray[i];
    if (!cp.s_first.beyond) {
      if (!any || cp.s_first.value < best) {
        any = true;
        best = cp.s_first.value;
        best_t = cp.t_depth;
        scan.argmin_ray = i;
      }
    } else {
      horizon = std::min(horizon, cp.s_first.horizon);
    }
  }
  if (any) {
    scan.s_star = OrBeyond::at(best);
    scan.s_star_t = OrBeyond::at(best_t);
  } else {
    scan.s_star = OrBeyond::past(horizon);
    scan.s_star_t = OrBeyond::past(horizon);
  }
  return scan;
}

LevelCrossing reparametrize(const NullGeodesic& ray, double t_level) {
  LevelCrossing lc;
  lc.s = ray.s_of_t(t_level);
  lc.point = ray.point_at(lc.s);
  lc.velocity = ray.velocity_at(lc.s);
  return lc;
}

}  // namespace nullcone

#include "nullcone/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "nullcone/ode.hpp"

namespace nullcone {

double dense_flux_density(const MetricSample& ms, const Vec4& v) {
  Vec4 T = ms.observer();
  return -bel_robinson_contract(ms, T, T, T, v);
}

namespace {

struct OPoint {
  bool valid = false;
  int chart = 0;
  double s = 0.0;
  Vec3 x{};
  std::array<long, 3> wind{};
};

OPoint ray_slice_point(const MetricField& field, const NullGeodesic& ray,
                           double t) {
  OPoint sp;
  if (ray.t_at(ray.s_end) > t) return sp;
  sp.s = ray.s_of_t(t);
  SpacetimePoint q = ray.point_at(sp.s);
  Vec4 w = wrap_position(field, q.chart, q.x, &sp.wind);
  sp.chart = q.chart;
  sp.x = {w[1], w[2], w[3]};
  sp.valid = true;
  return sp;
}

double pair_distance(const MetricField& field, const OPoint& a,
                     const OPoint& b, double t) {
  Vec3 bx = b.x;
  if (a.chart != b.chart) {
    Vec4 moved = field.transition(b.chart, a.chart,
                                  {t, b.x[0], b.x[1], b.x[2]});
    bx = {moved[1], moved[2], moved[3]};
  }
  ChartInfo info = field.chart_info(a.chart);
  Vec3 d{};
  for (int i = 0; i < 3; ++i) {
    d[i] = bx[i] - a.x[i];
    if (info.period[i]) d[i] = std::remainder(d[i], *info.period[i]);
  }
  double n;
  Mat3 g;
  field.primal(a.chart, {t, a.x[0], a.x[1], a.x[2]}, n, g);
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += g[i][j] * d[i] * d[j];
  return std::sqrt(std::max(0.0, s));
}

}  // namespace

std::vector<IntersectionEvent> all_pairs_intersections(const ConeFan& fan,
                                                       double t_deep,
                                                       int t_scan,
                                                       double match_tol,
                                                       int workers) {
  const MetricField& field = *fan.rays.front().field;
  double t0 = fan.rays.front().origin.t();
  if (t_scan < 8) t_scan = 8;
  std::vector<double> ladder(t_scan);
  for (int k = 0; k < t_scan; ++k)
    ladder[k] = t0 + (t_deep - t0) * (k + 1) / static_cast<double>(t_scan);

  std::size_t nr = fan.rays.size();
  std::vector<std::vector<OPoint>> cache(t_scan,
                                             std::vector<OPoint>(nr));
  parallel_for(nr, workers, [&](std::size_t i) {
    for (int k = 0; k < t_scan; ++k)
      cache[k][i] = ray_slice_point(field, fan.rays[i], ladder[k]);
  });

  std::vector<IntersectionEvent> events;
  std::vector<std::vector<IntersectionEvent>> per_i(nr);
  parallel_for(nr, workers, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < nr; ++j) {
      double prev2 = -1.0, prev1 = -1.0;
      for (int k = 0; k < t_scan; ++k) {
        const OPoint& a = cache[k][i];
        const OPoint& b = cache[k][j];
        double d = (a.valid && b.valid)
                       ? pair_distance(field, a, b, ladder[k])
                       : -1.0;
        // Interior local minimum of the sampled separation.
        if (k >= 2 && prev1 >= 0.0 && prev2 >= 0.0 && d >= 0.0 &&
            prev1 <= prev2 && prev1 <= d) {
          auto f = [&](double t) {
            OPoint sa = ray_slice_point(field, fan.rays[i], t);
            OPoint sb = ray_slice_point(field, fan.rays[j], t);
            if (!sa.valid || !sb.valid) return 1e300;
            return pair_distance(field, sa, sb, t);
          };
          double tm = ode::minimize(f, ladder[k], ladder[k - 2], 1e-12);
          double dm = f(tm);
          if (dm <= match_tol) {
            IntersectionEvent ev;
            ev.ray_i = static_cast<int>(i);
            ev.ray_j = static_cast<int>(j);
            ev.t_event = tm;
            ev.separation = dm;
            OPoint sa = ray_slice_point(field, fan.rays[i], tm);
            OPoint sb = ray_slice_point(field, fan.rays[j], tm);
            ev.s_i = sa.s;
            ev.s_j = sb.s;
            ev.winding_i = sa.wind;
            ev.winding_j = sb.wind;
            ev.windings_differ = sa.wind != sb.wind;
            ev.q = {sa.chart, {tm, sa.x[0], sa.x[1], sa.x[2]}};
            bool dup = false;
            for (const IntersectionEvent& e : per_i[i])
              if (e.ray_j == ev.ray_j &&
                  std::abs(e.t_event - ev.t_event) <
                      2.0 * (t0 - t_deep) / t_scan)
                dup = true;
            if (!dup) per_i[i].push_back(ev);
          }
        }
        prev2 = prev1;
        prev1 = d;
      }
    }
  });
  for (auto& v : per_i)
    for (IntersectionEvent& ev : v) events.push_back(ev);
  std::sort(events.begin(), events.end(),
            [](const IntersectionEvent& a, const IntersectionEvent& b) {
              if (a.t_event != b.t_event) return a.t_event > b.t_event;
              if (a.ray_i != b.ray_i) return a.ray_i < b.ray_i;
              return a.ray_j < b.ray_j;
            });
  return events;
}

double cylinder_trchi_tangential(double s) { return 1.0 / s + 1.0 / std::tan(s); }

double cylinder_chihat_sq_tangential(double s) {
  double d = 1.0 / s - 1.0 / std::tan(s);
  return 0.5 * d * d;
}

double cylinder_det_tangential(double s) { return s * std::sin(s); }

double cylinder_det_mixed(double s, double b) {
  double c = std::cos(b);
  return s * std::sin(s * c) / c;
}

double torus_cut_distance(double L, const Vec3& w) {
  double cut = 1e300;
  for (int m0 = -2; m0 <= 2; ++m0)
    for (int m1 = -2; m1 <= 2; ++m1)
      for (int m2 = -2; m2 <= 2; ++m2) {
        if (m0 == 0 && m1 == 0 && m2 == 0) continue;
        double gx = L * m0, gy = L * m1, gz = L * m2;
        double dot = gx * w[0] + gy * w[1] + gz * w[2];
        if (dot <= 0.0) continue;
        cut = std::min(cut, (gx * gx + gy * gy + gz * gz) / (2.0 * dot));
      }
  return cut;
}

double torus_ball_volume(double L, double r) {
  if (!(r > 0.0) || r > L / std::sqrt(2.0) + 1e-12)
    throw Error(ErrorCode::ScenarioInvalid,
                "closed form valid for 0 < r <= L/sqrt(2)");
  double v = 4.0 * kPi / 3.0 * r * r * r;
  double h = r - 0.5 * L;
  if (h > 0.0) v -= 6.0 * kPi * h * h * (3.0 * r - h) / 3.0;
  return v;
}

}  // namespace nullcone

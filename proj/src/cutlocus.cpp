#include "nullcone/cutlocus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "nullcone/icosphere.hpp"

namespace nullcone {

namespace {

constexpr double kBig = 1e300;

struct SlicePt {
  bool covered = false;
  int chart = 0;
  Vec4 xw{};  // wrapped chart coordinates
  std::array<long, 3> wind{};
  double s = 0.0;
};

struct Slice {
  double t = 0.0;
  std::vector<SlicePt> pts;
};

SlicePt eval_slice_point(const MetricField& field, const NullGeodesic& ray,
                         double t) {
  SlicePt out;
  if (ray.segments.empty()) return out;
  if (ray.t_at(0.0) <= t || ray.t_at(ray.s_end) > t) return out;
  double s = ray.s_of_t(t);
  SpacetimePoint q = ray.point_at(s);
  out.covered = true;
  out.chart = q.chart;
  out.xw = wrap_position(field, q.chart, q.x, &out.wind);
  out.s = s;
  return out;
}

Slice build_slice(const MetricField& field, const ConeFan& fan, double t,
                  int workers) {
  Slice sl;
  sl.t = t;
  sl.pts.resize(fan.rays.size());
  parallel_for(fan.rays.size(), workers, [&](std::size_t i) {
    sl.pts[i] = eval_slice_point(field, fan.rays[i], t);
  });
  return sl;
}

// Squared g-distance between two wrapped slice points, with minimum-image
// convention on periodic axes; points in different charts are compared by
// transporting b into a's chart (they are close whenever this matters).
double dist2_g(const MetricField& field, const SlicePt& a, const SlicePt& b) {
  Vec4 xb = b.xw;
  if (b.chart != a.chart) {
    if (!field.chart_valid(b.chart, xb, 0.0)) return kBig;
    xb = field.transition(b.chart, a.chart, xb);
  }
  ChartInfo ci = field.chart_info(a.chart);
  Vec3 d{xb[1] - a.xw[1], xb[2] - a.xw[2], xb[3] - a.xw[3]};
  for (int i = 0; i < 3; ++i)
    if (ci.period[i]) d[i] -= *ci.period[i] * std::round(d[i] / *ci.period[i]);
  double n;
  Mat3 g;
  field.primal(a.chart, a.xw, n, g);
  return dot(g, d, d);
}

struct Candidate {
  int i, j;
  int level;  // index into the full ladder
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.level != b.level) return a.level < b.level;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

// Deterministic spatial hash of one slice; cells keyed by (chart, ix, iy, iz)
// in a sorted map so iteration order is reproducible.
using CellMap = std::map<std::array<int, 4>, std::vector<int>>;

void gather_pairs(const MetricField& field, const Slice& sl, double cell,
                  std::vector<std::pair<int, int>>* pairs) {
  CellMap cells;
  int nchart = field.chart_count();
  std::array<std::array<int, 3>, 8> axis_mod{};  // cells per periodic axis
  for (int c = 0; c < nchart && c < 8; ++c) {
    ChartInfo ci = field.chart_info(c);
    for (int ax = 0; ax < 3; ++ax)
      axis_mod[c][ax] =
          ci.period[ax] ? std::max(1, int(*ci.period[ax] / cell)) : 0;
  }
  auto cell_of = [&](int chart, const Vec4& x) {
    std::array<int, 4> key{chart, 0, 0, 0};
    ChartInfo ci = field.chart_info(chart);
    for (int ax = 0; ax < 3; ++ax) {
      if (ci.period[ax]) {
        int n = axis_mod[chart][ax];
        double h = *ci.period[ax] / n;
        int ic = int(std::floor(x[ax + 1] / h)) % n;
        if (ic < 0) ic += n;
        key[ax + 1] = ic;
      } else {
        key[ax + 1] = int(std::floor(x[ax + 1] / cell));
      }
    }
    return key;
  };
  // Insert every covered point once per chart where it is valid.
  for (int i = 0; i < int(sl.pts.size()); ++i) {
    const SlicePt& p = sl.pts[i];
    if (!p.covered) continue;
    cells[cell_of(p.chart, p.xw)].push_back(i);
    for (int c2 = 0; c2 < nchart; ++c2) {
      if (c2 == p.chart) continue;
      if (!field.chart_valid(p.chart, p.xw, 0.0)) continue;
      Vec4 xt = field.transition(p.chart, c2, p.xw);
      if (field.chart_valid(c2, xt, 0.0)) cells[cell_of(c2, xt)].push_back(i);
    }
  }
  // 27-neighborhood sweep with periodic wrap of cell indices.
  std::set<std::pair<int, int>> seen;
  for (const auto& [key, members] : cells) {
    int chart = key[0];
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          std::array<int, 4> nb{key[0], key[1] + dx, key[2] + dy, key[3] + dz};
          for (int ax = 0; ax < 3; ++ax) {
            int n = axis_mod[chart][ax];
            if (n > 0) nb[ax + 1] = ((nb[ax + 1] % n) + n) % n;
          }
          auto it = cells.find(nb);
          if (it == cells.end()) continue;
          for (int a : members)
            for (int b : it->second) {
              if (a >= b) continue;
              if (seen.insert({a, b}).second) pairs->push_back({a, b});
            }
        }
  }
}

struct RefineOutcome {
  bool accepted = false;
  IntersectionEvent ev;
};

}  // namespace

std::vector<IntersectionEvent> detect_intersections(
    const ConeFan& fan, const std::vector<double>& t_levels,
    const CutOptions& opt, int workers) {
  std::vector<IntersectionEvent> out;
  if (fan.rays.empty() || t_levels.empty()) return out;
  const MetricField& field = *fan.rays[0].field;
  auto field_sp = fan.rays[0].field;
  double scale = field.length_scale();
  double h_ang = fan.grid->mean_edge_angle();
  double floor_ang =
      opt.angular_floor > 0 ? opt.angular_floor : 2.5 * h_ang;
  double t0 = fan.rays[0].t_at(0.0);

  std::vector<double> ladder = t_levels;  // descending from just below t0
  std::sort(ladder.begin(), ladder.end(), std::greater<double>());
  double step = ladder.size() > 1 ? ladder[0] - ladder[1]
                                  : opt.ladder_step * scale;

  // Full slices plus midpoint slices used by the approach/retreat probe.
  std::vector<Slice> full(ladder.size()), half_lo(ladder.size()),
      half_hi(ladder.size());
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    full[k] = build_slice(field, fan, ladder[k], workers);
    half_hi[k] = build_slice(field, fan, ladder[k] + 0.5 * step, workers);
    half_lo[k] = build_slice(field, fan, ladder[k] - 0.5 * step, workers);
  }

  auto pair_dist = [&](const Slice& sl, int i, int j) {
    const SlicePt& a = sl.pts[i];
    const SlicePt& b = sl.pts[j];
    if (!a.covered || !b.covered) return kBig;
    return std::sqrt(std::max(0.0, dist2_g(field, a, b)));
  };

  std::vector<Candidate> cands;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    double depth = t0 - ladder[k];
    double window = 2.4 * step + 3.0 * h_ang * depth + 4.0 * opt.match_tol;
    std::vector<std::pair<int, int>> pairs;
    gather_pairs(field, full[k], window, &pairs);
    for (auto [i, j] : pairs) {
      double d0 = pair_dist(full[k], i, j);
      if (d0 > window) continue;
      // Grid-adjacent rays with equal windings track one geodesic.
      double ca = dot(fan.grid->verts[i], fan.grid->verts[j]);
      double ang = std::acos(std::clamp(ca, -1.0, 1.0));
      if (ang < floor_ang && full[k].pts[i].wind == full[k].pts[j].wind)
        continue;
      double d_deeper = pair_dist(half_lo[k], i, j);
      double d_shallow = pair_dist(half_hi[k], i, j);
      bool approaching = d_deeper <= d0 * (1.0 + 1e-9) && d_deeper < kBig;
      bool v_bottom = d0 <= d_deeper && d0 <= d_shallow &&
                      d0 < 0.5 * (d_deeper + d_shallow);
      if (approaching || v_bottom) cands.push_back({i, j, int(k)});
    }
  }
  std::sort(cands.begin(), cands.end(), candidate_less);

  std::vector<RefineOutcome> outcomes(cands.size());
  parallel_for(cands.size(), workers, [&](std::size_t c) {
    const Candidate& cd = cands[c];
    const NullGeodesic& ra = fan.rays[cd.i];
    const NullGeodesic& rb = fan.rays[cd.j];
    double t_hi = std::min(ladder[cd.level] + 2.0 * step, t0 - 0.25 * step);
    double t_lo = ladder[cd.level] - 2.0 * step;
    t_lo = std::max({t_lo, ra.t_at(ra.s_end), rb.t_at(rb.s_end)});
    if (t_lo >= t_hi) return;
    auto D = [&](double t) {
      SlicePt a = eval_slice_point(field, ra, t);
      SlicePt b = eval_slice_point(field, rb, t);
      if (!a.covered || !b.covered) return kBig;
      return dist2_g(field, a, b);
    };
    double t_star;
    try {
      t_star = ode::minimize(D, t_lo, t_hi, 1e-12 * scale);
    } catch (const Error&) {
      return;
    }
    double sep = std::sqrt(std::max(0.0, D(t_star)));
    if (sep > opt.match_tol) return;
    SlicePt a = eval_slice_point(field, ra, t_star);
    SlicePt b = eval_slice_point(field, rb, t_star);
    if (!a.covered || !b.covered) return;
    IntersectionEvent ev;
    ev.ray_i = cd.i;
    ev.ray_j = cd.j;
    ev.t_event = t_star;
    ev.s_i = a.s;
    ev.s_j = b.s;
    ev.separation = sep;
    ev.q = {a.chart, a.xw};
    ev.winding_i = a.wind;
    ev.winding_j = b.wind;
    ev.windings_differ = a.wind != b.wind;
    // Leaf-projected meeting angle between the two velocities.
    Vec4 va = ra.velocity_at(a.s);
    Vec4 vb = rb.velocity_at(b.s);
    if (b.chart != a.chart) {
      Mat4 jac = field.transition_jacobian(b.chart, a.chart,
                                           rb.point_at(b.s).x);
      Vec4 tmp{};
      for (int r = 0; r < 4; ++r)
        for (int cix = 0; cix < 4; ++cix) tmp[r] += jac[r][cix] * vb[cix];
      vb = tmp;
    }
    double n;
    Mat3 g;
    field.primal(a.chart, a.xw, n, g);
    Vec3 sa{va[1], va[2], va[3]}, sb{vb[1], vb[2], vb[3]};
    double num = dot(g, sa, sb);
    double den = std::sqrt(dot(g, sa, sa) * dot(g, sb, sb));
    double cosang = den > 0 ? std::clamp(num / den, -1.0, 1.0) : 1.0;
    ev.angle_at_q = std::acos(cosang);
    ev.unresolved = ev.separation > 0.2 * opt.match_tol &&
                    std::acos(std::clamp(
                        dot(fan.grid->verts[cd.i], fan.grid->verts[cd.j]),
                        -1.0, 1.0)) < floor_ang + h_ang &&
                    !ev.windings_differ;
    outcomes[c] = {true, ev};
  });

  // Deduplicate: same pair within one ladder step is one crossing; across
  // pairs, cluster by meeting point. Deterministic ordered pass.
  std::vector<IntersectionEvent> events;
  for (const auto& oc : outcomes)
    if (oc.accepted) events.push_back(oc.ev);
  std::sort(events.begin(), events.end(),
            [](const IntersectionEvent& a, const IntersectionEvent& b) {
              if (a.t_event != b.t_event) return a.t_event > b.t_event;
              if (a.ray_i != b.ray_i) return a.ray_i < b.ray_i;
              return a.ray_j < b.ray_j;
            });
  double r_cluster = opt.cluster_radius > 0
                         ? opt.cluster_radius
                         : 0.3 * h_ang * std::max(1e-6, t0 - ladder.back());
  for (const auto& ev : events) {
    bool merged = false;
    for (auto& kept : out) {
      bool same_pair = kept.ray_i == ev.ray_i && kept.ray_j == ev.ray_j;
      if (same_pair && std::abs(kept.t_event - ev.t_event) < 1.5 * step) {
        if (ev.separation < kept.separation) kept = ev;
        merged = true;
        break;
      }
      if (!same_pair && std::abs(kept.t_event - ev.t_event) < 0.5 * step) {
        SlicePt qa{true, kept.q.chart, kept.q.x, {}, 0.0};
        SlicePt qb{true, ev.q.chart, ev.q.x, {}, 0.0};
        double dq = std::sqrt(std::max(0.0, dist2_g(field, qa, qb)));
        if (dq < r_cluster) {
          if (ev.separation < kept.separation) kept = ev;
          merged = true;
          break;
        }
      }
    }
    if (!merged) out.push_back(ev);
  }
  std::sort(out.begin(), out.end(),
            [](const IntersectionEvent& a, const IntersectionEvent& b) {
              if (a.t_event != b.t_event) return a.t_event > b.t_event;
              if (a.ray_i != b.ray_i) return a.ray_i < b.ray_i;
              return a.ray_j < b.ray_j;
            });
  return out;
}

namespace {

struct LevelResult {
  OrBeyond ell_t, ell_affine;
  std::vector<IntersectionEvent> events;
};

LevelResult detect_at_level(std::shared_ptr<const MetricField> field,
                            const SpacetimePoint& p, int level,
                            const RayOptions& ray_opt,
                            const CutOptions& cut_opt, int workers,
                            ConeFan* fan_out) {
  ConeFan fan = trace_fan(field, p, level, ray_opt, workers);
  double t0 = p.x[0];
  double t_deep = t0;
  for (const auto& r : fan.rays) t_deep = std::min(t_deep, r.t_at(r.s_end));
  double step = cut_opt.ladder_step * field->length_scale();
  std::vector<double> ladder;
  for (double t = t0 - step; t > t_deep + 0.25 * step; t -= step)
    ladder.push_back(t);
  LevelResult res;
  if (ladder.empty()) {
    res.ell_t = OrBeyond::past(0.0);
    res.ell_affine = OrBeyond::past(ray_opt.s_max);
    if (fan_out) *fan_out = std::move(fan);
    return res;
  }
  res.events = detect_intersections(fan, ladder, cut_opt, workers);
  if (res.events.empty()) {
    res.ell_t = OrBeyond::past(t0 - ladder.back());
    res.ell_affine = OrBeyond::past(ray_opt.s_max);
  } else {
    const IntersectionEvent& first = res.events.front();
    res.ell_t = OrBeyond::at(t0 - first.t_event);
    res.ell_affine = OrBeyond::at(std::min(first.s_i, first.s_j));
  }
  if (fan_out) *fan_out = std::move(fan);
  return res;
}

}  // namespace

RadiusReport injectivity_report(std::shared_ptr<const MetricField> field,
                                const SpacetimePoint& p, int level,
                                const RayOptions& ray_opt,
                                const CutOptions& cut_opt, int workers) {
  RadiusReport rep;
  rep.level = level;

  ConeFan fan;
  LevelResult fine = detect_at_level(field, p, level, ray_opt, cut_opt,
                                     workers, &fan);
  int coarse_level = std::max(0, level - 1);
  LevelResult coarse = detect_at_level(field, p, coarse_level, ray_opt,
                                       cut_opt, workers, nullptr);

  ConjugacyScan scan = conjugacy_scan(field, p, level, ray_opt, workers);
  ConjugacyScan scan_c =
      conjugacy_scan(field, p, coarse_level, ray_opt, workers);

  rep.s_star = scan.s_star;
  rep.ell_star = fine.ell_affine;
  rep.ell_star_t = fine.ell_t;
  rep.i_star = min_or_beyond(rep.ell_star, rep.s_star);
  rep.events = std::move(fine.events);

  double h = fan.grid->mean_edge_angle();
  auto two_grid_bar = [&](const OrBeyond& a, const OrBeyond& b) {
    if (a.beyond) return 0.0;  // sentinel: nothing to bound
    double floor_term = h * h * std::max(a.value, 1.0);
    if (b.beyond) return std::max(a.value, floor_term);
    return std::abs(a.value - b.value) + floor_term;
  };
  rep.bar_ell_star_t = two_grid_bar(fine.ell_t, coarse.ell_t);
  rep.bar_s_star = two_grid_bar(scan.s_star, scan_c.s_star);

  if (!rep.ell_star_t.beyond && rep.bar_ell_star_t > 0.5 * rep.ell_star_t.value)
    throw Error(ErrorCode::ResolutionTooCoarse,
                "cut estimate error bar exceeds half the estimate");

  // Flag events within reach of a Jacobi zero of either ray.
  double guard = 0.05 * field->length_scale();
  for (auto& ev : rep.events) {
    for (int idx : {ev.ray_i, ev.ray_j}) {
      const ConjugacyPoint& cp = scan.per_ray[idx];
      if (!cp.s_first.beyond) {
        double s_here = idx == ev.ray_i ? ev.s_i : ev.s_j;
        if (s_here > cp.s_first.value - guard) ev.near_conjugate = true;
      }
    }
  }
  return rep;
}

double opposite_angle_check(const IntersectionEvent& ev) {
  return std::abs(ev.angle_at_q - kPi);
}

BallCheckReport ball_inclusion_check(std::shared_ptr<const MetricField> field,
                                     const SpacetimePoint& p, double t_level,
                                     double eps, int level, int workers) {
  BallCheckReport rep;
  rep.eps = eps;
  rep.t_level = t_level;
  double depth = p.x[0] - t_level;
  if (depth <= 0)
    throw Error(ErrorCode::ScenarioInvalid, "ball check needs t_level < t(p)");

  double n_p;
  Mat3 g_p;
  field->primal(p.chart, p.x, n_p, g_p);
  rep.r_minus = (1.0 - 3.0 * eps) * n_p * depth;
  rep.r_plus = (1.0 + 3.0 * eps) * n_p * depth;

  // Audit assumption-C closeness on the patch covering the outer ball.
  double patch = 1.1 * rep.r_plus;
  double eps_meas = 0.0;
  int m = 5;
  for (int ix = -m; ix <= m; ++ix)
    for (int iy = -m; iy <= m; ++iy)
      for (int iz = -m; iz <= m; ++iz) {
        Vec4 x = p.x;
        x[1] += patch * ix / m;
        x[2] += patch * iy / m;
        x[3] += patch * iz / m;
        double n;
        Mat3 g;
        field->primal(p.chart, x, n, g);
        eps_meas = std::max(eps_meas, std::abs(n - n_p));
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            eps_meas = std::max(eps_meas,
                                std::abs(g[a][b] - (a == b ? 1.0 : 0.0)));
      }
  rep.audited_eps = eps_meas;
  if (eps_meas > eps + 1e-12)
    throw Error(ErrorCode::AssumptionCViolated,
                "measured closeness exceeds declared eps on the patch");

  // Inner inclusion: straight chart segments from p to the inner ball edge
  // must stay past timelike; margin normalized by the coordinate time span.
  Icosphere grid = Icosphere::build(level);
  double inner = kBig;
  std::vector<double> inner_per(grid.verts.size());
  parallel_for(grid.verts.size(), workers, [&](std::size_t vi) {
    const Vec3& w = grid.verts[vi];
    Vec4 dx{t_level - p.x[0], rep.r_minus * w[0], rep.r_minus * w[1],
            rep.r_minus * w[2]};
    double worst = kBig;
    for (int k = 0; k < 16; ++k) {
      double u = (k + 0.5) / 16.0;
      Vec4 x = p.x;
      for (int i = 0; i < 4; ++i) x[i] += u * dx[i];
      double n;
      Mat3 g;
      field->primal(p.chart, x, n, g);
      Vec3 sp{dx[1], dx[2], dx[3]};
      double q = -(-n * n * dx[0] * dx[0] + dot(g, sp, sp));
      worst = std::min(worst, q / (n_p * n_p * dx[0] * dx[0]));
    }
    inner_per[vi] = worst;
  });
  for (double v : inner_per) inner = std::min(inner, v);
  rep.inner_margin = inner;
  rep.inner_ok = inner > -1e-12;

  // Outer and annulus confinement of the actual cone slice.
  RayOptions opt;
  opt.s_max = 3.0 * depth * std::max(1.0, 1.0 / n_p) + 1.0;
  opt.t_min = t_level - 0.1 * depth;
  ConeFan fan = trace_fan(field, p, level, opt, workers);
  double outer = kBig, annulus = kBig;
  for (const auto& ray : fan.rays) {
    if (ray.t_at(ray.s_end) > t_level) continue;  // censored ray
    double s = ray.s_of_t(t_level);
    Vec4 x = ray.point_at(s).x;  // raw, unwrapped
    Vec3 d{x[1] - p.x[1], x[2] - p.x[2], x[3] - p.x[3]};
    double rho = norm(d);
    outer = std::min(outer, (rep.r_plus - rho) / rep.r_plus);
    annulus = std::min(annulus, (rho - rep.r_minus) / rep.r_minus);
  }
  rep.outer_margin = outer;
  rep.annulus_margin = annulus;
  rep.outer_ok = outer > -1e-12 && outer < kBig;
  rep.annulus_ok = annulus > -1e-12 && annulus < kBig;
  return rep;
}

SlabScan slab_scan(std::shared_ptr<const MetricField> field,
                   const std::vector<SpacetimePoint>& points, int level,
                   const RayOptions& ray_opt, const CutOptions& cut_opt,
                   int workers) {
  SlabScan scan;
  scan.points = points;
  scan.min_i_star = OrBeyond::past(ray_opt.s_max);
  scan.min_ell_star_t = OrBeyond::past(ray_opt.s_max);
  for (const auto& p : points) {
    scan.reports.push_back(
        injectivity_report(field, p, level, ray_opt, cut_opt, workers));
    const RadiusReport& rep = scan.reports.back();
    scan.min_i_star = min_or_beyond(scan.min_i_star, rep.i_star);
    scan.min_ell_star_t = min_or_beyond(scan.min_ell_star_t, rep.ell_star_t);
  }
  return scan;
}

}  // namespace nullcone

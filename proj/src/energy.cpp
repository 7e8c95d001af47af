#include "nullcone/energy.hpp"

#include <algorithm>
#include <cmath>

#include "nullcone/frames.hpp"
#include "nullcone/icosphere.hpp"

namespace nullcone {

namespace {

double sqrt_det_g(const MetricField& field, int chart, double t,
                  const Vec3& x) {
  double n;
  Mat3 g;
  field.primal(chart, {t, x[0], x[1], x[2]}, n, g);
  double d = det(g);
  if (d <= 0.0)
    throw Error(ErrorCode::DegenerateMetric, "det g nonpositive on the slice");
  return std::sqrt(d);
}

// Operator norm of n k under g via the Cholesky-congruent symmetric form.
double nk_op_norm(const MetricJet& jet) {
  Mat3 nk;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      nk[i][j] = -2.0 * jet.dg[0][i][j];  // n * (-(2/n) dt g)
  // Cholesky g = L L^T.
  Mat3 L{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = jet.g[i][j];
      for (int m = 0; m < j; ++m) s -= L[i][m] * L[j][m];
      if (i == j) {
        if (s <= 0.0)
          throw Error(ErrorCode::DegenerateMetric, "Cholesky failed on g");
        L[i][i] = std::sqrt(s);
      } else {
        L[i][j] = s / L[j][j];
      }
    }
  }
  // B = L^-1 nk L^-T, symmetric; forward-substitute twice.
  Mat3 Y;  // L^-1 nk
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i) {
      double s = nk[i][c];
      for (int m = 0; m < i; ++m) s -= L[i][m] * Y[m][c];
      Y[i][c] = s / L[i][i];
    }
  Mat3 B;  // Y L^-T  => solve B L^T = Y row-wise
  for (int r = 0; r < 3; ++r)
    for (int i = 0; i < 3; ++i) {
      double s = Y[r][i];
      for (int m = 0; m < i; ++m) s -= L[i][m] * B[r][m];
      B[r][i] = s / L[i][i];
    }
  auto ev = sym_eigenvalues(B);
  double op = 0.0;
  for (double e : ev) op = std::max(op, std::abs(e));
  return op;
}

}  // namespace

SliceGrid make_slice_grid(
    const MetricField& field, int chart, double t_level, int resolution,
    const std::optional<std::array<Interval, 3>>& box) {
  if (resolution < 2)
    throw Error(ErrorCode::ResolutionTooCoarse, "need at least 2 cells/axis");
  ChartInfo info = field.chart_info(chart);
  SliceGrid grid;
  grid.t_level = t_level;
  grid.chart = chart;
  if (box) {
    grid.box = *box;
  } else {
    if (!info.bounded_box)
      throw Error(ErrorCode::UnboundedDomain,
                  "unbounded chart needs an explicit integration box");
    grid.box = info.box;
  }
  grid.cells = {resolution, resolution, resolution};
  grid.cell_measure = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (grid.box[a].length() <= 0.0)
      throw Error(ErrorCode::ScenarioInvalid, "empty integration box axis");
    grid.cell_measure *= grid.box[a].length() / resolution;
  }
  grid.nodes.resize(static_cast<std::size_t>(resolution) * resolution *
                    resolution);
  std::size_t idx = 0;
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      for (int k = 0; k < resolution; ++k) {
        grid.nodes[idx++] = {
            grid.box[0].lo + grid.box[0].length() * (i + 0.5) / resolution,
            grid.box[1].lo + grid.box[1].length() * (j + 0.5) / resolution,
            grid.box[2].lo + grid.box[2].length() * (k + 0.5) / resolution};
      }
  grid.dv_weights.resize(grid.nodes.size());
  parallel_for(grid.nodes.size(), 0, [&](std::size_t m) {
    grid.dv_weights[m] = sqrt_det_g(field, chart, t_level, grid.nodes[m]);
  });
  return grid;
}

double slice_energy(const MetricField& field, double t_level,
                    const SliceGrid& grid, int workers) {
  std::vector<double> vals(grid.nodes.size());
  parallel_for(grid.nodes.size(), workers, [&](std::size_t m) {
    const Vec3& x = grid.nodes[m];
    SpacetimePoint p{grid.chart, {t_level, x[0], x[1], x[2]}};
    PointBudget pb = point_budget(field, p);
    vals[m] = pb.curvature_sq * sqrt_det_g(field, grid.chart, t_level, x);
  });
  double q = 0.0;
  for (double v : vals) q += v;
  return q * grid.cell_measure;
}

EnergyReport gronwall_check(const MetricField& field, const Budget& budget,
                            double t_lo, double t_hi, int t_steps,
                            const SliceGrid& grid, int workers) {
  if (t_steps < 1)
    throw Error(ErrorCode::ScenarioInvalid, "need at least one t step");
  EnergyReport rep;
  std::vector<double> ts(t_steps + 1), Q(t_steps + 1), sup(t_steps + 1);
  for (int k = 0; k <= t_steps; ++k)
    ts[k] = t_lo + (t_hi - t_lo) * k / static_cast<double>(t_steps);

  for (int k = 0; k <= t_steps; ++k) {
    std::vector<double> qv(grid.nodes.size()), pv(grid.nodes.size());
    parallel_for(grid.nodes.size(), workers, [&](std::size_t m) {
      const Vec3& x = grid.nodes[m];
      SpacetimePoint p{grid.chart, {ts[k], x[0], x[1], x[2]}};
      PointBudget pb = point_budget(field, p);
      qv[m] = pb.curvature_sq * sqrt_det_g(field, grid.chart, ts[k], x);
      pv[m] = pb.pi_norm;
    });
    double q = 0.0, s = 0.0;
    for (double v : qv) q += v;
    for (double v : pv) s = std::max(s, v);
    Q[k] = q * grid.cell_measure;
    sup[k] = s;
  }

  double c = budget.c_gronwall;
  double K = 0.0;
  double tol = 1e-12 * std::max(1.0, Q[0]);
  rep.verdict = true;
  for (int k = 0; k <= t_steps; ++k) {
    if (k > 0) K += 0.5 * (sup[k - 1] + sup[k]) * (ts[k] - ts[k - 1]);
    double bound = Q[0] * std::exp(c * budget.N0 * K);
    rep.Q_of_t[ts[k]] = Q[k];
    rep.L2_curvature[ts[k]] = std::sqrt(std::max(0.0, Q[k]));
    rep.gronwall_bound[ts[k]] = bound;
    rep.sup_pi[ts[k]] = sup[k];
    if (Q[k] > bound * (1.0 + 1e-9) + tol) rep.verdict = false;
    if (k > 0 && K > 0.0 && Q[0] > 0.0 && Q[k] > Q[0]) {
      double need = std::log(Q[k] / Q[0]) / (budget.N0 * K);
      rep.budget_constant = std::max(rep.budget_constant, need);
    }
  }
  return rep;
}

EquivalenceReport metric_equivalence(const MetricField& field,
                                     const Budget& budget, int chart,
                                     double t_lo, double t_hi, int t_steps,
                                     const SliceGrid& grid, int workers) {
  if (t_steps < 1)
    throw Error(ErrorCode::ScenarioInvalid, "need at least one t step");
  EquivalenceReport rep;
  std::vector<double> ts(t_steps + 1);
  for (int k = 0; k <= t_steps; ++k)
    ts[k] = t_lo + (t_hi - t_lo) * k / static_cast<double>(t_steps);

  double c_emp = 0.0, i0 = 0.0;
  std::vector<double> supF(t_steps + 1, 0.0), supOp(t_steps + 1, 0.0);
  for (int k = 0; k <= t_steps; ++k) {
    std::vector<double> ce(grid.nodes.size()), fr(grid.nodes.size()),
        op(grid.nodes.size());
    parallel_for(grid.nodes.size(), workers, [&](std::size_t m) {
      const Vec3& x = grid.nodes[m];
      SpacetimePoint p{chart, {ts[k], x[0], x[1], x[2]}};
      PointBudget pb = point_budget(field, p);
      ce[m] = std::max(pb.g_eig_max, 1.0 / pb.g_eig_min);
      fr[m] = pb.nk_norm;
      MetricJet jet = field.jet(chart, p.x);
      op[m] = nk_op_norm(jet);
    });
    double level_c = 0.0;
    for (std::size_t m = 0; m < ce.size(); ++m) {
      level_c = std::max(level_c, ce[m]);
      supF[k] = std::max(supF[k], fr[m]);
      supOp[k] = std::max(supOp[k], op[m]);
    }
    c_emp = std::max(c_emp, level_c);
    if (k == 0) i0 = level_c;
  }
  double intF = 0.0, intOp = 0.0;
  for (int k = 1; k <= t_steps; ++k) {
    double dt = ts[k] - ts[k - 1];
    intF += 0.5 * (supF[k - 1] + supF[k]) * dt;
    intOp += 0.5 * (supOp[k - 1] + supOp[k]) * dt;
  }
  rep.i0_measured = i0;
  rep.c_empirical = c_emp;
  rep.c_predicted = i0 * std::exp(intF);
  rep.c_tight = i0 * std::exp(0.5 * intOp);
  rep.pass = c_emp <= rep.c_predicted * (1.0 + 1e-9) &&
             i0 <= budget.I0 * (1.0 + 1e-9);
  rep.margin = rep.c_predicted - c_emp;
  return rep;
}

//--- volume radius -----------------------------------------------------------

namespace {

// Exact cut distance of the straight line from p in direction w on a flat
// (possibly periodic) chart: first bisector plane of a lattice image.
double flat_cut_distance(const ChartInfo& info, const Vec3& w) {
  double cut = 1e300;
  for (int m0 = -2; m0 <= 2; ++m0)
    for (int m1 = -2; m1 <= 2; ++m1)
      for (int m2 = -2; m2 <= 2; ++m2) {
        if (m0 == 0 && m1 == 0 && m2 == 0) continue;
        int m[3] = {m0, m1, m2};
        Vec3 img{};
        bool ok = true;
        for (int a = 0; a < 3; ++a) {
          if (m[a] != 0 && !info.period[a]) {
            ok = false;
            break;
          }
          img[a] = m[a] != 0 ? *info.period[a] * m[a] : 0.0;
        }
        if (!ok) continue;
        double dot = img[0] * w[0] + img[1] * w[1] + img[2] * w[2];
        if (dot <= 0.0) continue;
        double len2 = img[0] * img[0] + img[1] * img[1] + img[2] * img[2];
        cut = std::min(cut, len2 / (2.0 * dot));
      }
  return cut;
}

// Spatial Christoffels and the lowered slice curvature from the jet.
struct Spatial3 {
  Mat3 g, ginv;
  double gamma[3][3][3];
  double riem[3][3][3][3];
};

Spatial3 spatial_geometry(const MetricJet& jet) {
  Spatial3 sp;
  sp.g = jet.g;
  sp.ginv = inverse(jet.g);
  double dginv[3][3][3];  // d_a (g^il)
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) {
        double s = 0.0;
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            s -= sp.ginv[i][b] * jet.dg[a + 1][b][c] * sp.ginv[c][l];
        dginv[a][i][l] = s;
      }
  auto dg = [&](int a, int i, int j) { return jet.dg[a + 1][i][j]; };
  auto d2g = [&](int a, int b, int i, int j) {
    return jet.d2g[a + 1][b + 1][i][j];
  };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l)
          s += sp.ginv[i][l] * (dg(j, l, k) + dg(k, l, j) - dg(l, j, k));
        sp.gamma[i][j][k] = 0.5 * s;
      }
  double dgamma[3][3][3][3];  // d_m Gamma^i_{jk}
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double s = 0.0;
          for (int l = 0; l < 3; ++l) {
            s += dginv[m][i][l] * (dg(j, l, k) + dg(k, l, j) - dg(l, j, k));
            s += sp.ginv[i][l] *
                 (d2g(m, j, l, k) + d2g(m, k, l, j) - d2g(m, l, j, k));
          }
          dgamma[m][i][j][k] = 0.5 * s;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double up = dgamma[k][i][l][j] - dgamma[l][i][k][j];
          for (int m = 0; m < 3; ++m)
            up += sp.gamma[i][k][m] * sp.gamma[m][l][j] -
                  sp.gamma[i][l][m] * sp.gamma[m][k][j];
          sp.riem[i][j][k][l] = up;  // still upper first index, lower below
        }
  double lowered[3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int m = 0; m < 3; ++m) s += sp.g[i][m] * sp.riem[m][j][k][l];
          lowered[i][j][k][l] = s;
        }
  std::copy(&lowered[0][0][0][0], &lowered[0][0][0][0] + 81,
            &sp.riem[0][0][0][0]);
  return sp;
}

struct ShootState {
  Vec3 x, u, J1, P1, J2, P2;
};

ShootState shoot_deriv(const MetricField& field, int chart, double t_level,
                       const ShootState& y) {
  MetricJet jet = field.jet(chart, {t_level, y.x[0], y.x[1], y.x[2]});
  Spatial3 sp = spatial_geometry(jet);
  auto christoffel = [&](const Vec3& a, const Vec3& b) {
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) s += sp.gamma[i][j][k] * a[j] * b[k];
      out[i] = s;
    }
    return out;
  };
  // Jacobi operator A^i_j = g^{im} R_{mkjl} u^k u^l (symmetric pencil).
  double A[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int m = 0; m < 3; ++m)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            s += sp.ginv[i][m] * sp.riem[m][k][j][l] * y.u[k] * y.u[l];
      A[i][j] = s;
    }
  auto apply_A = [&](const Vec3& v) {
    Vec3 out{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[i] += A[i][j] * v[j];
    return out;
  };
  ShootState d;
  d.x = y.u;
  Vec3 guu = christoffel(y.u, y.u);
  for (int i = 0; i < 3; ++i) d.u[i] = -guu[i];
  Vec3 guJ1 = christoffel(y.u, y.J1), guJ2 = christoffel(y.u, y.J2);
  Vec3 guP1 = christoffel(y.u, y.P1), guP2 = christoffel(y.u, y.P2);
  Vec3 AJ1 = apply_A(y.J1), AJ2 = apply_A(y.J2);
  for (int i = 0; i < 3; ++i) {
    d.J1[i] = y.P1[i] - guJ1[i];
    d.J2[i] = y.P2[i] - guJ2[i];
    d.P1[i] = -guP1[i] - AJ1[i];
    d.P2[i] = -guP2[i] - AJ2[i];
  }
  return d;
}

ShootState axpy(const ShootState& y, double h, const ShootState& d) {
  ShootState out;
  for (int i = 0; i < 3; ++i) {
    out.x[i] = y.x[i] + h * d.x[i];
    out.u[i] = y.u[i] + h * d.u[i];
    out.J1[i] = y.J1[i] + h * d.J1[i];
    out.P1[i] = y.P1[i] + h * d.P1[i];
    out.J2[i] = y.J2[i] + h * d.J2[i];
    out.P2[i] = y.P2[i] + h * d.P2[i];
  }
  return out;
}

double area_element(const MetricField& field, int chart, double t_level,
                    const ShootState& y) {
  double n;
  Mat3 g;
  field.primal(chart, {t_level, y.x[0], y.x[1], y.x[2]}, n, g);
  auto dot = [&](const Vec3& a, const Vec3& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += g[i][j] * a[i] * b[j];
    return s;
  };
  double g11 = dot(y.J1, y.J1), g22 = dot(y.J2, y.J2), g12 = dot(y.J1, y.J2);
  double d = g11 * g22 - g12 * g12;
  return d > 0.0 ? std::sqrt(d) : 0.0;
}

// Integrates V(s) = int_0^s sqrt(det G) along a slice geodesic; fills the
// cumulative volumes at the requested radii (arclength parameter).
void shoot_volume(const MetricField& field, int chart, double t_level,
                  const SpacetimePoint& p, const Vec3& u0, const Vec3& b1,
                  const Vec3& b2, const std::vector<double>& radii, int steps,
                  std::vector<double>& out) {
  double rho = radii.back();
  int n = std::max(24, steps);
  double h = rho / n;
  ShootState y;
  y.x = {p.x[1], p.x[2], p.x[3]};
  y.u = u0;
  y.J1 = {};
  y.P1 = b1;
  y.J2 = {};
  y.P2 = b2;
  // The area element behaves like s^2 f(s) with f smooth and f(0) = 1, so
  // integrate the reduced profile f against the exact s^2 weight; plain
  // trapezoid on the raw element biases the small radii upward.
  std::vector<double> vol(n + 1, 0.0);
  std::vector<double> fv(n + 1, 0.0);
  fv[0] = 1.0;
  int frozen_at = n + 1;  // first node past a focal point, if any
  bool dead = false;
  for (int k = 0; k < n; ++k) {
    if (!field.chart_valid(chart, {t_level, y.x[0], y.x[1], y.x[2]}, 0.0))
      throw Error(ErrorCode::BallExitsChart,
                  "geodesic ball leaves the chart domain");
    if (dead) {
      vol[k + 1] = vol[k];
      continue;
    }
    ShootState d1 = shoot_deriv(field, chart, t_level, y);
    ShootState d2 = shoot_deriv(field, chart, t_level, axpy(y, 0.5 * h, d1));
    ShootState d3 = shoot_deriv(field, chart, t_level, axpy(y, 0.5 * h, d2));
    ShootState d4 = shoot_deriv(field, chart, t_level, axpy(y, h, d3));
    ShootState next;
    for (int i = 0; i < 3; ++i) {
      next.x[i] = y.x[i] + h / 6.0 *
                               (d1.x[i] + 2 * d2.x[i] + 2 * d3.x[i] + d4.x[i]);
      next.u[i] = y.u[i] + h / 6.0 *
                               (d1.u[i] + 2 * d2.u[i] + 2 * d3.u[i] + d4.u[i]);
      next.J1[i] =
          y.J1[i] +
          h / 6.0 * (d1.J1[i] + 2 * d2.J1[i] + 2 * d3.J1[i] + d4.J1[i]);
      next.P1[i] =
          y.P1[i] +
          h / 6.0 * (d1.P1[i] + 2 * d2.P1[i] + 2 * d3.P1[i] + d4.P1[i]);
      next.J2[i] =
          y.J2[i] +
          h / 6.0 * (d1.J2[i] + 2 * d2.J2[i] + 2 * d3.J2[i] + d4.J2[i]);
      next.P2[i] =
          y.P2[i] +
          h / 6.0 * (d1.P2[i] + 2 * d2.P2[i] + 2 * d3.P2[i] + d4.P2[i]);
    }
    double s0 = k * h, s1 = (k + 1) * h;
    double a1 = area_element(field, chart, t_level, next);
    if (a1 <= 0.0) {  // focal point: the ball stops growing here
      dead = true;
      frozen_at = k + 1;
      vol[k + 1] = vol[k];
      continue;
    }
    fv[k + 1] = a1 / (s1 * s1);
    vol[k + 1] = vol[k] + 0.5 * (fv[k] + fv[k + 1]) *
                              (s1 * s1 * s1 - s0 * s0 * s0) / 3.0;
    y = next;
  }
  out.resize(radii.size());
  for (std::size_t r = 0; r < radii.size(); ++r) {
    double srel = radii[r] / h;
    int k = std::min(n - 1, static_cast<int>(srel));
    double th = srel - k;
    if (k + 1 >= frozen_at) {
      out[r] = vol[std::min(k, frozen_at - 1)];
      continue;
    }
    double s0 = k * h;
    double rr = radii[r];
    double fbar = fv[k] + 0.5 * th * (fv[k + 1] - fv[k]);
    out[r] = vol[k] + fbar * (rr * rr * rr - s0 * s0 * s0) / 3.0;
  }
}

}  // namespace

VolumeRadiusReport volume_radius(std::shared_ptr<const MetricField> field,
                                 double t_level,
                                 const std::vector<SpacetimePoint>& points,
                                 double rho, const VolumeOptions& opt) {
  if (!(rho > 0.0))
    throw Error(ErrorCode::ScenarioInvalid, "rho must be positive");
  Icosphere grid = Icosphere::build(opt.level);
  VolumeRadiusReport rep;
  rep.slice_inf = 1e300;
  int K = std::max(2, opt.ladder);
  std::vector<double> radii(K);
  for (int k = 0; k < K; ++k)
    radii[k] = rho * std::pow(1.0 / 16.0, 1.0 - k / double(K - 1));

  for (const SpacetimePoint& base : points) {
    VolumeRadiusPoint vp;
    vp.p = base;
    vp.p.x[0] = t_level;
    vp.r_ladder = radii;
    vp.ratio.assign(K, 0.0);

    ChartInfo info = field->chart_info(vp.p.chart);
    std::vector<std::vector<double>> per_dir(grid.verts.size());
    if (field->spatially_flat()) {
      parallel_for(grid.verts.size(), opt.workers, [&](std::size_t d) {
        double cut = flat_cut_distance(info, grid.verts[d]);
        auto& col = per_dir[d];
        col.resize(K);
        for (int k = 0; k < K; ++k) {
          double r = std::min(radii[k], cut);
          col[k] = r * r * r / 3.0;
        }
      });
    } else {
      double n0;
      Mat3 g0;
      field->primal(vp.p.chart, vp.p.x, n0, g0);
      auto triad = spatial_triad(g0);
      parallel_for(grid.verts.size(), opt.workers, [&](std::size_t d) {
        const Vec3& w = grid.verts[d];
        Vec3 u0{};
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < 3; ++i) u0[i] += w[a] * triad[a][i];
        // g-orthonormal transverse pair from the triad legs least aligned
        // with the direction.
        int skip = 0;
        for (int a = 1; a < 3; ++a)
          if (std::abs(w[a]) > std::abs(w[skip])) skip = a;
        auto dotg = [&](const Vec3& a, const Vec3& b) {
          double s = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s += g0[i][j] * a[i] * b[j];
          return s;
        };
        Vec3 b[2];
        int bi = 0;
        for (int a = 0; a < 3; ++a) {
          if (a == skip) continue;
          Vec3 v = triad[a];
          double cu = dotg(v, u0);
          for (int i = 0; i < 3; ++i) v[i] -= cu * u0[i];
          for (int m = 0; m < bi; ++m) {
            double cb = dotg(v, b[m]);
            for (int i = 0; i < 3; ++i) v[i] -= cb * b[m][i];
          }
          double nv = std::sqrt(dotg(v, v));
          for (int i = 0; i < 3; ++i) v[i] /= nv;
          b[bi++] = v;
        }
        int steps = static_cast<int>(std::ceil(opt.steps_per_unit * rho));
        shoot_volume(*field, vp.p.chart, t_level, vp.p, u0, b[0], b[1], radii,
                     steps, per_dir[d]);
      });
    }
    for (std::size_t d = 0; d < per_dir.size(); ++d)
      for (int k = 0; k < K; ++k)
        vp.ratio[k] += grid.weights[d] * per_dir[d][k];
    double rv = 1e300;
    for (int k = 0; k < K; ++k) {
      vp.ratio[k] /= radii[k] * radii[k] * radii[k];
      rv = std::min(rv, vp.ratio[k]);
      if (k > 0 && vp.ratio[k] > vp.ratio[k - 1] + 1e-9)
        vp.ratio_monotone = false;
    }
    vp.r_vol = rv;
    rep.slice_inf = std::min(rep.slice_inf, rv);
    rep.points.push_back(std::move(vp));
  }
  if (rep.points.empty()) rep.slice_inf = 0.0;
  return rep;
}

}  // namespace nullcone

#include "nullcone/flux.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nullcone/icosphere.hpp"

namespace nullcone {

namespace {

double dot4g(const Mat4& g, const double* a, const double* b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += g[i][j] * a[i] * b[j];
  return s;
}

struct RayState {
  MetricSample ms;  // first-order sample at the point
  double y[32];
};

RayState state_at(const NullGeodesic& ray, double s) {
  if (ray.dim != 32)
    throw Error(ErrorCode::RankUnsupported, "ray traced without Jacobi state");
  RayState st;
  ray.eval(s, st.y);
  st.ms = sample_first_order(*ray.field,
                             {ray.chart_at(s), {st.y[0], st.y[1], st.y[2],
                                                st.y[3]}});
  return st;
}

double frame_drift_of(const Mat4& g4, const double* v, const double* e1,
                      const double* e2) {
  double drift = 0.0;
  drift = std::max(drift, std::abs(dot4g(g4, e1, e1) - 1.0));
  drift = std::max(drift, std::abs(dot4g(g4, e2, e2) - 1.0));
  drift = std::max(drift, std::abs(dot4g(g4, e1, e2)));
  drift = std::max(drift, std::abs(dot4g(g4, v, e1)));
  drift = std::max(drift, std::abs(dot4g(g4, v, e2)));
  return drift;
}

RicciCoefficients coefficients_from(const RayState& st) {
  const Mat4& g4 = st.ms.g4;
  const double* v = st.y + 4;
  const double* J[2] = {st.y + 8, st.y + 16};
  const double* W[2] = {st.y + 12, st.y + 20};
  const double* E[2] = {st.y + 24, st.y + 28};

  RicciCoefficients rc;
  rc.frame_drift = frame_drift_of(g4, v, E[0], E[1]);
  if (rc.frame_drift > 1e-6)
    throw Error(ErrorCode::FrameDrift,
                "transported pair lost orthonormality along the ray");

  double M[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) M[a][b] = dot4g(g4, J[a], E[b]);
  double det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
  if (std::abs(det) < 1e-30)
    throw Error(ErrorCode::FrameDegeneracy,
                "transverse determinant vanishes at the requested s");
  double Mi[2][2] = {{M[1][1] / det, -M[0][1] / det},
                     {-M[1][0] / det, M[0][0] / det}};

  Vec4 vL{v[0], v[1], v[2], v[3]};
  Vec4 e1{E[0][0], E[0][1], E[0][2], E[0][3]};
  Vec4 e2{E[1][0], E[1][1], E[1][2], E[1][3]};
  NullFrame f = null_frame_from(st.ms, vL, e1, e2);

  double WE[2][2], WLbar[2];
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) WE[a][b] = dot4g(g4, W[a], E[b]);
    WLbar[a] = dot4g(g4, W[a], f.Lbar.data());
  }
  for (int c = 0; c < 2; ++c) {
    for (int b = 0; b < 2; ++b) {
      double sum = 0.0;
      for (int a = 0; a < 2; ++a) sum += Mi[c][a] * WE[a][b];
      rc.chi[c][b] = sum;
    }
    double z = 0.0;
    for (int a = 0; a < 2; ++a) z += Mi[c][a] * WLbar[a];
    rc.zeta[c] = 0.5 * z;
  }
  // Symmetrize chi; the antisymmetric part is discretization noise.
  double off = 0.5 * (rc.chi[0][1] + rc.chi[1][0]);
  rc.chi[0][1] = rc.chi[1][0] = off;
  rc.trchi = rc.chi[0][0] + rc.chi[1][1];
  double chi2 = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) chi2 += rc.chi[a][b] * rc.chi[a][b];
  rc.chihat_sq = chi2 - 0.5 * rc.trchi * rc.trchi;
  return rc;
}

}  // namespace

RicciCoefficients ricci_coefficients(const NullGeodesic& ray, double s) {
  return coefficients_from(state_at(ray, s));
}

TransportState foliation_scalars(const NullGeodesic& ray, double s_lo,
                                 double s_hi, int samples) {
  if (samples < 5)
    throw Error(ErrorCode::ScenarioInvalid, "need at least 5 s-samples");
  TransportState ts;
  ts.s.resize(samples);
  ts.phi.resize(samples);
  ts.psi.resize(samples);
  ts.residual_phi.assign(samples, 0.0);
  ts.residual_psi.assign(samples, Vec2{});
  double h = (s_hi - s_lo) / (samples - 1);

  std::vector<RayState> states(samples);
  for (int i = 0; i < samples; ++i) {
    double s = s_lo + h * i;
    ts.s[i] = s;
    states[i] = state_at(ray, s);
    const RayState& st = states[i];
    Vec4 T = st.ms.observer();
    double gTL = dot4g(st.ms.g4, T.data(), st.y + 4);
    if (gTL <= 0.0)
      throw Error(ErrorCode::NullNormalizationFailed,
                  "g(T,L) lost positivity along the ray");
    ts.phi[i] = 1.0 / gTL;
    ts.psi[i] = {dot4g(st.ms.g4, st.y + 24, T.data()),
                 dot4g(st.ms.g4, st.y + 28, T.data())};
    ts.max_dev = std::max(
        ts.max_dev, std::abs(ts.phi[i] - 1.0) +
                        std::hypot(ts.psi[i][0], ts.psi[i][1]));
  }

  auto d4 = [&](auto&& get, int i) {
    return (get(i - 2) - 8.0 * get(i - 1) + 8.0 * get(i + 1) - get(i + 2)) /
           (12.0 * h);
  };
  for (int i = 2; i + 2 < samples; ++i) {
    const RayState& st = states[i];
    double phi = ts.phi[i];
    // N = -phi L - T closes the frame relation T + N = -phi L.
    Vec4 T = st.ms.observer();
    Vec4 N;
    for (int k = 0; k < 4; ++k) N[k] = -phi * st.y[4 + k] - T[k];
    auto pi = [&](const double* a, const double* b) {
      double sum = 0.0;
      for (int al = 0; al < 4; ++al)
        for (int be = 0; be < 4; ++be)
          sum += st.ms.pi_lie[al][be] * a[al] * b[be];
      return sum;
    };
    double pi_TN = pi(T.data(), N.data());
    double pi_NN = pi(N.data(), N.data());
    ts.residual_phi[i] =
        d4([&](int k) { return ts.phi[k]; }, i) + (pi_TN + 0.5 * pi_NN);

    RicciCoefficients rc = coefficients_from(st);
    for (int a = 0; a < 2; ++a) {
      double dpsi = d4([&](int k) { return ts.psi[k][a]; }, i);
      double chipsi = 0.0;
      for (int b = 0; b < 2; ++b) chipsi += rc.chi[a][b] * ts.psi[i][b];
      // source from nabla T contracted with (L, e_a): in transported
      // coordinates nabla_al T_be has rows (0, d_i n) and (0, pi_ij / 2)
      const double* L = st.y + 4;
      const double* e = st.y + 24 + 4 * a;
      double src = 0.0;
      for (int j = 1; j < 4; ++j) src += st.ms.pi_lie[0][j] * L[0] * e[j];
      for (int j = 1; j < 4; ++j)
        for (int k = 1; k < 4; ++k)
          src += 0.5 * st.ms.pi_lie[j][k] * L[j] * e[k];
      // frame term: the leaf correction feeds the primed torsion back in
      double zp = rc.zeta[a] - phi * chipsi;
      ts.residual_psi[i][a] = dpsi + chipsi - (src - zp / phi);
    }
  }
  return ts;
}

SmallnessReport smallness_monitor(const TransportState& state) {
  SmallnessReport rep;
  rep.max_dev = state.max_dev;
  rep.bootstrap_ok = state.max_dev <= 1e-2;
  rep.improved_ok = state.max_dev <= 1e-3;
  return rep;
}

std::array<double, 2> primed_consistency(const NullGeodesic& ray, double s,
                                         double phi, const Vec2& psi) {
  RayState st = state_at(ray, s);
  RicciCoefficients rc = coefficients_from(st);
  const Mat4& g4 = st.ms.g4;
  const double* v = st.y + 4;
  const double* J[2] = {st.y + 8, st.y + 16};
  const double* W[2] = {st.y + 12, st.y + 20};
  const double* E[2] = {st.y + 24, st.y + 28};

  Vec4 vL{v[0], v[1], v[2], v[3]};
  Vec4 e1{E[0][0], E[0][1], E[0][2], E[0][3]};
  Vec4 e2{E[1][0], E[1][1], E[1][2], E[1][3]};
  NullFrame f = null_frame_from(st.ms, vL, e1, e2);

  // Primed frame: e'_a = e_a - phi psi_a L and the matching null partner
  // Lbar' = Lbar - 2 phi psi_b e_b + phi^2 |psi|^2 L.
  double ep[2][4];
  for (int a = 0; a < 2; ++a)
    for (int k = 0; k < 4; ++k) ep[a][k] = E[a][k] - phi * psi[a] * v[k];
  double psi2 = psi[0] * psi[0] + psi[1] * psi[1];
  Vec4 lbp;
  for (int k = 0; k < 4; ++k)
    lbp[k] = f.Lbar[k] - 2.0 * phi * (psi[0] * E[0][k] + psi[1] * E[1][k]) +
             phi * phi * psi2 * v[k];

  double M[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) M[a][b] = dot4g(g4, J[a], E[b]);
  double det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
  double Mi[2][2] = {{M[1][1] / det, -M[0][1] / det},
                     {-M[1][0] / det, M[0][0] / det}};

  // chi'_{cb} = (M^{-1})_{ca} g(W_a, e'_b): D_{e_c} L contracted with the
  // primed legs; zeta'_c likewise against Lbar'.
  double chi_p[2][2], zeta_p[2];
  for (int c = 0; c < 2; ++c) {
    for (int b = 0; b < 2; ++b) {
      double sum = 0.0;
      for (int a = 0; a < 2; ++a) sum += Mi[c][a] * dot4g(g4, W[a], ep[b]);
      chi_p[c][b] = sum;
    }
    double z = 0.0;
    for (int a = 0; a < 2; ++a) z += Mi[c][a] * dot4g(g4, W[a], lbp.data());
    zeta_p[c] = 0.5 * z;
  }

  double dev_chi = 0.0, dev_zeta = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      double sym = 0.5 * (chi_p[a][b] + chi_p[b][a]);
      dev_chi = std::max(dev_chi, std::abs(sym - rc.chi[a][b]));
    }
    double pred = rc.zeta[a];
    for (int b = 0; b < 2; ++b) pred -= phi * psi[b] * rc.chi[a][b];
    dev_zeta = std::max(dev_zeta, std::abs(zeta_p[a] - pred));
  }
  return {dev_chi, dev_zeta};
}

FluxReport reduced_flux(std::shared_ptr<const MetricField> field,
                        const SpacetimePoint& p, double delta, int level,
                        double i_star_estimate, int s_samples, int workers) {
  if (!(delta > 0))
    throw Error(ErrorCode::ScenarioInvalid, "delta must be positive");
  if (delta >= i_star_estimate)
    throw Error(ErrorCode::DeltaBeyondInjectivity,
                "delta reaches the injectivity estimate");
  if (s_samples < 5) s_samples = 5;
  if (s_samples % 2 == 0) ++s_samples;

  FluxReport rep;
  rep.delta = delta;
  rep.level = level;
  rep.s_floor = 1e-3 * field->length_scale();

  RayOptions opt;
  opt.s_max = delta;
  opt.with_jacobi = true;
  opt.frame = FrameTransport::kLeafCorrected;
  ConeFan fan = trace_fan(field, p, level, opt, workers);

  double h = (delta - rep.s_floor) / (s_samples - 1);
  struct Partial {
    std::array<double, 5> comps{};
    double total = 0.0;
    double min_q = 1e300;
    double max_dev = 0.0;
    bool censored = false;
  };
  std::vector<Partial> parts(fan.rays.size());
  parallel_for(fan.rays.size(), workers, [&](std::size_t ri) {
    const NullGeodesic& ray = fan.rays[ri];
    Partial& pt = parts[ri];
    if (ray.s_end < delta - 1e-9) {
      pt.censored = true;
      return;
    }
    TransportState ts = foliation_scalars(ray, rep.s_floor, delta, s_samples);
    pt.max_dev = ts.max_dev;
    for (int i = 0; i < s_samples; ++i) {
      double wq = (i == 0 || i == s_samples - 1) ? 1.0
                  : (i % 2 == 1)                 ? 4.0
                                                 : 2.0;
      wq *= h / 3.0;
      double s = ts.s[i];
      MetricSample ms =
          sample(*field, {ray.chart_at(s), ray.point_at(s).x});
      double y[32];
      ray.eval(s, y);
      Vec4 vL{y[4], y[5], y[6], y[7]};
      Vec4 e1{y[24], y[25], y[26], y[27]};
      Vec4 e2{y[28], y[29], y[30], y[31]};
      NullFrame f = null_frame_from(ms, vL, e1, e2);
      NullCurvatureComponents c = null_decomposition(ms, f);
      double sigma_w = std::abs(transverse_det(ray, s));
      double a2 = 0.0, ab2 = 0.0;
      for (int aa = 0; aa < 2; ++aa)
        for (int bb = 0; bb < 2; ++bb) {
          a2 += c.alpha[aa][bb] * c.alpha[aa][bb];
          ab2 += c.alphabar[aa][bb] * c.alphabar[aa][bb];
        }
      double b2 = c.beta[0] * c.beta[0] + c.beta[1] * c.beta[1];
      double bb2 = c.betabar[0] * c.betabar[0] + c.betabar[1] * c.betabar[1];
      pt.comps[0] += wq * sigma_w * a2;
      pt.comps[1] += wq * sigma_w * b2;
      pt.comps[2] += wq * sigma_w * c.rho * c.rho;
      pt.comps[3] += wq * sigma_w * c.sigma * c.sigma;
      pt.comps[4] += wq * sigma_w * bb2;
      BelRobinsonDensity q =
          bel_robinson_density(ms, f, c, ts.phi[i], ts.psi[i]);
      pt.total += wq * sigma_w * q.q_total;
      pt.min_q = std::min(pt.min_q, q.q_total);
    }
  });

  int censored = 0;
  double min_q = 1e300;
  for (std::size_t ri = 0; ri < parts.size(); ++ri) {
    const Partial& pt = parts[ri];
    if (pt.censored) {
      ++censored;
      continue;
    }
    double w = fan.grid->weights[ri];
    for (int k = 0; k < 5; ++k) rep.component_integrals[k] += w * pt.comps[k];
    rep.total_flux += w * pt.total;
    rep.max_dev = std::max(rep.max_dev, pt.max_dev);
    min_q = std::min(min_q, pt.min_q);
  }
  rep.censored_rays = censored;
  rep.positivity_margin = min_q < 1e300 ? min_q : 0.0;
  double sum = 0.0;
  for (double c : rep.component_integrals) sum += c;
  rep.reduced_flux = std::sqrt(sum);

  // Bound the skipped [0, s_floor] piece by the vertex asymptotics: the
  // density scales like |R|^2 s^2 near the tip.
  MetricSample ms0 = sample(*field, p);
  std::vector<double> comps;
  comps.reserve(256);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) comps.push_back(ms0.riemann[a][b][c][d]);
  double r2 = riemannian_norm(comps, 4);
  rep.vertex_bound = 4.0 * kPi / 3.0 * 2.0 * r2 * r2 *
                     rep.s_floor * rep.s_floor * rep.s_floor;
  return rep;
}

TrchiReport trchi_deviation(std::shared_ptr<const MetricField> field,
                            const SpacetimePoint& p, int level, double s_lo,
                            double s_hi, int samples, int workers) {
  if (samples < 5) samples = 5;
  if (samples % 2 == 0) ++samples;
  auto fan_pass = [&](int lev, std::vector<double>* dev_out,
                      std::vector<double>* int_out) {
    RayOptions opt;
    opt.s_max = s_hi;
    opt.with_jacobi = true;
    opt.frame = FrameTransport::kLeafCorrected;
    ConeFan fan = trace_fan(field, p, lev, opt, workers);
    dev_out->assign(fan.rays.size(), 0.0);
    int_out->assign(fan.rays.size(), 0.0);
    double h = (s_hi - s_lo) / (samples - 1);
    parallel_for(fan.rays.size(), workers, [&](std::size_t ri) {
      const NullGeodesic& ray = fan.rays[ri];
      double dev = 0.0, integral = 0.0;
      for (int i = 0; i < samples; ++i) {
        double s = s_lo + h * i;
        RicciCoefficients rc = ricci_coefficients(ray, s);
        dev = std::max(dev, std::abs(rc.trchi - 2.0 / s));
        double wq = (i == 0 || i == samples - 1) ? 1.0
                    : (i % 2 == 1)               ? 4.0
                                                 : 2.0;
        integral += wq * h / 3.0 * rc.chihat_sq;
      }
      (*dev_out)[ri] = dev;
      (*int_out)[ri] = integral;
    });
  };
  TrchiReport rep;
  fan_pass(level, &rep.per_ray_dev, &rep.per_ray_integral);
  for (double d : rep.per_ray_dev) rep.max_trchi_dev = std::max(rep.max_trchi_dev, d);
  for (double d : rep.per_ray_integral)
    rep.max_chihat_integral = std::max(rep.max_chihat_integral, d);
  std::vector<double> cd, ci;
  fan_pass(std::max(0, level - 1), &cd, &ci);
  double cmax = 0.0, cint = 0.0;
  for (double d : cd) cmax = std::max(cmax, d);
  for (double d : ci) cint = std::max(cint, d);
  rep.bar_trchi = std::abs(rep.max_trchi_dev - cmax);
  rep.bar_chihat = std::abs(rep.max_chihat_integral - cint);
  return rep;
}

}  // namespace nullcone

#include "nullcone/metric.hpp"

#include <algorithm>
#include <cmath>

namespace nullcone {

namespace {

Mat3 scaled_identity(double c) {
  Mat3 m{};
  m[0][0] = m[1][1] = m[2][2] = c;
  return m;
}

//--- flat families -----------------------------------------------------------

class FlatFamily final : public MetricField {
 public:
  enum class Lapse { kConstant, kGaussBump, kPeriodicBump };

  FlatFamily(std::string name, Lapse lapse, FamilyParams p, bool periodic)
      : name_(std::move(name)), lapse_(lapse), p_(p), periodic_(periodic) {}

  std::string name() const override { return name_; }

  ChartInfo chart_info(int) const override {
    ChartInfo info;
    for (int a = 0; a < 3; ++a) {
      if (periodic_) {
        info.period[a] = p_.period;
        info.box[a] = {0.0, p_.period};
      } else {
        info.box[a] = {-2.0, 2.0};
      }
    }
    info.bounded_box = periodic_;
    return info;
  }

  void primal(int, const Vec4& x, double& n, Mat3& g) const override {
    n = lapse_value(x);
    g = scaled_identity(1.0);
  }

  MetricJet jet(int, const Vec4& x) const override {
    MetricJet j;
    j.g = scaled_identity(1.0);
    fill_lapse(x, j);
    return j;
  }

  bool spatially_flat() const override { return true; }
  double length_scale() const override { return periodic_ ? p_.period : 1.0; }

 private:
  double lapse_value(const Vec4& x) const {
    switch (lapse_) {
      case Lapse::kConstant:
        return p_.lapse;
      case Lapse::kGaussBump: {
        double r2 = 0.0;
        for (int i = 0; i < 3; ++i) {
          double d = x[1 + i] - p_.center[i];
          r2 += d * d;
        }
        return 1.0 + p_.amplitude * std::exp(-r2 / (p_.width * p_.width));
      }
      case Lapse::kPeriodicBump: {
        double r2 = 0.0;
        double L = p_.period;
        for (int i = 0; i < 3; ++i) {
          double u = (L / kPi) * std::sin(kPi * (x[1 + i] - p_.center[i]) / L);
          r2 += u * u;
        }
        return 1.0 + p_.amplitude * std::exp(-r2 / (p_.width * p_.width));
      }
    }
    return 1.0;
  }

  void fill_lapse(const Vec4& x, MetricJet& j) const {
    if (lapse_ == Lapse::kConstant) {
      j.n = p_.lapse;
      return;
    }
    // rho2 = sum_i u_i(x_i)^2 with u the displacement profile per axis.
    double u[3], du[3], d2u[3];
    if (lapse_ == Lapse::kGaussBump) {
      for (int i = 0; i < 3; ++i) {
        u[i] = x[1 + i] - p_.center[i];
        du[i] = 1.0;
        d2u[i] = 0.0;
      }
    } else {
      double L = p_.period;
      for (int i = 0; i < 3; ++i) {
        double a = kPi * (x[1 + i] - p_.center[i]) / L;
        u[i] = (L / kPi) * std::sin(a);
        du[i] = std::cos(a);
        d2u[i] = -(kPi / L) * std::sin(a);
      }
    }
    double w2 = p_.width * p_.width;
    double rho2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    double e = std::exp(-rho2 / w2);
    j.n = 1.0 + p_.amplitude * e;
    Vec4 drho2{};
    Mat4 d2rho2{};
    for (int i = 0; i < 3; ++i) {
      drho2[1 + i] = 2.0 * u[i] * du[i];
      d2rho2[1 + i][1 + i] = 2.0 * (du[i] * du[i] + u[i] * d2u[i]);
    }
    for (int m = 0; m < 4; ++m) j.dn[m] = p_.amplitude * e * (-drho2[m] / w2);
    for (int m = 0; m < 4; ++m)
      for (int v = 0; v < 4; ++v)
        j.d2n[m][v] = p_.amplitude * e *
                      (drho2[m] * drho2[v] / (w2 * w2) - d2rho2[m][v] / w2);
  }

  std::string name_;
  Lapse lapse_;
  FamilyParams p_;
  bool periodic_;
};

//--- conformal time-dependent families ---------------------------------------

// g_ij = exp(2 a(t,x)) delta_ij with analytic a; covers "exp_contracting"
// (a = -rate*t) and "torus_wave" (a = A cos kx cos ky cos kz cos wt).
class ConformalFamily final : public MetricField {
 public:
  enum class Mode { kExpContracting, kWave };

  ConformalFamily(std::string name, Mode mode, FamilyParams p)
      : name_(std::move(name)), mode_(mode), p_(p) {}

  std::string name() const override { return name_; }

  ChartInfo chart_info(int) const override {
    ChartInfo info;
    for (int a = 0; a < 3; ++a) {
      info.period[a] = p_.period;
      info.box[a] = {0.0, p_.period};
    }
    info.bounded_box = true;
    return info;
  }

  void primal(int, const Vec4& x, double& n, Mat3& g) const override {
    n = 1.0;
    g = scaled_identity(std::exp(2.0 * conf(x)));
  }

  MetricJet jet(int, const Vec4& x) const override {
    MetricJet j;
    j.n = 1.0;
    double a;
    Vec4 da{};
    Mat4 d2a{};
    conf_jet(x, a, da, d2a);
    double e = std::exp(2.0 * a);
    j.g = scaled_identity(e);
    for (int m = 0; m < 4; ++m) j.dg[m] = scaled_identity(2.0 * da[m] * e);
    for (int m = 0; m < 4; ++m)
      for (int v = 0; v < 4; ++v)
        j.d2g[m][v] =
            scaled_identity((4.0 * da[m] * da[v] + 2.0 * d2a[m][v]) * e);
    return j;
  }

  double length_scale() const override { return p_.period; }

 private:
  double conf(const Vec4& x) const {
    if (mode_ == Mode::kExpContracting) return -p_.contraction_rate * x[0];
    double k = 2.0 * kPi / p_.period;
    return p_.amplitude * std::cos(k * x[1]) * std::cos(k * x[2]) *
           std::cos(k * x[3]) * std::cos(p_.omega * x[0]);
  }

  void conf_jet(const Vec4& x, double& a, Vec4& da, Mat4& d2a) const {
    if (mode_ == Mode::kExpContracting) {
      a = -p_.contraction_rate * x[0];
      da = {-p_.contraction_rate, 0.0, 0.0, 0.0};
      d2a = Mat4{};
      return;
    }
    double k = 2.0 * kPi / p_.period;
    double f[4] = {std::cos(p_.omega * x[0]), std::cos(k * x[1]),
                   std::cos(k * x[2]), std::cos(k * x[3])};
    double fp[4] = {-p_.omega * std::sin(p_.omega * x[0]),
                    -k * std::sin(k * x[1]), -k * std::sin(k * x[2]),
                    -k * std::sin(k * x[3])};
    double fpp[4] = {-p_.omega * p_.omega * f[0], -k * k * f[1], -k * k * f[2],
                     -k * k * f[3]};
    a = p_.amplitude * f[0] * f[1] * f[2] * f[3];
    for (int m = 0; m < 4; ++m) {
      double prod = p_.amplitude;
      for (int q = 0; q < 4; ++q) prod *= (q == m) ? fp[q] : f[q];
      da[m] = prod;
    }
    for (int m = 0; m < 4; ++m)
      for (int v = 0; v < 4; ++v) {
        double prod = p_.amplitude;
        if (m == v) {
          for (int q = 0; q < 4; ++q) prod *= (q == m) ? fpp[q] : f[q];
        } else {
          for (int q = 0; q < 4; ++q)
            prod *= (q == m || q == v) ? fp[q] : f[q];
        }
        d2a[m][v] = prod;
      }
  }

  std::string name_;
  Mode mode_;
  FamilyParams p_;
};

//--- spherical cylinder ------------------------------------------------------

// Sigma = S^2 x R with the unit round sphere: g = d theta^2 + sin^2 theta
// d phi^2 + dz^2.  Two charts; chart 1 uses spherical coordinates whose
// pole sits on chart 0's equator (rotation (X,Y,Z) -> (Z,Y,-X) of the
// embedding).  With amplitude > 0 the lapse carries a static Gaussian bump
// centered at the embedding point (1,0,0), z = 0; it is written through the
// embedding so both charts see the same scalar.
class SphericalCylinder final : public MetricField {
 public:
  explicit SphericalCylinder(FamilyParams p) : p_(p) {}

  std::string name() const override { return "spherical_cylinder"; }
  int chart_count() const override { return 2; }

  ChartInfo chart_info(int) const override {
    ChartInfo info;
    info.box[0] = {0.35, kPi - 0.35};
    info.period[1] = 2.0 * kPi;
    info.box[1] = {0.0, 2.0 * kPi};
    info.box[2] = {-p_.z_extent, p_.z_extent};
    info.bounded_box = true;
    return info;
  }

  void primal(int chart, const Vec4& x, double& n, Mat3& g) const override {
    double s = std::sin(x[1]);
    g = scaled_identity(1.0);
    g[1][1] = s * s;
    n = 1.0;
    if (p_.amplitude != 0.0) {
      Vec3 e = embed(x[1], x[2]);
      if (chart == 1) e = rot_inv(e);
      double q = 2.0 * (1.0 - e[0]) + x[3] * x[3];
      n += p_.amplitude * std::exp(-q / (p_.width * p_.width));
    }
  }

  MetricJet jet(int chart, const Vec4& x) const override {
    MetricJet j;
    double th = x[1];
    double s = std::sin(th), c = std::cos(th);
    j.g = scaled_identity(1.0);
    j.g[1][1] = s * s;
    j.dg[1][1][1] = 2.0 * s * c;             // d_theta g_phiphi
    j.d2g[1][1][1][1] = 2.0 * (c * c - s * s);  // d_theta^2 g_phiphi
    j.n = 1.0;
    if (p_.amplitude != 0.0) lapse_jet(chart, x, j.n, j.dn, j.d2n);
    return j;
  }

  bool chart_valid(int, const Vec4& x, double margin) const override {
    double th = x[1];
    return th > kTheta0 + margin && th < kPi - kTheta0 - margin;
  }

  int preferred_chart(int chart, const Vec4& x) const override {
    double th = x[1];
    if (th > kSwitch && th < kPi - kSwitch) return chart;
    return 1 - chart;
  }

  Vec4 transition(int from, int to, const Vec4& x) const override {
    if (from == to) return x;
    Vec3 u = embed(x[1], x[2]);
    Vec3 v = (from == 0) ? rot(u) : rot_inv(u);
    double th = std::acos(std::clamp(v[2], -1.0, 1.0));
    double ph = std::atan2(v[1], v[0]);
    if (ph < 0.0) ph += 2.0 * kPi;
    return {x[0], th, ph, x[3]};
  }

  Mat4 transition_jacobian(int from, int to, const Vec4& x) const override {
    Mat4 jac{};
    jac[0][0] = jac[3][3] = 1.0;
    if (from == to) {
      jac[1][1] = jac[2][2] = 1.0;
      return jac;
    }
    double th = x[1], ph = x[2];
    Vec3 u = embed(th, ph);
    Vec3 du_th = {std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph),
                  -std::sin(th)};
    Vec3 du_ph = {-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph),
                  0.0};
    Vec3 v = (from == 0) ? rot(u) : rot_inv(u);
    Vec3 dv_th = (from == 0) ? rot(du_th) : rot_inv(du_th);
    Vec3 dv_ph = (from == 0) ? rot(du_ph) : rot_inv(du_ph);
    double st = std::sqrt(std::max(1.0 - v[2] * v[2], 1e-30));
    double phi2 = std::atan2(v[1], v[0]);
    double cp = std::cos(phi2), sp = std::sin(phi2);
    // d theta' = -dv_z / sin theta'; d phi' = (-sp dv_x + cp dv_y)/ sin theta'
    jac[1][1] = -dv_th[2] / st;
    jac[1][2] = -dv_ph[2] / st;
    jac[2][1] = (-sp * dv_th[0] + cp * dv_th[1]) / st;
    jac[2][2] = (-sp * dv_ph[0] + cp * dv_ph[1]) / st;
    return jac;
  }

  double length_scale() const override { return 1.0; }

  static constexpr double kTheta0 = 1e-3;  // hard polar exclusion
  static constexpr double kSwitch = 0.6;   // preferred-chart threshold

 private:
  static Vec3 embed(double th, double ph) {
    return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
            std::cos(th)};
  }
  static Vec3 rot(const Vec3& u) { return {u[2], u[1], -u[0]}; }
  static Vec3 rot_inv(const Vec3& u) { return {-u[2], u[1], u[0]}; }

  // n = 1 + A exp(-(|u - u0|^2 + z^2)/w^2) with u0 = (1,0,0); chain rule
  // through the embedding.  Only the first embedding component enters.
  void lapse_jet(int chart, const Vec4& x, double& n, Vec4& dn,
                 Mat4& d2n) const {
    double th = x[1], ph = x[2], z = x[3];
    double st = std::sin(th), ct = std::cos(th);
    double sp = std::sin(ph), cp = std::cos(ph);
    Vec3 e{st * cp, st * sp, ct};
    Vec3 e_th{ct * cp, ct * sp, -st};
    Vec3 e_ph{-st * sp, st * cp, 0.0};
    Vec3 e_thth{-st * cp, -st * sp, -ct};
    Vec3 e_thph{-ct * sp, ct * cp, 0.0};
    Vec3 e_phph{-st * cp, -st * sp, 0.0};
    if (chart == 1) {
      e = rot_inv(e);
      e_th = rot_inv(e_th);
      e_ph = rot_inv(e_ph);
      e_thth = rot_inv(e_thth);
      e_thph = rot_inv(e_thph);
      e_phph = rot_inv(e_phph);
    }
    double q = 2.0 * (1.0 - e[0]) + z * z;
    double dq[4] = {0.0, -2.0 * e_th[0], -2.0 * e_ph[0], 2.0 * z};
    double d2q[4][4] = {};
    d2q[1][1] = -2.0 * e_thth[0];
    d2q[1][2] = d2q[2][1] = -2.0 * e_thph[0];
    d2q[2][2] = -2.0 * e_phph[0];
    d2q[3][3] = 2.0;
    double w2 = p_.width * p_.width;
    double amp = p_.amplitude * std::exp(-q / w2);
    n = 1.0 + amp;
    for (int i = 0; i < 4; ++i) dn[i] = -amp * dq[i] / w2;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        d2n[i][j] = amp * (dq[i] * dq[j] / (w2 * w2) - d2q[i][j] / w2);
  }

  FamilyParams p_;
};

//--- finite-difference provider ----------------------------------------------

class FiniteDifferenceField final : public MetricField {
 public:
  FiniteDifferenceField(std::shared_ptr<const MetricField> base, double step)
      : base_(std::move(base)), h_(step) {}

  std::string name() const override { return base_->name() + "+fd"; }
  int chart_count() const override { return base_->chart_count(); }
  ChartInfo chart_info(int c) const override { return base_->chart_info(c); }
  void primal(int c, const Vec4& x, double& n, Mat3& g) const override {
    base_->primal(c, x, n, g);
  }
  bool chart_valid(int c, const Vec4& x, double m) const override {
    return base_->chart_valid(c, x, m);
  }
  int preferred_chart(int c, const Vec4& x) const override {
    return base_->preferred_chart(c, x);
  }
  Vec4 transition(int f, int t, const Vec4& x) const override {
    return base_->transition(f, t, x);
  }
  Mat4 transition_jacobian(int f, int t, const Vec4& x) const override {
    return base_->transition_jacobian(f, t, x);
  }
  bool spatially_flat() const override { return base_->spatially_flat(); }
  double length_scale() const override { return base_->length_scale(); }

  MetricJet jet(int chart, const Vec4& x) const override {
    MetricJet j;
    base_->primal(chart, x, j.n, j.g);
    auto eval_n = [&](const Vec4& y) {
      double n;
      Mat3 g;
      base_->primal(chart, y, n, g);
      return n;
    };
    auto eval_g = [&](const Vec4& y) {
      double n;
      Mat3 g;
      base_->primal(chart, y, n, g);
      return g;
    };
    for (int m = 0; m < 4; ++m) {
      j.dn[m] = d1(eval_n, x, m);
      j.dg[m] = d1m(eval_g, x, m);
      j.d2n[m][m] = d2(eval_n, x, m);
      j.d2g[m][m] = d2m(eval_g, x, m);
    }
    for (int m = 0; m < 4; ++m)
      for (int v = m + 1; v < 4; ++v) {
        auto dn_v = [&](const Vec4& y) { return d1(eval_n, y, v); };
        auto dg_v = [&](const Vec4& y) { return d1m(eval_g, y, v); };
        j.d2n[m][v] = j.d2n[v][m] = d1(dn_v, x, m);
        j.d2g[m][v] = j.d2g[v][m] = d1m(dg_v, x, m);
      }
    return j;
  }

 private:
  template <class F>
  double d1(const F& f, Vec4 x, int m) const {
    Vec4 xp = x, xpp = x, xm = x, xmm = x;
    xp[m] += h_;
    xpp[m] += 2.0 * h_;
    xm[m] -= h_;
    xmm[m] -= 2.0 * h_;
    return (-f(xpp) + 8.0 * f(xp) - 8.0 * f(xm) + f(xmm)) / (12.0 * h_);
  }
  template <class F>
  double d2(const F& f, Vec4 x, int m) const {
    Vec4 xp = x, xpp = x, xm = x, xmm = x;
    xp[m] += h_;
    xpp[m] += 2.0 * h_;
    xm[m] -= h_;
    xmm[m] -= 2.0 * h_;
    return (-f(xpp) + 16.0 * f(xp) - 30.0 * f(x) + 16.0 * f(xm) - f(xmm)) /
           (12.0 * h_ * h_);
  }
  template <class F>
  Mat3 d1m(const F& f, Vec4 x, int m) const {
    Vec4 xp = x, xpp = x, xm = x, xmm = x;
    xp[m] += h_;
    xpp[m] += 2.0 * h_;
    xm[m] -= h_;
    xmm[m] -= 2.0 * h_;
    Mat3 a = f(xpp), b = f(xp), c = f(xm), d = f(xmm);
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj)
        r[i][jj] =
            (-a[i][jj] + 8.0 * b[i][jj] - 8.0 * c[i][jj] + d[i][jj]) /
            (12.0 * h_);
    return r;
  }
  template <class F>
  Mat3 d2m(const F& f, Vec4 x, int m) const {
    Vec4 xp = x, xpp = x, xm = x, xmm = x;
    xp[m] += h_;
    xpp[m] += 2.0 * h_;
    xm[m] -= h_;
    xmm[m] -= 2.0 * h_;
    Mat3 a = f(xpp), b = f(xp), z = f(x), c = f(xm), d = f(xmm);
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj)
        r[i][jj] = (-a[i][jj] + 16.0 * b[i][jj] - 30.0 * z[i][jj] +
                    16.0 * c[i][jj] - d[i][jj]) /
                   (12.0 * h_ * h_);
    return r;
  }

  std::shared_ptr<const MetricField> base_;
  double h_;
};

}  // namespace

//--- assembly ---------------------------------------------------------------

namespace {

void assemble_first_order(MetricSample& s) {
  const MetricJet& j = s.jet;
  s.g4 = Mat4{};
  s.g4[0][0] = -j.n * j.n;
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj) s.g4[1 + i][1 + jj] = j.g[i][jj];
  s.g4inv = Mat4{};
  s.g4inv[0][0] = -1.0 / (j.n * j.n);
  Mat3 ginv = inverse(j.g);
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj) s.g4inv[1 + i][1 + jj] = ginv[i][jj];

  // dg4[mu][al][be] = d_mu g4_{al be}
  double dg4[4][4][4] = {};
  for (int m = 0; m < 4; ++m) {
    dg4[m][0][0] = -2.0 * j.n * j.dn[m];
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj) dg4[m][1 + i][1 + jj] = j.dg[m][i][jj];
  }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        double sum = 0.0;
        for (int m = 0; m < 4; ++m)
          sum += s.g4inv[a][m] * (dg4[b][m][c] + dg4[c][m][b] - dg4[m][b][c]);
        s.gamma[a][b][c] = 0.5 * sum;
      }

  // Second fundamental form (artifact convention) and deformation tensor.
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj) s.k[i][jj] = -2.0 / j.n * j.dg[0][i][jj];

  // Exact Lie derivative of g along T = n^{-1} d_t (coordinate components):
  // pi_00 = 0, pi_0i = d_i n, pi_ij = n^{-1} d_t g_ij.
  s.pi_lie = Mat4{};
  for (int i = 0; i < 3; ++i) {
    s.pi_lie[0][1 + i] = s.pi_lie[1 + i][0] = j.dn[1 + i];
    for (int jj = 0; jj < 3; ++jj)
      s.pi_lie[1 + i][1 + jj] = j.dg[0][i][jj] / j.n;
  }

  // Frame components as quoted alongside the budget assumptions:
  // pi_00 = 0, pi_0i = grad_i log n, pi_ij = -2 k_ij.
  s.pi_frame = Mat4{};
  for (int i = 0; i < 3; ++i) {
    s.pi_frame[0][1 + i] = s.pi_frame[1 + i][0] = j.dn[1 + i] / j.n;
    for (int jj = 0; jj < 3; ++jj)
      s.pi_frame[1 + i][1 + jj] = -2.0 * s.k[i][jj];
  }
}

void assemble_curvature(MetricSample& s) {
  const MetricJet& j = s.jet;
  double dg4[4][4][4] = {};
  double d2g4[4][4][4][4] = {};  // [mu][nu][al][be] = d_mu d_nu g4_{al be}
  for (int m = 0; m < 4; ++m) {
    dg4[m][0][0] = -2.0 * j.n * j.dn[m];
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj) dg4[m][1 + i][1 + jj] = j.dg[m][i][jj];
  }
  for (int m = 0; m < 4; ++m)
    for (int v = 0; v < 4; ++v) {
      d2g4[m][v][0][0] = -2.0 * (j.dn[m] * j.dn[v] + j.n * j.d2n[m][v]);
      for (int i = 0; i < 3; ++i)
        for (int jj = 0; jj < 3; ++jj)
          d2g4[m][v][1 + i][1 + jj] = j.d2g[m][v][i][jj];
    }

  // d_mu g4inv = -g4inv dg4 g4inv
  double dginv[4][4][4] = {};
  for (int m = 0; m < 4; ++m)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double sum = 0.0;
        for (int p = 0; p < 4; ++p)
          for (int q = 0; q < 4; ++q)
            sum += s.g4inv[a][p] * dg4[m][p][q] * s.g4inv[q][b];
        dginv[m][a][b] = -sum;
      }

  // dGamma[mu][a][b][c] = d_mu Gamma^a_{bc}
  static thread_local double dGamma[4][4][4][4];
  for (int m = 0; m < 4; ++m)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) {
          double sum = 0.0;
          for (int q = 0; q < 4; ++q) {
            sum += dginv[m][a][q] *
                   (dg4[b][q][c] + dg4[c][q][b] - dg4[q][b][c]);
            sum += s.g4inv[a][q] * (d2g4[m][b][q][c] + d2g4[m][c][q][b] -
                                    d2g4[m][q][b][c]);
          }
          dGamma[m][a][b][c] = 0.5 * sum;
        }

  // R^a_{b c d} = d_c Gamma^a_{d b} - d_d Gamma^a_{c b}
  //              + Gamma^a_{c l} Gamma^l_{d b} - Gamma^a_{d l} Gamma^l_{c b}
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double r = dGamma[c][a][d][b] - dGamma[d][a][c][b];
          for (int l = 0; l < 4; ++l)
            r += s.gamma[a][c][l] * s.gamma[l][d][b] -
                 s.gamma[a][d][l] * s.gamma[l][c][b];
          s.riemann[a][b][c][d] = r;  // temporarily upper first index
        }
  double lowered[4][4][4][4];
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double r = 0.0;
          for (int m = 0; m < 4; ++m) r += s.g4[a][m] * s.riemann[m][b][c][d];
          lowered[a][b][c][d] = r;
        }
  std::copy(&lowered[0][0][0][0], &lowered[0][0][0][0] + 256,
            &s.riemann[0][0][0][0]);
}

}  // namespace

MetricSample sample_first_order(const MetricField& field,
                                const SpacetimePoint& p) {
  MetricSample s;
  s.p = p;
  s.jet = field.jet(p.chart, p.x);
  if (s.jet.n <= 0.0)
    throw Error(ErrorCode::DegenerateMetric, "non-positive lapse");
  assemble_first_order(s);
  return s;
}

MetricSample sample(const MetricField& field, const SpacetimePoint& p) {
  MetricSample s = sample_first_order(field, p);
  assemble_curvature(s);
  return s;
}

void dual_curvature(const MetricSample& s, double dual[4][4][4][4]) {
  // Raise the first pair, then contract with the volume form.
  double rup[4][4][4][4];
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double sum = 0.0;
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
              sum += s.g4inv[m][a] * s.g4inv[n][b] * s.riemann[a][b][c][d];
          rup[m][n][c][d] = sum;
        }
  double sqg = s.jet.n * std::sqrt(det(s.jet.g));
  static const auto eps = [] {
    std::array<std::array<std::array<std::array<int, 4>, 4>, 4>, 4> e{};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          for (int d = 0; d < 4; ++d) e[a][b][c][d] = levi_civita4(a, b, c, d);
    return e;
  }();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double sum = 0.0;
          for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) {
              int e = eps[a][b][m][n];
              if (e != 0) sum += e * rup[m][n][c][d];
            }
          dual[a][b][c][d] = 0.5 * sqg * sum;
        }
}

double contract4(const double r[4][4][4][4], const Vec4& a, const Vec4& b,
                 const Vec4& c, const Vec4& d) {
  double out = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (a[i] == 0.0) continue;
    for (int jj = 0; jj < 4; ++jj) {
      if (b[jj] == 0.0) continue;
      double ab = a[i] * b[jj];
      for (int kk = 0; kk < 4; ++kk) {
        if (c[kk] == 0.0) continue;
        double abc = ab * c[kk];
        for (int l = 0; l < 4; ++l) out += r[i][jj][kk][l] * abc * d[l];
      }
    }
  }
  return out;
}

double riemannian_norm(const std::vector<double>& components, int rank) {
  auto sq_sum = [&]() {
    double s = 0.0;
    for (double c : components) s += c * c;
    return s;
  };
  switch (rank) {
    case 1:
      if (components.size() != 4)
        throw Error(ErrorCode::RankUnsupported, "rank-1 expects 4 components");
      return std::sqrt(sq_sum());
    case 2:
      if (components.size() != 16)
        throw Error(ErrorCode::RankUnsupported, "rank-2 expects 16 components");
      return std::sqrt(sq_sum());
    case 4:
      if (components.size() != 256)
        throw Error(ErrorCode::RankUnsupported, "rank-4 expects 256 components");
      return std::sqrt(sq_sum() / 8.0);
    default:
      throw Error(ErrorCode::RankUnsupported, "supported ranks: 1, 2, 4");
  }
}

PointBudget point_budget(const MetricField& field, const SpacetimePoint& p) {
  MetricSample s = sample(field, p);
  PointBudget b;
  b.n = s.jet.n;
  auto ev = sym_eigenvalues(s.jet.g);
  b.g_eig_min = ev[0];
  b.g_eig_max = ev[2];

  Mat3 ginv = inverse(s.jet.g);
  // |pi|_gbar with the frame components: pi_00^2 + 2|pi_0.|^2 + |pi_..|^2.
  double p0i = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj)
      p0i += ginv[i][jj] * s.pi_frame[0][1 + i] * s.pi_frame[0][1 + jj];
  double pij = 0.0, nk = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj)
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) {
          pij += ginv[i][a] * ginv[jj][c] * s.pi_frame[1 + i][1 + jj] *
                 s.pi_frame[1 + a][1 + c];
          nk += ginv[i][a] * ginv[jj][c] * (s.jet.n * s.k[i][jj]) *
                (s.jet.n * s.k[a][c]);
        }
  b.pi_norm = std::sqrt(2.0 * p0i + pij);
  b.nk_norm = std::sqrt(nk);

  // |E|^2 + |H|^2 via the frame curvature norm (each independent block once).
  // Assemble an orthonormal spatial triad and the unit observer.
  // E_ab = Riem(f_a, T, f_b, T), H likewise with the left dual.
  // Implemented in frames.cpp; to avoid a dependency cycle we inline the
  // minimal contraction here using coordinate components.
  Vec4 T = s.observer();
  Vec4 f[3];
  {
    Vec4 seed[3] = {{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
    for (int a = 0; a < 3; ++a) {
      Vec4 v = seed[a];
      for (int b = 0; b < a; ++b) {
        double c = dot(s.g4, v, f[b]);
        for (int m = 0; m < 4; ++m) v[m] -= c * f[b][m];
      }
      double nn = std::sqrt(dot(s.g4, v, v));
      for (int m = 0; m < 4; ++m) f[a][m] = v[m] / nn;
    }
  }
  double dual[4][4][4][4];
  dual_curvature(s, dual);
  double curv = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int bb = 0; bb < 3; ++bb) {
      double e = contract4(s.riemann, f[a], T, f[bb], T);
      double h = contract4(dual, f[a], T, f[bb], T);
      curv += e * e + h * h;
    }
  b.curvature_sq = curv;
  return b;
}

BudgetAuditReport budget_audit(const MetricField& field, const Budget& budget,
                               int resolution) {
  ChartInfo info = field.chart_info(0);
  int nt = std::max(2, resolution / 2);
  double sup_n = 0.0, inf_n = 1e300, sup_pi = 0.0;
  double eig_min = 1e300, eig_max = 0.0;
  double l2_curv_t0 = 0.0;
  for (int it = 0; it <= nt; ++it) {
    double t = budget.time_lo +
               (budget.time_hi - budget.time_lo) * it / static_cast<double>(nt);
    double cell = 1.0;
    for (int a = 0; a < 3; ++a)
      cell *= info.box[a].length() / static_cast<double>(resolution);
    for (int i = 0; i < resolution; ++i)
      for (int jj = 0; jj < resolution; ++jj)
        for (int kk = 0; kk < resolution; ++kk) {
          Vec4 x = {t,
                    info.box[0].lo + info.box[0].length() * (i + 0.5) /
                                         resolution,
                    info.box[1].lo + info.box[1].length() * (jj + 0.5) /
                                         resolution,
                    info.box[2].lo + info.box[2].length() * (kk + 0.5) /
                                         resolution};
          PointBudget pb = point_budget(field, {0, x});
          sup_n = std::max(sup_n, pb.n);
          inf_n = std::min(inf_n, pb.n);
          sup_pi = std::max(sup_pi, pb.pi_norm);
          eig_min = std::min(eig_min, pb.g_eig_min);
          eig_max = std::max(eig_max, pb.g_eig_max);
          if (it == 0) {
            double sqg = 1.0;
            MetricSample ms = sample_first_order(field, {0, x});
            sqg = std::sqrt(det(ms.jet.g));
            l2_curv_t0 += pb.curvature_sq * sqg * cell;
          }
        }
  }
  double interval = budget.time_hi - budget.time_lo;

  BudgetAuditReport rep;
  auto add = [&](const std::string& name, double measured, double bound) {
    BudgetCheck c;
    c.name = name;
    c.measured = measured;
    c.bound = bound;
    c.pass = measured <= bound;
    rep.checks.push_back(c);
  };
  add("lapse_upper", sup_n, budget.N0);
  add("lapse_lower", 1.0 / inf_n, budget.N0);
  add("deformation_budget", interval * sup_pi, budget.K0);
  add("metric_equivalence_upper", eig_max, budget.I0);
  add("metric_equivalence_lower", 1.0 / eig_min, budget.I0);
  add("initial_curvature_l2", std::sqrt(l2_curv_t0), budget.R0);
  rep.all_pass = true;
  for (const auto& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

void Budget::validate() const {
  const struct {
    const char* name;
    double v;
  } entries[] = {{"N0", N0},         {"K0", K0},     {"R0", R0},
                 {"I0", I0},         {"rho0", rho0}, {"epsilon", epsilon},
                 {"r0", r0},         {"delta_star", delta_star},
                 {"delta0", delta0}, {"epsilon0", epsilon0},
                 {"varpi", varpi},   {"c_gronwall", c_gronwall}};
  for (const auto& e : entries)
    if (!(e.v > 0.0))
      throw Error(ErrorCode::ScenarioInvalid,
                  std::string("budget entry must be positive: ") + e.name);
  if (N0 < 1.0)
    throw Error(ErrorCode::ScenarioInvalid, "budget requires N0 >= 1");
  if (!(epsilon < 1.0 / 3.0))
    throw Error(ErrorCode::ScenarioInvalid,
                "closeness epsilon must stay below 1/3");
  if (!(time_hi > time_lo))
    throw Error(ErrorCode::ScenarioInvalid, "budget interval is empty");
}

//--- factory -----------------------------------------------------------------

std::unique_ptr<MetricField> make_field(const std::string& family,
                                        const FamilyParams& params) {
  if (family == "minkowski")
    return std::make_unique<FlatFamily>("minkowski", FlatFamily::Lapse::kConstant,
                                        params, false);
  if (family == "flat_torus") {
    FamilyParams p = params;
    p.lapse = 1.0;
    return std::make_unique<FlatFamily>("flat_torus",
                                        FlatFamily::Lapse::kConstant, p, true);
  }
  if (family == "minkowski_lapse_bump")
    return std::make_unique<FlatFamily>("minkowski_lapse_bump",
                                        FlatFamily::Lapse::kGaussBump, params,
                                        false);
  if (family == "torus_lapse_bump")
    return std::make_unique<FlatFamily>("torus_lapse_bump",
                                        FlatFamily::Lapse::kPeriodicBump,
                                        params, true);
  if (family == "spherical_cylinder")
    return std::make_unique<SphericalCylinder>(params);
  if (family == "exp_contracting")
    return std::make_unique<ConformalFamily>(
        "exp_contracting", ConformalFamily::Mode::kExpContracting, params);
  if (family == "torus_wave")
    return std::make_unique<ConformalFamily>("torus_wave",
                                             ConformalFamily::Mode::kWave,
                                             params);
  throw Error(ErrorCode::ScenarioInvalid, "unknown metric family: " + family);
}

std::unique_ptr<MetricField> finite_difference_provider(
    std::shared_ptr<const MetricField> base, double step) {
  return std::make_unique<FiniteDifferenceField>(std::move(base), step);
}

}  // namespace nullcone

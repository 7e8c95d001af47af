#include "nullcone/ode.hpp"

#include <algorithm>
#include <cmath>

namespace nullcone::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

}  // namespace

void DensePath::eval(double s, double* y) const {
  if (steps_.empty()) throw Error(ErrorCode::StepUnderflow, "empty path");
  // Locate the covering step; monotone queries are O(1) via the hint.
  std::size_t i = std::min(hint_, steps_.size() - 1);
  while (i + 1 < steps_.size() && s > steps_[i].s0 + steps_[i].h) ++i;
  while (i > 0 && s < steps_[i].s0) --i;
  hint_ = i;
  const StepRecord& r = steps_[i];
  double th = (s - r.s0) / r.h;
  double th1 = 1.0 - th;
  const double* rc = r.rcont.data();
  for (int k = 0; k < dim_; ++k) {
    double v = rc[3 * dim_ + k] + th1 * rc[4 * dim_ + k];
    v = rc[2 * dim_ + k] + th * v;
    v = rc[1 * dim_ + k] + th1 * v;
    y[k] = rc[k] + th * v;
  }
}

IntegrateResult integrate(int dim, const Rhs& rhs, const double* y0, double s0,
                          double s1, const Options& opt, const StepCallback& cb) {
  IntegrateResult res;
  res.path = DensePath(dim);
  std::vector<double> y(y0, y0 + dim), ynew(dim), ysti(dim), err(dim);
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim),
      k7(dim);
  double s = s0;
  rhs(s, y.data(), k1.data());

  double h;
  if (opt.fixed_step) {
    h = opt.fixed_h;
  } else if (opt.init_step > 0.0) {
    h = opt.init_step;
  } else {
    double ynorm = 0.0, fnorm = 0.0;
    for (int i = 0; i < dim; ++i) {
      ynorm = std::max(ynorm, std::abs(y[i]));
      fnorm = std::max(fnorm, std::abs(k1[i]));
    }
    h = (fnorm > 1e-12) ? 0.01 * std::max(ynorm, 1.0) / fnorm : 1e-3;
    h = std::min(h, (s1 - s0) / 4.0);
  }

  std::size_t steps = 0;
  while (s < s1) {
    if (++steps > opt.max_steps) {
      res.step_limited = true;
      break;
    }
    h = std::min(h, opt.max_step);
    bool last = false;
    if (s + h >= s1) {
      h = s1 - s;
      last = true;
    }
    if (h <= std::abs(s) * 1e-15 + 1e-300) {
      res.step_limited = true;
      break;
    }

    auto stage = [&](double c, std::vector<double>& kout,
                     std::initializer_list<std::pair<double, const std::vector<double>*>>
                         terms) {
      for (int i = 0; i < dim; ++i) {
        double acc = y[i];
        for (const auto& [w, kk] : terms) acc += h * w * (*kk)[i];
        ysti[i] = acc;
      }
      rhs(s + c * h, ysti.data(), kout.data());
    };
    stage(c2, k2, {{a21, &k1}});
    stage(c3, k3, {{a31, &k1}, {a32, &k2}});
    stage(c4, k4, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    stage(c5, k5, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    stage(1.0, k6, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    for (int i = 0; i < dim; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                            a75 * k5[i] + a76 * k6[i]);
    rhs(s + h, ynew.data(), k7.data());

    if (!opt.fixed_step) {
      double errnorm = 0.0;
      for (int i = 0; i < dim; ++i) {
        double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                        e6 * k6[i] + e7 * k7[i]);
        double sc = opt.abs_tol +
                    opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        errnorm += (e / sc) * (e / sc);
      }
      errnorm = std::sqrt(errnorm / dim);
      if (errnorm > 1.0) {
        h *= std::max(0.2, 0.9 * std::pow(errnorm, -0.2));
        continue;  // reject
      }
      double fac = 0.9 * std::pow(std::max(errnorm, 1e-10), -0.2);
      double hnext = h * std::clamp(fac, 0.2, 5.0);

      StepRecord rec;
      rec.s0 = s;
      rec.h = h;
      rec.rcont.resize(5 * dim);
      for (int i = 0; i < dim; ++i) {
        double ydiff = ynew[i] - y[i];
        double bspl = h * k1[i] - ydiff;
        rec.rcont[i] = y[i];
        rec.rcont[dim + i] = ydiff;
        rec.rcont[2 * dim + i] = bspl;
        rec.rcont[3 * dim + i] = ydiff - h * k7[i] - bspl;
        rec.rcont[4 * dim + i] =
            h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                 d6 * k6[i] + d7 * k7[i]);
      }
      res.path.append(std::move(rec));
      double s_prev = s;
      s += h;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      h = hnext;
      if (cb && cb(res.path, s_prev, s, y.data()) == StepVerdict::kStop) {
        res.stopped_by_callback = true;
        break;
      }
      if (last && !res.stopped_by_callback && s >= s1) break;
    } else {
      StepRecord rec;
      rec.s0 = s;
      rec.h = h;
      rec.rcont.resize(5 * dim);
      for (int i = 0; i < dim; ++i) {
        double ydiff = ynew[i] - y[i];
        double bspl = h * k1[i] - ydiff;
        rec.rcont[i] = y[i];
        rec.rcont[dim + i] = ydiff;
        rec.rcont[2 * dim + i] = bspl;
        rec.rcont[3 * dim + i] = ydiff - h * k7[i] - bspl;
        rec.rcont[4 * dim + i] =
            h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                 d6 * k6[i] + d7 * k7[i]);
      }
      res.path.append(std::move(rec));
      double s_prev = s;
      s += h;
      y.swap(ynew);
      k1.swap(k7);
      if (cb && cb(res.path, s_prev, s, y.data()) == StepVerdict::kStop) {
        res.stopped_by_callback = true;
        break;
      }
      if (last) break;
    }
  }
  res.y_end = y;
  res.s_end = s;
  return res;
}

double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0)
    throw Error(ErrorCode::StepUnderflow, "root not bracketed");
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    double mid;
    // Secant proposal clipped into the middle 80% of the bracket.
    double sec = lo - flo * (hi - lo) / (fhi - flo);
    double lo_c = lo + 0.1 * (hi - lo), hi_c = hi - 0.1 * (hi - lo);
    mid = (sec > lo_c && sec < hi_c) ? sec : 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if (flo * fm < 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

double minimize(const std::function<double(double)>& f, double lo, double hi,
                double tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace nullcone::ode

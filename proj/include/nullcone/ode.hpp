#pragma once

// Explicit Dormand-Prince 5(4) integrator with 4th-order dense output.
// Deterministic: same inputs produce the same step sequence and bytes.

#include <functional>
#include <vector>

#include "nullcone/core.hpp"

namespace nullcone::ode {

using Rhs = std::function<void(double s, const double* y, double* dy)>;

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 1e300;
  double init_step = 0.0;  // 0 = automatic
  bool fixed_step = false;
  double fixed_h = 1e-2;
  std::size_t max_steps = 50000;
};

// One accepted step with its dense-output polynomial.
struct StepRecord {
  double s0 = 0.0;
  double h = 0.0;
  // rcont[5] blocks of `dim` values each, laid out contiguously.
  std::vector<double> rcont;
};

class DensePath {
 public:
  DensePath(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  double s_begin() const { return steps_.empty() ? 0.0 : steps_.front().s0; }
  double s_end() const {
    return steps_.empty() ? 0.0 : steps_.back().s0 + steps_.back().h;
  }
  std::size_t step_count() const { return steps_.size(); }
  const StepRecord& step(std::size_t i) const { return steps_[i]; }

  void eval(double s, double* y) const;
  std::vector<double> eval(double s) const {
    std::vector<double> y(dim_);
    eval(s, y.data());
    return y;
  }

  void append(StepRecord rec) { steps_.push_back(std::move(rec)); }

 private:
  int dim_;
  std::vector<StepRecord> steps_;
  mutable std::size_t hint_ = 0;
};

enum class StepVerdict { kContinue, kStop };

// Called after each accepted step with the growing path and the step bounds.
using StepCallback =
    std::function<StepVerdict(const DensePath& path, double s_prev, double s_now,
                              const double* y_now)>;

struct IntegrateResult {
  DensePath path;
  std::vector<double> y_end;
  double s_end = 0.0;
  bool stopped_by_callback = false;
  bool step_limited = false;  // step underflow or budget: partial path kept
};

IntegrateResult integrate(int dim, const Rhs& rhs, const double* y0, double s0,
                          double s1, const Options& opt,
                          const StepCallback& cb = {});

// Scalar root bracketing on a dense path component (or a functional of the
// state): finds s in [lo, hi] with f(s) = 0 given f(lo) and f(hi) of opposite
// sign.  Bisection + secant hybrid, tolerance on s.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol);

// Golden-section/parabolic minimization of a smooth scalar on [lo, hi].
double minimize(const std::function<double(double)>& f, double lo, double hi,
                double tol);

}  // namespace nullcone::ode

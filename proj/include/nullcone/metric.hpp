#pragma once

// 3+1 metric fields in transported coordinates: g = -n^2 dt^2 + g_ij dx^i dx^j.
//
// A field owns an atlas of charts.  Each chart evaluates a second-order jet of
// (n, g_ij); everything downstream (Christoffels, curvature, second fundamental
// form, deformation tensor) is assembled from the jet at a point.  Analytic
// families fill jets in closed form; a finite-difference provider can wrap any
// family for cross-checks.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nullcone/core.hpp"

namespace nullcone {

struct SpacetimePoint {
  int chart = 0;
  Vec4 x{};  // (t, x1, x2, x3) chart coordinates

  double t() const { return x[0]; }
};

// Chart-local jet of the metric data, second order.
struct MetricJet {
  double n = 1.0;
  Vec4 dn{};    // d n / dx^mu
  Mat4 d2n{};   // symmetric second derivatives
  Mat3 g{};     // spatial metric
  std::array<Mat3, 4> dg{};                 // d g_ij / dx^mu
  std::array<std::array<Mat3, 4>, 4> d2g{};  // symmetric in the two slots
};

struct ChartInfo {
  // Period per spatial axis (index 0..2), unset when the axis is unbounded.
  std::array<std::optional<double>, 3> period{};
  // Soft working box per axis used by sampling grids; identical to the
  // fundamental cell for periodic axes.
  std::array<Interval, 3> box{};
  bool bounded_box = false;
};

class MetricField {
 public:
  virtual ~MetricField() = default;

  virtual std::string name() const = 0;
  virtual int chart_count() const { return 1; }
  virtual ChartInfo chart_info(int chart) const = 0;

  // Primal evaluation (lapse + spatial metric only).
  virtual void primal(int chart, const Vec4& x, double& n, Mat3& g) const = 0;

  // Full jet; analytic families override.
  virtual MetricJet jet(int chart, const Vec4& x) const = 0;

  // True if the point is inside the chart's valid region; margin>0 shrinks
  // the region (used for switching hysteresis).
  virtual bool chart_valid(int chart, const Vec4& x, double margin) const {
    (void)chart;
    (void)x;
    (void)margin;
    return true;
  }

  // Chart the point should be integrated in; differs from `chart` near a
  // chart boundary.
  virtual int preferred_chart(int chart, const Vec4& x) const {
    (void)x;
    return chart;
  }

  virtual Vec4 transition(int from, int to, const Vec4& x) const {
    if (from != to)
      throw Error(ErrorCode::PointOutsideAtlas, "no transition map");
    return x;
  }

  // Pushforward matrix d(to)/d(from) at x (given in `from` coordinates).
  virtual Mat4 transition_jacobian(int from, int to, const Vec4& x) const {
    if (from != to)
      throw Error(ErrorCode::PointOutsideAtlas, "no transition map");
    Mat4 j{};
    for (int i = 0; i < 4; ++i) j[i][i] = 1.0;
    return j;
  }

  // True when the spatial metric is identically flat in these coordinates
  // (enables exact distance fast paths).
  virtual bool spatially_flat() const { return false; }

  // Characteristic coordinate scale (used for default FD steps and floors).
  virtual double length_scale() const { return 1.0; }
};

//--- assembled point data ----------------------------------------------------

struct MetricSample {
  SpacetimePoint p;
  MetricJet jet;

  Mat4 g4{};     // spacetime metric
  Mat4 g4inv{};
  double gamma[4][4][4] = {};       // Christoffel symbols, upper first index
  double riemann[4][4][4][4] = {};  // fully lowered R_{abcd}

  Mat3 k{};          // second fundamental form, convention k = -(2/n) dt g
  Mat4 pi_frame{};   // deformation tensor in the T-adapted frame
  Mat4 pi_lie{};     // coordinate components of (Lie_T g) (exact transport form)

  Vec4 observer() const { return {1.0 / jet.n, 0.0, 0.0, 0.0}; }
};

// Assembles Christoffels + curvature + fundamental forms at a point.
MetricSample sample(const MetricField& field, const SpacetimePoint& p);

// As `sample` but without curvature (first-derivative level only; cheaper).
MetricSample sample_first_order(const MetricField& field,
                                const SpacetimePoint& p);

// Left Hodge dual of the curvature: (*R)_{ab cd} = 1/2 eps_{ab}^{mn} R_{mn cd}
// with the volume form of the right-handed coordinate order (t, x1, x2, x3).
void dual_curvature(const MetricSample& s, double dual[4][4][4][4]);

// Full contraction of a lowered rank-4 tensor with four vectors.
double contract4(const double r[4][4][4][4], const Vec4& a, const Vec4& b,
                 const Vec4& c, const Vec4& d);

// Norm of frame-component tensors under the auxiliary Riemannian metric
// (all-plus signature in a T-adapted orthonormal frame).  Rank 1 and 2 are
// plain component norms; rank 4 expects curvature-type symmetries and counts
// each independent block once (factor 1/8 on the raw component sum), which is
// the normalization under which |R|^2 = |E|^2 + |H|^2 holds.
double riemannian_norm(const std::vector<double>& components, int rank);

// Pointwise scalar invariants used by the budget audit.
struct PointBudget {
  double n = 1.0;
  double pi_norm = 0.0;       // |pi|_gbar, frame components
  double nk_norm = 0.0;       // |n k|_g
  double g_eig_min = 1.0;     // eigenvalue extremes of g_ij
  double g_eig_max = 1.0;
  double curvature_sq = 0.0;  // |E|^2 + |H|^2
};
PointBudget point_budget(const MetricField& field, const SpacetimePoint& p);

//--- built-in families -------------------------------------------------------

struct FamilyParams {
  double lapse = 1.0;            // constant lapse (minkowski)
  double period = 1.0;           // torus period L
  double amplitude = 0.0;        // bump / wave amplitude
  double width = 0.25;           // bump width
  Vec3 center{};                 // bump center
  double omega = 0.0;            // wave angular frequency
  double z_extent = 2.0;         // cylinder working box half-height
  double contraction_rate = 1.0; // exp_contracting: g = exp(-2 rate t) delta
};

// Families: "minkowski", "flat_torus", "torus_lapse_bump",
// "minkowski_lapse_bump", "spherical_cylinder", "exp_contracting",
// "torus_wave".
std::unique_ptr<MetricField> make_field(const std::string& family,
                                        const FamilyParams& params);

// Wraps a field, replacing jets by centered finite differences of the primal
// data (first derivatives at fourth order, second derivatives at fourth order,
// mixed via nested first-derivative stencils).
std::unique_ptr<MetricField> finite_difference_provider(
    std::shared_ptr<const MetricField> base, double step);

//--- budgets -----------------------------------------------------------------

struct Budget {
  double N0 = 2.0;          // lapse bounds N0^-1 <= n <= N0
  double K0 = 1.0;          // |I| sup |pi| <= K0
  double R0 = 10.0;         // L2 curvature bound on the initial slice
  double I0 = 2.0;          // eigenvalue equivalence of g with delta
  double rho0 = 1.0;        // volume-radius scale
  double epsilon = 0.05;    // near-flat closeness on the patch
  double r0 = 0.5;          // patch radius for the closeness audit
  double delta_star = 0.5;  // depth scale for the flux bootstrap
  double delta0 = 0.5;      // working cone depth
  double epsilon0 = 0.1;    // declared tr chi deviation tolerance
  double varpi = 0.1;       // declared smallness scale
  double time_lo = -1.0;    // the time interval I
  double time_hi = 0.0;
  double c_gronwall = 6.0;  // declared structural constant in the energy bound

  void validate() const;  // throws ScenarioInvalid on nonpositive entries
};

struct BudgetCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
};

struct BudgetAuditReport {
  std::vector<BudgetCheck> checks;
  bool all_pass = false;
};

// Samples the field over the chart box x time interval and checks the declared
// budget.  `resolution` is the number of sample points per axis.
BudgetAuditReport budget_audit(const MetricField& field, const Budget& budget,
                               int resolution);

}  // namespace nullcone

#pragma once
// Ricci coefficients along rays, foliation scalars and their transport
// residuals, leaf geometry checks, and the reduced curvature flux.

#include <vector>

#include "nullcone/geodesics.hpp"

namespace nullcone {

struct RicciCoefficients {
  double trchi = 0.0;
  Mat2 chi{};  // components in the transported orthonormal pair
  double chihat_sq = 0.0;  // |chi - (trchi/2) delta|^2
  Vec2 zeta{};
  double frame_drift = 0.0;  // worst orthonormality defect of the pair
};

// Coefficients at affine parameter s of a Jacobi-carrying ray. Throws
// FrameDegeneracy at a transverse-determinant zero and FrameDrift when the
// transported pair loses orthonormality beyond 1e-6.
RicciCoefficients ricci_coefficients(const NullGeodesic& ray, double s);

struct TransportState {
  std::vector<double> s;
  std::vector<double> phi;
  std::vector<Vec2> psi;
  std::vector<double> residual_phi;  // interior points; 0 at the edges
  std::vector<Vec2> residual_psi;
  double max_dev = 0.0;  // max over the grid of |phi - 1| + |psi|
};

// Evaluates phi = 1/g(T,L) and psi_a = g(e_a, T) on a uniform s-grid and
// forms the transport-equation residuals with a 5-point interior derivative.
TransportState foliation_scalars(const NullGeodesic& ray, double s_lo,
                                 double s_hi, int samples);

struct SmallnessReport {
  double max_dev = 0.0;
  bool bootstrap_ok = false;  // max_dev <= 1e-2
  bool improved_ok = false;   // max_dev <= 1e-3
};
SmallnessReport smallness_monitor(const TransportState& state);

// Independent evaluations of the primed-frame identities at (ray, s):
// first = max |chi'_{ab} - chi_{ab}|, second = max |zeta'_a - (zeta_a -
// phi psi_b chi_{ab})| with the primed frame built explicitly.
std::array<double, 2> primed_consistency(const NullGeodesic& ray, double s,
                                         double phi, const Vec2& psi);

struct FluxReport {
  double delta = 0.0;
  double s_floor = 0.0;
  int level = 0;
  // integrals of |alpha|^2, |beta|^2, rho^2, sigma^2, |betabar|^2
  std::array<double, 5> component_integrals{};
  double reduced_flux = 0.0;     // sqrt of the component sum
  double total_flux = 0.0;       // integral of the -Q(T,T,T,L) density
  double positivity_margin = 0.0;  // min sampled density value
  double vertex_bound = 0.0;     // bound on the skipped [0, s_floor] piece
  double max_dev = 0.0;          // max |phi-1|+|psi| seen over the cone
  int censored_rays = 0;         // rays that stopped before reaching delta
};

// Quadrature of the null curvature components over the cone down to delta.
// Throws DeltaBeyondInjectivity when delta reaches the supplied injectivity
// estimate.
FluxReport reduced_flux(std::shared_ptr<const MetricField> field,
                        const SpacetimePoint& p, double delta, int level,
                        double i_star_estimate, int s_samples, int workers);

struct TrchiReport {
  double max_trchi_dev = 0.0;       // fan max of |trchi - 2/s|
  double max_chihat_integral = 0.0;  // fan max of int |chihat|^2 ds
  double bar_trchi = 0.0;           // coarse-grid comparison bars
  double bar_chihat = 0.0;
  std::vector<double> per_ray_dev;
  std::vector<double> per_ray_integral;
};

TrchiReport trchi_deviation(std::shared_ptr<const MetricField> field,
                            const SpacetimePoint& p, int level, double s_lo,
                            double s_hi, int samples, int workers);

}  // namespace nullcone

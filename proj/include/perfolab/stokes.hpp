#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "perfolab/marked_process.hpp"

namespace perfolab {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  // m[i][j] = d u_i / d x_j

class RefinementNeeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stokes flow outside a sphere of radius a with u = xi on the sphere:
/// u = (3a/4r)(xi + (xi.e)e) + (a^3/4r^3)(xi - 3(xi.e)e), e = x/r.
struct ExteriorSphereFlow {
  double a = 1.0;
  Vec3 xi{1.0, 0.0, 0.0};
};

/// Throws std::domain_error inside the sphere.
Vec3 exterior_velocity(const ExteriorSphereFlow& flow, const Vec3& x);
Mat3 velocity_gradient(const ExteriorSphereFlow& flow, const Vec3& x);

/// Central differences with step h, for cross-checks.
Mat3 velocity_gradient_fd(const ExteriorSphereFlow& flow, const Vec3& x, double h);
double divergence_fd(const ExteriorSphereFlow& flow, const Vec3& x, double h);

struct CapacityEstimate {
  double value = 0.0;        // shell integral plus tail
  double shell_integral = 0.0;
  double tail = 0.0;         // analytic estimate beyond r_max
  double r_max = 0.0;
  int resolution = 0;        // radial panels
  double error_estimate = 0.0;
};

/// int_{a <= |x|} |grad u|^2 by shell quadrature up to r_max plus the r^{-2}
/// tail of the shell density. Throws RefinementNeeded when halving the
/// resolution changes the shell integral by more than `tolerance` (relative).
CapacityEstimate dirichlet_energy(const ExteriorSphereFlow& flow, double r_max, int resolution = 64,
                                  double tolerance = 1e-6);

/// Shell density q(r) = int_{|x| = r} |grad u|^2 dS.
double shell_density(const ExteriorSphereFlow& flow, double r);

/// (d-2) |S^{d-1}| r^{d-2}.
double harmonic_capacity_ball(double radius, int d);

/// int_{|x| > r} |grad (r/|x|)^{d-2}|^2 by radial quadrature, d = 3.
double harmonic_energy_quadrature(double radius, double r_max, int panels = 64);

struct DecayFit {
  bool degenerate = false;
  double velocity_slope = 0.0;
  double gradient_slope = 0.0;
};

/// Least-squares slopes of log sup_{|x|=r}|u| and log sup_{|x|=r}|grad u| against log r.
DecayFit decay_exponents(const ExteriorSphereFlow& flow, const std::vector<double>& radii);

/// 20 log-spaced radii in [10a, 100a].
std::vector<double> default_decay_radii(double a);

/// C_d lambda <rho^{d-2}>; c_d <= 0 selects 6 pi for d = 3.
double mu_from_moments(double lambda, const MarkDistribution& dist, int d, double c_d = 0.0);

/// Sum in a fixed balanced tree.
double pairwise_sum(const std::vector<double>& v);

}  // namespace perfolab

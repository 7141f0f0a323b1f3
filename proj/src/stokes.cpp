#include "perfolab/stokes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace perfolab {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm3(const Vec3& a) { return std::sqrt(dot(a, a)); }

double frob2(const Mat3& m) {
  double s = 0.0;
  for (const auto& row : m)
    for (double v : row) s += v * v;
  return s;
}

struct Rule {
  std::vector<double> x, w;
};

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
Rule gauss_legendre(int n) {
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.x[i] = x;
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const Rule& radial_rule() {
  static const Rule r = gauss_legendre(8);
  return r;
}

const Rule& polar_rule() {
  static const Rule r = gauss_legendre(12);
  return r;
}

constexpr int kAzimuth = 24;

template <class F>
double sphere_average_integral(F&& f) {
  // int_{S^2} f dOmega, exact for polynomials of moderate degree in the direction.
  const Rule& pr = polar_rule();
  std::vector<double> parts;
  parts.reserve(pr.x.size());
  for (std::size_t b = 0; b < pr.x.size(); ++b) {
    const double mu = pr.x[b];
    const double st = std::sqrt(1.0 - mu * mu);
    double ring = 0.0;
    for (int c = 0; c < kAzimuth; ++c) {
      const double phi = 2.0 * std::numbers::pi * (c + 0.5) / kAzimuth;
      ring += f(Vec3{st * std::cos(phi), st * std::sin(phi), mu});
    }
    parts.push_back(pr.w[b] * ring * (2.0 * std::numbers::pi / kAzimuth));
  }
  return pairwise_sum(parts);
}

template <class Q>
double radial_integral(Q&& q, double lo, double hi, int panels) {
  const Rule& rr = radial_rule();
  std::vector<double> parts;
  parts.reserve(static_cast<std::size_t>(panels));
  const double ratio = hi / lo;
  for (int p = 0; p < panels; ++p) {
    const double a = lo * std::pow(ratio, static_cast<double>(p) / panels);
    const double b = lo * std::pow(ratio, static_cast<double>(p + 1) / panels);
    double s = 0.0;
    for (std::size_t i = 0; i < rr.x.size(); ++i) s += rr.w[i] * q(0.5 * (a + b) + 0.5 * (b - a) * rr.x[i]);
    parts.push_back(0.5 * (b - a) * s);
  }
  return pairwise_sum(parts);
}

}  // namespace

double pairwise_sum(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::vector<double> level = v;
  while (level.size() > 1) {
    std::vector<double> up;
    up.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) up.push_back(level[i] + level[i + 1]);
    if (level.size() % 2) up.push_back(level.back());
    level.swap(up);
  }
  return level[0];
}

Vec3 exterior_velocity(const ExteriorSphereFlow& flow, const Vec3& x) {
  const double r = norm3(x);
  if (r < flow.a * (1.0 - 1e-12)) throw std::domain_error("point lies inside the sphere");
  const double a = flow.a;
  const double f = 3.0 * a / (4.0 * r) + a * a * a / (4.0 * r * r * r);
  const double g = 3.0 * a / (4.0 * r * r * r) - 3.0 * a * a * a / (4.0 * r * r * r * r * r);
  const double xx = dot(flow.xi, x);
  Vec3 u;
  for (int i = 0; i < 3; ++i) u[i] = f * flow.xi[i] + g * xx * x[i];
  return u;
}

Mat3 velocity_gradient(const ExteriorSphereFlow& flow, const Vec3& x) {
  const double r = norm3(x);
  if (r < flow.a * (1.0 - 1e-12)) throw std::domain_error("point lies inside the sphere");
  const double a = flow.a, a3 = a * a * a;
  const double r2 = r * r, r4 = r2 * r2, r6 = r4 * r2;
  const double g = 3.0 * a / (4.0 * r2 * r) - 3.0 * a3 / (4.0 * r4 * r);
  const double fp = -3.0 * a / (4.0 * r2) - 3.0 * a3 / (4.0 * r4);
  const double gp = -9.0 * a / (4.0 * r4) + 15.0 * a3 / (4.0 * r6);
  const double xx = dot(flow.xi, x);
  Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double ej = x[j] / r;
      m[i][j] = fp * ej * flow.xi[i] + gp * ej * xx * x[i] + g * (flow.xi[j] * x[i] + (i == j ? xx : 0.0));
    }
  return m;
}

Mat3 velocity_gradient_fd(const ExteriorSphereFlow& flow, const Vec3& x, double h) {
  Mat3 m{};
  for (int j = 0; j < 3; ++j) {
    Vec3 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec3 up = exterior_velocity(flow, xp), um = exterior_velocity(flow, xm);
    for (int i = 0; i < 3; ++i) m[i][j] = (up[i] - um[i]) / (2.0 * h);
  }
  return m;
}

double divergence_fd(const ExteriorSphereFlow& flow, const Vec3& x, double h) {
  const Mat3 m = velocity_gradient_fd(flow, x, h);
  return m[0][0] + m[1][1] + m[2][2];
}

double shell_density(const ExteriorSphereFlow& flow, double r) {
  const double s = sphere_average_integral([&](const Vec3& e) {
    return frob2(velocity_gradient(flow, Vec3{r * e[0], r * e[1], r * e[2]}));
  });
  return r * r * s;
}

CapacityEstimate dirichlet_energy(const ExteriorSphereFlow& flow, double r_max, int resolution, double tolerance) {
  if (!(flow.a > 0.0)) throw ConfigError("sphere radius must be positive");
  if (!(r_max >= 10.0 * flow.a)) throw ConfigError("truncation radius must be at least 10 a");
  if (resolution < 2) throw ConfigError("resolution must be at least 2 panels");
  auto q = [&](double r) { return shell_density(flow, r); };
  CapacityEstimate est;
  est.r_max = r_max;
  est.resolution = resolution;
  est.shell_integral = radial_integral(q, flow.a, r_max, resolution);
  const double coarse = radial_integral(q, flow.a, r_max, resolution / 2);
  const double scale = std::max(std::abs(est.shell_integral), 1e-300);
  est.error_estimate = std::abs(est.shell_integral - coarse) / scale;
  if (est.shell_integral != 0.0 && est.error_estimate > tolerance)
    throw RefinementNeeded("shell quadrature not converged: relative change " + std::to_string(est.error_estimate));
  // q(r) ~ C r^{-2} beyond r_max, so the tail is q(r_max) r_max.
  est.tail = q(r_max) * r_max;
  est.value = est.shell_integral + est.tail;
  return est;
}

double harmonic_capacity_ball(double radius, int d) {
  if (d < 3) throw ConfigError("harmonic capacity needs d >= 3");
  return (d - 2) * unit_sphere_area(d) * std::pow(radius, d - 2);
}

double harmonic_energy_quadrature(double radius, double r_max, int panels) {
  // |grad (radius/|x|)|^2 = radius^2 / |x|^4, shell density 4 pi radius^2 / s^2.
  auto q = [&](double s) {
    const double dens = sphere_average_integral([&](const Vec3&) { return radius * radius / (s * s * s * s); });
    return s * s * dens;
  };
  return radial_integral(q, radius, r_max, panels) + q(r_max) * r_max;
}

DecayFit decay_exponents(const ExteriorSphereFlow& flow, const std::vector<double>& radii) {
  DecayFit fit;
  if (norm3(flow.xi) == 0.0 || radii.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  std::vector<double> lx, lu, lg;
  const Rule& pr = polar_rule();
  for (double r : radii) {
    double su = 0.0, sg = 0.0;
    for (double mu : pr.x) {
      const double st = std::sqrt(1.0 - mu * mu);
      for (int c = 0; c < kAzimuth; ++c) {
        const double phi = 2.0 * std::numbers::pi * (c + 0.5) / kAzimuth;
        const Vec3 x{r * st * std::cos(phi), r * st * std::sin(phi), r * mu};
        su = std::max(su, norm3(exterior_velocity(flow, x)));
        sg = std::max(sg, std::sqrt(frob2(velocity_gradient(flow, x))));
      }
    }
    // Include the directions along and across xi, where the extremes sit.
    const double xn = norm3(flow.xi);
    const Vec3 along{r * flow.xi[0] / xn, r * flow.xi[1] / xn, r * flow.xi[2] / xn};
    su = std::max(su, norm3(exterior_velocity(flow, along)));
    sg = std::max(sg, std::sqrt(frob2(velocity_gradient(flow, along))));
    lx.push_back(std::log(r));
    lu.push_back(std::log(su));
    lg.push_back(std::log(sg));
  }
  auto slope = [&](const std::vector<double>& y) {
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (y[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
  };
  fit.velocity_slope = slope(lu);
  fit.gradient_slope = slope(lg);
  return fit;
}

std::vector<double> default_decay_radii(double a) {
  std::vector<double> r;
  for (int i = 0; i < 20; ++i) r.push_back(10.0 * a * std::pow(10.0, i / 19.0));
  return r;
}

double mu_from_moments(double lambda, const MarkDistribution& dist, int d, double c_d) {
  if (lambda == 0.0) return 0.0;
  if (!(c_d > 0.0)) {
    if (d != 3) throw ConfigError("capacity constant must be given for d != 3");
    c_d = 6.0 * std::numbers::pi;
  }
  return c_d * lambda * mark_moment(dist, d - 2);
}

}  // namespace perfolab

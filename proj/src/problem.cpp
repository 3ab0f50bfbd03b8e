#include "sthjb/problem.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "sthjb/errors.hpp"

namespace sthjb {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kDim = 2;

double frobenius2(const Eigen::Matrix2d& a) { return a.squaredNorm(); }

void check_sample(const Coefficients& c) {
  const double scale = std::max(1.0, c.a.cwiseAbs().maxCoeff());
  if (std::abs(c.a(0, 1) - c.a(1, 0)) > 1e-12 * scale)
    throw DataError("diffusion matrix is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(c.a, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues()(0) > 0.0)) throw DataError("diffusion matrix is not uniformly elliptic");
  if (c.c < 0.0) throw DataError("reaction coefficient is negative");
}

// (Tr a + c/lambda + 1/omega)^2 / (|a|^2 + |b|^2/2lambda + (c/lambda)^2 + 1/omega^2)
// minus the dimension shift of the active branch.
double cordes_slack(const HJBProblem& p, const Coefficients& c) {
  const double iw = 1.0 / p.omega;
  if (!p.has_lower_order) {
    const double num = c.a.trace() + iw;
    return num * num / (frobenius2(c.a) + iw * iw) - kDim;
  }
  const double cl = c.c / p.lambda;
  const double num = c.a.trace() + cl + iw;
  const double den = frobenius2(c.a) + c.b.squaredNorm() / (2.0 * p.lambda) + cl * cl + iw * iw;
  return num * num / den - (kDim + 1);
}

Eigen::Matrix2d anisotropic_matrix(int control, int n_controls) {
  const double th = 2.0 * kPi * control / n_controls;
  Eigen::Matrix2d r;
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Eigen::Matrix2d a;
  a << 1.0, 1.0 / 40.0, 1.0 / 40.0, 1.0 / 800.0;
  Eigen::Matrix2d m = r * a * r.transpose();
  m(1, 0) = m(0, 1);
  return m;
}

// Nonnegative offset that vanishes only for the samples nearest to the
// preferred angle (mod pi): 1 - cos 2(theta_a - theta*) minus its minimum.
double control_gap(const std::vector<double>& angles, int a, double preferred) {
  double lowest = std::numeric_limits<double>::infinity();
  for (double th : angles) lowest = std::min(lowest, 1.0 - std::cos(2.0 * (th - preferred)));
  return 1.0 - std::cos(2.0 * (angles[a] - preferred)) - lowest;
}

}  // namespace

CordesReport verify_cordes(const HJBProblem& problem, CordesGrid grid) {
  if (problem.n_controls < 1) throw ConfigError("control set is empty");
  if (!(problem.omega > 0.0)) throw ConfigError("omega must be positive");
  if (problem.has_lower_order && !(problem.lambda > 0.0))
    throw ConfigError("lambda must be positive when lower-order terms are present");
  if (grid.nx < 2 || grid.nt < 1) throw ConfigError("Cordes sampling grid too coarse");
  CordesReport r;
  r.epsilon_raw = std::numeric_limits<double>::infinity();
  Coefficients c;
  for (int it = 0; it < grid.nt; ++it) {
    const double t = grid.nt == 1 ? 0.0 : problem.final_time * it / (grid.nt - 1);
    for (int iy = 0; iy < grid.nx; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        const Point x{static_cast<double>(ix) / (grid.nx - 1), static_cast<double>(iy) / (grid.nx - 1)};
        for (int a = 0; a < problem.n_controls; ++a) {
          problem.coefficients(x, t, a, c);
          check_sample(c);
          const double s = cordes_slack(problem, c);
          ++r.samples;
          if (s < r.epsilon_raw) {
            r.epsilon_raw = s;
            r.witness_x = x;
            r.witness_t = t;
            r.witness_control = a;
          }
        }
      }
    }
  }
  if (!(r.epsilon_raw > 0.0))
    throw CordesViolation("Cordes condition fails: sampled slack " + std::to_string(r.epsilon_raw));
  r.epsilon = std::min(r.epsilon_raw, 1.0);
  return r;
}

double gamma_eval(const HJBProblem& p, const Coefficients& c) {
  if (p.renormalisation == Renormalisation::unit) return 1.0;
  const double iw = 1.0 / p.omega;
  if (!p.has_lower_order) return (c.a.trace() + iw) / (frobenius2(c.a) + iw * iw);
  const double cl = c.c / p.lambda;
  return (c.a.trace() + cl + iw) /
         (frobenius2(c.a) + c.b.squaredNorm() / (2.0 * p.lambda) + cl * cl + iw * iw);
}

double gamma_eval(const HJBProblem& problem, Point x, double t, int control) {
  Coefficients c;
  problem.coefficients(x, t, control, c);
  return gamma_eval(problem, c);
}

PointwiseValue F_gamma_pointwise(const HJBProblem& problem, const PointState& s, Point x, double t) {
  if (problem.n_controls < 1) throw ConfigError("control set is empty");
  PointwiseValue best{std::numeric_limits<double>::infinity(), 0};
  Coefficients c;
  for (int a = 0; a < problem.n_controls; ++a) {
    problem.coefficients(x, t, a, c);
    const double l = c.a(0, 0) * s.hxx + 2.0 * c.a(0, 1) * s.hxy + c.a(1, 1) * s.hyy +
                     c.b(0) * s.gx + c.b(1) * s.gy - c.c * s.v;
    const double v = gamma_eval(problem, c) * (s.vt - l + c.f);
    if (v < best.value) best = {v, a};
  }
  return best;
}

PointState anisotropic_exact(Point p, double t) {
  const double x = p.x;
  const double y = p.y;
  const double e = std::exp(x * y);
  const double sx = std::sin(kPi * x);
  const double cx = std::cos(kPi * x);
  const double sy = std::sin(kPi * y);
  const double cy = std::cos(kPi * y);
  const double phi = 1.0 - std::exp(-t);
  const double dphi = std::exp(-t);
  const double ax = y * sx + kPi * cx;
  const double ay = x * sy + kPi * cy;
  const double g = e * sx * sy;
  PointState s;
  s.v = phi * g;
  s.vt = dphi * g;
  s.gx = phi * e * ax * sy;
  s.gy = phi * e * sx * ay;
  s.hxx = phi * e * sy * (y * y * sx + 2.0 * kPi * y * cx - kPi * kPi * sx);
  s.hyy = phi * e * sx * (x * x * sy + 2.0 * kPi * x * cy - kPi * kPi * sy);
  s.hxy = phi * e * ((x * ax + sx) * sy + kPi * cy * ax);
  return s;
}

PointState singleton_exact(Point p, double t) {
  const double x = p.x;
  const double y = p.y;
  const double wx = x * (1.0 - x);
  const double wy = y * (1.0 - y);
  PointState s;
  s.v = t * wx * wy;
  s.vt = wx * wy;
  s.gx = t * (1.0 - 2.0 * x) * wy;
  s.gy = t * wx * (1.0 - 2.0 * y);
  s.hxx = -2.0 * t * wy;
  s.hyy = -2.0 * t * wx;
  s.hxy = t * (1.0 - 2.0 * x) * (1.0 - 2.0 * y);
  return s;
}

HJBProblem make_problem(const std::string& key, int n_controls) {
  HJBProblem p;
  p.key = key;
  if (key == "exp1-anisotropic-sup" || key == "exp1-all-active") {
    if (n_controls < 1) throw ConfigError("control count must be >= 1");
    p.n_controls = n_controls;
    std::vector<Eigen::Matrix2d> mats;
    std::vector<double> angles;
    for (int a = 0; a < n_controls; ++a) {
      mats.push_back(anisotropic_matrix(a, n_controls));
      angles.push_back(2.0 * kPi * a / n_controls);
    }
    const bool all_active = key == "exp1-all-active";
    p.coefficients = [mats, angles, all_active](Point x, double t, int a, Coefficients& c) {
      const PointState u = anisotropic_exact(x, t);
      c.a = mats[a];
      c.b.setZero();
      c.c = 0.0;
      c.f = c.a(0, 0) * u.hxx + 2.0 * c.a(0, 1) * u.hxy + c.a(1, 1) * u.hyy - u.vt;
      if (!all_active) c.f += control_gap(angles, a, kPi * x.x * x.y + t);
    };
    p.final_time = 1.0;
    p.initial = [](Point) { return Jet{}; };
    p.exact = anisotropic_exact;
  } else if (key == "exp2-heat") {
    p.n_controls = 1;
    p.coefficients = [](Point, double, int, Coefficients& c) {
      c.a.setIdentity();
      c.b.setZero();
      c.c = 0.0;
      c.f = 0.0;
    };
    p.final_time = 0.05;
    p.initial = [](Point q) {
      const double s = std::sin(kPi * q.y);
      const double co = std::cos(kPi * q.y);
      const double w = q.x * (1.0 - q.x);
      Jet j;
      j.v = w * s;
      j.gx = (1.0 - 2.0 * q.x) * s;
      j.gy = w * kPi * co;
      j.hxx = -2.0 * s;
      j.hxy = (1.0 - 2.0 * q.x) * kPi * co;
      j.hyy = -kPi * kPi * w * s;
      return j;
    };
  } else if (key == "heat-singleton") {
    p.n_controls = 1;
    p.coefficients = [](Point x, double t, int, Coefficients& c) {
      const PointState u = singleton_exact(x, t);
      c.a.setIdentity();
      c.b.setZero();
      c.c = 0.0;
      c.f = u.hxx + u.hyy - u.vt;
    };
    p.final_time = 1.0;
    p.initial = [](Point) { return Jet{}; };
    p.exact = singleton_exact;
  } else {
    throw ConfigError("unknown problem key '" + key + "'");
  }
  return p;
}

std::vector<std::string> problem_keys() {
  return {"exp1-anisotropic-sup", "exp1-all-active", "exp2-heat", "heat-singleton"};
}

}  // namespace sthjb

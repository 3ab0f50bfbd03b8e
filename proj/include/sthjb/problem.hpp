#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "sthjb/mesh.hpp"
#include "sthjb/space.hpp"

namespace sthjb {

/// Data of one linear operator of the family at a point: a (symmetric), b, c >= 0, f.
struct Coefficients {
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  double c = 0.0;
  double f = 0.0;
};

/// Arguments of the pointwise operator: value, time derivative, gradient, Hessian.
struct PointState {
  double v = 0.0;
  double vt = 0.0;
  double gx = 0.0;
  double gy = 0.0;
  double hxx = 0.0;
  double hxy = 0.0;
  double hyy = 0.0;
};

using CoefficientFn = std::function<void(Point x, double t, int control, Coefficients& out)>;
using InitialFn = std::function<Jet(Point x)>;
using ExactFn = std::function<PointState(Point x, double t)>;

/// `unit` drops the Cordes weight (gamma = 1); used to test the raw operator.
enum class Renormalisation { cordes, unit };

struct HJBProblem {
  std::string key;
  int n_controls = 1;
  CoefficientFn coefficients;
  double lambda = 0.0;
  double omega = 1.0;
  bool has_lower_order = false;
  double final_time = 1.0;
  InitialFn initial;
  ExactFn exact;  ///< may be empty
  Renormalisation renormalisation = Renormalisation::cordes;
};

struct CordesReport {
  double epsilon = 0.0;      ///< min(raw, 1)
  double epsilon_raw = 0.0;  ///< sample minimum before clamping
  Point witness_x;
  double witness_t = 0.0;
  int witness_control = 0;
  int samples = 0;
};

struct CordesGrid {
  int nx = 17;
  int nt = 5;
};

/// Sampled Cordes slack. Throws DataError on an ellipticity failure and
/// CordesViolation when the slack is not positive.
CordesReport verify_cordes(const HJBProblem& problem, CordesGrid grid = {});

/// Cordes weight of one coefficient sample.
double gamma_eval(const HJBProblem& problem, const Coefficients& c);
double gamma_eval(const HJBProblem& problem, Point x, double t, int control);

struct PointwiseValue {
  double value = 0.0;
  int control = 0;
};

/// min over controls of gamma (v_t - a:D2v - b.grad v + c v + f); the lowest
/// index wins ties.
PointwiseValue F_gamma_pointwise(const HJBProblem& problem, const PointState& s, Point x, double t);

/// Built-in problems. "exp1-anisotropic-sup": rotated anisotropic diffusion
/// with a source whose optimal control is unique away from a null set (the
/// preferred angle is pi x y + t); "exp1-all-active": same family with every
/// control optimal at the exact solution; "exp2-heat"; "heat-singleton".
HJBProblem make_problem(const std::string& key, int n_controls = 32);
std::vector<std::string> problem_keys();

/// Exact solution (1 - e^{-t}) e^{xy} sin(pi x) sin(pi y) of the anisotropic problem.
PointState anisotropic_exact(Point x, double t);
/// t x(1-x) y(1-y).
PointState singleton_exact(Point x, double t);

}  // namespace sthjb

#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "sthjb/forms.hpp"
#include "sthjb/problem.hpp"
#include "sthjb/solver.hpp"
#include "sthjb/space.hpp"

namespace sthjb {

/// Space-time integrals of v = reference - discrete (either part may be
/// absent), summed over slabs and elements.
struct VolumeIntegrals {
  double l2 = 0.0;         ///< v^2
  double grad = 0.0;       ///< |grad v|^2
  double hess = 0.0;       ///< |D2 v|^2
  double vt = 0.0;         ///< (d_t v)^2
  double h2_lambda = 0.0;  ///< |D2v|^2 + 2 lambda |grad v|^2 + lambda^2 v^2
};

VolumeIntegrals volume_integrals(const DGSpace& space, const TimePartition& partition, double lambda,
                                 const SpaceTimeFunction* discrete, const ExactFn* reference);

/// ||v||_X: slab integrals of omega^2 |v_t|^2 + ||v||^2_{H2(K)}.
double norm_X(const DGSpace& space, const TimePartition& partition, double omega,
              const SpaceTimeFunction* discrete, const ExactFn* reference);

/// |||v|||. With a discrete part the J term and the temporal jumps come from
/// it (a smooth reference with zero boundary values contributes none); the
/// jump at t_0 of an error is u_0 - u_h(0^+). A lone discrete function uses
/// v_h(0^+) there.
double norm_E(const Discretisation& disc, const TimePartition& partition,
              const SpaceTimeFunction* discrete, const ExactFn* reference);

/// ||v_h||_{h,1} of a discrete function (jumps at t_0 .. t_N).
double norm_h1(const SpaceTimeForms& forms, const SpaceTimeFunction& v);
/// |||v_h||| of a discrete function via the same operators.
double norm_E_discrete(const SpaceTimeForms& forms, const SpaceTimeFunction& v);

/// Broken H1 norm of reference(., t) - coeffs (either part optional).
double broken_h1(const DGSpace& space, const Eigen::VectorXd* coeffs, const ExactFn* reference,
                 double t);
double end_time_H1_error(const DGSpace& space, const Eigen::VectorXd& u_T, const ExactFn& reference,
                         double T);

/// Truncated eigenfunction series of the heat problem with initial datum
/// x(1-x) sin(pi y), with derivatives.
PointState reference_exp2(double x, double y, double t, int K);
/// Bound on the discarded part of the series beyond K: 4 / (pi^3 K^2).
double exp2_tail_bound(int K);

/// The series with K = 4000 for t >= 1e-5 and K raised below that until the
/// tail bound is under 1e-10. Evaluations are memoised per (x, t) since the
/// y factor separates.
class HeatSeriesReference {
 public:
  explicit HeatSeriesReference(int fixed_K = 0) : fixed_K_(fixed_K) {}
  static int auto_terms(double t);
  int terms(double t) const { return fixed_K_ > 0 ? fixed_K_ : auto_terms(t); }
  PointState operator()(Point x, double t) const;
  ExactFn as_function() const;

 private:
  int fixed_K_;
};

/// log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool degenerate = false;
};

/// Least squares of log(error) against dofs^exponent.
RateFit exp_rate_fit(const std::vector<double>& errors, const std::vector<double>& dofs,
                     double exponent);

struct ErrorRow {
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  int p = 0;
  int q = 0;
  long dof_x = 0;
  long dof_t = 0;
  double err_X = 0.0;
  double err_E = 0.0;
  double err_H1_T = 0.0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;

  static const char* header();
  std::vector<double> eoc_X() const;
  std::vector<double> eoc_H1T() const;
  void write_csv(std::ostream& out) const;
};

}  // namespace sthjb

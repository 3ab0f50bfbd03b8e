#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sthjb/analysis.hpp"
#include "sthjb/config.hpp"

namespace sthjb {

/// Problem with omega and lambda taken from the config.
HJBProblem problem_from(const RunConfig& c);
/// Config final time, or the problem's when that is 0.
double final_time_from(const RunConfig& c, const HJBProblem& problem);

std::shared_ptr<const Mesh2D> mesh_from(const RunConfig& c, int level);
/// Constant p, or p + slope (deepest level - level of K) on graded degrees.
DGSpace space_from(const RunConfig& c, std::shared_ptr<const Mesh2D> mesh);
TimePartition partition_from(const RunConfig& c, int intervals, double final_time);

/// Exact solution of the problem, or the series reference for the heat
/// problem without one. Throws ConfigError when neither is available.
ExactFn reference_for(const HJBProblem& problem);

/// Largest element side.
double mesh_size(const Mesh2D& mesh);

/// Largest level the desk-scale cap admits for degree p (4 for p = 2, else 3).
int desk_level_cap(int p);

using RowCallback = std::function<void(const ErrorRow&)>;

/// One row per level in [sweep.min, sweep.max]: mesh level k and
/// intervals * 2^(k - min) slabs when refine_time is set. Errors are relative
/// to the same norm of the reference. Solver failures are rethrown with the
/// failing level.
ErrorTable run_convergence(const RunConfig& c, const RowCallback& on_row = {});

struct TauqRow {
  int n_intervals = 0;
  long dof_x = 0;
  long dof_t = 0;
  double err_X = 0.0;
  double err_L2H1 = 0.0;
};

struct TauqResult {
  std::vector<TauqRow> rows;
  RateFit fit_X;
  RateFit fit_L2H1;
  int nonmonotone_steps = 0;  ///< increases of err_X with N
  bool monotone_ok() const { return nonmonotone_steps <= 1; }
};

/// Geometric sweep N = sweep.min .. sweep.max; mesh levels N - 1 when
/// grade_with_n is set, else mesh.level. Fits use sqrt(DoF_tau).
TauqResult run_tauq(const RunConfig& c, const std::function<void(const TauqRow&)>& on_row = {});

void write_tauq_csv(std::ostream& out, const TauqResult& r);

/// "x y" lines.
void write_plot_data(std::ostream& out, const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sthjb

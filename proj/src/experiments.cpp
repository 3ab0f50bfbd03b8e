#include "sthjb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "sthjb/errors.hpp"

namespace sthjb {

HJBProblem problem_from(const RunConfig& c) {
  HJBProblem p = make_problem(c.problem, c.controls);
  p.omega = c.omega;
  p.lambda = c.lambda;
  return p;
}

double final_time_from(const RunConfig& c, const HJBProblem& problem) {
  return c.final_time > 0.0 ? c.final_time : problem.final_time;
}

std::shared_ptr<const Mesh2D> mesh_from(const RunConfig& c, int level) {
  if (level < 1) throw ConfigError("mesh level must be >= 1, got " + std::to_string(level));
  return std::make_shared<const Mesh2D>(c.mesh == MeshKind::uniform ? build_uniform_quad_mesh(level)
                                                                    : build_graded_quad_mesh(level));
}

DGSpace space_from(const RunConfig& c, std::shared_ptr<const Mesh2D> mesh) {
  if (c.degree == DegreeKind::constant) return DGSpace::uniform(std::move(mesh), c.p);
  int deepest = 0;
  for (int k = 0; k < mesh->n_elements(); ++k) deepest = std::max(deepest, mesh->cell(k).level);
  std::vector<int> degrees(mesh->n_elements());
  for (int k = 0; k < mesh->n_elements(); ++k)
    degrees[k] = c.p + c.p_slope * (deepest - mesh->cell(k).level);
  return DGSpace(std::move(mesh), std::move(degrees));
}

TimePartition partition_from(const RunConfig& c, int intervals, double final_time) {
  return build_time_partition(c.partition, intervals, final_time, c.q_rule, c.q, c.time_sigma);
}

ExactFn reference_for(const HJBProblem& problem) {
  if (problem.exact) return problem.exact;
  if (problem.key == "exp2-heat") return HeatSeriesReference().as_function();
  throw ConfigError("no reference solution for problem '" + problem.key + "'");
}

double mesh_size(const Mesh2D& mesh) {
  double h = 0.0;
  for (int k = 0; k < mesh.n_elements(); ++k) {
    const Cell& cell = mesh.cell(k);
    h = std::max({h, cell.x1 - cell.x0, cell.y1 - cell.y0});
  }
  return h;
}

int desk_level_cap(int p) { return p <= 2 ? 4 : 3; }

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : num; }

}  // namespace

ErrorTable run_convergence(const RunConfig& c, const RowCallback& on_row) {
  c.validate();
  if (!c.allow_large && c.mesh == MeshKind::uniform && c.sweep_max > desk_level_cap(c.p))
    throw ConfigError("sweep.max = " + std::to_string(c.sweep_max) + " exceeds the desk-scale cap " +
                      std::to_string(desk_level_cap(c.p)) + " for p = " + std::to_string(c.p) +
                      "; set sweep.allow_large or pass --allow-large");
  const HJBProblem problem = problem_from(c);
  const ExactFn reference = reference_for(problem);
  const double T = final_time_from(c, problem);

  ErrorTable table;
  for (int level = c.sweep_min; level <= c.sweep_max; ++level) {
    const int intervals = c.refine_time ? c.intervals << (level - c.sweep_min) : c.intervals;
    const TimePartition partition = partition_from(c, intervals, T);
    const Discretisation disc(problem, space_from(c, mesh_from(c, level)), c.penalty);
    SolutionHistory h;
    try {
      h = march(disc, partition, c.solver);
    } catch (const SolverError& e) {
      throw SolverError("level " + std::to_string(level) + ": " + e.what(), e.slab(), e.residuals());
    }
    const DGSpace& space = disc.space();
    ErrorRow row;
    row.level = level;
    row.h = mesh_size(space.mesh());
    row.tau = 0.0;
    for (int n = 0; n < partition.n_intervals(); ++n) row.tau = std::max(row.tau, partition.tau(n));
    row.p = space.max_degree();
    row.q = *std::max_element(partition.q.begin(), partition.q.end());
    row.dof_x = space.dim();
    row.dof_t = partition.temporal_dofs();
    row.err_X = ratio(norm_X(space, partition, problem.omega, &h.u, &reference),
                      norm_X(space, partition, problem.omega, nullptr, &reference));
    row.err_E = ratio(norm_E(disc, partition, &h.u, &reference),
                      norm_E(disc, partition, nullptr, &reference));
    row.err_H1_T = ratio(end_time_H1_error(space, h.end_traces.back(), reference, T),
                         broken_h1(space, nullptr, &reference, T));
    table.rows.push_back(row);
    if (on_row) on_row(row);
  }
  return table;
}

TauqResult run_tauq(const RunConfig& c, const std::function<void(const TauqRow&)>& on_row) {
  c.validate();
  const HJBProblem problem = problem_from(c);
  const ExactFn reference = reference_for(problem);
  const double T = final_time_from(c, problem);

  TauqResult out;
  for (int N = c.sweep_min; N <= c.sweep_max; ++N) {
    const int level = c.grade_with_n ? std::max(1, N - 1) : c.mesh_level;
    const TimePartition partition = partition_from(c, N, T);
    const Discretisation disc(problem, space_from(c, mesh_from(c, level)), c.penalty);
    SolutionHistory h;
    try {
      h = march(disc, partition, c.solver);
    } catch (const SolverError& e) {
      throw SolverError("N = " + std::to_string(N) + ": " + e.what(), e.slab(), e.residuals());
    }
    const DGSpace& space = disc.space();
    TauqRow row;
    row.n_intervals = N;
    row.dof_x = space.dim();
    row.dof_t = partition.temporal_dofs();
    row.err_X = ratio(norm_X(space, partition, problem.omega, &h.u, &reference),
                      norm_X(space, partition, problem.omega, nullptr, &reference));
    const VolumeIntegrals e = volume_integrals(space, partition, problem.lambda, &h.u, &reference);
    const VolumeIntegrals r = volume_integrals(space, partition, problem.lambda, nullptr, &reference);
    row.err_L2H1 = ratio(std::sqrt(e.l2 + e.grad), std::sqrt(r.l2 + r.grad));
    if (!out.rows.empty() && row.err_X > out.rows.back().err_X) ++out.nonmonotone_steps;
    out.rows.push_back(row);
    if (on_row) on_row(row);
  }
  std::vector<double> dofs, eX, eH;
  for (const TauqRow& r : out.rows) {
    dofs.push_back(static_cast<double>(r.dof_t));
    eX.push_back(r.err_X);
    eH.push_back(r.err_L2H1);
  }
  out.fit_X = exp_rate_fit(eX, dofs, 0.5);
  out.fit_L2H1 = exp_rate_fit(eH, dofs, 0.5);
  return out;
}

void write_tauq_csv(std::ostream& out, const TauqResult& r) {
  out << "N,dof_x,dof_t,err_X,err_L2H1\n";
  char buf[160];
  for (const TauqRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%d,%ld,%ld,%.10g,%.10g\n", row.n_intervals, row.dof_x, row.dof_t,
                  row.err_X, row.err_L2H1);
    out << buf;
  }
}

void write_plot_data(std::ostream& out, const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("plot data columns differ in length");
  char buf[80];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g %.10g\n", x[i], y[i]);
    out << buf;
  }
}

}  // namespace sthjb

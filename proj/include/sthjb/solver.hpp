#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sthjb/forms.hpp"
#include "sthjb/problem.hpp"
#include "sthjb/slab.hpp"
#include "sthjb/space.hpp"

namespace sthjb {

struct SolverConfig {
  double newton_tol = 1e-10;
  int max_newton_iters = 30;

  bool operator==(const SolverConfig&) const = default;
  void validate() const;
};

struct SlabStats {
  int iterations = 0;
  double residual = 0.0;  ///< final relative residual
  std::vector<double> history;
  bool restarted = false;
};

struct SlabResult {
  Eigen::VectorXd coeffs;
  SlabStats stats;
};

/// Everything fixed across slabs: problem, space, penalties, spatial
/// operators and element quadrature tables.
class Discretisation {
 public:
  Discretisation(HJBProblem problem, DGSpace space, PenaltyParams penalty = {});
  Discretisation(const Discretisation&) = delete;
  Discretisation& operator=(const Discretisation&) = delete;

  const HJBProblem& problem() const { return problem_; }
  const DGSpace& space() const { return space_; }
  const PenaltyParams& penalty() const { return penalty_; }
  const std::vector<FacePenalty>& penalties() const { return penalties_; }
  const SpatialOperators& ops() const { return ops_; }
  const std::vector<BasisTable>& tables() const { return tables_; }

  SlabSystem slab(const TimePartition& partition, int n) const;

 private:
  HJBProblem problem_;
  DGSpace space_;
  PenaltyParams penalty_;
  std::vector<FacePenalty> penalties_;
  SpatialOperators ops_;
  std::vector<BasisTable> tables_;
};

/// Policy iteration on one slab: freeze the minimising controls, solve the
/// linear system, re-evaluate. Each step is written as a Newton correction
/// against the true nonlinear residual so that repeated policies also refine.
/// The residual at U is rechecked with a system freshly assembled at the
/// minimising policy of U: |M U + g - r| <= tol (|r - g| + | |M| |U| |), the
/// componentwise backward-error scaling.
SlabResult solve_slab(const SlabSystem& system, const Eigen::VectorXd& rhs,
                      const PolicyField& initial_policy, const SolverConfig& config, int slab = 0);

struct SolutionHistory {
  TimePartition partition;
  SpaceTimeFunction u;
  std::vector<Eigen::VectorXd> end_traces;  ///< u_h(t_n), n = 1..N
  std::vector<SlabStats> stats;
};

/// Solves the slabs in order starting from u_h(t_0) := u_0.
SolutionHistory march(const Discretisation& disc, const TimePartition& partition,
                      const SolverConfig& config = {});

/// FNV-1a hash of the cell geometry and degrees.
std::uint64_t space_hash(const DGSpace& space);

/// Text checkpoint: a header line with the space hash, then one block per
/// slab "n q dim" followed by the coefficients.
void write_checkpoint(std::ostream& out, const DGSpace& space, const SolutionHistory& history);
/// Reads a checkpoint written for the same space; throws ConfigError on a
/// hash or size mismatch.
SpaceTimeFunction read_checkpoint(std::istream& in, const DGSpace& space);

}  // namespace sthjb

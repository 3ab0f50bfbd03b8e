#pragma once

#include <iosfwd>
#include <string>

#include "sthjb/forms.hpp"
#include "sthjb/solver.hpp"
#include "sthjb/space.hpp"

namespace sthjb {

enum class MeshKind { uniform, graded };
enum class DegreeKind { constant, graded };

/// One run manifest. Sections and keys:
///   [problem] key, controls, omega, lambda, final_time (0 = problem default)
///   [mesh]    kind = uniform|graded, level
///   [degree]  kind = constant|graded, p, slope
///   [time]    partition = uniform|geometric, intervals, sigma, q_rule = constant|linear, q
///   [penalty] c_s, sigma
///   [solver]  newton_tol, max_newton_iters
///   [sweep]   min, max, refine_time, grade_with_n, allow_large
///   [output]  dir, threads
struct RunConfig {
  std::string problem = "exp1-anisotropic-sup";
  int controls = 32;
  double omega = 1.0;
  double lambda = 0.0;
  double final_time = 0.0;

  MeshKind mesh = MeshKind::uniform;
  int mesh_level = 2;

  DegreeKind degree = DegreeKind::constant;
  int p = 2;
  int p_slope = 1;

  PartitionKind partition = PartitionKind::uniform;
  int intervals = 4;
  double time_sigma = 0.2;
  DegreeRule q_rule = DegreeRule::constant;
  int q = 1;

  PenaltyParams penalty;
  SolverConfig solver;

  int sweep_min = 1;
  int sweep_max = 4;
  bool refine_time = true;   ///< convergence: intervals double with each level
  bool grade_with_n = true;  ///< tauq: graded mesh levels = N - 1
  bool allow_large = false;

  std::string out_dir = "out";
  int threads = 0;

  bool operator==(const RunConfig&) const = default;

  /// Range checks; throws ConfigError.
  void validate() const;
};

/// Parses the INI text. Unknown sections or keys, malformed values and
/// duplicates throw ConfigError naming the source (and line where known).
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Canonical text: every key in schema order with resolved defaults.
std::string normalized(const RunConfig& c);

}  // namespace sthjb

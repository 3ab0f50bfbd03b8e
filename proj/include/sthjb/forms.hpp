#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <iosfwd>
#include <vector>

#include "sthjb/problem.hpp"
#include "sthjb/space.hpp"

namespace sthjb {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct PenaltyParams {
  double c_s = 2.5;
  double sigma = 1.0;

  bool operator==(const PenaltyParams&) const = default;
};

struct FacePenalty {
  double mu = 0.0;
  double eta = 0.0;
};

/// mu_F = sigma c_s p~^2 / h~ and eta_F = sigma max(1, lambda) c_s p~^6 / h~^3 per face.
std::vector<FacePenalty> build_penalty_table(const DGSpace& space, PenaltyParams params,
                                             double lambda);

/// Sparsity of the spatial operators: dense blocks between each element and
/// itself and between face neighbours. Rows in every column are sorted.
class BlockPattern {
 public:
  explicit BlockPattern(const DGSpace& space);

  int dim() const { return dim_; }
  const std::vector<int>& col_start() const { return col_start_; }
  const std::vector<int>& rows() const { return rows_; }
  int nnz() const { return static_cast<int>(rows_.size()); }
  /// Position in the value array of entry (row, col); the entry must exist.
  int position(int row, int col) const;
  SparseMatrix zero_matrix() const;

 private:
  int dim_ = 0;
  std::vector<int> col_start_;
  std::vector<int> rows_;
};

/// Adds a dense local block (rows of element ka, columns of element kb) to a
/// matrix that carries the block pattern.
void add_block(SparseMatrix& m, const DGSpace& space, int ka, int kb, const Eigen::MatrixXd& block);

/// Spatial forms over V_h, all stored on the same BlockPattern.
struct SpatialOperators {
  double lambda = 0.0;
  SparseMatrix a_h;     ///< interior penalty form of -L_lambda
  SparseMatrix jump;    ///< J_h
  SparseMatrix b_star;  ///< B_{h,*}
  SparseMatrix lap;     ///< sum_K (L_lambda u, L_lambda v)_K
  SparseMatrix flux;    ///< (i,j) = spatial flux form of C^F with trial phi_j, test phi_i
  SparseMatrix mass;
  SparseMatrix grad;  ///< (grad u, grad v)
  SparseMatrix hess;  ///< (D2u, D2v), Frobenius
  SparseMatrix slab;  ///< B_{h,1/2} - lap = b_star/2 - lap/2 + jump

  /// |.|^2_{H^2(K),lambda} Gram matrix.
  SparseMatrix h2_lambda() const;
  /// Full broken H^2 Gram matrix.
  SparseMatrix h2_full() const;
  SparseMatrix b_theta(double theta) const;
};

SpatialOperators assemble_spatial_operators(const DGSpace& space,
                                            const std::vector<FacePenalty>& penalties,
                                            double lambda);

SparseMatrix assemble_a_h(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                          double lambda);
SparseMatrix assemble_J_h(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                          double lambda);
SparseMatrix assemble_B_theta(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                              double lambda, double theta);

/// A field given elementwise (one-sided traces are taken from each element).
using ElementField = std::function<Jet(int element, Point x)>;

/// a_h(w, w) and J_h(w, w) of a general broken field by quadrature.
double a_h_energy(const DGSpace& space, const std::vector<FacePenalty>& penalties, double lambda,
                  const ElementField& w);
double J_h_energy(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                  const ElementField& w);

/// Vector of a_h(g, phi_i) for a globally defined field g (no interior jumps).
Eigen::VectorXd a_h_load(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                         double lambda, const InitialFn& g);

/// Element tables with p_K + 3 + extra points per axis.
std::vector<BasisTable> tabulate_all_elements(const DGSpace& space, int extra = 0);

/// Coordinate-format dump "row col value" of the stored entries.
void write_matrix_dump(std::ostream& out, const SparseMatrix& m);

/// Coefficient blocks of a space-time function: block n holds the (q_n+1)
/// temporal modes of interval n, mode-major.
struct SpaceTimeFunction {
  std::vector<Eigen::VectorXd> blocks;

  Eigen::VectorXd mode(int n, int k, int dim) const { return blocks[n].segment(k * dim, dim); }
  /// Value at t_n (end of interval n-1); n counted 1..N.
  Eigen::VectorXd end_value(int n, int dim) const;
  /// Value at t_n^+ (start of interval n); n counted 0..N-1.
  Eigen::VectorXd start_value(int n, int dim) const;
};

/// Values of a slab function and its derivatives at the element quadrature
/// points: each matrix is n_space_points x n_time_points.
struct SlabFieldValues {
  Eigen::MatrixXd v, vt, gx, gy, hxx, hxy, hyy;
};

SlabFieldValues eval_slab_field(const BasisTable& table, const TemporalBasis& tb,
                                const Eigen::Ref<const Eigen::VectorXd>& block, int dim, int offset);

/// Global space-time forms on a fixed partition.
class SpaceTimeForms {
 public:
  SpaceTimeForms(const HJBProblem& problem, const DGSpace& space, const SpatialOperators& ops,
                 const TimePartition& partition);

  const HJBProblem& problem() const { return problem_; }
  const TimePartition& partition() const { return partition_; }
  int dim() const { return dim_; }
  const SpatialOperators& ops() const { return ops_; }
  TemporalBasis time_basis(int n) const;

  /// sum_n int_{I_n} sum_K (L_omega u, L_omega v)_K dt.
  double volume_L_omega(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const;
  double CF_h(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const;
  double C_h(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const;
  /// sum_n int (F_gamma[u], L_omega v) dt + C_h(u, v) - volume_L_omega(u, v).
  double A_h(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const;
  /// omega a_h(u_0, v(0^+)).
  double initial_functional(const Eigen::VectorXd& a_h_u0, const SpaceTimeFunction& v) const;

  /// int_{I_n} of a spatial bilinear matrix over the slab: sum_k Mt_kk U_k^T S V_k.
  double slab_mass_form(const SparseMatrix& s, const SpaceTimeFunction& u,
                        const SpaceTimeFunction& v) const;
  /// sum_n int (u_t, v_t)_{L2} dt.
  double time_derivative_form(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const;
  /// Temporal jump at breakpoint n = 0..N.
  Eigen::VectorXd jump(const SpaceTimeFunction& v, int n) const;
  Eigen::VectorXd average(const SpaceTimeFunction& v, int n) const;

  SpaceTimeFunction random(unsigned seed) const;
  SpaceTimeFunction zero() const;

 private:
  const HJBProblem& problem_;
  const DGSpace& space_;
  const SpatialOperators& ops_;
  TimePartition partition_;
  int dim_;
  std::vector<BasisTable> tables_;
};

/// Temporal Gram matrices of one interval: mass(k,m) = int psi_k psi_m,
/// deriv(k,m) = int psi_m psi_k', stiff(k,m) = int psi_k' psi_m'.
struct TemporalMatrices {
  Eigen::MatrixXd mass, deriv, stiff;
  Eigen::VectorXd left, right;
};

TemporalMatrices temporal_matrices(int q, double tau);

struct CalibrationResult {
  double c_s = 0.0;
  int doublings = 0;
  double worst_margin = 0.0;  ///< min over the checks of lhs - rhs, scaled
};

/// Spatial coercivity check B_theta(v,v) >= sum [theta/kappa |v|^2_{H2,lambda} + (1-theta)|L v|^2] + J/2
/// at theta in {0, 1/2, 1}. Returns the smallest relative margin over the samples.
double coercivity_margin(const SpatialOperators& ops, double kappa, int samples, unsigned seed);

/// Doubles c_s from the starting value until the smallest eigenvalue of
/// B_* + J/2 - H2_lambda/kappa is nonnegative (which covers every theta) and
/// the sampled check passes.
CalibrationResult calibrate_penalty(const DGSpace& space, double lambda, double kappa,
                                    PenaltyParams start, int samples = 100, unsigned seed = 7,
                                    int max_doublings = 24);

}  // namespace sthjb

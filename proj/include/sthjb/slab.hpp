#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sthjb/forms.hpp"
#include "sthjb/problem.hpp"
#include "sthjb/space.hpp"

namespace sthjb {

/// Frozen control index at every space-time quadrature point of a slab,
/// element-major, then time point, then space point.
struct PolicyField {
  std::vector<int> control;

  bool operator==(const PolicyField&) const = default;
};

/// The per-interval nonlinear system. Unknowns are ordered temporal mode
/// major, spatial dof minor: index = k * dim + i.
class SlabSystem {
 public:
  SlabSystem(const HJBProblem& problem, const DGSpace& space, const SpatialOperators& ops,
             const std::vector<BasisTable>& tables, double t0, double tau, int q);

  int size() const { return nt_ * dim_; }
  int n_modes() const { return nt_; }
  int dim() const { return dim_; }
  const TemporalBasis& time_basis() const { return tb_; }

  /// Policy-independent part: B_{h,1/2} - sum(L,L), the flux terms and the
  /// initial-trace coupling.
  const SparseMatrix& linear() const { return linear_; }

  /// omega * a_h(w, v(t_{n-1}^+)) given the vector a_h(w, phi_i).
  Eigen::VectorXd rhs_from_functional(const Eigen::VectorXd& a_h_w) const;
  /// Right side for a previous end trace in V_h.
  Eigen::VectorXd rhs_from_trace(const Eigen::VectorXd& prev_end) const;

  /// Minimising controls of the field U at every quadrature point.
  PolicyField policy(const Eigen::VectorXd& u) const;
  /// Minimising controls of the initial datum (time derivative taken as zero).
  PolicyField policy_from_initial(const InitialFn& u0) const;

  /// Frozen-control matrix (linear part plus volume term) and the source
  /// vector int gamma f L_omega(test).
  void assemble(const PolicyField& policy, SparseMatrix& matrix, Eigen::VectorXd& load) const;

  /// Volume(U) + linear U - rhs; optionally returns the minimising policy at U.
  Eigen::VectorXd residual(const Eigen::VectorXd& u, const Eigen::VectorXd& rhs,
                           PolicyField* policy = nullptr) const;

  Eigen::VectorXd end_trace(const Eigen::VectorXd& u) const;
  Eigen::VectorXd start_trace(const Eigen::VectorXd& u) const;

 private:
  static constexpr int kStride = 8;  // gamma, gamma*a11, a12, a22, b1, b2, c, f

  const double* coeff(int k, int tq, int xq, int control) const;
  int policy_offset(int k) const { return policy_offsets_[k]; }
  Eigen::MatrixXd test_matrix(int k) const;

  const HJBProblem& problem_;
  const DGSpace& space_;
  const std::vector<BasisTable>& tables_;
  TemporalBasis tb_;
  int nt_;
  int dim_;
  int n_controls_;
  double t0_;
  std::vector<int> col_start_;        // slab column starts
  std::vector<int> spatial_len_;      // block-pattern column lengths
  std::vector<int> diag_rel_;         // per spatial column: position of its own element's first row
  std::vector<int> policy_offsets_;
  std::vector<std::vector<double>> coeffs_;
  SparseMatrix linear_;
  const SparseMatrix& a_h_;
};

}  // namespace sthjb

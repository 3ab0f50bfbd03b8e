#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "sthjb/mesh.hpp"
#include "sthjb/quadrature.hpp"

namespace sthjb {

/// Value, gradient and Hessian of a scalar field at one point.
struct Jet {
  double v = 0.0;
  double gx = 0.0;
  double gy = 0.0;
  double hxx = 0.0;
  double hxy = 0.0;
  double hyy = 0.0;
};

/// Broken polynomial space of tensor degree p_K on each element, with an
/// L2-orthonormal tensor Legendre basis. Local basis index is a + (p_K+1) b
/// for x-degree a and y-degree b.
class DGSpace {
 public:
  DGSpace(std::shared_ptr<const Mesh2D> mesh, std::vector<int> degrees);
  static DGSpace uniform(std::shared_ptr<const Mesh2D> mesh, int p);

  const Mesh2D& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh2D>& mesh_ptr() const { return mesh_; }
  int n_elements() const { return mesh_->n_elements(); }
  int degree(int k) const { return degrees_[k]; }
  std::span<const int> degrees() const { return degrees_; }
  int max_degree() const;
  int n_basis(int k) const { return (degrees_[k] + 1) * (degrees_[k] + 1); }
  int offset(int k) const { return offsets_[k]; }
  int dim() const { return offsets_.back(); }

  /// Largest max(p,p')/min(p,p') over interior faces (1 without interior faces).
  double degree_ratio() const;

  /// Jets of every local basis function of element k at physical point x.
  void eval_basis(int k, Point x, std::span<Jet> out) const;
  /// Jet of the element-k restriction of a coefficient vector over the whole space.
  Jet eval(int k, Point x, const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;

 private:
  std::shared_ptr<const Mesh2D> mesh_;
  std::vector<int> degrees_;
  std::vector<int> offsets_;
};

/// Basis tables at a set of points: each matrix is n_basis x n_points.
struct BasisTable {
  std::vector<Point> points;
  std::vector<double> weights;
  Eigen::MatrixXd v, gx, gy, hxx, hxy, hyy;

  int n_points() const { return static_cast<int>(points.size()); }
  int n_basis() const { return static_cast<int>(v.rows()); }
};

BasisTable tabulate_points(const DGSpace& space, int k, std::span<const Point> points);

/// Tensor Gauss rule with n points per axis mapped to element k; weights
/// include the Jacobian.
BasisTable tabulate_element(const DGSpace& space, int k, int n_per_axis);

/// One-sided trace quantities of an element's basis on a face.
struct FaceSide {
  int element = -1;
  Eigen::MatrixXd v;    ///< value
  Eigen::MatrixXd dn;   ///< grad . n_F
  Eigen::MatrixXd dt;   ///< tangential derivative
  Eigen::MatrixXd dtt;  ///< second tangential derivative
  Eigen::MatrixXd dtn;  ///< tangential derivative of grad . n_F
};

struct FaceTable {
  std::vector<Point> points;
  std::vector<double> weights;
  bool interior = false;
  FaceSide ext;
  FaceSide in;  ///< empty on boundary faces

  int n_points() const { return static_cast<int>(points.size()); }
  int n_local() const { return static_cast<int>(ext.v.rows() + in.v.rows()); }

  /// Jump and average operators acting on the stacked local vector (ext dofs
  /// first, then int dofs): n_local x n_points.
  Eigen::MatrixXd jump(Eigen::MatrixXd FaceSide::*q) const;
  Eigen::MatrixXd avg(Eigen::MatrixXd FaceSide::*q) const;
};

/// Trace tables with n Gauss points along the face.
FaceTable tabulate_face(const DGSpace& space, const Face& face, int n_points);

/// Default face rule size for the given face.
int face_rule_size(const DGSpace& space, const Face& face);

enum class PartitionKind { uniform, geometric };
enum class DegreeRule { constant, linear };

/// Breakpoints 0 = t_0 < ... < t_N = T with one temporal degree per interval.
/// Interval n (0-based) is (t[n], t[n+1]].
struct TimePartition {
  std::vector<double> t;
  std::vector<int> q;

  int n_intervals() const { return static_cast<int>(q.size()); }
  double tau(int n) const { return t[n + 1] - t[n]; }
  double final_time() const { return t.back(); }
  /// Sum over intervals of (q_n + 1).
  int temporal_dofs() const;
};

/// Linear rule sets q_n = n+1 with n counted from 1.
TimePartition build_time_partition(PartitionKind kind, int n_intervals, double final_time,
                                   DegreeRule rule, int q = 1, double sigma = 0.2);

/// Legendre modes on one interval: values and time derivatives at the rule
/// points, plus endpoint values.
struct TemporalBasis {
  int q = 0;
  double tau = 0.0;
  std::vector<double> s;        ///< reference points
  std::vector<double> weights;  ///< physical weights
  Eigen::MatrixXd psi;          ///< (q+1) x n_points
  Eigen::MatrixXd dpsi;         ///< time derivatives
  Eigen::VectorXd left;         ///< values at t_{n-1}^+
  Eigen::VectorXd right;        ///< values at t_n
};

TemporalBasis temporal_basis(int q, double tau, int n_points);

struct TemporalJump {
  Eigen::VectorXd jump;
  Eigen::VectorXd avg;
};

/// Temporal jump and average at breakpoint n of N. `left` is the value at t_n
/// from the interval ending there, `right` the value at t_n^+; the unused side
/// is ignored at n = 0 and n = N.
TemporalJump temporal_jump_avg(const Eigen::VectorXd& left, const Eigen::VectorXd& right, int n,
                               int N);

}  // namespace sthjb

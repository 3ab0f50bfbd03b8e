#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>

#include "sthjb/space.hpp"

namespace sthjb::testing {

/// L2 projection of g onto the space (exact for functions in it).
inline Eigen::VectorXd project(const DGSpace& space, const std::function<double(Point)>& g) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(space.dim());
  for (int k = 0; k < space.n_elements(); ++k) {
    const BasisTable t = tabulate_element(space, k, space.degree(k) + 4);
    for (int q = 0; q < t.n_points(); ++q)
      u.segment(space.offset(k), space.n_basis(k)) += t.weights[q] * g(t.points[q]) * t.v.col(q);
  }
  return u;
}

inline double bubble(Point x) { return x.x * (1.0 - x.x) * x.y * (1.0 - x.y); }

/// Largest |r_i| relative to the largest sum_j |A_ij u_j|.
inline double componentwise_ratio(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& u) {
  const Eigen::VectorXd r = a * u;
  Eigen::VectorXd scale = Eigen::VectorXd::Zero(a.rows());
  for (int c = 0; c < a.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it)
      scale[it.row()] += std::abs(it.value() * u[c]);
  return r.cwiseAbs().maxCoeff() / scale.maxCoeff();
}

}  // namespace sthjb::testing

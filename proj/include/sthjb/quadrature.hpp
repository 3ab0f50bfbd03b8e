#pragma once

#include <span>
#include <vector>

namespace sthjb {

/// Gauss-Legendre rule on the reference interval [-1, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
  int exactness = 0;  ///< polynomials of degree <= exactness are integrated exactly

  int size() const { return static_cast<int>(points.size()); }
};

/// n-point Gauss-Legendre rule (exact to degree 2n-1). Rules are cached.
const QuadratureRule& gauss_legendre(int n);

/// Unnormalised Legendre polynomials P_0..P_degree and their first two
/// derivatives at s. Each output span must hold degree+1 entries.
void legendre_values(int degree, double s, std::span<double> p, std::span<double> dp,
                     std::span<double> d2p);

/// L2([-1,1])-orthonormal scaling sqrt((2k+1)/2).
double legendre_orthonormal_scale(int k);

}  // namespace sthjb

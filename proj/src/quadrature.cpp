#include "sthjb/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sthjb {

namespace {

constexpr int kMaxCachedPoints = 96;

QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  rule.exactness = 2 * n - 1;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 1 || n > kMaxCachedPoints)
    throw std::invalid_argument("gauss_legendre: unsupported number of points");
  static const std::vector<QuadratureRule> cache = [] {
    std::vector<QuadratureRule> rules(kMaxCachedPoints + 1);
    for (int i = 1; i <= kMaxCachedPoints; ++i) rules[i] = compute_gauss_legendre(i);
    return rules;
  }();
  return cache[n];
}

void legendre_values(int degree, double s, std::span<double> p, std::span<double> dp,
                     std::span<double> d2p) {
  p[0] = 1.0;
  dp[0] = 0.0;
  d2p[0] = 0.0;
  if (degree == 0) return;
  p[1] = s;
  dp[1] = 1.0;
  d2p[1] = 0.0;
  for (int k = 1; k < degree; ++k) {
    p[k + 1] = ((2.0 * k + 1.0) * s * p[k] - k * p[k - 1]) / (k + 1.0);
    dp[k + 1] = dp[k - 1] + (2.0 * k + 1.0) * p[k];
    d2p[k + 1] = d2p[k - 1] + (2.0 * k + 1.0) * dp[k];
  }
}

double legendre_orthonormal_scale(int k) { return std::sqrt((2.0 * k + 1.0) / 2.0); }

}  // namespace sthjb

#include "hdgstokes/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace hdgstokes {

namespace {

// Legendre P_n(x) and derivative on [-1,1].
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

Eigen::VectorXd gauss_legendre_nodes(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_nodes: n >= 1 required");
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(n, t);
      double dt = -p / dp;
      t += dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x(n - 1 - i) = 0.5 * (t + 1.0);
  }
  return x;
}

SegmentRule segment_rule(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  SegmentRule rule;
  rule.points = gauss_legendre_nodes(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = 2.0 * rule.points(i) - 1.0;
    auto [p, dp] = legendre(n, t);
    (void)p;
    rule.weights(i) = 1.0 / ((1.0 - t * t) * dp * dp);
  }
  rule.degree = 2 * n - 1;
  return rule;
}

Eigen::VectorXd gauss_lobatto_nodes(int n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto_nodes: n >= 2 required");
  Eigen::VectorXd x(n);
  x(0) = 0.0;
  x(n - 1) = 1.0;
  // Interior nodes are the roots of P'_{n-1}, bracketed by the extrema of
  // P_{n-1} which interlace with Gauss-Legendre nodes of order n-1.
  if (n > 2) {
    Eigen::VectorXd gl = gauss_legendre_nodes(n - 1);
    for (int i = 0; i < n - 2; ++i) {
      double a = 2.0 * gl(i) - 1.0, b = 2.0 * gl(i + 1) - 1.0;
      double fa = legendre(n - 1, a).second;
      for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (a + b);
        double fm = legendre(n - 1, m).second;
        if ((fa < 0) == (fm < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      x(i + 1) = 0.5 * (0.5 * (a + b) + 1.0);
    }
  }
  return x;
}

TriangleRule triangle_rule(int degree) {
  // Duffy map (u,v) -> (u, v(1-u)) with Jacobian (1-u); the pullback of a
  // degree-d polynomial has degree at most d+1 in u and d in v.
  const int n = std::max(1, (degree + 3) / 2);
  SegmentRule line = segment_rule(2 * n - 1);
  TriangleRule rule;
  rule.points.resize(n * n, 2);
  rule.weights.resize(n * n);
  int q = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j, ++q) {
      double u = line.points(i), v = line.points(j);
      rule.points(q, 0) = u;
      rule.points(q, 1) = v * (1.0 - u);
      rule.weights(q) = line.weights(i) * line.weights(j) * (1.0 - u);
    }
  }
  rule.degree = degree;
  return rule;
}

}  // namespace hdgstokes

#pragma once

#include <Eigen/Core>

namespace hdgstokes {

/// Quadrature on the reference triangle {(x,y) : x,y >= 0, x+y <= 1}.
struct TriangleRule {
  Eigen::Matrix<double, Eigen::Dynamic, 2> points;
  Eigen::VectorXd weights;
  int degree = 0;  ///< integrates polynomials up to this total degree exactly
};

/// Quadrature on the reference segment [0,1].
struct SegmentRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
  int degree = 0;
};

/// Collapsed Gauss-Legendre rule, exact for polynomials up to `degree`.
TriangleRule triangle_rule(int degree);

/// Gauss-Legendre rule on [0,1], exact up to `degree`.
SegmentRule segment_rule(int degree);

/// n Gauss-Legendre nodes on [0,1].
Eigen::VectorXd gauss_legendre_nodes(int n);

/// n Gauss-Lobatto nodes on [0,1] (endpoints included), n >= 2.
Eigen::VectorXd gauss_lobatto_nodes(int n);

}  // namespace hdgstokes

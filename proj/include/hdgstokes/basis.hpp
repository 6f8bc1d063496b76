#pragma once

#include <array>
#include <Eigen/Core>

namespace hdgstokes {

/// L2-orthonormal polynomial basis of P_k on the reference triangle,
/// obtained by Cholesky orthonormalization of the monomial basis (with one
/// re-orthonormalization pass). Stable for the moderate degrees used here.
class SimplexBasis {
public:
  explicit SimplexBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exp_.size()); }

  /// Basis values at reference points; (#points x size).
  Eigen::MatrixXd values(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const;
  /// Reference gradients; [0] = d/dx, [1] = d/dy, each (#points x size).
  std::array<Eigen::MatrixXd, 2> gradients(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const;

private:
  Eigen::MatrixXd monomials(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const;

  int degree_;
  std::vector<std::array<int, 2>> exp_;  ///< monomial exponents (a,b)
  Eigen::MatrixXd coeff_;                ///< column j = monomial coefficients of basis j
};

/// Exact integral of x^a y^b over the reference triangle.
double monomial_integral_triangle(int a, int b);

/// Nodal (Lagrange) basis on [0,1] for a given node set.
class LagrangeSegmentBasis {
public:
  explicit LagrangeSegmentBasis(Eigen::VectorXd nodes);

  int size() const { return static_cast<int>(nodes_.size()); }
  const Eigen::VectorXd& nodes() const { return nodes_; }

  /// Basis values at parameters t; (#t x size).
  Eigen::MatrixXd values(const Eigen::VectorXd& t) const;

private:
  Eigen::VectorXd nodes_;
  Eigen::MatrixXd coeff_;  ///< column j = power-basis coefficients of basis j
};

}  // namespace hdgstokes

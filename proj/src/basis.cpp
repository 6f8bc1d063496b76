#include "hdgstokes/basis.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hdgstokes/quadrature.hpp"

namespace hdgstokes {

double monomial_integral_triangle(int a, int b) {
  // int_T x^a y^b = a! b! / (a+b+2)!
  return std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(a + b + 3.0));
}

SimplexBasis::SimplexBasis(int degree) : degree_(degree) {
  if (degree < 0) throw std::invalid_argument("SimplexBasis: degree >= 0 required");
  for (int d = 0; d <= degree; ++d)
    for (int a = d; a >= 0; --a) exp_.push_back({a, d - a});

  const int n = size();
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gram(i, j) = monomial_integral_triangle(exp_[i][0] + exp_[j][0], exp_[i][1] + exp_[j][1]);

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw std::runtime_error("SimplexBasis: Gram factorization failed");
  coeff_ = Eigen::MatrixXd::Identity(n, n);
  llt.matrixU().solveInPlace(coeff_);

  // Re-orthonormalize against a quadrature Gram to sharpen round-off.
  TriangleRule rule = triangle_rule(2 * degree + 2);
  Eigen::MatrixXd v = monomials(rule.points) * coeff_;
  Eigen::MatrixXd g2 = v.transpose() * rule.weights.asDiagonal() * v;
  Eigen::LLT<Eigen::MatrixXd> llt2(g2);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
  llt2.matrixU().solveInPlace(corr);
  coeff_ = coeff_ * corr;
}

Eigen::MatrixXd SimplexBasis::monomials(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const {
  const int np = static_cast<int>(pts.rows());
  Eigen::MatrixXd m(np, size());
  for (int q = 0; q < np; ++q)
    for (int j = 0; j < size(); ++j)
      m(q, j) = std::pow(pts(q, 0), exp_[j][0]) * std::pow(pts(q, 1), exp_[j][1]);
  return m;
}

Eigen::MatrixXd SimplexBasis::values(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const {
  return monomials(pts) * coeff_;
}

std::array<Eigen::MatrixXd, 2> SimplexBasis::gradients(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const {
  const int np = static_cast<int>(pts.rows());
  Eigen::MatrixXd dx(np, size()), dy(np, size());
  for (int q = 0; q < np; ++q) {
    for (int j = 0; j < size(); ++j) {
      const int a = exp_[j][0], b = exp_[j][1];
      dx(q, j) = a == 0 ? 0.0 : a * std::pow(pts(q, 0), a - 1) * std::pow(pts(q, 1), b);
      dy(q, j) = b == 0 ? 0.0 : b * std::pow(pts(q, 0), a) * std::pow(pts(q, 1), b - 1);
    }
  }
  return {dx * coeff_, dy * coeff_};
}

LagrangeSegmentBasis::LagrangeSegmentBasis(Eigen::VectorXd nodes) : nodes_(std::move(nodes)) {
  const int n = size();
  Eigen::MatrixXd vand(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) vand(i, j) = std::pow(nodes_(i), j);
  // coeff_ solves V * C = I, so basis j is 1 at node j and 0 elsewhere.
  coeff_ = vand.fullPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

Eigen::MatrixXd LagrangeSegmentBasis::values(const Eigen::VectorXd& t) const {
  const int n = size();
  const int np = static_cast<int>(t.size());
  Eigen::MatrixXd powers(np, n);
  for (int q = 0; q < np; ++q)
    for (int j = 0; j < n; ++j) powers(q, j) = std::pow(t(q), j);
  return powers * coeff_;
}

}  // namespace hdgstokes

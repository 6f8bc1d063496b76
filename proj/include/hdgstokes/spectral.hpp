#pragma once

#include <string>

#include "hdgstokes/krylov.hpp"

namespace hdgstokes {

/// Generalized eigenvalue extremes of a matrix pair, restricted to the
/// orthogonal complement of a deflated direction when one is supplied.
struct SpectrumReport {
  std::string pair_name;
  int mesh_level = -1;
  int dimension = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Eigen::VectorXd spectrum;  ///< full spectrum when dimension <= 500
};

/// Dense work is size-capped; these are verification tools, not solve paths.
inline constexpr int kMaxDenseTracePressure = 2000;

/// Trace pressure Schur complement
///   Sbar = B_pbar_u P (A_uu^{-1} + A_uu^{-1} A_ubar_u^T (Abar^d)^{-1}
///          A_ubar_u A_uu^{-1}) P^T B_pbar_u^T,
/// assembled densely from the element factorizations and the two-field
/// velocity block. Symmetric positive semidefinite with the constant trace
/// pressure as kernel. Throws when n_qbar exceeds the dense cap.
Eigen::MatrixXd build_schur_sbar(const Mesh& mesh, const DofLayout& layout,
                                 const Condensation& cond, const CondensedSystem& two_field);

/// Orthonormal basis of the complement of direction w (n x (n-1)).
Eigen::MatrixXd complement_basis(const Eigen::VectorXd& w);

/// Extremes of x^T A x / x^T B x. B must be SPD on the (possibly deflated)
/// subspace; an indefinite B is reported as an input error.
SpectrumReport generalized_extremes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::VectorXd* deflate, const std::string& name);

/// Eigenvalues of the preconditioned condensed operator on the deflated
/// subspace (dense; the preconditioner is applied columnwise).
Eigen::VectorXd preconditioned_spectrum(const CondensedSystem& system,
                                        const BlockPreconditioner& precon);

enum class NormKind { FacetL2, FacetH1, VelocityStability, TracePressure, FullPressure };

/// Mesh-dependent discrete norms. element_part/trace_part hold the
/// coefficient vectors required by the kind (unused parts may be empty):
///   FacetL2, FacetH1:      trace velocity (free dofs)
///   VelocityStability:     element velocity + trace velocity
///   TracePressure:         trace pressure
///   FullPressure:          element pressure + trace pressure
double discrete_norm(const Mesh& mesh, const DofLayout& layout, double alpha, NormKind kind,
                     const Eigen::VectorXd& element_part, const Eigen::VectorXd& trace_part);

/// Dense norm matrices of the trace velocity space (free dofs), used for the
/// Poincare constant estimate between |.|_{h,0} and |||.|||_h.
Eigen::MatrixXd facet_l2_matrix(const Mesh& mesh, const DofLayout& layout);
Eigen::MatrixXd facet_h1_matrix(const Mesh& mesh, const DofLayout& layout);

/// Dense velocity-coupling matrices over (element u | free trace u):
/// A = [A_uu A_ubar_u^T; A_ubar_u A_ubar_ubar] and the projected variant
/// A_P = [A_uu P^T A_ubar_u^T; A_ubar_u P A_ubar_ubar].
Eigen::MatrixXd build_a_dense(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm);
Eigen::MatrixXd build_ap_dense(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm,
                               const Condensation& cond);

}  // namespace hdgstokes

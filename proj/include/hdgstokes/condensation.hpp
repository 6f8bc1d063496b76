#pragma once

#include <Eigen/Cholesky>

#include "hdgstokes/assembly.hpp"

namespace hdgstokes {

/// Per-element cached factorizations, the oblique projector into Ker B_pu,
/// and free-compressed coupling blocks.
struct LocalCondensed {
  Eigen::LLT<Eigen::MatrixXd> A_uu;
  Eigen::MatrixXd B_pu;
  Eigen::LLT<Eigen::MatrixXd> S_pp;  ///< B_pu A_uu^{-1} B_pu^T
  Eigen::MatrixXd Pi;                ///< A_uu^{-1} B_pu^T S_pp^{-1} B_pu
  Eigen::MatrixXd P;                 ///< I - Pi, projector onto Ker B_pu
  Eigen::MatrixXd A_ubar_u;          ///< free trace rows only
  Eigen::MatrixXd B_pbar_u;
  Eigen::VectorXd L_u;
  std::vector<int> ubar_dofs;  ///< global free dof per compressed trace row
  std::vector<int> qbar_dofs;  ///< global trace pressure dof per row
};

struct Condensation {
  std::vector<LocalCondensed> elems;
};

/// (Pi, P) for a single element; throws if B_pu is rank deficient.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_local_projector(const Eigen::MatrixXd& A_uu,
                                                                  const Eigen::MatrixXd& B_pu);

Condensation condense_locals(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm);

enum class SystemKind { TwoField, ThreeField };

/// Statically condensed global system. Unknown blocks are ordered
/// (ubar | pbar) for TwoField and (ubar | p | pbar) for ThreeField.
/// The matrix is symmetric indefinite with the documented one-dimensional
/// null space (constant trace pressure, resp. constant element and trace
/// pressure); null_vector is normalized.
struct CondensedSystem {
  SystemKind kind = SystemKind::TwoField;
  SparseMat matrix;
  Eigen::VectorXd rhs;
  Eigen::VectorXd null_vector;
  int n_ubar = 0;
  int n_q = 0;  ///< zero for TwoField
  int n_qbar = 0;
  long dim() const { return static_cast<long>(n_ubar) + n_q + n_qbar; }
  long offset_p() const { return n_ubar; }
  long offset_pbar() const { return static_cast<long>(n_ubar) + n_q; }
};

CondensedSystem build_two_field(const Mesh& mesh, const DofLayout& layout,
                                const Condensation& cond, const GlobalMatrices& gm);
CondensedSystem build_three_field(const Mesh& mesh, const DofLayout& layout,
                                  const Condensation& cond, const GlobalMatrices& gm);

/// Element fields recovered from a trace solution. The two-field path applies
/// the projector last, so B_pu u = 0 holds to machine precision regardless of
/// how accurately the trace system was solved.
struct ElementFields {
  Eigen::VectorXd u;  ///< n_u
  Eigen::VectorXd p;  ///< n_q
};
ElementFields back_substitute(const CondensedSystem& system, const Eigen::VectorXd& solution,
                              const Mesh& mesh, const DofLayout& layout, const Condensation& cond);

/// The unreduced saddle point system over free dofs, ordered (u|ubar|p|pbar);
/// reference object for oracle comparisons and dense diagnostics.
struct FullSystem {
  SparseMat matrix;
  Eigen::VectorXd rhs;
  Eigen::VectorXd null_vector;
  long off_u = 0, off_ubar = 0, off_p = 0, off_pbar = 0;
  long dim() const { return matrix.rows(); }
};
FullSystem build_full_system(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm);

}  // namespace hdgstokes

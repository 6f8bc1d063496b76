#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hdgstokes/fespace.hpp"
#include "hdgstokes/mesh.hpp"

namespace hdgstokes {

using SparseMat = Eigen::SparseMatrix<double>;
using VectorField = std::function<Vec2(const Vec2&)>;
using ScalarField = std::function<double(const Vec2&)>;

/// Parameters of the bilinear forms. Viscosity is fixed to one. gamma is the
/// grad-div augmentation weight used by the Agamma preconditioner blocks.
struct AssemblyConfig {
  double alpha = 0.0;
  double gamma = 0.0;
};

/// Paper defaults for the interior penalty: 6k^2 for HDG, 4k^2 for the
/// embedded variants (2D).
double default_alpha(const SpaceConfig& config);
AssemblyConfig make_assembly_config(const SpaceConfig& config, double gamma = 0.0);

/// Dense per-element blocks. Trace rows cover all element-local trace slots,
/// including boundary-constrained ones; elimination happens at scatter time.
/// Local index conventions: element velocity dof = comp*npk + j, trace
/// velocity dof = 2*slot + comp, trace pressure dof = slot.
struct LocalBlocks {
  Eigen::MatrixXd A_uu;
  Eigen::MatrixXd A_ubar_u;
  Eigen::MatrixXd A_ubar_ubar;
  Eigen::MatrixXd B_pu;
  Eigen::MatrixXd B_pbar_u;
  Eigen::MatrixXd M;
  Eigen::VectorXd L_u;
};

/// Assembled operators over free dofs plus the per-element dense blocks.
/// A_uu, B_pu and M stay in element-diagonal (per-element dense) storage.
struct GlobalMatrices {
  AssemblyConfig config;
  std::vector<LocalBlocks> local;
  SparseMat A_ubar_ubar;     ///< trace velocity coupling, free x free
  SparseMat Mbar;            ///< h_K-weighted trace pressure mass
  Eigen::VectorXd rhs_u;     ///< element velocity load, Dirichlet lift included
  Eigen::VectorXd rhs_ubar;  ///< trace velocity load (pure lift), free dofs
  Eigen::VectorXd g_nodes;   ///< boundary data per trace velocity dof (2*node+comp)
};

/// Assembles all blocks in one pass. Null fields are treated as zero.
GlobalMatrices assemble(const Mesh& mesh, const DofLayout& layout, const AssemblyConfig& config,
                        const VectorField& body_force = nullptr,
                        const VectorField& boundary_velocity = nullptr);

/// Per-element entry points mirroring the one-pass assembly (no lift applied).
struct LocalABlocks {
  Eigen::MatrixXd A_uu, A_ubar_u, A_ubar_ubar;
};
LocalABlocks assemble_local_a(const Mesh& mesh, const DofLayout& layout,
                              const AssemblyConfig& config, int element);

struct LocalBBlocks {
  Eigen::MatrixXd B_pu, B_pbar_u;
};
LocalBBlocks assemble_local_b(const Mesh& mesh, const DofLayout& layout, int element);

struct MassMatrices {
  std::vector<Eigen::MatrixXd> M;  ///< per element, identity in this basis
  SparseMat Mbar;
};
MassMatrices assemble_mass(const Mesh& mesh, const DofLayout& layout);

/// gamma * B_pu^T M^{-1} B_pu for one element.
Eigen::MatrixXd assemble_graddiv(const LocalBlocks& blocks, double gamma);

/// Element L2 projection of a vector field into V_h (coefficients, n_u) —
/// used for interpolation-error studies and manufactured data.
Eigen::VectorXd project_velocity(const Mesh& mesh, const DofLayout& layout, const VectorField& u);
/// Element L2 projection of a scalar field into Q_h (coefficients, n_q).
Eigen::VectorXd project_pressure(const Mesh& mesh, const DofLayout& layout, const ScalarField& p);

/// Per-element coefficients of the constant function 1 in the Q_h basis.
Eigen::VectorXd pressure_constant_coefficients(const Mesh& mesh, const DofLayout& layout);

/// L2(Omega) errors of discrete fields against closed-form references,
/// evaluated with quadrature of degree 2k+4.
double velocity_l2_error(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u,
                         const VectorField& exact);
double pressure_l2_error(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& p,
                         const ScalarField& exact);
/// || div u_h ||_Omega (exact quadrature; div u_h is elementwise polynomial).
double divergence_norm(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u);
double velocity_l2_norm(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u);

/// Sampled field values at element quadrature points: rows (x, y, u0, u1, p).
Eigen::MatrixXd sample_fields(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& p);

}  // namespace hdgstokes

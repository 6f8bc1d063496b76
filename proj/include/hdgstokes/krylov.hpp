#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "hdgstokes/condensation.hpp"

namespace hdgstokes {

struct LinearOperator {
  Eigen::Index n = 0;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;
};
LinearOperator make_operator(const SparseMat& A);
LinearOperator identity_operator(Eigen::Index n);

struct MinresOptions {
  double tol = 1e-8;
  int max_iter = 500;
  /// Stop on the preconditioned residual estimate instead of the recomputed
  /// true residual.
  bool stop_on_preconditioned = false;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> true_residuals;    ///< relative, one entry per iteration
  std::vector<double> precon_residuals;  ///< relative recurrence estimate
  double t_assembly = 0, t_condensation = 0, t_precon_setup = 0, t_iterations = 0, t_backsub = 0;
};

/// Preconditioned MINRES for a symmetric operator with an SPD preconditioner.
/// The known null space directions (deflation) are projected out of the right
/// hand side, every operator and preconditioner application, and the returned
/// solution. Stops once the relative true residual |b - Ax|/|b| (recomputed
/// with an extra operator application per iteration) reaches tol.
Eigen::VectorXd minres(const LinearOperator& A, const Eigen::VectorXd& b,
                       const LinearOperator& precon, const std::vector<Eigen::VectorXd>& deflation,
                       const MinresOptions& options, SolveReport& report);

/// Direct solve of a symmetric consistent singular system via the bordered
/// augmentation [A w; w^T 0]; the result is orthogonal to w.
Eigen::VectorXd deflated_direct_solve(const SparseMat& A, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& null_vector);

/// Fixed linear approximation of the inverse of an SPD (or SPSD with known
/// one-dimensional kernel) matrix.
class SpdSolver {
public:
  virtual ~SpdSolver() = default;
  virtual void solve(const Eigen::VectorXd& r, Eigen::VectorXd& z) const = 0;
};

/// Exact sparse factorization (reference inner solver). The kernel overload
/// pins one dof, factorizes the remaining principal submatrix and projects
/// the result back to the orthogonal complement of the kernel; on that
/// subspace it acts as the exact inverse.
class ExactSpdSolver final : public SpdSolver {
public:
  explicit ExactSpdSolver(const SparseMat& A);
  ExactSpdSolver(const SparseMat& A, const Eigen::VectorXd& kernel);
  void solve(const Eigen::VectorXd& r, Eigen::VectorXd& z) const override;

private:
  Eigen::SimplicialLDLT<SparseMat> ldlt_;
  Eigen::VectorXd kernel_;  ///< normalized; empty if the matrix is definite
  int pinned_ = -1;
};

/// Stationary smoothing cycles: a fixed number of symmetric Gauss-Seidel
/// sweeps per cycle, optionally wrapped around an exact Galerkin correction
/// in the continuous piecewise linear vertex subspace (a two-level V-cycle).
/// Applied from a zero initial guess, this is a fixed linear SPD operator,
/// so MINRES remains valid. With coarse_correction = false it reduces to
/// plain symmetric Gauss-Seidel sweeps.
struct StationarySettings {
  int cycles = 4;
  int sweeps = 1;  ///< symmetric Gauss-Seidel sweeps per smoothing leg
  bool coarse_correction = true;
};

class StationaryCycleSolver final : public SpdSolver {
public:
  /// prolongation may be empty (0 columns) to disable the coarse correction.
  StationaryCycleSolver(const SparseMat& A, const SparseMat& prolongation,
                        const StationarySettings& settings);
  void solve(const Eigen::VectorXd& r, Eigen::VectorXd& z) const override;

private:
  void sgs_sweep(Eigen::VectorXd& x, const Eigen::VectorXd& b) const;

  Eigen::SparseMatrix<double, Eigen::RowMajor> A_;
  Eigen::VectorXd diag_;
  SparseMat P_;
  Eigen::SimplicialLDLT<SparseMat> coarse_;
  bool has_coarse_ = false;
  StationarySettings settings_;
};

/// Embedding of the continuous piecewise linear vector field space (interior
/// vertices, zero on the boundary) into the free trace velocity dofs.
SparseMat build_p1_trace_prolongation(const Mesh& mesh, const DofLayout& layout);

/// Matrix of the H1-like trace seminorm sum_K h_K^{-1} |vbar - m_K(vbar)|^2
/// over free trace velocity dofs; the model operator of the stationary
/// cycles. SPD on the free dofs (elementwise constants are excluded by the
/// boundary condition).
SparseMat build_trace_h1_matrix(const Mesh& mesh, const DofLayout& layout);

/// Element-wise assembly of Agamma = A_ubar_ubar - A_ubar_u (A_uu + gamma
/// B_pu^T M^{-1} B_pu)^{-1} A_ubar_u^T over free trace velocity dofs.
SparseMat build_agamma(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm,
                       const Condensation& cond, double gamma);

/// Element-wise assembly of B_pbar_u A_uu^{-1} B_pbar_u^T. Symmetric positive
/// definite: the constant trace pressure is NOT in its kernel (its image under
/// B_pbar_u^T is the nonzero element of Im B_pu^T that the projector-based
/// two-field system annihilates but A_uu^{-1} does not).
SparseMat build_bab(const Mesh& mesh, const DofLayout& layout, const Condensation& cond);

enum class PreconFamily { PMbar, PBAB, P3x3 };
enum class RdChoice { ExactAd, ExactAgamma, InnerIterAgamma, InnerIterAd };
enum class MassTreatment { ExactFactorization, DiagonalScaling };

const char* family_name(PreconFamily f);
const char* rd_name(RdChoice r);

/// Velocity-block choice: ExactAd factorizes the (1,1) block of the condensed
/// system itself (Abar^d for two-field, Abar for three-field); ExactAgamma
/// factorizes Agamma; the InnerIter choices run stationary cycles on the
/// corresponding operator instead of factorizing it.
struct PreconConfig {
  PreconFamily family = PreconFamily::PMbar;
  RdChoice rd = RdChoice::ExactAd;
  double gamma = 0.0;
  StationarySettings stationary;
  MassTreatment mass = MassTreatment::ExactFactorization;
};

/// Block-diagonal preconditioner: PMbar = diag(Rd, Mbar)^{-1},
/// PBAB = diag(Rd, B A^{-1} B^T)^{-1}, P3x3 = diag(Rd, M, Mbar)^{-1}.
class BlockPreconditioner {
public:
  BlockPreconditioner(const CondensedSystem& system, const Mesh& mesh, const DofLayout& layout,
                      const GlobalMatrices& gm, const Condensation& cond, const PreconConfig& cfg);

  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const;
  LinearOperator op() const;
  double setup_seconds() const { return setup_seconds_; }

private:
  int n_ubar_ = 0, n_q_ = 0, n_qbar_ = 0;
  int npq_ = 0;
  std::unique_ptr<SpdSolver> velocity_;
  std::unique_ptr<SpdSolver> pressure_;  ///< Mbar or BAB block
  Eigen::VectorXd pressure_diag_inv_;    ///< diagonal-scaling alternative
  std::vector<Eigen::LLT<Eigen::MatrixXd>> m_llt_;  ///< element pressure mass (P3x3)
  double setup_seconds_ = 0.0;
};

}  // namespace hdgstokes

#include "hdgstokes/condensation.hpp"

#include <stdexcept>

#include <Eigen/Dense>

namespace hdgstokes {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_local_projector(const Eigen::MatrixXd& A_uu,
                                                                  const Eigen::MatrixXd& B_pu) {
  Eigen::LLT<Eigen::MatrixXd> allt(A_uu);
  if (allt.info() != Eigen::Success)
    throw std::runtime_error("build_local_projector: A_uu is not positive definite");
  Eigen::MatrixXd Y = allt.solve(B_pu.transpose());  // A^{-1} B^T
  Eigen::MatrixXd S = B_pu * Y;
  Eigen::LLT<Eigen::MatrixXd> sllt(S);
  if (sllt.info() != Eigen::Success)
    throw std::runtime_error("build_local_projector: B_pu is rank deficient");
  Eigen::MatrixXd Pi = Y * sllt.solve(B_pu);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(Pi.rows(), Pi.cols()) - Pi;
  return {std::move(Pi), std::move(P)};
}

Condensation condense_locals(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm) {
  Condensation cond;
  cond.elems.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalBlocks& blocks = gm.local[e];
    LocalCondensed& lc = cond.elems[e];
    lc.A_uu.compute(blocks.A_uu);
    if (lc.A_uu.info() != Eigen::Success)
      throw std::runtime_error("condense_locals: A_uu not positive definite (alpha too small?)");
    lc.B_pu = blocks.B_pu;
    Eigen::MatrixXd Y = lc.A_uu.solve(lc.B_pu.transpose());
    lc.S_pp.compute(lc.B_pu * Y);
    if (lc.S_pp.info() != Eigen::Success)
      throw std::runtime_error("condense_locals: rank-deficient element divergence block");
    lc.Pi = Y * lc.S_pp.solve(lc.B_pu);
    lc.P = Eigen::MatrixXd::Identity(lc.Pi.rows(), lc.Pi.cols()) - lc.Pi;
    lc.L_u = blocks.L_u;

    const auto& et = layout.elements[e];
    const int nus = static_cast<int>(et.u_local.size());
    std::vector<int> rows;
    for (int s = 0; s < nus; ++s) {
      for (int c = 0; c < 2; ++c) {
        const int dof = layout.ubar_dof(et.u_local[s], c);
        if (dof >= 0) {
          rows.push_back(2 * s + c);
          lc.ubar_dofs.push_back(dof);
        }
      }
    }
    lc.A_ubar_u.resize(rows.size(), blocks.A_ubar_u.cols());
    for (size_t r = 0; r < rows.size(); ++r) lc.A_ubar_u.row(r) = blocks.A_ubar_u.row(rows[r]);
    lc.B_pbar_u = blocks.B_pbar_u;
    lc.qbar_dofs.assign(et.q_local.begin(), et.q_local.end());
  }
  return cond;
}

namespace {

void scatter_dense(std::vector<Eigen::Triplet<double>>& trips, const Eigen::MatrixXd& block,
                   const std::vector<long>& dofs) {
  for (int i = 0; i < block.rows(); ++i)
    for (int j = 0; j < block.cols(); ++j)
      if (block(i, j) != 0.0) trips.emplace_back(dofs[i], dofs[j], block(i, j));
}

}  // namespace

CondensedSystem build_two_field(const Mesh& mesh, const DofLayout& layout,
                                const Condensation& cond, const GlobalMatrices& gm) {
  CondensedSystem sys;
  sys.kind = SystemKind::TwoField;
  sys.n_ubar = layout.n_ubar;
  sys.n_q = 0;
  sys.n_qbar = layout.n_qbar;
  const long dim = sys.dim();

  std::vector<Eigen::Triplet<double>> trips;
  sys.rhs = Eigen::VectorXd::Zero(dim);
  sys.rhs.head(sys.n_ubar) = gm.rhs_ubar;

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalCondensed& lc = cond.elems[e];
    // G = P A_uu^{-1}; symmetric in exact arithmetic, symmetrized so the
    // assembled system is symmetric by construction.
    Eigen::MatrixXd G = lc.P * lc.A_uu.solve(Eigen::MatrixXd::Identity(lc.P.rows(), lc.P.cols()));
    G = 0.5 * (G + G.transpose()).eval();

    const long nu = lc.A_ubar_u.rows();
    const long nq = lc.B_pbar_u.rows();
    Eigen::MatrixXd U(nu + nq, lc.P.cols());
    U.topRows(nu) = lc.A_ubar_u;
    U.bottomRows(nq) = lc.B_pbar_u;

    Eigen::MatrixXd C = -U * G * U.transpose();
    std::vector<long> dofs(nu + nq);
    for (long i = 0; i < nu; ++i) dofs[i] = lc.ubar_dofs[i];
    for (long i = 0; i < nq; ++i) dofs[nu + i] = sys.offset_pbar() + lc.qbar_dofs[i];
    scatter_dense(trips, C, dofs);

    Eigen::VectorXd r = U * (G * lc.L_u);
    for (long i = 0; i < nu + nq; ++i) sys.rhs(dofs[i]) -= r(i);
  }

  // The A_ubar_ubar part of Abar^d.
  for (int col = 0; col < gm.A_ubar_ubar.outerSize(); ++col)
    for (SparseMat::InnerIterator it(gm.A_ubar_ubar, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());

  sys.matrix.resize(dim, dim);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());

  sys.null_vector = Eigen::VectorXd::Zero(dim);
  sys.null_vector.tail(sys.n_qbar).setOnes();
  sys.null_vector.normalize();
  return sys;
}

CondensedSystem build_three_field(const Mesh& mesh, const DofLayout& layout,
                                  const Condensation& cond, const GlobalMatrices& gm) {
  CondensedSystem sys;
  sys.kind = SystemKind::ThreeField;
  sys.n_ubar = layout.n_ubar;
  sys.n_q = static_cast<int>(layout.n_q);
  sys.n_qbar = layout.n_qbar;
  const long dim = sys.dim();
  const int npq = layout.npq;

  std::vector<Eigen::Triplet<double>> trips;
  sys.rhs = Eigen::VectorXd::Zero(dim);
  sys.rhs.head(sys.n_ubar) = gm.rhs_ubar;

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalCondensed& lc = cond.elems[e];
    Eigen::MatrixXd G0 = lc.A_uu.solve(Eigen::MatrixXd::Identity(lc.P.rows(), lc.P.cols()));
    G0 = 0.5 * (G0 + G0.transpose()).eval();

    const long nu = lc.A_ubar_u.rows();
    const long np = lc.B_pu.rows();
    const long nq = lc.B_pbar_u.rows();
    Eigen::MatrixXd U(nu + np + nq, G0.cols());
    U.topRows(nu) = lc.A_ubar_u;
    U.middleRows(nu, np) = lc.B_pu;
    U.bottomRows(nq) = lc.B_pbar_u;

    Eigen::MatrixXd C = -U * G0 * U.transpose();
    std::vector<long> dofs(nu + np + nq);
    for (long i = 0; i < nu; ++i) dofs[i] = lc.ubar_dofs[i];
    for (long i = 0; i < np; ++i) dofs[nu + i] = sys.offset_p() + static_cast<long>(e) * npq + i;
    for (long i = 0; i < nq; ++i) dofs[nu + np + i] = sys.offset_pbar() + lc.qbar_dofs[i];
    scatter_dense(trips, C, dofs);

    Eigen::VectorXd r = U * (G0 * lc.L_u);
    for (size_t i = 0; i < dofs.size(); ++i) sys.rhs(dofs[i]) -= r(i);
  }

  for (int col = 0; col < gm.A_ubar_ubar.outerSize(); ++col)
    for (SparseMat::InnerIterator it(gm.A_ubar_ubar, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());

  sys.matrix.resize(dim, dim);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());

  // Constant (p, pbar) null mode; the element basis is not nodal, so the
  // constant's coefficients are computed per element.
  sys.null_vector = Eigen::VectorXd::Zero(dim);
  sys.null_vector.segment(sys.offset_p(), sys.n_q) = pressure_constant_coefficients(mesh, layout);
  sys.null_vector.tail(sys.n_qbar).setOnes();
  sys.null_vector.normalize();
  return sys;
}

ElementFields back_substitute(const CondensedSystem& system, const Eigen::VectorXd& solution,
                              const Mesh& mesh, const DofLayout& layout, const Condensation& cond) {
  if (solution.size() != system.dim())
    throw std::invalid_argument("back_substitute: solution size mismatch");
  const int npk = layout.npk;
  const int npq = layout.npq;
  ElementFields out;
  out.u = Eigen::VectorXd::Zero(layout.n_u);
  out.p = Eigen::VectorXd::Zero(layout.n_q);

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalCondensed& lc = cond.elems[e];
    Eigen::VectorXd r = lc.L_u;
    for (long i = 0; i < lc.A_ubar_u.rows(); ++i)
      r -= lc.A_ubar_u.row(i).transpose() * solution(lc.ubar_dofs[i]);
    for (long i = 0; i < lc.B_pbar_u.rows(); ++i)
      r -= lc.B_pbar_u.row(i).transpose() * solution(system.offset_pbar() + lc.qbar_dofs[i]);

    if (system.kind == SystemKind::TwoField) {
      Eigen::VectorXd z = lc.A_uu.solve(r);
      out.u.segment(static_cast<long>(e) * 2 * npk, 2 * npk) = lc.P * z;
      out.p.segment(static_cast<long>(e) * npq, npq) = lc.S_pp.solve(lc.B_pu * z);
    } else {
      Eigen::VectorXd p_loc = solution.segment(system.offset_p() + static_cast<long>(e) * npq, npq);
      r -= lc.B_pu.transpose() * p_loc;
      out.u.segment(static_cast<long>(e) * 2 * npk, 2 * npk) = lc.A_uu.solve(r);
      out.p.segment(static_cast<long>(e) * npq, npq) = p_loc;
    }
  }
  return out;
}

FullSystem build_full_system(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm) {
  FullSystem sys;
  sys.off_u = 0;
  sys.off_ubar = layout.n_u;
  sys.off_p = sys.off_ubar + layout.n_ubar;
  sys.off_pbar = sys.off_p + layout.n_q;
  const long dim = sys.off_pbar + layout.n_qbar;
  const int npk = layout.npk;
  const int npq = layout.npq;

  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalBlocks& blocks = gm.local[e];
    const auto& et = layout.elements[e];
    const long eu = static_cast<long>(e) * 2 * npk;
    const long ep = sys.off_p + static_cast<long>(e) * npq;

    for (int i = 0; i < 2 * npk; ++i)
      for (int j = 0; j < 2 * npk; ++j)
        if (blocks.A_uu(i, j) != 0.0) trips.emplace_back(eu + i, eu + j, blocks.A_uu(i, j));

    const int nus = static_cast<int>(et.u_local.size());
    for (int s = 0; s < nus; ++s) {
      for (int c = 0; c < 2; ++c) {
        const int dof = layout.ubar_dof(et.u_local[s], c);
        if (dof < 0) continue;
        const long gd = sys.off_ubar + dof;
        for (int j = 0; j < 2 * npk; ++j) {
          const double v = blocks.A_ubar_u(2 * s + c, j);
          if (v == 0.0) continue;
          trips.emplace_back(gd, eu + j, v);
          trips.emplace_back(eu + j, gd, v);
        }
      }
    }

    for (int i = 0; i < npq; ++i) {
      for (int j = 0; j < 2 * npk; ++j) {
        const double v = blocks.B_pu(i, j);
        if (v == 0.0) continue;
        trips.emplace_back(ep + i, eu + j, v);
        trips.emplace_back(eu + j, ep + i, v);
      }
    }

    for (size_t i = 0; i < et.q_local.size(); ++i) {
      const long gd = sys.off_pbar + et.q_local[i];
      for (int j = 0; j < 2 * npk; ++j) {
        const double v = blocks.B_pbar_u(static_cast<long>(i), j);
        if (v == 0.0) continue;
        trips.emplace_back(gd, eu + j, v);
        trips.emplace_back(eu + j, gd, v);
      }
    }
  }

  for (int col = 0; col < gm.A_ubar_ubar.outerSize(); ++col)
    for (SparseMat::InnerIterator it(gm.A_ubar_ubar, col); it; ++it)
      trips.emplace_back(sys.off_ubar + it.row(), sys.off_ubar + it.col(), it.value());

  sys.matrix.resize(dim, dim);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());

  sys.rhs = Eigen::VectorXd::Zero(dim);
  sys.rhs.head(layout.n_u) = gm.rhs_u;
  sys.rhs.segment(sys.off_ubar, layout.n_ubar) = gm.rhs_ubar;

  sys.null_vector = Eigen::VectorXd::Zero(dim);
  sys.null_vector.segment(sys.off_p, layout.n_q) = pressure_constant_coefficients(mesh, layout);
  sys.null_vector.tail(layout.n_qbar).setOnes();
  sys.null_vector.normalize();
  return sys;
}

}  // namespace hdgstokes

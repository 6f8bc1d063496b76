#include "hdgstokes/spectral.hpp"

#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "hdgstokes/quadrature.hpp"

namespace hdgstokes {

Eigen::MatrixXd build_schur_sbar(const Mesh& mesh, const DofLayout& layout,
                                 const Condensation& cond, const CondensedSystem& two_field) {
  if (two_field.kind != SystemKind::TwoField)
    throw std::invalid_argument("build_schur_sbar: two-field system required");
  const int nq = layout.n_qbar;
  if (nq > kMaxDenseTracePressure)
    throw std::runtime_error(
        "build_schur_sbar: trace pressure space too large for dense work; use a coarser mesh");

  Eigen::MatrixXd sbar = Eigen::MatrixXd::Zero(nq, nq);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(layout.n_ubar, nq);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalCondensed& lc = cond.elems[e];
    Eigen::MatrixXd V = lc.P.transpose() * lc.B_pbar_u.transpose();  // P^T B^T
    Eigen::MatrixXd W = lc.A_uu.solve(V);
    Eigen::MatrixXd t1 = V.transpose() * W;
    for (long i = 0; i < t1.rows(); ++i)
      for (long j = 0; j < t1.cols(); ++j)
        sbar(lc.qbar_dofs[i], lc.qbar_dofs[j]) += t1(i, j);
    Eigen::MatrixXd kb = lc.A_ubar_u * W;
    for (long i = 0; i < kb.rows(); ++i)
      for (long j = 0; j < kb.cols(); ++j) K(lc.ubar_dofs[i], lc.qbar_dofs[j]) += kb(i, j);
  }

  // Second term pulls in the inverse of the global velocity block Abar^d.
  SparseMat ad(layout.n_ubar, layout.n_ubar);
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < two_field.matrix.outerSize(); ++col)
      for (SparseMat::InnerIterator it(two_field.matrix, col); it; ++it)
        if (it.row() < layout.n_ubar && it.col() < layout.n_ubar)
          trips.emplace_back(it.row(), it.col(), it.value());
    ad.setFromTriplets(trips.begin(), trips.end());
  }
  Eigen::SimplicialLDLT<SparseMat> ldlt(ad);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("build_schur_sbar: Abar^d factorization failed");
  Eigen::MatrixXd Z = ldlt.solve(K);
  sbar += K.transpose() * Z;
  return 0.5 * (sbar + sbar.transpose());
}

Eigen::MatrixXd complement_basis(const Eigen::VectorXd& w) {
  const Eigen::Index n = w.size();
  Eigen::MatrixXd col = w.normalized();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(col);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - 1);
}

SpectrumReport generalized_extremes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::VectorXd* deflate, const std::string& name) {
  Eigen::MatrixXd Ar = A, Br = B;
  if (deflate != nullptr) {
    Eigen::MatrixXd Z = complement_basis(*deflate);
    Ar = Z.transpose() * A * Z;
    Br = Z.transpose() * B * Z;
  }
  Ar = 0.5 * (Ar + Ar.transpose()).eval();
  Br = 0.5 * (Br + Br.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(Br);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("generalized_extremes: second matrix not SPD on the subspace");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ar, Br);
  if (ges.info() != Eigen::Success) throw std::runtime_error("generalized_extremes: solver failed");

  SpectrumReport report;
  report.pair_name = name;
  report.dimension = static_cast<int>(Ar.rows());
  report.lambda_min = ges.eigenvalues().minCoeff();
  report.lambda_max = ges.eigenvalues().maxCoeff();
  if (report.dimension <= 500) report.spectrum = ges.eigenvalues();
  return report;
}

Eigen::VectorXd preconditioned_spectrum(const CondensedSystem& system,
                                        const BlockPreconditioner& precon) {
  const long n = system.dim();
  if (n > 4000) throw std::runtime_error("preconditioned_spectrum: system too large for dense work");
  Eigen::MatrixXd Z = complement_basis(system.null_vector);
  Eigen::MatrixXd AZ = system.matrix * Z;
  Eigen::MatrixXd Ar = Z.transpose() * AZ;
  Ar = 0.5 * (Ar + Ar.transpose()).eval();

  // Restriction of the applied (inverse) preconditioner.
  Eigen::MatrixXd PinvZ(n, n - 1);
  Eigen::VectorXd col(n);
  for (long j = 0; j < n - 1; ++j) {
    precon.apply(Z.col(j), col);
    PinvZ.col(j) = col;
  }
  Eigen::MatrixXd Minv = Z.transpose() * PinvZ;
  Minv = 0.5 * (Minv + Minv.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(Minv);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("preconditioned_spectrum: preconditioner restriction not SPD");
  Eigen::MatrixXd M = llt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
  M = 0.5 * (M + M.transpose()).eval();

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ar, M);
  if (ges.info() != Eigen::Success) throw std::runtime_error("preconditioned_spectrum: solver failed");
  return ges.eigenvalues();
}

namespace {

struct FacetEval {
  SegmentRule line;
  Eigen::MatrixXd TU;  // trace velocity basis at line points
  Eigen::MatrixXd TQ;  // trace pressure basis
  explicit FacetEval(const DofLayout& layout)
      : line(segment_rule(2 * layout.k() + 2)),
        TU(layout.u_facet_basis.values(line.points)),
        TQ(layout.q_facet_basis.values(line.points)) {}
};

double facet_length(const Mesh& mesh, int f) {
  const Facet& fc = mesh.facet(f);
  return (mesh.vertex(fc.vertices[1]) - mesh.vertex(fc.vertices[0])).norm();
}

}  // namespace

double discrete_norm(const Mesh& mesh, const DofLayout& layout, double alpha, NormKind kind,
                     const Eigen::VectorXd& element_part, const Eigen::VectorXd& trace_part) {
  const int k = layout.k();
  const FacetEval fe(layout);
  const int nqf = static_cast<int>(fe.line.points.size());

  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("discrete_norm: ") + what);
  };

  double acc = 0.0;
  switch (kind) {
    case NormKind::FacetL2:
    case NormKind::FacetH1: {
      check(trace_part.size() == layout.n_ubar, "trace velocity size mismatch");
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& et = layout.elements[e];
        const double hk = mesh.h(e);
        double mass = 0.0, perimeter = 0.0;
        Vec2 mean_int = Vec2::Zero();
        for (int lf = 0; lf < 3; ++lf) {
          const int f = mesh.element_facets(e)[lf];
          const double len = facet_length(mesh, f);
          perimeter += len;
          for (int q = 0; q < nqf; ++q) {
            Vec2 v = Vec2::Zero();
            for (int i = 0; i <= k; ++i) {
              const int node = et.u_local[et.u_facet_slot[lf][i]];
              for (int c = 0; c < 2; ++c) {
                const int dof = layout.ubar_dof(node, c);
                if (dof >= 0) v(c) += trace_part(dof) * fe.TU(q, i);
              }
            }
            mass += fe.line.weights(q) * len * v.squaredNorm();
            mean_int += fe.line.weights(q) * len * v;
          }
        }
        if (kind == NormKind::FacetL2) {
          acc += hk * mass;
        } else {
          const Vec2 mean = mean_int / perimeter;
          acc += (mass - perimeter * mean.squaredNorm()) / hk;
        }
      }
      break;
    }
    case NormKind::VelocityStability: {
      check(element_part.size() == layout.n_u, "element velocity size mismatch");
      check(trace_part.size() == layout.n_ubar, "trace velocity size mismatch");
      SimplexBasis basis(k);
      TriangleRule vol = triangle_rule(2 * k);
      auto grads = basis.gradients(vol.points);
      SegmentRule line = segment_rule(2 * k + 2);
      Eigen::MatrixXd TU = layout.u_facet_basis.values(line.points);
      const int npk = layout.npk;

      for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& et = layout.elements[e];
        auto verts = mesh.element_vertices(e);
        Eigen::Matrix2d J;
        J.col(0) = verts[1] - verts[0];
        J.col(1) = verts[2] - verts[0];
        const double detJ = J.determinant();
        const double scale = std::sqrt(detJ);
        const Eigen::Matrix2d JinvT = J.inverse().transpose();

        for (int q = 0; q < vol.weights.size(); ++q) {
          Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();  // grad(c, d) = d u_c / d x_d
          for (int c = 0; c < 2; ++c) {
            for (int j = 0; j < npk; ++j) {
              Eigen::Vector2d gp =
                  JinvT * Eigen::Vector2d(grads[0](q, j), grads[1](q, j)) / scale;
              grad.row(c) += element_part(static_cast<long>(e) * 2 * npk + c * npk + j) *
                             gp.transpose();
            }
          }
          acc += vol.weights(q) * detJ * grad.squaredNorm();
        }

        for (int lf = 0; lf < 3; ++lf) {
          const int f = mesh.element_facets(e)[lf];
          const int dir = mesh.facet_agrees_with_element(f, e) ? 1 : 0;
          const double len = facet_length(mesh, f);
          // Element basis along the facet.
          Eigen::Matrix<double, Eigen::Dynamic, 2> pts(line.points.size(), 2);
          const Eigen::Matrix<double, 3, 2> ref = (Eigen::Matrix<double, 3, 2>() <<
              0, 0, 1, 0, 0, 1).finished();
          Eigen::Vector2d r0 = ref.row((lf + 1) % 3), r1 = ref.row((lf + 2) % 3);
          if (dir == 0) std::swap(r0, r1);
          for (int q = 0; q < line.points.size(); ++q)
            pts.row(q) = ((1.0 - line.points(q)) * r0 + line.points(q) * r1).transpose();
          Eigen::MatrixXd Ve = basis.values(pts) / scale;

          for (int q = 0; q < line.points.size(); ++q) {
            Vec2 diff = Vec2::Zero();
            for (int c = 0; c < 2; ++c) {
              for (int j = 0; j < npk; ++j)
                diff(c) -= element_part(static_cast<long>(e) * 2 * npk + c * npk + j) * Ve(q, j);
              for (int i = 0; i <= k; ++i) {
                const int node = et.u_local[et.u_facet_slot[lf][i]];
                const int dof = layout.ubar_dof(node, c);
                if (dof >= 0) diff(c) += trace_part(dof) * TU(q, i);
              }
            }
            acc += alpha / mesh.h(e) * line.weights(q) * len * diff.squaredNorm();
          }
        }
      }
      break;
    }
    case NormKind::TracePressure:
    case NormKind::FullPressure: {
      check(trace_part.size() == layout.n_qbar, "trace pressure size mismatch");
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& et = layout.elements[e];
        const double hk = mesh.h(e);
        for (int lf = 0; lf < 3; ++lf) {
          const int f = mesh.element_facets(e)[lf];
          const double len = facet_length(mesh, f);
          for (int q = 0; q < nqf; ++q) {
            double v = 0.0;
            for (int i = 0; i <= k; ++i)
              v += trace_part(et.q_local[et.q_facet_slot[lf][i]]) * fe.TQ(q, i);
            acc += hk * fe.line.weights(q) * len * v * v;
          }
        }
      }
      if (kind == NormKind::FullPressure) {
        check(element_part.size() == layout.n_q, "element pressure size mismatch");
        // Orthonormal element basis: ||q_h||^2 is the coefficient norm.
        acc += element_part.squaredNorm();
      }
      break;
    }
  }
  return std::sqrt(acc);
}

Eigen::MatrixXd facet_l2_matrix(const Mesh& mesh, const DofLayout& layout) {
  const int k = layout.k();
  FacetEval fe(layout);
  Eigen::MatrixXd ref = fe.TU.transpose() * fe.line.weights.asDiagonal() * fe.TU;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(layout.n_ubar, layout.n_ubar);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& et = layout.elements[e];
    const double hk = mesh.h(e);
    for (int lf = 0; lf < 3; ++lf) {
      const double len = facet_length(mesh, mesh.element_facets(e)[lf]);
      for (int i = 0; i <= k; ++i) {
        for (int j = 0; j <= k; ++j) {
          const int ni = et.u_local[et.u_facet_slot[lf][i]];
          const int nj = et.u_local[et.u_facet_slot[lf][j]];
          for (int c = 0; c < 2; ++c) {
            const int di = layout.ubar_dof(ni, c), dj = layout.ubar_dof(nj, c);
            if (di >= 0 && dj >= 0) out(di, dj) += hk * len * ref(i, j);
          }
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd facet_h1_matrix(const Mesh& mesh, const DofLayout& layout) {
  return Eigen::MatrixXd(build_trace_h1_matrix(mesh, layout));
}

namespace {

Eigen::MatrixXd build_velocity_dense(const Mesh& mesh, const DofLayout& layout,
                                     const GlobalMatrices& gm, const Condensation* cond) {
  const long n = layout.n_u + layout.n_ubar;
  const int npk = layout.npk;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalBlocks& blocks = gm.local[e];
    const auto& et = layout.elements[e];
    const long eu = static_cast<long>(e) * 2 * npk;
    out.block(eu, eu, 2 * npk, 2 * npk) += blocks.A_uu;

    // Free trace rows, optionally right-multiplied by the projector.
    std::vector<int> rows, dofs;
    for (size_t s = 0; s < et.u_local.size(); ++s) {
      for (int c = 0; c < 2; ++c) {
        const int dof = layout.ubar_dof(et.u_local[s], c);
        if (dof >= 0) {
          rows.push_back(2 * static_cast<int>(s) + c);
          dofs.push_back(dof);
        }
      }
    }
    Eigen::MatrixXd coupling(rows.size(), 2 * npk);
    for (size_t r = 0; r < rows.size(); ++r) coupling.row(r) = blocks.A_ubar_u.row(rows[r]);
    if (cond != nullptr) coupling = coupling * cond->elems[e].P;
    for (size_t r = 0; r < rows.size(); ++r) {
      out.row(layout.n_u + dofs[r]).segment(eu, 2 * npk) += coupling.row(r);
      out.col(layout.n_u + dofs[r]).segment(eu, 2 * npk) += coupling.row(r).transpose();
    }
  }
  for (int col = 0; col < gm.A_ubar_ubar.outerSize(); ++col)
    for (SparseMat::InnerIterator it(gm.A_ubar_ubar, col); it; ++it)
      out(layout.n_u + it.row(), layout.n_u + it.col()) += it.value();
  return out;
}

}  // namespace

Eigen::MatrixXd build_a_dense(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm) {
  return build_velocity_dense(mesh, layout, gm, nullptr);
}

Eigen::MatrixXd build_ap_dense(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm,
                               const Condensation& cond) {
  return build_velocity_dense(mesh, layout, gm, &cond);
}

}  // namespace hdgstokes

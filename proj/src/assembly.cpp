#include "hdgstokes/assembly.hpp"

#include <stdexcept>

#include <Eigen/Dense>

#include "hdgstokes/quadrature.hpp"

namespace hdgstokes {

double default_alpha(const SpaceConfig& config) {
  const double k2 = static_cast<double>(config.k) * config.k;
  return config.variant == Variant::HDG ? 6.0 * k2 : 4.0 * k2;
}

AssemblyConfig make_assembly_config(const SpaceConfig& config, double gamma) {
  return AssemblyConfig{default_alpha(config), gamma};
}

namespace {

struct ElemGeom {
  Vec2 origin;
  Eigen::Matrix2d J, JinvT;
  double detJ = 0.0;
  double scale = 0.0;  ///< sqrt(detJ); the element basis carries a 1/scale factor
  double h = 0.0;
};

ElemGeom element_geometry(const Mesh& mesh, int e) {
  auto v = mesh.element_vertices(e);
  ElemGeom g;
  g.origin = v[0];
  g.J.col(0) = v[1] - v[0];
  g.J.col(1) = v[2] - v[0];
  g.detJ = g.J.determinant();
  g.JinvT = g.J.inverse().transpose();
  g.scale = std::sqrt(g.detJ);
  g.h = mesh.h(e);
  return g;
}

const Eigen::Matrix<double, 3, 2> kRefVerts = (Eigen::Matrix<double, 3, 2>() <<
    0, 0,
    1, 0,
    0, 1).finished();

/// Reference tables shared by all elements of one assembly pass.
struct Tables {
  const Mesh& mesh;
  const DofLayout& layout;
  AssemblyConfig cfg;
  SimplexBasis basis_u;
  SimplexBasis basis_p;
  TriangleRule vol;
  SegmentRule line;

  Eigen::MatrixXd V, Gx, Gy, Vp;  // element bases at volume points
  Eigen::MatrixXd TU, TQ;         // trace bases at facet quadrature points
  // Element basis at facet quadrature points, indexed by local facet and by
  // whether the canonical facet direction agrees with the element's
  // counter-clockwise order (dir = 1) or not (dir = 0).
  Eigen::MatrixXd Vf[3][2], Gxf[3][2], Gyf[3][2];

  Tables(const Mesh& m, const DofLayout& l, const AssemblyConfig& c)
      : mesh(m), layout(l), cfg(c), basis_u(l.k()), basis_p(l.k() - 1),
        vol(triangle_rule(2 * l.k() + 2)), line(segment_rule(2 * l.k() + 1)) {
    if (!(cfg.alpha > 0)) throw std::invalid_argument("assemble: alpha must be positive");
    V = basis_u.values(vol.points);
    auto g = basis_u.gradients(vol.points);
    Gx = g[0];
    Gy = g[1];
    Vp = basis_p.values(vol.points);
    TU = layout.u_facet_basis.values(line.points);
    TQ = layout.q_facet_basis.values(line.points);

    const int nq = static_cast<int>(line.points.size());
    for (int lf = 0; lf < 3; ++lf) {
      for (int dir = 0; dir < 2; ++dir) {
        Eigen::Vector2d r0 = kRefVerts.row((lf + 1) % 3);
        Eigen::Vector2d r1 = kRefVerts.row((lf + 2) % 3);
        if (dir == 0) std::swap(r0, r1);
        Eigen::Matrix<double, Eigen::Dynamic, 2> pts(nq, 2);
        for (int q = 0; q < nq; ++q) {
          double t = line.points(q);
          pts.row(q) = ((1.0 - t) * r0 + t * r1).transpose();
        }
        Vf[lf][dir] = basis_u.values(pts);
        auto gf = basis_u.gradients(pts);
        Gxf[lf][dir] = gf[0];
        Gyf[lf][dir] = gf[1];
      }
    }
  }

  LocalBlocks element(int e, const VectorField& body_force) const;
};

LocalBlocks Tables::element(int e, const VectorField& body_force) const {
  const int npk = layout.npk;
  const int npq = layout.npq;
  const auto& et = layout.elements[e];
  const int nus = static_cast<int>(et.u_local.size());
  const int nqs = static_cast<int>(et.q_local.size());
  const ElemGeom geo = element_geometry(mesh, e);
  const int nqv = static_cast<int>(vol.weights.size());
  const int nqf = static_cast<int>(line.weights.size());

  LocalBlocks out;
  out.A_uu = Eigen::MatrixXd::Zero(2 * npk, 2 * npk);
  out.A_ubar_u = Eigen::MatrixXd::Zero(2 * nus, 2 * npk);
  out.A_ubar_ubar = Eigen::MatrixXd::Zero(2 * nus, 2 * nus);
  out.B_pu = Eigen::MatrixXd::Zero(npq, 2 * npk);
  out.B_pbar_u = Eigen::MatrixXd::Zero(nqs, 2 * npk);
  out.L_u = Eigen::VectorXd::Zero(2 * npk);

  // Physical gradients; detJ/scale^2 = 1, so volume products of two basis
  // factors need no extra Jacobian weight.
  Eigen::MatrixXd Gxp(nqv, npk), Gyp(nqv, npk);
  for (int q = 0; q < nqv; ++q) {
    for (int j = 0; j < npk; ++j) {
      Eigen::Vector2d gp = geo.JinvT * Eigen::Vector2d(Gx(q, j), Gy(q, j)) / geo.scale;
      Gxp(q, j) = gp(0);
      Gyp(q, j) = gp(1);
    }
  }

  // (grad w, grad v)_K, per velocity component.
  Eigen::MatrixXd stiff = Gxp.transpose() * vol.weights.asDiagonal() * Gxp +
                          Gyp.transpose() * vol.weights.asDiagonal() * Gyp;
  stiff *= geo.detJ;

  // b_1: -(q, div v)_K.
  Eigen::MatrixXd Vpp = Vp / geo.scale;
  for (int c = 0; c < 2; ++c) {
    const Eigen::MatrixXd& Gc = (c == 0) ? Gxp : Gyp;
    out.B_pu.block(0, c * npk, npq, npk) =
        -geo.detJ * (Vpp.transpose() * vol.weights.asDiagonal() * Gc);
  }

  // Element pressure mass (identity by basis construction, assembled anyway).
  out.M = geo.detJ * (Vpp.transpose() * vol.weights.asDiagonal() * Vpp);

  // Load (v, f)_K.
  if (body_force) {
    for (int q = 0; q < nqv; ++q) {
      Vec2 x = geo.origin + geo.J * Eigen::Vector2d(vol.points(q, 0), vol.points(q, 1));
      Vec2 f = body_force(x);
      const double w = vol.weights(q) * geo.detJ / geo.scale;
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < npk; ++j) out.L_u(c * npk + j) += w * f(c) * V(q, j);
    }
  }

  Eigen::MatrixXd auu_s = stiff;  // scalar part of A_uu, facet terms added below
  const double ah = cfg.alpha / geo.h;

  for (int lf = 0; lf < 3; ++lf) {
    const int f = mesh.element_facets(e)[lf];
    const int dir = mesh.facet_agrees_with_element(f, e) ? 1 : 0;
    const double len = (mesh.vertex(mesh.facet(f).vertices[1]) -
                        mesh.vertex(mesh.facet(f).vertices[0])).norm();
    const Vec2 n = mesh.outward_normal(e, lf);

    // Element basis and normal derivative at the facet points.
    Eigen::MatrixXd Ve = Vf[lf][dir] / geo.scale;
    Eigen::MatrixXd Dn(nqf, npk);
    for (int q = 0; q < nqf; ++q) {
      for (int j = 0; j < npk; ++j) {
        Eigen::Vector2d gp =
            geo.JinvT * Eigen::Vector2d(Gxf[lf][dir](q, j), Gyf[lf][dir](q, j)) / geo.scale;
        Dn(q, j) = n.dot(gp);
      }
    }

    Eigen::VectorXd w = line.weights * len;
    // Scalar facet contributions to a_h.
    Eigen::MatrixXd mass_vv = Ve.transpose() * w.asDiagonal() * Ve;
    Eigen::MatrixXd vdn = Ve.transpose() * w.asDiagonal() * Dn;  // <w, dn v> with rows=w cols=v
    auu_s += ah * mass_vv - vdn - vdn.transpose();

    Eigen::MatrixXd tu_v = TU.transpose() * w.asDiagonal() * Ve;   // <trace_i, elem_j>
    Eigen::MatrixXd tu_dn = TU.transpose() * w.asDiagonal() * Dn;  // <trace_i, dn elem_j>
    Eigen::MatrixXd tu_tu = TU.transpose() * w.asDiagonal() * TU;
    Eigen::MatrixXd tq_v = TQ.transpose() * w.asDiagonal() * Ve;

    const int kk = layout.k();
    for (int i = 0; i <= kk; ++i) {
      const int si = et.u_facet_slot[lf][i];
      const int sqi = et.q_facet_slot[lf][i];
      for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < npk; ++j) {
          out.A_ubar_u(2 * si + c, c * npk + j) += -ah * tu_v(i, j) + tu_dn(i, j);
          out.B_pbar_u(sqi, c * npk + j) += n(c) * tq_v(i, j);
        }
      }
      for (int i2 = 0; i2 <= kk; ++i2) {
        const int si2 = et.u_facet_slot[lf][i2];
        for (int c = 0; c < 2; ++c) out.A_ubar_ubar(2 * si + c, 2 * si2 + c) += ah * tu_tu(i, i2);
      }
    }
  }

  for (int c = 0; c < 2; ++c) out.A_uu.block(c * npk, c * npk, npk, npk) = auu_s;
  return out;
}

}  // namespace

LocalABlocks assemble_local_a(const Mesh& mesh, const DofLayout& layout,
                              const AssemblyConfig& config, int element) {
  Tables tab(mesh, layout, config);
  LocalBlocks b = tab.element(element, nullptr);
  return LocalABlocks{std::move(b.A_uu), std::move(b.A_ubar_u), std::move(b.A_ubar_ubar)};
}

LocalBBlocks assemble_local_b(const Mesh& mesh, const DofLayout& layout, int element) {
  AssemblyConfig cfg{1.0, 0.0};  // alpha does not enter the b blocks
  Tables tab(mesh, layout, cfg);
  LocalBlocks b = tab.element(element, nullptr);
  return LocalBBlocks{std::move(b.B_pu), std::move(b.B_pbar_u)};
}

Eigen::MatrixXd assemble_graddiv(const LocalBlocks& blocks, double gamma) {
  if (gamma < 0) throw std::invalid_argument("assemble_graddiv: gamma must be nonnegative");
  if (gamma == 0.0) return Eigen::MatrixXd::Zero(blocks.B_pu.cols(), blocks.B_pu.cols());
  Eigen::MatrixXd Minv_B = blocks.M.llt().solve(blocks.B_pu);
  return gamma * blocks.B_pu.transpose() * Minv_B;
}

namespace {

SparseMat assemble_mbar(const Mesh& mesh, const DofLayout& layout) {
  SegmentRule line = segment_rule(2 * layout.k() + 1);
  Eigen::MatrixXd TQ = layout.q_facet_basis.values(line.points);
  Eigen::MatrixXd ref_mass = TQ.transpose() * line.weights.asDiagonal() * TQ;
  const int kk = layout.k();

  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double hk = mesh.h(e);
    for (int lf = 0; lf < 3; ++lf) {
      const int f = mesh.element_facets(e)[lf];
      const double len = (mesh.vertex(mesh.facet(f).vertices[1]) -
                          mesh.vertex(mesh.facet(f).vertices[0])).norm();
      for (int i = 0; i <= kk; ++i) {
        for (int j = 0; j <= kk; ++j) {
          // Global node ids via the element gather maps.
          const auto& et = layout.elements[e];
          const int gi = et.q_local[et.q_facet_slot[lf][i]];
          const int gj = et.q_local[et.q_facet_slot[lf][j]];
          trips.emplace_back(gi, gj, hk * len * ref_mass(i, j));
        }
      }
    }
  }
  SparseMat mbar(layout.n_qbar, layout.n_qbar);
  mbar.setFromTriplets(trips.begin(), trips.end());
  return mbar;
}

}  // namespace

MassMatrices assemble_mass(const Mesh& mesh, const DofLayout& layout) {
  AssemblyConfig cfg{1.0, 0.0};
  Tables tab(mesh, layout, cfg);
  MassMatrices out;
  out.M.reserve(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) out.M.push_back(tab.element(e, nullptr).M);
  out.Mbar = assemble_mbar(mesh, layout);
  return out;
}

GlobalMatrices assemble(const Mesh& mesh, const DofLayout& layout, const AssemblyConfig& config,
                        const VectorField& body_force, const VectorField& boundary_velocity) {
  Tables tab(mesh, layout, config);
  GlobalMatrices gm;
  gm.config = config;
  gm.local.reserve(mesh.num_elements());
  gm.rhs_u = Eigen::VectorXd::Zero(layout.n_u);
  gm.rhs_ubar = Eigen::VectorXd::Zero(layout.n_ubar);
  gm.g_nodes = Eigen::VectorXd::Zero(2 * layout.u_nodes.size());

  // Boundary values at constrained trace nodes (nodal interpolation).
  if (boundary_velocity) {
    for (size_t n = 0; n < layout.u_nodes.size(); ++n) {
      if (layout.u_node_free[n] >= 0) continue;
      Vec2 g = boundary_velocity(layout.u_nodes[n].position);
      gm.g_nodes(2 * n + 0) = g(0);
      gm.g_nodes(2 * n + 1) = g(1);
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  const int npk = layout.npk;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    LocalBlocks blocks = tab.element(e, body_force);
    const auto& et = layout.elements[e];
    const int nus = static_cast<int>(et.u_local.size());

    // Local trace dof -> global free dof (or -1) and boundary value.
    std::vector<int> gdof(2 * nus);
    Eigen::VectorXd gval = Eigen::VectorXd::Zero(2 * nus);
    for (int s = 0; s < nus; ++s) {
      const int node = et.u_local[s];
      for (int c = 0; c < 2; ++c) {
        gdof[2 * s + c] = layout.ubar_dof(node, c);
        gval(2 * s + c) = gm.g_nodes(2 * node + c);
      }
    }

    // Dirichlet lift: constrained columns move to the right-hand side.
    blocks.L_u -= blocks.A_ubar_u.transpose() * gval;
    Eigen::VectorXd lift_ubar = blocks.A_ubar_ubar * gval;
    for (int d = 0; d < 2 * nus; ++d) {
      if (gdof[d] < 0) continue;
      gm.rhs_ubar(gdof[d]) -= lift_ubar(d);
      for (int d2 = 0; d2 < 2 * nus; ++d2) {
        if (gdof[d2] < 0) continue;
        const double v = blocks.A_ubar_ubar(d, d2);
        if (v != 0.0) trips.emplace_back(gdof[d], gdof[d2], v);
      }
    }

    gm.rhs_u.segment(static_cast<long>(e) * 2 * npk, 2 * npk) = blocks.L_u;
    gm.local.push_back(std::move(blocks));
  }

  gm.A_ubar_ubar.resize(layout.n_ubar, layout.n_ubar);
  gm.A_ubar_ubar.setFromTriplets(trips.begin(), trips.end());
  gm.Mbar = assemble_mbar(mesh, layout);
  return gm;
}

Eigen::VectorXd project_velocity(const Mesh& mesh, const DofLayout& layout, const VectorField& u) {
  SimplexBasis basis(layout.k());
  TriangleRule vol = triangle_rule(2 * layout.k() + 4);
  Eigen::MatrixXd V = basis.values(vol.points);
  const int npk = layout.npk;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_u);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElemGeom geo = element_geometry(mesh, e);
    // Orthonormal basis: projection coefficients are plain inner products.
    for (int q = 0; q < vol.weights.size(); ++q) {
      Vec2 x = geo.origin + geo.J * Eigen::Vector2d(vol.points(q, 0), vol.points(q, 1));
      Vec2 f = u(x);
      const double w = vol.weights(q) * geo.detJ / geo.scale;
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < npk; ++j)
          out(static_cast<long>(e) * 2 * npk + c * npk + j) += w * f(c) * V(q, j);
    }
  }
  return out;
}

Eigen::VectorXd project_pressure(const Mesh& mesh, const DofLayout& layout, const ScalarField& p) {
  SimplexBasis basis(layout.k() - 1);
  TriangleRule vol = triangle_rule(2 * layout.k() + 4);
  Eigen::MatrixXd V = basis.values(vol.points);
  const int npq = layout.npq;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_q);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElemGeom geo = element_geometry(mesh, e);
    for (int q = 0; q < vol.weights.size(); ++q) {
      Vec2 x = geo.origin + geo.J * Eigen::Vector2d(vol.points(q, 0), vol.points(q, 1));
      const double w = vol.weights(q) * geo.detJ / geo.scale;
      for (int j = 0; j < npq; ++j) out(static_cast<long>(e) * npq + j) += w * p(x) * V(q, j);
    }
  }
  return out;
}

Eigen::VectorXd pressure_constant_coefficients(const Mesh& mesh, const DofLayout& layout) {
  return project_pressure(mesh, layout, [](const Vec2&) { return 1.0; });
}

double velocity_l2_error(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u,
                         const VectorField& exact) {
  SimplexBasis basis(layout.k());
  TriangleRule vol = triangle_rule(2 * layout.k() + 4);
  Eigen::MatrixXd V = basis.values(vol.points);
  const int npk = layout.npk;
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElemGeom geo = element_geometry(mesh, e);
    for (int q = 0; q < vol.weights.size(); ++q) {
      Vec2 x = geo.origin + geo.J * Eigen::Vector2d(vol.points(q, 0), vol.points(q, 1));
      Vec2 ref = exact ? exact(x) : Vec2::Zero();
      Vec2 val = Vec2::Zero();
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < npk; ++j)
          val(c) += u(static_cast<long>(e) * 2 * npk + c * npk + j) * V(q, j) / geo.scale;
      acc += vol.weights(q) * geo.detJ * (val - ref).squaredNorm();
    }
  }
  return std::sqrt(acc);
}

double velocity_l2_norm(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u) {
  return velocity_l2_error(mesh, layout, u, nullptr);
}

double pressure_l2_error(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& p,
                         const ScalarField& exact) {
  SimplexBasis basis(layout.k() - 1);
  TriangleRule vol = triangle_rule(2 * layout.k() + 4);
  Eigen::MatrixXd V = basis.values(vol.points);
  const int npq = layout.npq;
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElemGeom geo = element_geometry(mesh, e);
    for (int q = 0; q < vol.weights.size(); ++q) {
      Vec2 x = geo.origin + geo.J * Eigen::Vector2d(vol.points(q, 0), vol.points(q, 1));
      double ref = exact ? exact(x) : 0.0;
      double val = 0.0;
      for (int j = 0; j < npq; ++j)
        val += p(static_cast<long>(e) * npq + j) * V(q, j) / geo.scale;
      acc += vol.weights(q) * geo.detJ * (val - ref) * (val - ref);
    }
  }
  return std::sqrt(acc);
}

double divergence_norm(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u) {
  SimplexBasis basis(layout.k());
  TriangleRule vol = triangle_rule(2 * layout.k());
  auto g = basis.gradients(vol.points);
  const int npk = layout.npk;
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElemGeom geo = element_geometry(mesh, e);
    for (int q = 0; q < vol.weights.size(); ++q) {
      double div = 0.0;
      for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < npk; ++j) {
          Eigen::Vector2d gp = geo.JinvT * Eigen::Vector2d(g[0](q, j), g[1](q, j)) / geo.scale;
          div += u(static_cast<long>(e) * 2 * npk + c * npk + j) * gp(c);
        }
      }
      acc += vol.weights(q) * geo.detJ * div * div;
    }
  }
  return std::sqrt(acc);
}

Eigen::MatrixXd sample_fields(const Mesh& mesh, const DofLayout& layout, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& p) {
  SimplexBasis basis(layout.k());
  SimplexBasis basis_p(layout.k() - 1);
  TriangleRule vol = triangle_rule(2 * layout.k());
  Eigen::MatrixXd V = basis.values(vol.points), Vp = basis_p.values(vol.points);
  const int npk = layout.npk, npq = layout.npq;
  const int nq = static_cast<int>(vol.weights.size());
  Eigen::MatrixXd out(static_cast<long>(mesh.num_elements()) * nq, 5);
  long row = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElemGeom geo = element_geometry(mesh, e);
    for (int q = 0; q < nq; ++q, ++row) {
      Vec2 x = geo.origin + geo.J * Eigen::Vector2d(vol.points(q, 0), vol.points(q, 1));
      Vec2 val = Vec2::Zero();
      double pv = 0.0;
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < npk; ++j)
          val(c) += u(static_cast<long>(e) * 2 * npk + c * npk + j) * V(q, j) / geo.scale;
      for (int j = 0; j < npq; ++j)
        pv += p(static_cast<long>(e) * npq + j) * Vp(q, j) / geo.scale;
      out.row(row) << x(0), x(1), val(0), val(1), pv;
    }
  }
  return out;
}

}  // namespace hdgstokes

#include "hdgstokes/fespace.hpp"

#include <algorithm>
#include <stdexcept>

#include "hdgstokes/quadrature.hpp"

namespace hdgstokes {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::HDG: return "HDG";
    case Variant::EDG: return "EDG";
    case Variant::EDG_HDG: return "EDG-HDG";
  }
  return "?";
}

namespace {

Vec2 facet_point(const Mesh& mesh, int f, double t) {
  const Facet& fc = mesh.facet(f);
  return (1.0 - t) * mesh.vertex(fc.vertices[0]) + t * mesh.vertex(fc.vertices[1]);
}

// Nodes of a discontinuous per-facet space: k+1 Gauss-Legendre nodes per facet.
void build_discontinuous_nodes(const Mesh& mesh, int k, std::vector<TraceNode>& nodes) {
  Eigen::VectorXd gl = gauss_legendre_nodes(k + 1);
  nodes.clear();
  nodes.reserve(static_cast<size_t>(mesh.num_facets()) * (k + 1));
  for (int f = 0; f < mesh.num_facets(); ++f) {
    for (int i = 0; i <= k; ++i) {
      TraceNode n;
      n.facet = f;
      n.t = gl(i);
      n.position = facet_point(mesh, f, gl(i));
      nodes.push_back(n);
    }
  }
}

// Nodes of a continuous skeleton Lagrange space: one node per mesh vertex
// plus k-1 Gauss-Lobatto interior nodes per facet.
void build_continuous_nodes(const Mesh& mesh, int k, std::vector<TraceNode>& nodes) {
  Eigen::VectorXd lob = gauss_lobatto_nodes(k + 1);
  nodes.clear();
  nodes.reserve(mesh.num_vertices() + static_cast<size_t>(mesh.num_facets()) * (k - 1));
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    TraceNode n;
    n.vertex = v;
    n.position = mesh.vertex(v);
    nodes.push_back(n);
  }
  for (int f = 0; f < mesh.num_facets(); ++f) {
    for (int i = 1; i < k; ++i) {
      TraceNode n;
      n.facet = f;
      n.t = lob(i);
      n.position = facet_point(mesh, f, lob(i));
      nodes.push_back(n);
    }
  }
}

// Global node index of facet-local node i (0..k, ascending t) for either
// node layout.
int facet_node(const Mesh& mesh, int k, bool continuous, int f, int i) {
  if (!continuous) return f * (k + 1) + i;
  const Facet& fc = mesh.facet(f);
  if (i == 0) return fc.vertices[0];
  if (i == k) return fc.vertices[1];
  return mesh.num_vertices() + f * (k - 1) + (i - 1);
}

}  // namespace

DofLayout build_layout(const Mesh& mesh, const SpaceConfig& config) {
  if (config.k < 1) throw std::invalid_argument("build_layout: polynomial degree k >= 1 required");
  if (config.variant != Variant::HDG && config.variant != Variant::EDG &&
      config.variant != Variant::EDG_HDG)
    throw std::invalid_argument("build_layout: unsupported variant");

  const int k = config.k;
  DofLayout layout;
  layout.config = config;
  layout.npk = (k + 1) * (k + 2) / 2;
  layout.npq = k * (k + 1) / 2;
  layout.n_u = static_cast<long>(mesh.num_elements()) * 2 * layout.npk;
  layout.n_q = static_cast<long>(mesh.num_elements()) * layout.npq;

  const bool u_continuous = (config.variant != Variant::HDG);
  const bool q_continuous = (config.variant == Variant::EDG);

  if (u_continuous)
    build_continuous_nodes(mesh, k, layout.u_nodes);
  else
    build_discontinuous_nodes(mesh, k, layout.u_nodes);
  if (q_continuous)
    build_continuous_nodes(mesh, k, layout.q_nodes);
  else
    build_discontinuous_nodes(mesh, k, layout.q_nodes);

  layout.u_facet_basis =
      LagrangeSegmentBasis(u_continuous ? gauss_lobatto_nodes(k + 1) : gauss_legendre_nodes(k + 1));
  layout.q_facet_basis =
      LagrangeSegmentBasis(q_continuous ? gauss_lobatto_nodes(k + 1) : gauss_legendre_nodes(k + 1));

  // Trace velocity boundary condition: every node lying on a boundary facet
  // (for continuous spaces also every boundary vertex) is constrained.
  std::vector<bool> constrained(layout.u_nodes.size(), false);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (!mesh.facet(f).is_boundary()) continue;
    for (int i = 0; i <= k; ++i) constrained[facet_node(mesh, k, u_continuous, f, i)] = true;
  }
  layout.u_node_free.assign(layout.u_nodes.size(), -1);
  for (size_t n = 0; n < layout.u_nodes.size(); ++n)
    if (!constrained[n]) layout.u_node_free[n] = layout.n_free_u_nodes++;
  layout.n_ubar = 2 * layout.n_free_u_nodes;
  layout.n_qbar = static_cast<int>(layout.q_nodes.size());

  // Per-element gather maps.
  layout.elements.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    auto& et = layout.elements[e];
    std::vector<int> u_seen, q_seen;
    for (int lf = 0; lf < 3; ++lf) {
      const int f = mesh.element_facets(e)[lf];
      et.u_facet_slot[lf].resize(k + 1);
      et.q_facet_slot[lf].resize(k + 1);
      for (int i = 0; i <= k; ++i) {
        const int un = facet_node(mesh, k, u_continuous, f, i);
        auto it = std::find(et.u_local.begin(), et.u_local.end(), un);
        if (it == et.u_local.end()) {
          et.u_facet_slot[lf][i] = static_cast<int>(et.u_local.size());
          et.u_local.push_back(un);
        } else {
          et.u_facet_slot[lf][i] = static_cast<int>(it - et.u_local.begin());
        }
        const int qn = facet_node(mesh, k, q_continuous, f, i);
        auto qt = std::find(et.q_local.begin(), et.q_local.end(), qn);
        if (qt == et.q_local.end()) {
          et.q_facet_slot[lf][i] = static_cast<int>(et.q_local.size());
          et.q_local.push_back(qn);
        } else {
          et.q_facet_slot[lf][i] = static_cast<int>(qt - et.q_local.begin());
        }
      }
    }
  }
  return layout;
}

}  // namespace hdgstokes

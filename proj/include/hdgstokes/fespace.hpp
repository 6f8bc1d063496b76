#pragma once

#include <array>
#include <vector>

#include "hdgstokes/basis.hpp"
#include "hdgstokes/mesh.hpp"

namespace hdgstokes {

enum class Variant { HDG, EDG, EDG_HDG };

const char* variant_name(Variant v);

/// Element velocity degree k, element pressure degree k-1, trace spaces of
/// degree k. EDG uses continuous trace velocity and pressure, EDG-HDG only a
/// continuous trace velocity.
struct SpaceConfig {
  int k = 2;
  Variant variant = Variant::HDG;
};

/// One scalar node of a trace space. Discontinuous nodes live on a single
/// facet at parameter t; continuous (skeleton Lagrange) spaces additionally
/// have vertex nodes shared by all facets meeting at the vertex.
struct TraceNode {
  Vec2 position;
  int vertex = -1;  ///< >= 0 for vertex nodes of continuous spaces
  int facet = -1;   ///< >= 0 for facet-local nodes
  double t = 0.0;   ///< facet parameter for facet-local nodes
};

/// Degree-of-freedom maps for the spaces V_h, Q_h, Vbar_h, Qbar_h.
///
/// Element dofs are blocked per element: velocity dofs of element e occupy
/// [e*2*npk, (e+1)*2*npk) with component 0 first, pressure dofs occupy
/// [e*npq, (e+1)*npq). Trace dofs are organized as scalar nodes; a velocity
/// node carries two components. Homogeneous-Dirichlet trace velocity nodes
/// (all trace nodes on the domain boundary) are eliminated: they have no free
/// index and never appear in assembled operators.
struct DofLayout {
  SpaceConfig config;
  int npk = 0;  ///< dim P_k per element (scalar)
  int npq = 0;  ///< dim P_{k-1} per element
  long n_u = 0;
  long n_q = 0;

  std::vector<TraceNode> u_nodes;
  std::vector<TraceNode> q_nodes;
  std::vector<int> u_node_free;  ///< scalar node -> free node index, or -1
  int n_free_u_nodes = 0;
  int n_ubar = 0;  ///< free trace velocity dofs (2 per free node)
  int n_qbar = 0;  ///< trace pressure dofs (no boundary condition)

  /// Per-element gather data. u_local / q_local list the element's distinct
  /// scalar trace nodes; facet_slot maps facet-local node i (ordered by
  /// ascending t on the canonical facet orientation) to a local slot.
  struct ElementTrace {
    std::vector<int> u_local;
    std::array<std::vector<int>, 3> u_facet_slot;
    std::vector<int> q_local;
    std::array<std::vector<int>, 3> q_facet_slot;
  };
  std::vector<ElementTrace> elements;

  LagrangeSegmentBasis u_facet_basis{Eigen::VectorXd::Zero(1)};
  LagrangeSegmentBasis q_facet_basis{Eigen::VectorXd::Zero(1)};

  int k() const { return config.k; }
  int nodes_per_facet() const { return config.k + 1; }

  /// Free global dof of (scalar trace velocity node, component), or -1.
  int ubar_dof(int node, int comp) const {
    int fn = u_node_free[node];
    return fn < 0 ? -1 : 2 * fn + comp;
  }
  int qbar_dof(int node) const { return node; }

  /// Total space dimensions before boundary elimination, the convention used
  /// in reported DOF tables.
  long dofs_two_field_reported() const { return 2 * static_cast<long>(u_nodes.size()) + n_qbar; }
  long dofs_three_field_reported() const { return dofs_two_field_reported() + n_q; }
  /// Dimensions of the condensed systems (free dofs).
  long dim_two_field() const { return static_cast<long>(n_ubar) + n_qbar; }
  long dim_three_field() const { return static_cast<long>(n_ubar) + n_q + n_qbar; }
};

/// Builds the dof layout for a mesh and space configuration.
DofLayout build_layout(const Mesh& mesh, const SpaceConfig& config);

}  // namespace hdgstokes

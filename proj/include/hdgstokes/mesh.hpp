#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace hdgstokes {

using Vec2 = Eigen::Vector2d;

/// Marker for the element_minus side of a boundary facet.
inline constexpr int kBoundary = -1;

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

/// Mesh edge shared by one (boundary) or two (interior) triangles.
/// The endpoints are stored with vertices[0] < vertices[1]; both adjacent
/// elements therefore see the same parametrization t in [0,1] along the facet.
struct Facet {
  std::array<int, 2> vertices{-1, -1};
  int element_plus = -1;        ///< element on the "+" side
  int local_plus = -1;          ///< local facet index within element_plus
  int element_minus = kBoundary;
  int local_minus = -1;
  int boundary_tag = 0;         ///< nonzero only for boundary facets
  bool is_boundary() const { return element_minus == kBoundary; }
};

/// Geometry of one facet as seen from its adjacent element(s).
struct FacetGeometry {
  Vec2 normal_plus;    ///< outward unit normal of element_plus
  Vec2 normal_minus;   ///< -normal_plus; meaningful for interior facets only
  double length = 0.0;
  Vec2 midpoint;
};

/// Immutable 2D simplicial mesh with full facet (edge) topology.
///
/// Elements are vertex index triples with positive (counter-clockwise)
/// orientation. Local facet i of an element is the edge opposite local
/// vertex i. h(K) is the element diameter (longest edge).
class Mesh {
public:
  /// Builds topology from raw vertices and triangles. Triangles with
  /// negative signed area are flipped; degenerate triangles are rejected.
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> elements);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_facets() const { return static_cast<int>(facets_.size()); }
  int num_boundary_facets() const { return num_boundary_facets_; }
  int num_interior_facets() const { return num_facets() - num_boundary_facets_; }

  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& element(int e) const { return elements_[e]; }
  const Facet& facet(int f) const { return facets_[f]; }
  /// Facet ids of element e; position i is the facet opposite local vertex i.
  const std::array<int, 3>& element_facets(int e) const { return element_facets_[e]; }

  double h(int e) const { return h_[e]; }
  double max_h() const;
  double element_area(int e) const { return area_[e]; }
  double total_area() const;

  /// Vertex coordinates of element e in local order.
  std::array<Vec2, 3> element_vertices(int e) const;

  FacetGeometry facet_geometry(int f) const;
  /// Outward unit normal of local facet lf of element e.
  Vec2 outward_normal(int e, int lf) const;

  /// True if the stored facet orientation (vertices[0] -> vertices[1]) runs
  /// counter-clockwise around element e. Used to map the canonical facet
  /// parameter t to element-local positions.
  bool facet_agrees_with_element(int f, int e) const;

private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<Facet> facets_;
  std::vector<std::array<int, 3>> element_facets_;
  std::vector<double> h_;
  std::vector<double> area_;
  int num_boundary_facets_ = 0;
};

/// Delaunay triangulation of a jittered structured point set covering the
/// rectangle. Boundary points are kept on the boundary; interior points are
/// jittered by the seeded RNG. Deterministic for a fixed seed. The largest
/// element diameter is bounded by 2 * target_h.
Mesh generate_unstructured(const Rect& domain, double target_h, unsigned seed);

/// Red refinement: every triangle is split into 4 similar children through
/// the edge midpoints. Element count x4, every h(K) exactly halves.
Mesh refine_uniform(const Mesh& mesh);

/// Plain-text export: header "E B F", then vertex count and vertices,
/// elements, facets.
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

/// Import of a bare triangle list ("V E" header, vertices, connectivity);
/// facet topology is rebuilt internally.
Mesh read_triangle_list(std::istream& is);

}  // namespace hdgstokes

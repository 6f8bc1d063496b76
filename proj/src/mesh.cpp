#include "hdgstokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace hdgstokes {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

}  // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> elements)
    : vertices_(std::move(vertices)), elements_(std::move(elements)) {
  const int ne = num_elements();
  if (ne == 0) throw std::invalid_argument("Mesh: empty element list");

  h_.resize(ne);
  area_.resize(ne);
  for (int e = 0; e < ne; ++e) {
    auto& tri = elements_[e];
    for (int i : tri) {
      if (i < 0 || i >= num_vertices()) throw std::invalid_argument("Mesh: vertex index out of range");
    }
    double sa = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (sa < 0) {
      std::swap(tri[1], tri[2]);
      sa = -sa;
    }
    if (!(sa > 0)) throw std::invalid_argument("Mesh: degenerate element");
    area_[e] = sa;
    double hmax = 0.0;
    for (int i = 0; i < 3; ++i) {
      hmax = std::max(hmax, (vertices_[tri[(i + 1) % 3]] - vertices_[tri[i]]).norm());
    }
    h_[e] = hmax;
  }

  // Facets keyed by sorted endpoint pair; deterministic order.
  std::map<std::array<int, 2>, int> facet_of_edge;
  element_facets_.assign(ne, {-1, -1, -1});
  for (int e = 0; e < ne; ++e) {
    const auto& tri = elements_[e];
    for (int lf = 0; lf < 3; ++lf) {
      int a = tri[(lf + 1) % 3];
      int b = tri[(lf + 2) % 3];
      std::array<int, 2> key{std::min(a, b), std::max(a, b)};
      auto it = facet_of_edge.find(key);
      if (it == facet_of_edge.end()) {
        Facet f;
        f.vertices = key;
        f.element_plus = e;
        f.local_plus = lf;
        facet_of_edge.emplace(key, static_cast<int>(facets_.size()));
        element_facets_[e][lf] = static_cast<int>(facets_.size());
        facets_.push_back(f);
      } else {
        Facet& f = facets_[it->second];
        if (f.element_minus != kBoundary) throw std::invalid_argument("Mesh: non-manifold edge");
        f.element_minus = e;
        f.local_minus = lf;
        element_facets_[e][lf] = it->second;
      }
    }
  }
  // Renumber facets in key order so the numbering is independent of element order.
  {
    std::vector<int> perm(facets_.size());
    int idx = 0;
    std::vector<Facet> sorted;
    sorted.reserve(facets_.size());
    for (auto& [key, old] : facet_of_edge) {
      perm[old] = idx++;
      sorted.push_back(facets_[old]);
    }
    facets_ = std::move(sorted);
    for (auto& ef : element_facets_)
      for (auto& f : ef) f = perm[f];
  }
  for (auto& f : facets_) {
    if (f.is_boundary()) {
      f.boundary_tag = 1;
      ++num_boundary_facets_;
    }
  }
}

double Mesh::max_h() const {
  return *std::max_element(h_.begin(), h_.end());
}

double Mesh::total_area() const {
  double s = 0.0;
  for (double a : area_) s += a;
  return s;
}

std::array<Vec2, 3> Mesh::element_vertices(int e) const {
  const auto& tri = elements_[e];
  return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
}

Vec2 Mesh::outward_normal(int e, int lf) const {
  const auto& tri = elements_[e];
  const Vec2& a = vertices_[tri[(lf + 1) % 3]];
  const Vec2& b = vertices_[tri[(lf + 2) % 3]];
  // Edge (a,b) runs counter-clockwise around the element; rotating the edge
  // direction by -90 degrees points outward.
  Vec2 d = b - a;
  Vec2 n(d.y(), -d.x());
  return n / n.norm();
}

FacetGeometry Mesh::facet_geometry(int f) const {
  if (f < 0 || f >= num_facets()) throw std::out_of_range("facet_geometry: invalid facet id");
  const Facet& fc = facets_[f];
  const Vec2& a = vertices_[fc.vertices[0]];
  const Vec2& b = vertices_[fc.vertices[1]];
  FacetGeometry g;
  g.length = (b - a).norm();
  g.midpoint = 0.5 * (a + b);
  g.normal_plus = outward_normal(fc.element_plus, fc.local_plus);
  g.normal_minus = -g.normal_plus;
  return g;
}

bool Mesh::facet_agrees_with_element(int f, int e) const {
  const Facet& fc = facets_[f];
  int lf = (e == fc.element_plus) ? fc.local_plus : fc.local_minus;
  const auto& tri = elements_[e];
  return tri[(lf + 1) % 3] == fc.vertices[0];
}

// ---------------------------------------------------------------------------
// Delaunay triangulation (Bowyer-Watson) of a modest point set.

namespace {

struct DelTri {
  std::array<int, 3> v;
  bool alive = true;
};

bool in_circumcircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  // Sign of the incircle determinant for counter-clockwise (a,b,c).
  double ax = a.x() - p.x(), ay = a.y() - p.y();
  double bx = b.x() - p.x(), by = b.y() - p.y();
  double cx = c.x() - p.x(), cy = c.y() - p.y();
  double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
               (bx * bx + by * by) * (ax * cy - cx * ay) +
               (cx * cx + cy * cy) * (ax * by - bx * ay);
  return det > 0.0;
}

std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts) {
  const int n = static_cast<int>(pts.size());
  if (n < 3) throw std::invalid_argument("delaunay: need at least 3 points");

  Vec2 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec2 c = 0.5 * (lo + hi);
  double r = std::max(hi.x() - lo.x(), hi.y() - lo.y());
  r = std::max(r, 1.0) * 1024.0;

  std::vector<Vec2> p(pts);
  p.push_back(c + Vec2(-r, -r));
  p.push_back(c + Vec2(r, -r));
  p.push_back(c + Vec2(0, r));

  std::vector<DelTri> tris;
  tris.push_back({{n, n + 1, n + 2}, true});

  for (int ip = 0; ip < n; ++ip) {
    // Collect triangles whose circumcircle contains the new point.
    std::map<std::array<int, 2>, int> edge_count;
    for (auto& t : tris) {
      if (!t.alive) continue;
      if (in_circumcircle(p[t.v[0]], p[t.v[1]], p[t.v[2]], p[ip])) {
        t.alive = false;
        for (int k = 0; k < 3; ++k) {
          int a = t.v[k], b = t.v[(k + 1) % 3];
          std::array<int, 2> key{std::min(a, b), std::max(a, b)};
          edge_count[key]++;
        }
      }
    }
    // Boundary edges of the cavity appear exactly once; retriangulate.
    std::vector<std::array<int, 3>> fresh;
    for (auto& [key, cnt] : edge_count) {
      if (cnt != 1) continue;
      int a = key[0], b = key[1];
      if (signed_area(p[a], p[b], p[ip]) > 0)
        fresh.push_back({a, b, ip});
      else
        fresh.push_back({b, a, ip});
    }
    for (auto& f : fresh) tris.push_back({f, true});
  }

  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.push_back(t.v);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    auto sx = x, sy = y;
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    return sx < sy;
  });
  return out;
}

}  // namespace

Mesh generate_unstructured(const Rect& domain, double target_h, unsigned seed) {
  if (!(target_h > 0)) throw std::invalid_argument("generate_unstructured: target_h must be positive");
  if (!(domain.width() > 0) || !(domain.height() > 0))
    throw std::invalid_argument("generate_unstructured: degenerate domain");

  // Grid spacing so that an unjittered cell diagonal is about target_h.
  const double s = target_h / std::sqrt(2.0);
  const int nx = std::max(1, static_cast<int>(std::lround(domain.width() / s)));
  const int ny = std::max(1, static_cast<int>(std::lround(domain.height() / s)));
  const double dx = domain.width() / nx;
  const double dy = domain.height() / ny;

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.10, 0.10);

  std::vector<Vec2> pts;
  pts.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      Vec2 q(domain.x0 + i * dx, domain.y0 + j * dy);
      const bool interior = (i > 0 && i < nx && j > 0 && j < ny);
      if (interior) q += Vec2(jitter(rng) * dx, jitter(rng) * dy);
      pts.push_back(q);
    }
  }
  auto tris = delaunay(pts);
  return Mesh(std::move(pts), std::move(tris));
}

Mesh refine_uniform(const Mesh& mesh) {
  std::vector<Vec2> verts(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) verts[v] = mesh.vertex(v);

  // One new vertex per facet (edge midpoint).
  std::vector<int> midpoint(mesh.num_facets());
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const Facet& fc = mesh.facet(f);
    midpoint[f] = static_cast<int>(verts.size());
    verts.push_back(0.5 * (mesh.vertex(fc.vertices[0]) + mesh.vertex(fc.vertices[1])));
  }

  std::vector<std::array<int, 3>> elems;
  elems.reserve(4 * mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& tri = mesh.element(e);
    const auto& ef = mesh.element_facets(e);
    // m[i] is the midpoint of the facet opposite vertex i.
    std::array<int, 3> m{midpoint[ef[0]], midpoint[ef[1]], midpoint[ef[2]]};
    elems.push_back({tri[0], m[2], m[1]});
    elems.push_back({tri[1], m[0], m[2]});
    elems.push_back({tri[2], m[1], m[0]});
    elems.push_back({m[0], m[1], m[2]});
  }
  return Mesh(std::move(verts), std::move(elems));
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os.precision(17);
  os << mesh.num_elements() << " " << mesh.num_boundary_facets() << " " << mesh.num_facets() << "\n";
  os << mesh.num_vertices() << "\n";
  for (int v = 0; v < mesh.num_vertices(); ++v)
    os << mesh.vertex(v).x() << " " << mesh.vertex(v).y() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.element(e);
    os << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const Facet& fc = mesh.facet(f);
    os << fc.vertices[0] << " " << fc.vertices[1] << " " << fc.element_plus << " " << fc.local_plus
       << " " << fc.element_minus << " " << fc.local_minus << " " << fc.boundary_tag << "\n";
  }
}

Mesh read_mesh(std::istream& is) {
  int ne = 0, nb = 0, nf = 0, nv = 0;
  if (!(is >> ne >> nb >> nf >> nv)) throw std::runtime_error("read_mesh: bad header");
  std::vector<Vec2> verts(nv);
  for (auto& v : verts)
    if (!(is >> v.x() >> v.y())) throw std::runtime_error("read_mesh: bad vertex line");
  std::vector<std::array<int, 3>> elems(ne);
  for (auto& e : elems)
    if (!(is >> e[0] >> e[1] >> e[2])) throw std::runtime_error("read_mesh: bad element line");
  // Facet lines are validated against the rebuilt topology.
  Mesh mesh(std::move(verts), std::move(elems));
  if (mesh.num_facets() != nf || mesh.num_boundary_facets() != nb)
    throw std::runtime_error("read_mesh: facet counts inconsistent with connectivity");
  for (int f = 0; f < nf; ++f) {
    int v0, v1, ep, lp, em, lm, tag;
    if (!(is >> v0 >> v1 >> ep >> lp >> em >> lm >> tag)) throw std::runtime_error("read_mesh: bad facet line");
  }
  return mesh;
}

Mesh read_triangle_list(std::istream& is) {
  int nv = 0, ne = 0;
  if (!(is >> nv >> ne)) throw std::runtime_error("read_triangle_list: bad header");
  std::vector<Vec2> verts(nv);
  for (auto& v : verts)
    if (!(is >> v.x() >> v.y())) throw std::runtime_error("read_triangle_list: bad vertex line");
  std::vector<std::array<int, 3>> elems(ne);
  for (auto& e : elems)
    if (!(is >> e[0] >> e[1] >> e[2])) throw std::runtime_error("read_triangle_list: bad element line");
  return Mesh(std::move(verts), std::move(elems));
}

}  // namespace hdgstokes

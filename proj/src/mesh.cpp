#include "sns/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace sns {

Mesh build_mesh(int n) {
  if (n < 1) throw std::invalid_argument("build_mesh: n must be >= 1");

  Mesh m;
  m.n = n;
  const int nv = (n + 1) * (n + 1);
  m.vertices.resize(nv);
  m.vertex_on_boundary.assign(nv, 0);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const int v = j * (n + 1) + i;
      m.vertices[v].x = static_cast<double>(i) / n;
      m.vertices[v].y = static_cast<double>(j) / n;
      m.vertex_on_boundary[v] = (i == 0 || i == n || j == 0 || j == n) ? 1 : 0;
    }
  }

  m.triangles.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = j * (n + 1) + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + (n + 1);
      const int v11 = v01 + 1;
      // Diagonal v00 -> v11; both triangles counter-clockwise.
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }

  // Collect unique edges, ordered lexicographically by (a, b).
  std::map<std::pair<int, int>, int> edge_id;
  for (const auto& tri : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k];
      int b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_id.emplace(std::make_pair(a, b), 0);
    }
  }
  m.edges.reserve(edge_id.size());
  int next = 0;
  for (auto& [key, id] : edge_id) {
    id = next++;
    MeshEdge e;
    e.a = key.first;
    e.b = key.second;
    m.edges.push_back(e);
  }

  m.triangle_edges.resize(m.triangles.size());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    for (int k = 0; k < 3; ++k) {
      int a = tri[k];
      int b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      const int e = edge_id.at({a, b});
      m.triangle_edges[t][k] = e;
      auto& adj = m.edges[e].tris;
      if (adj[0] < 0) {
        adj[0] = t;
      } else {
        adj[1] = t;
      }
    }
  }

  m.edge_on_boundary.assign(m.edges.size(), 0);
  double hmax = 0.0;
  for (int e = 0; e < m.num_edges(); ++e) {
    m.edge_on_boundary[e] = (m.edges[e].tris[1] < 0) ? 1 : 0;
    const Vec2& pa = m.vertices[m.edges[e].a];
    const Vec2& pb = m.vertices[m.edges[e].b];
    hmax = std::max(hmax, std::hypot(pb.x - pa.x, pb.y - pa.y));
  }
  m.mesh_size = hmax;
  return m;
}

Mesh refine(const Mesh& mesh) { return build_mesh(2 * mesh.n); }

double triangle_area(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& p0 = mesh.vertices[tri[0]];
  const Vec2& p1 = mesh.vertices[tri[1]];
  const Vec2& p2 = mesh.vertices[tri[2]];
  return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

void write_mesh_dump(const Mesh& m, std::ostream& os) {
  os << "mesh n " << m.n << "\n";
  os << "vertices " << m.num_vertices() << "\n";
  os << "triangles " << m.num_triangles() << "\n";
  os << "edges " << m.num_edges() << "\n";
  os << "mesh_size " << m.mesh_size << "\n";
  os.precision(17);
  for (int v = 0; v < m.num_vertices(); ++v) {
    os << "v " << v << " " << m.vertices[v].x << " " << m.vertices[v].y << " "
       << int(m.vertex_on_boundary[v]) << "\n";
  }
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    os << "t " << t << " " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
  }
  for (int e = 0; e < m.num_edges(); ++e) {
    os << "e " << e << " " << m.edges[e].a << " " << m.edges[e].b << " "
       << int(m.edge_on_boundary[e]) << "\n";
  }
}

}  // namespace sns

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace sns {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Endpoints stored with a < b.  tris[1] == -1 on boundary edges.
struct MeshEdge {
  int a = -1;
  int b = -1;
  std::array<int, 2> tris{-1, -1};
};

// Uniform triangulation of the closed unit square: n x n cells, each split
// along the lower-left -> upper-right diagonal.  Vertices are row-major
// (x fastest), triangles are listed cell by cell (lower triangle first),
// edges sorted lexicographically by endpoint pair.  All triangles are
// counter-clockwise with area 1/(2 n^2).
struct Mesh {
  int n = 0;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  // Edge ids per triangle for the local vertex pairs (0,1), (1,2), (2,0).
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<MeshEdge> edges;
  std::vector<std::uint8_t> vertex_on_boundary;
  std::vector<std::uint8_t> edge_on_boundary;
  double mesh_size = 0.0;  // longest edge, sqrt(2)/n

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
};

// Throws std::invalid_argument for n < 1.
Mesh build_mesh(int n);

// Uniform refinement; equals build_mesh(2n) including entity ordering.
Mesh refine(const Mesh& mesh);

double triangle_area(const Mesh& mesh, int t);

// Plain-text dump consumed by the mesh-info subcommand: counts, then one
// line per vertex / triangle / edge.
void write_mesh_dump(const Mesh& mesh, std::ostream& os);

}  // namespace sns

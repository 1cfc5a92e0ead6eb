#pragma once
//
// Project     : gcah2
// Module      : geometry.hpp
// Description : plane and curved (quadratic) triangle meshes of closed surfaces
//

#include <array>
#include <span>
#include <vector>

#include "gcah2/common.hpp"

namespace gcah2 {

using Triangle = std::array<Index, 3>;

// undirected edge with a < b
struct Edge {
  Index a, b;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// maximal refinement level of build_sphere_mesh
inline constexpr int max_sphere_level = 8;

//
// vertex -> adjacent triangles, each star sorted by triangle index
//
class VertexStars {
 public:
  VertexStars() = default;
  VertexStars(std::span<const Triangle> triangles, std::size_t vertex_count);

  std::span<const Index> operator[](Index vertex) const {
    return {triangles_.data() + offsets_[vertex], triangles_.data() + offsets_[vertex + 1]};
  }
  std::size_t vertex_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

 private:
  std::vector<Index> offsets_;
  std::vector<Index> triangles_;
};

//
// closed, consistently oriented triangulated surface
//
class TriangleMesh {
 public:
  // validates topology and geometry, throws MeshError
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  // sorted lexicographically by (a, b)
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Vec3& vertex(Index v) const { return vertices_[v]; }
  const Triangle& triangle(Index t) const { return triangles_[t]; }

  // edges of triangle t in the order (v0,v1), (v1,v2), (v2,v0)
  const std::array<Index, 3>& triangle_edges(Index t) const { return triangle_edges_[t]; }
  // index of the edge {a,b}, or none
  Index find_edge(Index a, Index b) const;

  const VertexStars& stars() const { return stars_; }
  double triangle_area(Index t) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<Index, 3>> triangle_edges_;
  VertexStars stars_;
};

// point, unnormalized normal and surface measure of a chart at one parameter
struct ChartSample {
  Vec3 point;
  Vec3 normal;
  double gramian;
};

//
// triangles parametrized by quadratic interpolation in the vertices and
// one point per edge; straight-edge midpoints give the affine case
//
class CurvedTriangleMesh {
 public:
  CurvedTriangleMesh(TriangleMesh base, std::vector<Vec3> midpoints);

  const TriangleMesh& base() const { return base_; }
  const std::vector<Vec3>& midpoints() const { return midpoints_; }
  std::size_t triangle_count() const { return base_.triangle_count(); }
  std::size_t vertex_count() const { return base_.vertex_count(); }

  // throws DomainError outside the reference triangle
  ChartSample chart(Index t, const Vec2& xhat) const;
  ChartSample chart_unchecked(Index t, const Vec2& xhat) const;

  // chart nodes: v0, v1, v2, m01, m12, m20
  const std::array<Vec3, 6>& nodes(Index t) const { return nodes_[t]; }
  // unnormalized normal at the six chart nodes
  const std::array<Vec3, 6>& node_normals(Index t) const { return node_normals_[t]; }

  // control points of the Bezier form of the chart; their hull contains the patch
  std::array<Vec3, 6> control_points(Index t) const;

 private:
  TriangleMesh base_;
  std::vector<Vec3> midpoints_;
  std::vector<std::array<Vec3, 6>> nodes_;
  std::vector<std::array<Vec3, 6>> node_normals_;
};

// six quadratic Lagrange shape functions and their derivatives at xhat
std::array<double, 6> quadratic_shape(const Vec2& xhat);
std::array<Vec2, 6> quadratic_shape_gradient(const Vec2& xhat);

// partial derivatives of a quadratic chart evaluated directly
std::array<Vec3, 2> chart_derivatives(const std::array<Vec3, 6>& nodes, const Vec2& xhat);

bool in_reference_triangle(const Vec2& xhat, double tol = 0.0);

// octahedron refined `level` times, vertices on the unit sphere
TriangleMesh build_sphere_mesh(int level);

CurvedTriangleMesh to_curved(const TriangleMesh& mesh, bool project_to_unit_sphere);

double surface_area(const CurvedTriangleMesh& mesh, int quad_order);

}  // namespace gcah2

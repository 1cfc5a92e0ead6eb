//
// Project     : gcah2
// Module      : geometry.cpp
// Description : mesh validation, sphere generation and quadratic charts
//

#include "gcah2/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <string>

#include <Eigen/Geometry>

#include "gcah2/quadrature.hpp"

namespace gcah2 {

const char* to_string(BasisKind basis) { return basis == BasisKind::constant ? "constant" : "linear"; }

//////////////////////////////////////////////////////////////////////
//
// VertexStars
//
//////////////////////////////////////////////////////////////////////

VertexStars::VertexStars(std::span<const Triangle> triangles, std::size_t vertex_count)
    : offsets_(vertex_count + 1, 0) {
  for (const auto& t : triangles)
    for (Index v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= vertex_count)
        throw ArgumentError("VertexStars: vertex index out of range");
      ++offsets_[v + 1];
    }
  for (std::size_t v = 0; v < vertex_count; ++v) offsets_[v + 1] += offsets_[v];

  triangles_.resize(offsets_.back());
  std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
  // triangles are visited in increasing order, so every star comes out sorted
  for (std::size_t t = 0; t < triangles.size(); ++t)
    for (Index v : triangles[t]) triangles_[fill[v]++] = static_cast<Index>(t);
}

//////////////////////////////////////////////////////////////////////
//
// TriangleMesh
//
//////////////////////////////////////////////////////////////////////

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const auto nv = static_cast<Index>(vertices_.size());

  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (Index v : tri)
      if (v < 0 || v >= nv)
        throw MeshError("triangle " + std::to_string(t) + " references vertex " + std::to_string(v) +
                            " outside [0," + std::to_string(nv) + ")",
                        static_cast<Index>(t));
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0])
      throw MeshError("triangle " + std::to_string(t) + " repeats a vertex", static_cast<Index>(t));

    const Vec3& a = vertices_[tri[0]];
    const Vec3& b = vertices_[tri[1]];
    const Vec3& c = vertices_[tri[2]];
    const double longest = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    const double area = 0.5 * (b - a).cross(c - a).norm();
    if (!(area >= 1e-14 * longest) || longest == 0.0)
      throw MeshError("triangle " + std::to_string(t) + " is degenerate", static_cast<Index>(t));
  }

  // directed edges: each must occur once, together with its reverse
  struct Directed {
    Index from, to, triangle;
  };
  std::vector<Directed> directed;
  directed.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t)
    for (int k = 0; k < 3; ++k)
      directed.push_back({triangles_[t][k], triangles_[t][(k + 1) % 3], static_cast<Index>(t)});
  std::sort(directed.begin(), directed.end(), [](const Directed& x, const Directed& y) {
    return std::tie(x.from, x.to, x.triangle) < std::tie(y.from, y.to, y.triangle);
  });
  for (std::size_t i = 0; i + 1 < directed.size(); ++i)
    if (directed[i].from == directed[i + 1].from && directed[i].to == directed[i + 1].to)
      throw MeshError("edge (" + std::to_string(directed[i].from) + "," + std::to_string(directed[i].to) +
                          ") is traversed twice in the same direction (non-manifold or inconsistent orientation)",
                      directed[i + 1].triangle);
  auto has_directed = [&](Index from, Index to) {
    return std::binary_search(directed.begin(), directed.end(), Directed{from, to, 0},
                              [](const Directed& x, const Directed& y) { return std::tie(x.from, x.to) < std::tie(y.from, y.to); });
  };
  for (const auto& d : directed)
    if (!has_directed(d.to, d.from))
      throw MeshError("edge (" + std::to_string(d.from) + "," + std::to_string(d.to) +
                          ") has no oppositely oriented neighbour (open surface or inconsistent orientation)",
                      d.triangle);

  for (const auto& d : directed)
    if (d.from < d.to) edges_.push_back({d.from, d.to});
  // already sorted by (from, to)

  triangle_edges_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t)
    for (int k = 0; k < 3; ++k) triangle_edges_[t][k] = find_edge(triangles_[t][k], triangles_[t][(k + 1) % 3]);

  stars_ = VertexStars(triangles_, vertices_.size());
}

Index TriangleMesh::find_edge(Index a, Index b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{a, b},
                             [](const Edge& x, const Edge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  if (it == edges_.end() || !(*it == Edge{a, b})) return none;
  return static_cast<Index>(it - edges_.begin());
}

double TriangleMesh::triangle_area(Index t) const {
  const auto& tri = triangles_[t];
  return 0.5 * (vertices_[tri[1]] - vertices_[tri[0]]).cross(vertices_[tri[2]] - vertices_[tri[0]]).norm();
}

//////////////////////////////////////////////////////////////////////
//
// quadratic charts
//
//////////////////////////////////////////////////////////////////////

bool in_reference_triangle(const Vec2& xhat, double tol) {
  return xhat[0] >= -tol && xhat[1] >= -tol && xhat[0] + xhat[1] <= 1.0 + tol;
}

std::array<double, 6> quadratic_shape(const Vec2& xhat) {
  const double l1 = xhat[0], l2 = xhat[1], l0 = 1.0 - l1 - l2;
  return {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
          4.0 * l0 * l1,         4.0 * l1 * l2,         4.0 * l2 * l0};
}

std::array<Vec2, 6> quadratic_shape_gradient(const Vec2& xhat) {
  const double l1 = xhat[0], l2 = xhat[1], l0 = 1.0 - l1 - l2;
  return {Vec2(1.0 - 4.0 * l0, 1.0 - 4.0 * l0), Vec2(4.0 * l1 - 1.0, 0.0),     Vec2(0.0, 4.0 * l2 - 1.0),
          Vec2(4.0 * (l0 - l1), -4.0 * l1),      Vec2(4.0 * l2, 4.0 * l1),      Vec2(-4.0 * l2, 4.0 * (l0 - l2))};
}

std::array<Vec3, 2> chart_derivatives(const std::array<Vec3, 6>& nodes, const Vec2& xhat) {
  const auto grad = quadratic_shape_gradient(xhat);
  Vec3 d1 = Vec3::Zero(), d2 = Vec3::Zero();
  for (int k = 0; k < 6; ++k) {
    d1 += grad[k][0] * nodes[k];
    d2 += grad[k][1] * nodes[k];
  }
  return {d1, d2};
}

CurvedTriangleMesh::CurvedTriangleMesh(TriangleMesh base, std::vector<Vec3> midpoints)
    : base_(std::move(base)), midpoints_(std::move(midpoints)) {
  if (midpoints_.size() != base_.edge_count())
    throw MeshError("midpoint count " + std::to_string(midpoints_.size()) + " differs from edge count " +
                    std::to_string(base_.edge_count()));

  static const std::array<Vec2, 6> node_params = {Vec2(0, 0),   Vec2(1, 0),     Vec2(0, 1),
                                                  Vec2(0.5, 0), Vec2(0.5, 0.5), Vec2(0, 0.5)};
  const auto nt = base_.triangle_count();
  nodes_.resize(nt);
  node_normals_.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = base_.triangle(static_cast<Index>(t));
    const auto& e = base_.triangle_edges(static_cast<Index>(t));
    auto& p = nodes_[t];
    for (int k = 0; k < 3; ++k) {
      p[k] = base_.vertex(tri[k]);
      p[3 + k] = midpoints_[e[k]];
    }
    for (int k = 0; k < 6; ++k) {
      const auto d = chart_derivatives(p, node_params[k]);
      node_normals_[t][k] = d[0].cross(d[1]);
    }
  }
}

ChartSample CurvedTriangleMesh::chart_unchecked(Index t, const Vec2& xhat) const {
  const auto phi = quadratic_shape(xhat);
  const auto& p = nodes_[t];
  const auto& n = node_normals_[t];
  ChartSample s{Vec3::Zero(), Vec3::Zero(), 0.0};
  for (int k = 0; k < 6; ++k) {
    s.point += phi[k] * p[k];
    s.normal += phi[k] * n[k];
  }
  s.gramian = s.normal.norm();
  return s;
}

ChartSample CurvedTriangleMesh::chart(Index t, const Vec2& xhat) const {
  if (t < 0 || static_cast<std::size_t>(t) >= triangle_count()) throw ArgumentError("chart: triangle index out of range");
  if (!in_reference_triangle(xhat, 1e-15)) throw DomainError("chart: parameter outside the reference triangle");
  return chart_unchecked(t, xhat);
}

std::array<Vec3, 6> CurvedTriangleMesh::control_points(Index t) const {
  auto c = nodes_[t];
  for (int k = 0; k < 3; ++k) c[3 + k] = 2.0 * c[3 + k] - 0.5 * (c[k] + c[(k + 1) % 3]);
  return c;
}

//////////////////////////////////////////////////////////////////////
//
// mesh generation
//
//////////////////////////////////////////////////////////////////////

TriangleMesh build_sphere_mesh(int level) {
  if (level < 0) throw ParameterError("build_sphere_mesh: negative level");
  if (level > max_sphere_level)
    throw SizeLimitError("build_sphere_mesh: level " + std::to_string(level) + " exceeds the cap " +
                         std::to_string(max_sphere_level));

  std::vector<Vec3> v = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
  std::vector<Triangle> t = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<Index, Index>, Index> midpoint_of;
    auto midpoint = [&](Index a, Index b) {
      const auto key = std::minmax(a, b);
      auto [it, inserted] = midpoint_of.try_emplace({key.first, key.second}, static_cast<Index>(v.size()));
      if (inserted) v.push_back((0.5 * (v[a] + v[b])).normalized());
      return it->second;
    };

    std::vector<Triangle> refined;
    refined.reserve(4 * t.size());
    for (const auto& [a, b, c] : t) {
      const Index ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      refined.push_back({a, ab, ca});
      refined.push_back({ab, b, bc});
      refined.push_back({ca, bc, c});
      refined.push_back({ab, bc, ca});
    }
    t = std::move(refined);
  }
  return TriangleMesh(std::move(v), std::move(t));
}

CurvedTriangleMesh to_curved(const TriangleMesh& mesh, bool project_to_unit_sphere) {
  std::vector<Vec3> mid;
  mid.reserve(mesh.edge_count());
  for (const auto& e : mesh.edges()) {
    Vec3 m = 0.5 * (mesh.vertex(e.a) + mesh.vertex(e.b));
    if (project_to_unit_sphere) m.normalize();
    mid.push_back(m);
  }
  return CurvedTriangleMesh(mesh, std::move(mid));
}

double surface_area(const CurvedTriangleMesh& mesh, int quad_order) {
  if (quad_order < 1) throw ParameterError("surface_area: quadrature order must be positive");
  const auto rule = triangle_gauss(quad_order);
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    double local = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
      local += rule.weights[q] * mesh.chart_unchecked(static_cast<Index>(t), rule.points[q]).gramian;
    area += local;
  }
  return area;
}

}  // namespace gcah2

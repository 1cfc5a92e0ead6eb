#pragma once
//
// Project     : gcah2
// Module      : quadrature.hpp
// Description : Gauss rules, box-boundary rules for Green's representation
//               formula, and regularizing rules for singular surface integrals
//

#include <array>
#include <vector>

#include "gcah2/bounding_box.hpp"
#include "gcah2/geometry.hpp"

namespace gcah2 {

inline constexpr int max_gauss_order = 32;

// rule on [-1,1]
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

// m-point Gauss-Legendre, 1 <= m <= 32
Rule1D gauss_legendre(int m);

// m-point Gauss rule for the weight (1-x) on [-1,1]
Rule1D gauss_jacobi_10(int m);

// rule on the reference triangle {x, y >= 0, x + y <= 1}
struct TriangleRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

// collapsed tensor rule with q^2 points, exact for total degree 2q-1
TriangleRule triangle_gauss(int q);

//
// quadrature on the boundary of an axis-parallel box
//
struct GreenRule {
  BoundingBox omega;
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // outward unit normals
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

// omega = box expanded by delta in every direction, m x m Gauss points per face
GreenRule green_box_rule(const BoundingBox& box, double delta, int m);

//
// triangle pair classification
//
enum class PairKind { identical = 0, edge = 1, vertex = 2, disjoint = 3 };
inline constexpr int pair_kind_count = 4;

const char* to_string(PairKind kind);

struct SingularityCase {
  PairKind kind;
  // local vertex numbers, shared vertices first and in matching positions
  std::array<int, 3> row_perm;
  std::array<int, 3> col_perm;
};

SingularityCase classify_pair(const Triangle& t, const Triangle& s);

// nodes on the product of two reference triangles
struct PairRule {
  std::vector<Vec2> x;
  std::vector<Vec2> y;
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
};

// regularized rule for the given configuration; shared vertices are the
// leading reference vertices (0,0), (1,0), (0,1) of both triangles
PairRule sauter_rule(PairKind kind, int q);

// rule on the reference triangle with nodes clustered at the given vertex
TriangleRule duffy_rule(int singular_vertex, int q);

// maps a point given in permuted local vertex numbering back to the
// triangle's own reference coordinates
inline Vec2 unpermute(const Vec2& xhat, const std::array<int, 3>& perm) {
  const double bary[3] = {1.0 - xhat[0] - xhat[1], xhat[0], xhat[1]};
  double orig[3];
  for (int k = 0; k < 3; ++k) orig[perm[k]] = bary[k];
  return Vec2(orig[1], orig[2]);
}

}  // namespace gcah2

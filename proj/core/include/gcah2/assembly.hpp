#pragma once
//
// Project     : gcah2
// Module      : assembly.hpp
// Description : kernels, dense Galerkin/collocation blocks, mass blocks and
//               quadrature factors from Green's representation formula
//

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gcah2/geometry.hpp"
#include "gcah2/quadrature.hpp"

namespace gcah2 {

//
// kernels
//

enum class OperatorKind { slp, dlp };

const char* to_string(OperatorKind kind);

inline constexpr double inv_four_pi = 0.07957747154594767;  // 1/(4 pi)

// slp: 1/(4 pi |x-y|), dlp: <x-y, n_y>/(4 pi |x-y|^3); throws for x == y
double kernel_eval(OperatorKind kind, const Vec3& x, const Vec3& y, const Vec3* n_y = nullptr);

//
// triangle tables
//

struct TableRow {
  Index triangle;
  std::array<Index, 3> slots;  // position in the index list, or none
  friend bool operator==(const TableRow&, const TableRow&) = default;
};

using TriangleTable = std::vector<TableRow>;

// merge of the vertex stars of the given vertex indices, sorted by triangle
TriangleTable triangle_table(std::span<const Index> indices, std::span<const Triangle> triangles,
                             const VertexStars& stars);
TriangleTable triangle_table(std::span<const Index> indices, const TriangleMesh& mesh);

//
// discrete space on a mesh with cached regular quadrature per triangle
//
class FunctionSpace {
 public:
  FunctionSpace(const CurvedTriangleMesh& mesh, BasisKind basis, int regular_order);

  const CurvedTriangleMesh& mesh() const { return *mesh_; }
  BasisKind basis() const { return basis_; }
  std::size_t dof_count() const;
  // local shape functions per triangle
  int shape_count() const { return basis_ == BasisKind::constant ? 1 : 3; }
  int regular_order() const { return order_; }

  // rows for the given degrees of freedom; for constant bases every
  // triangle carries its position in slot 0
  TriangleTable table(std::span<const Index> dofs) const;

  // value of local shape p at barycentric coordinates (1-x-y, x, y)
  double shape(int p, const Vec2& xhat) const;

  //
  // cached regular samples, structure of arrays per triangle
  //
  std::size_t samples_per_triangle() const { return npts_; }
  std::size_t sample_offset(Index t) const { return static_cast<std::size_t>(t) * npts_; }
  const double* px() const { return px_.data(); }
  const double* py() const { return py_.data(); }
  const double* pz() const { return pz_.data(); }
  // weight * gramian * unit normal
  const double* nx() const { return nx_.data(); }
  const double* ny() const { return ny_.data(); }
  const double* nz() const { return nz_.data(); }
  // weight * gramian * shape p
  const double* weighted_shape(int p) const { return ws_[p].data(); }
  // shape p without weight
  const double* shape_values(int p) const { return sh_[p].data(); }

 private:
  const CurvedTriangleMesh* mesh_;
  BasisKind basis_;
  int order_;
  std::size_t npts_;
  std::vector<double> px_, py_, pz_, nx_, ny_, nz_;
  std::array<std::vector<double>, 3> ws_, sh_;
};

// row-major 3x3 local matrix of a triangle pair
using LocalMatrix = std::array<double, 9>;

//
// integrals of kernel times shape functions over triangle pairs
//
class PairIntegrator {
 public:
  // both spaces must live on the same mesh
  PairIntegrator(OperatorKind kind, const FunctionSpace& rows, const FunctionSpace& cols, int singular_order);

  OperatorKind kind() const { return kind_; }
  const FunctionSpace& row_space() const { return *rows_; }
  const FunctionSpace& col_space() const { return *cols_; }
  int singular_order() const { return q_sing_; }

  SingularityCase classify(Index t, Index s) const;
  LocalMatrix integrate(Index t, Index s) const { return integrate(t, s, classify(t, s)); }
  LocalMatrix integrate(Index t, Index s, const SingularityCase& c) const;

 private:
  LocalMatrix regular(Index t, Index s) const;
  LocalMatrix singular(Index t, Index s, const SingularityCase& c) const;

  OperatorKind kind_;
  const FunctionSpace* rows_;
  const FunctionSpace* cols_;
  int q_sing_;
  std::array<PairRule, 3> rules_;  // identical, edge, vertex
};

// adds a local matrix to the slots of a block
inline void scatter_add(Eigen::MatrixXd& block, const std::array<Index, 3>& row_slots,
                        const std::array<Index, 3>& col_slots, const LocalMatrix& local) {
  for (int p = 0; p < 3; ++p) {
    if (row_slots[p] == none) continue;
    for (int q = 0; q < 3; ++q)
      if (col_slots[q] != none) block(row_slots[p], col_slots[q]) += local[3 * p + q];
  }
}

struct DenseBlock {
  std::vector<Index> rows;
  std::vector<Index> cols;
  Eigen::MatrixXd values;
};

// pair-by-pair assembly in the order (row table, column table, slot)
DenseBlock assemble_galerkin_block(const PairIntegrator& integrator, std::span<const Index> rows,
                                   std::span<const Index> cols);

// full matrix in external ordering
Eigen::MatrixXd assemble_galerkin_matrix(const PairIntegrator& integrator);

//
// collocation in the mesh vertices
//
class CollocationIntegrator {
 public:
  CollocationIntegrator(OperatorKind kind, const FunctionSpace& cols, int singular_order);

  OperatorKind kind() const { return kind_; }
  const FunctionSpace& col_space() const { return *cols_; }

  // integral over triangle s of kernel(x_vertex, y) times the local shapes
  std::array<double, 3> integrate(Index vertex, Index s) const;

 private:
  OperatorKind kind_;
  const FunctionSpace* cols_;
  std::array<TriangleRule, 3> duffy_;
};

DenseBlock assemble_collocation_block(const CollocationIntegrator& integrator, std::span<const Index> rows,
                                      std::span<const Index> cols);
Eigen::MatrixXd assemble_collocation_matrix(const CollocationIntegrator& integrator);

// entries int phi_i psi_j over the surface
DenseBlock mass_block(const FunctionSpace& rows_space, const FunctionSpace& cols_space, std::span<const Index> rows,
                      std::span<const Index> cols, int order);
DenseBlock mass_block(const FunctionSpace& space, std::span<const Index> rows, std::span<const Index> cols,
                      int order);

//
// Green quadrature factors; z_nu, w_nu, n_nu from the rule of the row
// cluster, d the scaling parameter
//

// tau-hat x 2k: sqrt(w) int g(x,z) phi_i, -d sqrt(w) int dg/dn_z(x,z) phi_i
Eigen::MatrixXd green_row_factor(const FunctionSpace& space, const GreenRule& rule, double d,
                                 std::span<const Index> dofs);

// sigma-hat x 2k: sqrt(w) int dg/dn_z(z,y) phi_j, sqrt(w)/d int g(z,y) phi_j
Eigen::MatrixXd green_col_factor(const FunctionSpace& space, const GreenRule& rule, double d,
                                 std::span<const Index> dofs);

// row factor for point evaluation in mesh vertices
Eigen::MatrixXd green_point_factor(const CurvedTriangleMesh& mesh, const GreenRule& rule, double d,
                                   std::span<const Index> vertices);

}  // namespace gcah2

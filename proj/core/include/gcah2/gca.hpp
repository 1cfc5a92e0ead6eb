#pragma once
//
// Project     : gcah2
// Module      : gca.hpp
// Description : cross approximation of Green quadrature factors, nested
//               cluster bases and construction of GCA-H2-matrices
//

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gcah2/assembly.hpp"
#include "gcah2/batchexec.hpp"
#include "gcah2/clustering.hpp"

namespace gcah2 {

//
// interpolation by adaptively selected rows
//
struct Interpolation {
  std::vector<Index> pivots;  // row positions in the input matrix, selection order
  Eigen::MatrixXd V;          // rows x pivots, identity on the pivot rows
};

// cross approximation with full pivoting until the residual satisfies
// |R|_F <= eps |A|_F or max_rank pivots are chosen; max_rank < 0 means
// the number of columns
Interpolation aca_interpolation(const Eigen::MatrixXd& A, double eps, Index max_rank = -1);

struct GreenParameters {
  int order = 4;              // Gauss points per direction and face
  double delta_factor = 0.5;  // omega = box expanded by delta_factor * diam(box)
  double eps = 1e-5;          // cross approximation tolerance
};

// factor rows for the given degrees of freedom of a cluster with quadrature
// rule `rule` and scaling parameter d
using FactorFunction = std::function<Eigen::MatrixXd(const GreenRule& rule, double d, std::span<const Index> dofs)>;

FactorFunction galerkin_factor(const FunctionSpace& space);
FactorFunction collocation_factor(const CurvedTriangleMesh& mesh);

// Green rule and scaling parameter of a cluster
GreenRule cluster_green_rule(const ClusterNode& cluster, const GreenParameters& params);

//
// nested cluster basis
//
struct ClusterBasisNode {
  std::vector<Index> pivots;               // degrees of freedom
  Eigen::MatrixXd leaf;                    // leaves: cluster rows (tree order) x pivots
  std::array<Eigen::MatrixXd, 2> transfer; // internal nodes: child pivots x pivots
};

class ClusterBasis {
 public:
  ClusterBasis() = default;
  explicit ClusterBasis(std::vector<ClusterBasisNode> nodes) : nodes_(std::move(nodes)) {}

  const ClusterBasisNode& node(Index c) const { return nodes_[c]; }
  std::size_t size() const { return nodes_.size(); }
  Index rank(Index c) const { return static_cast<Index>(nodes_[c].pivots.size()); }

  // leaf matrix, or the children's expansions times the transfer matrices;
  // rows in the tree order of the cluster
  Eigen::MatrixXd expand(const ClusterTree& tree, Index c) const;

  std::size_t leaf_bytes() const;
  std::size_t transfer_bytes() const;
  Index max_rank() const;

 private:
  std::vector<ClusterBasisNode> nodes_;
};

// clusters marked inactive get rank zero; by default every cluster is active
ClusterBasis build_cluster_basis(const ClusterTree& tree, const FactorFunction& factor, const GreenParameters& params,
                                 unsigned threads = 0, const std::vector<char>* active = nullptr);

// clusters occurring in admissible blocks as row (or column) cluster, and their descendants
std::vector<char> active_clusters(const ClusterTree& tree, const BlockTree& blocks, bool columns);

// non-nested interpolation from the factor of all cluster rows
Interpolation direct_interpolation(const ClusterTree& tree, Index c, const FactorFunction& factor,
                                   const GreenParameters& params);

//
// block assembly through the batch executor or by collocation
//
struct BlockRequest {
  std::vector<Index> rows, cols;
  Eigen::MatrixXd* target;
};

struct AssemblyOptions {
  std::size_t capacity = default_batch_capacity;
  unsigned threads = 0;
  // tasks per executor before its results are scattered
  std::size_t tasks_per_round = std::size_t(1) << 21;
};

struct AssemblyStatistics {
  std::array<CaseStatistics, pair_kind_count> cases{};
  std::size_t executors = 0;
  bool homogeneous = true;
};

class BlockAssembler {
 public:
  explicit BlockAssembler(const PairIntegrator& galerkin, AssemblyOptions options = {});
  explicit BlockAssembler(const CollocationIntegrator& collocation, AssemblyOptions options = {});

  void assemble(std::vector<BlockRequest>& requests);
  const AssemblyStatistics& statistics() const { return stats_; }

 private:
  const PairIntegrator* galerkin_ = nullptr;
  const CollocationIntegrator* collocation_ = nullptr;
  AssemblyOptions options_;
  AssemblyStatistics stats_;
};

//
// GCA-H2-matrix
//
struct H2Matrix {
  ClusterTree row_tree, col_tree;
  BlockTree blocks;
  ClusterBasis row_basis, col_basis;
  // indexed by block number, empty for other blocks
  std::vector<Eigen::MatrixXd> coupling;
  std::vector<Eigen::MatrixXd> nearfield;

  std::size_t rows() const { return row_tree.dof_count(); }
  std::size_t cols() const { return col_tree.dof_count(); }
};

struct H2Options {
  double eta = 1.0;
  Index leaf_size = 32;
  GreenParameters green;
  AssemblyOptions assembly;
};

H2Matrix build_h2(ClusterTree row_tree, ClusterTree col_tree, BlockTree blocks, ClusterBasis row_basis,
                  ClusterBasis col_basis, BlockAssembler& assembler);

// trees, bases and blocks for a Galerkin discretization
H2Matrix build_galerkin_h2(const PairIntegrator& integrator, const H2Options& options,
                           AssemblyStatistics* stats = nullptr);
// rows in the mesh vertices, columns in the linear basis
H2Matrix build_collocation_h2(const CollocationIntegrator& integrator, const H2Options& options);

//
// comparison formats on the same block tree
//

// V_tau G|tau~ x sigma-hat in admissible blocks
struct FlatGCAMatrix {
  ClusterTree row_tree, col_tree;
  BlockTree blocks;
  std::vector<Interpolation> row_interpolation;  // per row cluster, rows in tree order
  std::vector<Eigen::MatrixXd> pivot_rows;       // per admissible block
  std::vector<Eigen::MatrixXd> nearfield;
};

FlatGCAMatrix build_flat_gca(const PairIntegrator& integrator, const H2Options& options);

// A_tau B_tau,sigma^T in admissible blocks
struct GreenMatrix {
  ClusterTree row_tree, col_tree;
  BlockTree blocks;
  std::vector<Eigen::MatrixXd> row_factor;  // per row cluster, rows in tree order
  std::vector<Eigen::MatrixXd> col_factor;  // per admissible block, rows in tree order
  std::vector<Eigen::MatrixXd> nearfield;
};

GreenMatrix build_green(const PairIntegrator& integrator, const H2Options& options);

}  // namespace gcah2

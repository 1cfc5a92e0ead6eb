#pragma once
//
// Project     : gcah2
// Module      : clustering.hpp
// Description : cluster tree over the degrees of freedom and the block tree
//

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gcah2/bounding_box.hpp"
#include "gcah2/geometry.hpp"

namespace gcah2 {

struct ClusterNode {
  Index begin = 0, end = 0;  // range in the tree ordering
  BoundingBox box;           // contains the supports of all basis functions
  std::array<Index, 2> children{none, none};
  Index parent = none;
  int level = 0;

  bool is_leaf() const { return children[0] == none; }
  Index size() const { return end - begin; }
};

//
// binary cluster tree; node 0 is the root
//
class ClusterTree {
 public:
  ClusterTree(std::vector<ClusterNode> nodes, std::vector<Index> permutation);

  const ClusterNode& node(Index c) const { return nodes_[c]; }
  const std::vector<ClusterNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  Index root() const { return 0; }

  // tree position -> degree of freedom
  const std::vector<Index>& permutation() const { return permutation_; }
  // degree of freedom -> tree position
  const std::vector<Index>& inverse_permutation() const { return inverse_; }
  std::size_t dof_count() const { return permutation_.size(); }

  // degrees of freedom of a cluster
  std::span<const Index> indices(Index c) const {
    return {permutation_.data() + nodes_[c].begin, permutation_.data() + nodes_[c].end};
  }

  int depth() const { return depth_; }
  std::size_t leaf_count() const;
  // nodes grouped by level, root first
  const std::vector<std::vector<Index>>& levels() const { return levels_; }

 private:
  std::vector<ClusterNode> nodes_;
  std::vector<Index> permutation_;
  std::vector<Index> inverse_;
  std::vector<std::vector<Index>> levels_;
  int depth_ = 0;
};

// box containing the support of each basis function
std::vector<BoundingBox> support_boxes(const CurvedTriangleMesh& mesh, BasisKind basis);

// splits along the longest box axis at the median of the reference points
ClusterTree build_cluster_tree(const CurvedTriangleMesh& mesh, BasisKind basis, Index leaf_size);

// max{diam(a), diam(b)} <= 2 eta dist(a, b)
bool admissible(const BoundingBox& a, const BoundingBox& b, double eta);

enum class BlockState { admissible, inadmissible, subdivided };

struct BlockNode {
  Index row = none, col = none;
  BlockState state = BlockState::subdivided;
  std::vector<Index> children;
};

class BlockTree {
 public:
  BlockTree() = default;
  BlockTree(std::vector<BlockNode> nodes);

  const BlockNode& node(Index b) const { return nodes_[b]; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Index>& admissible_leaves() const { return admissible_; }
  const std::vector<Index>& inadmissible_leaves() const { return inadmissible_; }

 private:
  std::vector<BlockNode> nodes_;
  std::vector<Index> admissible_;
  std::vector<Index> inadmissible_;
};

BlockTree build_block_tree(const ClusterTree& rows, const ClusterTree& cols, double eta);

struct TreeStatistics {
  std::size_t dofs, clusters, leaves, blocks, admissible, inadmissible;
  int depth;
  Index max_leaf_size;
};

TreeStatistics tree_statistics(const ClusterTree& tree, const BlockTree& blocks);
// header line plus one row
std::string to_csv(const TreeStatistics& stats);

}  // namespace gcah2

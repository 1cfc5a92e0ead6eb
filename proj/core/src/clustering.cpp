//
// Project     : gcah2
// Module      : clustering.cpp
// Description : cluster and block tree construction
//

#include "gcah2/clustering.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace gcah2 {

ClusterTree::ClusterTree(std::vector<ClusterNode> nodes, std::vector<Index> permutation)
    : nodes_(std::move(nodes)), permutation_(std::move(permutation)), inverse_(permutation_.size()) {
  for (std::size_t p = 0; p < permutation_.size(); ++p) inverse_[permutation_[p]] = static_cast<Index>(p);
  for (std::size_t c = 0; c < nodes_.size(); ++c) {
    const int level = nodes_[c].level;
    depth_ = std::max(depth_, level);
    if (levels_.size() <= static_cast<std::size_t>(level)) levels_.resize(level + 1);
    levels_[level].push_back(static_cast<Index>(c));
  }
}

std::size_t ClusterTree::leaf_count() const {
  return std::count_if(nodes_.begin(), nodes_.end(), [](const ClusterNode& n) { return n.is_leaf(); });
}

std::vector<BoundingBox> support_boxes(const CurvedTriangleMesh& mesh, BasisKind basis) {
  std::vector<BoundingBox> tri_box(mesh.triangle_count());
  for (std::size_t t = 0; t < tri_box.size(); ++t)
    for (const auto& p : mesh.control_points(static_cast<Index>(t))) tri_box[t].extend(p);

  if (basis == BasisKind::constant) return tri_box;

  std::vector<BoundingBox> boxes(mesh.vertex_count());
  const auto& stars = mesh.base().stars();
  for (std::size_t v = 0; v < boxes.size(); ++v)
    for (Index t : stars[static_cast<Index>(v)]) boxes[v].extend(tri_box[t]);
  return boxes;
}

ClusterTree build_cluster_tree(const CurvedTriangleMesh& mesh, BasisKind basis, Index leaf_size) {
  if (leaf_size < 1) throw ParameterError("build_cluster_tree: leaf size must be positive");

  const auto boxes = support_boxes(mesh, basis);
  std::vector<Vec3> ref(boxes.size());
  if (basis == BasisKind::constant) {
    for (std::size_t t = 0; t < ref.size(); ++t) {
      const auto& tri = mesh.base().triangle(static_cast<Index>(t));
      ref[t] = (mesh.base().vertex(tri[0]) + mesh.base().vertex(tri[1]) + mesh.base().vertex(tri[2])) / 3.0;
    }
  } else {
    ref = mesh.base().vertices();
  }

  std::vector<Index> perm(boxes.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<ClusterNode> nodes;

  // children stored after their parent
  nodes.push_back({0, static_cast<Index>(perm.size()), {}, {none, none}, none, 0});
  std::vector<Index> stack{0};
  while (!stack.empty()) {
    const Index c = stack.back();
    stack.pop_back();
    auto& node = nodes[c];
    for (Index p = node.begin; p < node.end; ++p) node.box.extend(boxes[perm[p]]);
    if (node.size() <= leaf_size) continue;

    const int axis = node.box.longest_axis();
    const Index mid = node.begin + node.size() / 2;
    // ties broken by index keep the construction deterministic
    std::nth_element(perm.begin() + node.begin, perm.begin() + mid, perm.begin() + node.end, [&](Index a, Index b) {
      return ref[a][axis] < ref[b][axis] || (ref[a][axis] == ref[b][axis] && a < b);
    });
    std::sort(perm.begin() + node.begin, perm.begin() + mid);
    std::sort(perm.begin() + mid, perm.begin() + node.end);

    const Index begin = node.begin, end = node.end;
    const int level = node.level + 1;
    const Index left = static_cast<Index>(nodes.size());
    nodes.push_back({begin, mid, {}, {none, none}, c, level});
    nodes.push_back({mid, end, {}, {none, none}, c, level});
    nodes[c].children = {left, left + 1};
    stack.push_back(left + 1);
    stack.push_back(left);
  }
  return ClusterTree(std::move(nodes), std::move(perm));
}

bool admissible(const BoundingBox& a, const BoundingBox& b, double eta) {
  if (!(eta > 0.0)) throw ParameterError("admissible: eta must be positive");
  return std::max(a.diameter(), b.diameter()) <= 2.0 * eta * distance(a, b);
}

BlockTree::BlockTree(std::vector<BlockNode> nodes) : nodes_(std::move(nodes)) {
  for (std::size_t b = 0; b < nodes_.size(); ++b) {
    if (nodes_[b].state == BlockState::admissible) admissible_.push_back(static_cast<Index>(b));
    if (nodes_[b].state == BlockState::inadmissible) inadmissible_.push_back(static_cast<Index>(b));
  }
}

BlockTree build_block_tree(const ClusterTree& rows, const ClusterTree& cols, double eta) {
  if (!(eta > 0.0)) throw ParameterError("build_block_tree: eta must be positive");

  std::vector<BlockNode> nodes;
  nodes.push_back({rows.root(), cols.root(), BlockState::subdivided, {}});
  // breadth-first keeps the children of a block contiguous
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const Index r = nodes[b].row, c = nodes[b].col;
    const auto& rn = rows.node(r);
    const auto& cn = cols.node(c);
    if (admissible(rn.box, cn.box, eta)) {
      nodes[b].state = BlockState::admissible;
      continue;
    }
    if (rn.is_leaf() && cn.is_leaf()) {
      nodes[b].state = BlockState::inadmissible;
      continue;
    }

    std::vector<Index> row_parts, col_parts;
    if (rn.is_leaf()) row_parts = {r};
    else row_parts = {rn.children[0], rn.children[1]};
    if (cn.is_leaf()) col_parts = {c};
    else col_parts = {cn.children[0], cn.children[1]};

    std::vector<Index> children;
    for (Index rr : row_parts)
      for (Index cc : col_parts) {
        children.push_back(static_cast<Index>(nodes.size()));
        nodes.push_back({rr, cc, BlockState::subdivided, {}});
      }
    nodes[b].children = std::move(children);
  }
  return BlockTree(std::move(nodes));
}

TreeStatistics tree_statistics(const ClusterTree& tree, const BlockTree& blocks) {
  TreeStatistics s{};
  s.dofs = tree.dof_count();
  s.clusters = tree.size();
  s.leaves = tree.leaf_count();
  s.blocks = blocks.size();
  s.admissible = blocks.admissible_leaves().size();
  s.inadmissible = blocks.inadmissible_leaves().size();
  s.depth = tree.depth();
  s.max_leaf_size = 0;
  for (const auto& n : tree.nodes())
    if (n.is_leaf()) s.max_leaf_size = std::max(s.max_leaf_size, n.size());
  return s;
}

std::string to_csv(const TreeStatistics& s) {
  std::ostringstream out;
  out << "dofs,clusters,leaves,depth,max_leaf_size,blocks,admissible_leaves,inadmissible_leaves\n"
      << s.dofs << ',' << s.clusters << ',' << s.leaves << ',' << s.depth << ',' << s.max_leaf_size << ','
      << s.blocks << ',' << s.admissible << ',' << s.inadmissible << '\n';
  return out.str();
}

}  // namespace gcah2

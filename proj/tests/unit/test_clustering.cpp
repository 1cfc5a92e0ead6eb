//
// Project     : gcah2
// Module      : test_clustering.cpp
// Description : cluster trees, admissibility and block trees
//

#include <algorithm>
#include <random>

#include "doctest.h"
#include "gcah2/clustering.hpp"
#include "oracles.hpp"

using namespace gcah2;

namespace {

Vec3 reference_point(const CurvedTriangleMesh& mesh, BasisKind basis, Index dof) {
  const auto& base = mesh.base();
  if (basis == BasisKind::linear) return base.vertex(dof);
  const auto& t = base.triangle(dof);
  return (base.vertex(t[0]) + base.vertex(t[1]) + base.vertex(t[2])) / 3.0;
}

void check_tree(const CurvedTriangleMesh& mesh, BasisKind basis, Index leaf_size) {
  const auto tree = build_cluster_tree(mesh, basis, leaf_size);
  const std::size_t n = basis == BasisKind::constant ? mesh.triangle_count() : mesh.vertex_count();
  REQUIRE(tree.dof_count() == n);

  // permutation is a bijection
  auto sorted = tree.permutation();
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == test::iota_indices(n));
  for (std::size_t p = 0; p < n; ++p) CHECK(tree.inverse_permutation()[tree.permutation()[p]] == static_cast<Index>(p));

  const auto& root = tree.node(tree.root());
  CHECK(root.begin == 0);
  CHECK(root.end == static_cast<Index>(n));

  // brute-force support: vertices and control points of all adjacent triangles
  std::vector<std::vector<Index>> support(n);
  for (Index t = 0; t < static_cast<Index>(mesh.triangle_count()); ++t) {
    if (basis == BasisKind::constant)
      support[t].push_back(t);
    else
      for (Index v : mesh.base().triangle(t)) support[v].push_back(t);
  }

  std::vector<char> seen(n, 0);
  for (Index c = 0; c < static_cast<Index>(tree.size()); ++c) {
    const auto& node = tree.node(c);
    for (Index dof : tree.indices(c))
      for (Index t : support[dof]) {
        for (Index v : mesh.base().triangle(t)) CHECK(node.box.contains(mesh.base().vertex(v), 1e-15));
        for (const auto& cp : mesh.control_points(t)) CHECK(node.box.contains(cp, 1e-15));
      }
    if (node.is_leaf()) {
      CHECK(node.size() <= leaf_size);
      CHECK(node.size() >= 1);
      for (Index dof : tree.indices(c)) ++seen[dof];
      continue;
    }
    const auto& a = tree.node(node.children[0]);
    const auto& b = tree.node(node.children[1]);
    CHECK(a.parent == c);
    CHECK(b.parent == c);
    CHECK(a.level == node.level + 1);
    CHECK(a.begin == node.begin);
    CHECK(a.end == b.begin);
    CHECK(b.end == node.end);
    CHECK(a.size() >= 1);
    CHECK(b.size() >= 1);
    // median split along the longest axis of the node box
    const int axis = node.box.longest_axis();
    double left = -1e300, right = 1e300;
    for (Index dof : tree.indices(node.children[0])) left = std::max(left, reference_point(mesh, basis, dof)[axis]);
    for (Index dof : tree.indices(node.children[1])) right = std::min(right, reference_point(mesh, basis, dof)[axis]);
    CHECK(left <= right);
    CHECK(std::abs(a.size() - b.size()) <= 1);
  }
  // leaves partition the index set
  for (char s : seen) CHECK(s == 1);
}

}  // namespace

TEST_CASE("single leaf tree") {
  const auto mesh = to_curved(build_sphere_mesh(0), false);
  const auto tree = build_cluster_tree(mesh, BasisKind::constant, 8);
  CHECK(tree.size() == 1);
  CHECK(tree.node(0).is_leaf());
  CHECK(tree.node(0).size() == 8);
  CHECK(tree.leaf_count() == 1);
  CHECK_THROWS_AS(build_cluster_tree(mesh, BasisKind::constant, 0), ParameterError);
}

TEST_CASE("cluster tree invariants") {
  const auto plane = to_curved(build_sphere_mesh(2), false);
  const auto curved = to_curved(build_sphere_mesh(3), true);
  for (Index leaf : {1, 7, 16, 32}) {
    check_tree(plane, BasisKind::constant, leaf);
    check_tree(plane, BasisKind::linear, leaf);
    check_tree(curved, BasisKind::linear, leaf);
  }
  const auto tree = build_cluster_tree(plane, BasisKind::constant, 16);
  CHECK(tree.dof_count() == 128);
  // levels cover every node once
  std::size_t count = 0;
  for (const auto& level : tree.levels()) count += level.size();
  CHECK(count == tree.size());
  CHECK(static_cast<int>(tree.levels().size()) == tree.depth() + 1);
}

TEST_CASE("admissibility condition") {
  const auto a = BoundingBox::from_corners(Vec3(0, 0, 0), Vec3(1, 1, 1));
  const auto b = BoundingBox::from_corners(Vec3(2, 2, 2), Vec3(3, 3, 3));
  CHECK_FALSE(admissible(a, a, 1.0));
  CHECK(std::abs(distance(a, b) - std::sqrt(3.0)) < 1e-15);
  CHECK(admissible(a, b, 1.0));
  CHECK_FALSE(admissible(a, b, 0.25));
  CHECK_THROWS_AS(admissible(a, b, 0.0), ParameterError);
  CHECK_THROWS_AS(admissible(a, b, -1.0), ParameterError);

  // touching boxes have distance zero
  const auto c = BoundingBox::from_corners(Vec3(1, 0, 0), Vec3(2, 1, 1));
  CHECK(distance(a, c) == 0.0);
  CHECK_FALSE(admissible(a, c, 100.0));

  // symmetry and monotonicity in eta on random boxes
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    Vec3 l1(u(gen), u(gen), u(gen)), l2(u(gen), u(gen), u(gen));
    const auto p = BoundingBox::from_corners(l1, l1 + Vec3(w(gen), w(gen), w(gen)));
    const auto q = BoundingBox::from_corners(l2, l2 + Vec3(w(gen), w(gen), w(gen)));
    const double eta = 0.1 + 2.0 * w(gen);
    CHECK(admissible(p, q, eta) == admissible(q, p, eta));
    if (admissible(p, q, eta)) CHECK(admissible(p, q, 2.0 * eta));
    // formula
    const double lhs = std::max(p.diameter(), q.diameter());
    CHECK(admissible(p, q, eta) == (lhs <= 2.0 * eta * distance(p, q)));
  }
}

TEST_CASE("block tree partitions the index square") {
  const auto mesh = to_curved(build_sphere_mesh(2), false);
  for (double eta : {0.5, 1.0, 2.0}) {
    const auto tree = build_cluster_tree(mesh, BasisKind::constant, 8);
    const auto blocks = build_block_tree(tree, tree, eta);
    const std::size_t n = tree.dof_count();
    std::vector<int> cover(n * n, 0);
    std::size_t area = 0;
    for (Index b = 0; b < static_cast<Index>(blocks.size()); ++b) {
      const auto& node = blocks.node(b);
      if (node.state == BlockState::subdivided) {
        CHECK_FALSE(node.children.empty());
        continue;
      }
      const auto& r = tree.node(node.row);
      const auto& c = tree.node(node.col);
      area += static_cast<std::size_t>(r.size()) * c.size();
      for (Index i = r.begin; i < r.end; ++i)
        for (Index j = c.begin; j < c.end; ++j) ++cover[i * n + j];
      if (node.state == BlockState::admissible) {
        CHECK(admissible(r.box, c.box, eta));
      } else {
        CHECK(r.is_leaf());
        CHECK(c.is_leaf());
      }
    }
    CHECK(area == n * n);
    for (int v : cover) CHECK(v == 1);
    CHECK(blocks.node(0).row == tree.root());
    CHECK(blocks.node(0).state != BlockState::admissible);
  }
}

TEST_CASE("admissible leaves on the level-3 sphere") {
  const auto mesh = to_curved(build_sphere_mesh(3), false);
  const auto tree = build_cluster_tree(mesh, BasisKind::constant, 16);
  const auto blocks = build_block_tree(tree, tree, 1.0);
  CHECK_FALSE(blocks.admissible_leaves().empty());
  for (Index b : blocks.admissible_leaves()) {
    const auto& node = blocks.node(b);
    const auto& r = tree.node(node.row).box;
    const auto& c = tree.node(node.col).box;
    CHECK(std::max(r.diameter(), c.diameter()) <= 2.0 * distance(r, c));
  }
  // subdivision splits the clusters that have children
  for (Index b = 0; b < static_cast<Index>(blocks.size()); ++b) {
    const auto& node = blocks.node(b);
    if (node.state != BlockState::subdivided) continue;
    const bool rs = !tree.node(node.row).is_leaf(), cs = !tree.node(node.col).is_leaf();
    CHECK(node.children.size() == static_cast<std::size_t>((rs ? 2 : 1) * (cs ? 2 : 1)));
  }
}

TEST_CASE("block count grows linearly") {
  std::vector<double> ratio;
  for (int level = 2; level <= 5; ++level) {
    const auto mesh = to_curved(build_sphere_mesh(level), false);
    const auto tree = build_cluster_tree(mesh, BasisKind::constant, 16);
    const auto blocks = build_block_tree(tree, tree, 1.0);
    const double leaves = static_cast<double>(blocks.admissible_leaves().size() + blocks.inadmissible_leaves().size());
    ratio.push_back(leaves / tree.dof_count());
  }
  for (double r : ratio) CHECK(r <= 30.0);
  CHECK(ratio.back() <= 1.5 * ratio[ratio.size() - 2]);
}

TEST_CASE("tree statistics") {
  const auto mesh = to_curved(build_sphere_mesh(3), false);
  const auto tree = build_cluster_tree(mesh, BasisKind::constant, 16);
  const auto blocks = build_block_tree(tree, tree, 1.0);
  const auto s = tree_statistics(tree, blocks);
  CHECK(s.dofs == 512);
  CHECK(s.clusters == tree.size());
  CHECK(s.leaves == tree.leaf_count());
  CHECK(s.admissible == blocks.admissible_leaves().size());
  CHECK(s.inadmissible == blocks.inadmissible_leaves().size());
  CHECK(s.max_leaf_size <= 16);
  const auto csv = to_csv(s);
  CHECK(csv.find('\n') != std::string::npos);
  CHECK(csv.rfind("dofs,", 0) == 0);
}

//
// Project     : gcah2
// Module      : gca.cpp
// Description : cross approximation, cluster bases and H2 construction
//

#include "gcah2/gca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace gcah2 {

//////////////////////////////////////////////////////////////////////
//
// cross approximation
//
//////////////////////////////////////////////////////////////////////

Interpolation aca_interpolation(const Eigen::MatrixXd& A, double eps, Index max_rank) {
  if (!(eps > 0.0)) throw ParameterError("aca_interpolation: eps must be positive");
  const Index n = static_cast<Index>(A.rows()), w = static_cast<Index>(A.cols());
  if (max_rank < 0) max_rank = w;
  max_rank = std::min({max_rank, n, w});

  Interpolation out;
  const double norm = A.norm();
  if (norm == 0.0 || max_rank == 0) {
    out.V.resize(n, 0);
    return out;
  }

  Eigen::MatrixXd R = A;
  Eigen::MatrixXd U(n, max_rank);
  for (Index k = 0; k < max_rank; ++k) {
    if (R.norm() <= eps * norm) break;
    Eigen::Index i = 0, j = 0;
    const double pmax = R.cwiseAbs().maxCoeff(&i, &j);
    if (pmax == 0.0) break;
    U.col(k) = R.col(j) / R(i, j);
    const Eigen::RowVectorXd r = R.row(i);
    R.noalias() -= U.col(k) * r;
    out.pivots.push_back(static_cast<Index>(i));
  }

  // U = V L with L = U restricted to the pivot rows, unit lower triangular
  const Index r = static_cast<Index>(out.pivots.size());
  Eigen::MatrixXd L(r, r);
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < r; ++b) L(a, b) = U(out.pivots[a], b);
  out.V = U.leftCols(r);
  L.triangularView<Eigen::UnitLower>().solveInPlace<Eigen::OnTheRight>(out.V);
  for (Index a = 0; a < r; ++a) {
    out.V.row(out.pivots[a]).setZero();
    out.V(out.pivots[a], a) = 1.0;
  }
  return out;
}

FactorFunction galerkin_factor(const FunctionSpace& space) {
  return [&space](const GreenRule& rule, double d, std::span<const Index> dofs) {
    return green_row_factor(space, rule, d, dofs);
  };
}

FactorFunction collocation_factor(const CurvedTriangleMesh& mesh) {
  return [&mesh](const GreenRule& rule, double d, std::span<const Index> dofs) {
    return green_point_factor(mesh, rule, d, dofs);
  };
}

GreenRule cluster_green_rule(const ClusterNode& cluster, const GreenParameters& params) {
  return green_box_rule(cluster.box, params.delta_factor * cluster.box.diameter(), params.order);
}

//////////////////////////////////////////////////////////////////////
//
// cluster bases
//
//////////////////////////////////////////////////////////////////////

Eigen::MatrixXd ClusterBasis::expand(const ClusterTree& tree, Index c) const {
  const auto& tn = tree.node(c);
  const auto& bn = nodes_[c];
  if (tn.is_leaf()) return bn.leaf;
  const Index c1 = tn.children[0], c2 = tn.children[1];
  Eigen::MatrixXd V(tn.size(), bn.pivots.size());
  V.topRows(tree.node(c1).size()) = expand(tree, c1) * bn.transfer[0];
  V.bottomRows(tree.node(c2).size()) = expand(tree, c2) * bn.transfer[1];
  return V;
}

std::size_t ClusterBasis::leaf_bytes() const {
  std::size_t b = 0;
  for (const auto& n : nodes_) b += sizeof(double) * n.leaf.size();
  return b;
}

std::size_t ClusterBasis::transfer_bytes() const {
  std::size_t b = 0;
  for (const auto& n : nodes_) b += sizeof(double) * (n.transfer[0].size() + n.transfer[1].size());
  return b;
}

Index ClusterBasis::max_rank() const {
  Index r = 0;
  for (const auto& n : nodes_) r = std::max(r, static_cast<Index>(n.pivots.size()));
  return r;
}

std::vector<char> active_clusters(const ClusterTree& tree, const BlockTree& blocks, bool columns) {
  std::vector<char> active(tree.size(), 0);
  for (Index b : blocks.admissible_leaves()) active[columns ? blocks.node(b).col : blocks.node(b).row] = 1;
  // parents precede their children
  for (std::size_t c = 0; c < tree.size(); ++c) {
    const Index p = tree.node(static_cast<Index>(c)).parent;
    if (p != none && active[p]) active[c] = 1;
  }
  return active;
}

ClusterBasis build_cluster_basis(const ClusterTree& tree, const FactorFunction& factor, const GreenParameters& params,
                                 unsigned threads, const std::vector<char>* active) {
  std::vector<ClusterBasisNode> nodes(tree.size());
  const auto& levels = tree.levels();
  for (auto level = levels.rbegin(); level != levels.rend(); ++level) {
    const auto& clusters = *level;
    parallel_for(
        clusters.size(),
        [&](std::size_t k) {
          const Index c = clusters[k];
          const auto& tn = tree.node(c);
          auto& bn = nodes[c];
          if (active && !(*active)[c]) {
            if (tn.is_leaf()) bn.leaf.resize(tn.size(), 0);
            for (int i = 0; i < 2 && !tn.is_leaf(); ++i)
              bn.transfer[i].resize(nodes[tn.children[i]].pivots.size(), 0);
            return;
          }
          const GreenRule rule = cluster_green_rule(tn, params);
          const double d = tn.box.diameter();

          if (tn.is_leaf()) {
            const auto dofs = tree.indices(c);
            auto ip = aca_interpolation(factor(rule, d, dofs), params.eps);
            for (Index p : ip.pivots) bn.pivots.push_back(dofs[p]);
            bn.leaf = std::move(ip.V);
            return;
          }

          const auto& p1 = nodes[tn.children[0]].pivots;
          const auto& p2 = nodes[tn.children[1]].pivots;
          std::vector<Index> candidates(p1);
          candidates.insert(candidates.end(), p2.begin(), p2.end());
          Interpolation ip;
          if (candidates.empty()) ip.V.resize(0, 0);
          else ip = aca_interpolation(factor(rule, d, candidates), params.eps);
          for (Index p : ip.pivots) bn.pivots.push_back(candidates[p]);
          const Index r = static_cast<Index>(ip.pivots.size());
          bn.transfer[0] = ip.V.topRows(p1.size()).leftCols(r);
          bn.transfer[1] = ip.V.bottomRows(p2.size()).leftCols(r);
        },
        threads);
  }
  return ClusterBasis(std::move(nodes));
}

Interpolation direct_interpolation(const ClusterTree& tree, Index c, const FactorFunction& factor,
                                   const GreenParameters& params) {
  const auto& tn = tree.node(c);
  return aca_interpolation(factor(cluster_green_rule(tn, params), tn.box.diameter(), tree.indices(c)), params.eps);
}

//////////////////////////////////////////////////////////////////////
//
// block assembly
//
//////////////////////////////////////////////////////////////////////

BlockAssembler::BlockAssembler(const PairIntegrator& galerkin, AssemblyOptions options)
    : galerkin_(&galerkin), options_(options) {}

BlockAssembler::BlockAssembler(const CollocationIntegrator& collocation, AssemblyOptions options)
    : collocation_(&collocation), options_(options) {}

void BlockAssembler::assemble(std::vector<BlockRequest>& requests) {
  if (collocation_) {
    for (auto& r : requests) *r.target = assemble_collocation_block(*collocation_, r.rows, r.cols).values;
    return;
  }

  const auto& rs = galerkin_->row_space();
  const auto& cs = galerkin_->col_space();
  std::size_t next = 0;
  while (next < requests.size()) {
    BatchExecutor executor(*galerkin_, {options_.capacity, options_.threads});
    std::vector<std::pair<Index, std::size_t>> owned;
    std::size_t tasks = 0;
    while (next < requests.size() && tasks < options_.tasks_per_round) {
      auto& r = requests[next];
      const auto rt = rs.table(r.rows);
      const auto ct = cs.table(r.cols);
      const Index id = executor.add_block(static_cast<Index>(r.rows.size()), static_cast<Index>(r.cols.size()));
      executor.enqueue_block(id, rt, ct);
      tasks += rt.size() * ct.size();
      owned.emplace_back(id, next);
      ++next;
    }
    executor.finalize();
    for (const auto& [id, k] : owned) *requests[k].target = executor.take_block(id);

    ++stats_.executors;
    for (int c = 0; c < pair_kind_count; ++c) {
      stats_.cases[c].batches += executor.statistics()[c].batches;
      stats_.cases[c].tasks += executor.statistics()[c].tasks;
      stats_.cases[c].seconds += executor.statistics()[c].seconds;
    }
    for (const auto& b : executor.batches()) stats_.homogeneous = stats_.homogeneous && b.homogeneous;
  }
}

//////////////////////////////////////////////////////////////////////
//
// H2 construction
//
//////////////////////////////////////////////////////////////////////

namespace {

std::vector<Index> to_vector(std::span<const Index> s) { return {s.begin(), s.end()}; }

void nearfield_requests(const ClusterTree& rt, const ClusterTree& ct, const BlockTree& blocks,
                        std::vector<Eigen::MatrixXd>& nearfield, std::vector<BlockRequest>& requests) {
  nearfield.resize(blocks.size());
  for (Index b : blocks.inadmissible_leaves()) {
    const auto& bn = blocks.node(b);
    requests.push_back({to_vector(rt.indices(bn.row)), to_vector(ct.indices(bn.col)), &nearfield[b]});
  }
}

}  // namespace

H2Matrix build_h2(ClusterTree row_tree, ClusterTree col_tree, BlockTree blocks, ClusterBasis row_basis,
                  ClusterBasis col_basis, BlockAssembler& assembler) {
  H2Matrix h{std::move(row_tree), std::move(col_tree), std::move(blocks), std::move(row_basis), std::move(col_basis),
             {}, {}};
  h.coupling.resize(h.blocks.size());

  std::vector<BlockRequest> requests;
  for (Index b : h.blocks.admissible_leaves()) {
    const auto& bn = h.blocks.node(b);
    requests.push_back({h.row_basis.node(bn.row).pivots, h.col_basis.node(bn.col).pivots, &h.coupling[b]});
  }
  nearfield_requests(h.row_tree, h.col_tree, h.blocks, h.nearfield, requests);
  assembler.assemble(requests);
  return h;
}

H2Matrix build_galerkin_h2(const PairIntegrator& integrator, const H2Options& options, AssemblyStatistics* stats) {
  const auto& rs = integrator.row_space();
  const auto& cs = integrator.col_space();
  auto rt = build_cluster_tree(rs.mesh(), rs.basis(), options.leaf_size);
  auto ct = build_cluster_tree(cs.mesh(), cs.basis(), options.leaf_size);
  auto blocks = build_block_tree(rt, ct, options.eta);
  const auto ra = active_clusters(rt, blocks, false), ca = active_clusters(ct, blocks, true);
  auto rb = build_cluster_basis(rt, galerkin_factor(rs), options.green, options.assembly.threads, &ra);
  auto cb = build_cluster_basis(ct, galerkin_factor(cs), options.green, options.assembly.threads, &ca);
  BlockAssembler assembler(integrator, options.assembly);
  auto h = build_h2(std::move(rt), std::move(ct), std::move(blocks), std::move(rb), std::move(cb), assembler);
  if (stats) *stats = assembler.statistics();
  return h;
}

H2Matrix build_collocation_h2(const CollocationIntegrator& integrator, const H2Options& options) {
  const auto& cs = integrator.col_space();
  auto rt = build_cluster_tree(cs.mesh(), BasisKind::linear, options.leaf_size);
  auto ct = build_cluster_tree(cs.mesh(), BasisKind::linear, options.leaf_size);
  auto blocks = build_block_tree(rt, ct, options.eta);
  const auto ra = active_clusters(rt, blocks, false), ca = active_clusters(ct, blocks, true);
  auto rb = build_cluster_basis(rt, collocation_factor(cs.mesh()), options.green, options.assembly.threads, &ra);
  auto cb = build_cluster_basis(ct, galerkin_factor(cs), options.green, options.assembly.threads, &ca);
  BlockAssembler assembler(integrator, options.assembly);
  return build_h2(std::move(rt), std::move(ct), std::move(blocks), std::move(rb), std::move(cb), assembler);
}

//////////////////////////////////////////////////////////////////////
//
// comparison formats
//
//////////////////////////////////////////////////////////////////////

FlatGCAMatrix build_flat_gca(const PairIntegrator& integrator, const H2Options& options) {
  const auto& rs = integrator.row_space();
  const auto& cs = integrator.col_space();
  FlatGCAMatrix f{build_cluster_tree(rs.mesh(), rs.basis(), options.leaf_size),
                  build_cluster_tree(cs.mesh(), cs.basis(), options.leaf_size), {}, {}, {}, {}};
  f.blocks = build_block_tree(f.row_tree, f.col_tree, options.eta);

  std::vector<char> used(f.row_tree.size(), 0);
  for (Index b : f.blocks.admissible_leaves()) used[f.blocks.node(b).row] = 1;
  f.row_interpolation.resize(f.row_tree.size());
  const auto factor = galerkin_factor(rs);
  parallel_for(
      f.row_tree.size(),
      [&](std::size_t c) {
        if (used[c]) f.row_interpolation[c] = direct_interpolation(f.row_tree, static_cast<Index>(c), factor, options.green);
      },
      options.assembly.threads);

  f.pivot_rows.resize(f.blocks.size());
  std::vector<BlockRequest> requests;
  for (Index b : f.blocks.admissible_leaves()) {
    const auto& bn = f.blocks.node(b);
    const auto dofs = f.row_tree.indices(bn.row);
    std::vector<Index> rows;
    for (Index p : f.row_interpolation[bn.row].pivots) rows.push_back(dofs[p]);
    requests.push_back({std::move(rows), to_vector(f.col_tree.indices(bn.col)), &f.pivot_rows[b]});
  }
  nearfield_requests(f.row_tree, f.col_tree, f.blocks, f.nearfield, requests);
  BlockAssembler assembler(integrator, options.assembly);
  assembler.assemble(requests);
  return f;
}

GreenMatrix build_green(const PairIntegrator& integrator, const H2Options& options) {
  const auto& rs = integrator.row_space();
  const auto& cs = integrator.col_space();
  GreenMatrix g{build_cluster_tree(rs.mesh(), rs.basis(), options.leaf_size),
                build_cluster_tree(cs.mesh(), cs.basis(), options.leaf_size), {}, {}, {}, {}};
  g.blocks = build_block_tree(g.row_tree, g.col_tree, options.eta);

  std::vector<char> used(g.row_tree.size(), 0);
  for (Index b : g.blocks.admissible_leaves()) used[g.blocks.node(b).row] = 1;
  g.row_factor.resize(g.row_tree.size());
  parallel_for(
      g.row_tree.size(),
      [&](std::size_t c) {
        if (!used[c]) return;
        const auto& tn = g.row_tree.node(static_cast<Index>(c));
        g.row_factor[c] = green_row_factor(rs, cluster_green_rule(tn, options.green), tn.box.diameter(),
                                           g.row_tree.indices(static_cast<Index>(c)));
      },
      options.assembly.threads);

  g.col_factor.resize(g.blocks.size());
  const auto& adm = g.blocks.admissible_leaves();
  parallel_for(
      adm.size(),
      [&](std::size_t k) {
        const auto& bn = g.blocks.node(adm[k]);
        const auto& tn = g.row_tree.node(bn.row);
        g.col_factor[adm[k]] = green_col_factor(cs, cluster_green_rule(tn, options.green), tn.box.diameter(),
                                                g.col_tree.indices(bn.col));
      },
      options.assembly.threads);

  std::vector<BlockRequest> requests;
  nearfield_requests(g.row_tree, g.col_tree, g.blocks, g.nearfield, requests);
  BlockAssembler assembler(integrator, options.assembly);
  assembler.assemble(requests);
  return g;
}

}  // namespace gcah2

//
// Project     : gcah2
// Module      : bench_gcah2.cpp
// Description : micro benchmarks of pair integrals, triangle tables,
//               cluster bases and matrix-vector multiplication
//

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "gcah2/h2.hpp"

using namespace gcah2;

namespace {

struct Sphere {
  CurvedTriangleMesh mesh;
  FunctionSpace space;
  PairIntegrator integrator;
  explicit Sphere(int level, BasisKind basis = BasisKind::constant)
      : mesh(to_curved(build_sphere_mesh(level), true)), space(mesh, basis, 3), integrator(OperatorKind::slp, space, space, 5) {}
};

const Sphere& sphere(int level) {
  static const Sphere s2(2), s3(3), s4(4), s5(5);
  switch (level) {
    case 2: return s2;
    case 3: return s3;
    case 4: return s4;
    default: return s5;
  }
}

// first pair of the given kind on the level-2 sphere
std::pair<Index, Index> find_pair(const Sphere& s, PairKind kind) {
  const Index nt = static_cast<Index>(s.mesh.base().triangle_count());
  for (Index t = 0; t < nt; ++t)
    for (Index u = 0; u < nt; ++u)
      if (s.integrator.classify(t, u).kind == kind) return {t, u};
  return {0, 0};
}

void BM_PairIntegral(benchmark::State& state) {
  const auto& s = sphere(2);
  const auto kind = static_cast<PairKind>(state.range(0));
  const auto [t, u] = find_pair(s, kind);
  const auto c = s.integrator.classify(t, u);
  for (auto _ : state) benchmark::DoNotOptimize(s.integrator.integrate(t, u, c));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_PairIntegral)->DenseRange(0, pair_kind_count - 1);

void BM_TriangleTable(benchmark::State& state) {
  const auto mesh = build_sphere_mesh(5);
  std::vector<Index> idx(mesh.vertex_count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Index>(i);
  std::mt19937_64 gen(7);
  std::shuffle(idx.begin(), idx.end(), gen);
  idx.resize(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(triangle_table(idx, mesh));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TriangleTable)->RangeMultiplier(8)->Range(8, 4096);

void BM_ClusterBasis(benchmark::State& state) {
  const auto& s = sphere(static_cast<int>(state.range(0)));
  const auto tree = build_cluster_tree(s.mesh, BasisKind::constant, 32);
  const auto active = active_clusters(tree, build_block_tree(tree, tree, 1.0), false);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_cluster_basis(tree, galerkin_factor(s.space), GreenParameters{}, 1, &active));
}
BENCHMARK(BM_ClusterBasis)->DenseRange(3, 4)->Unit(benchmark::kMillisecond);

void BM_H2Mvm(benchmark::State& state) {
  const auto& s = sphere(static_cast<int>(state.range(0)));
  const auto h = build_galerkin_h2(s.integrator, H2Options{});
  Eigen::VectorXd x = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(h.cols()));
  for (auto _ : state) benchmark::DoNotOptimize(mvm(h, x, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h.cols()));
}
BENCHMARK(BM_H2Mvm)->DenseRange(3, 5)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();

//
// Project     : gcah2
// Module      : h2.cpp
// Description : H2 matrix-vector products, storage, norm estimation, solvers
//

#include "gcah2/h2.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gcah2 {

namespace {

Eigen::VectorXd to_tree(const ClusterTree& tree, const Eigen::VectorXd& x) {
  const auto& perm = tree.permutation();
  Eigen::VectorXd xt(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) xt[p] = x[perm[p]];
  return xt;
}

Eigen::VectorXd from_tree(const ClusterTree& tree, const Eigen::VectorXd& yt) {
  const auto& perm = tree.permutation();
  Eigen::VectorXd y(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) y[perm[p]] = yt[p];
  return y;
}

void check_length(const Eigen::VectorXd& x, std::size_t n, const char* who) {
  if (static_cast<std::size_t>(x.size()) != n)
    throw DimensionError(std::string(who) + ": vector of length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(n));
}

// leaf blocks grouped by row (or column) cluster so that every group has one writer
std::vector<std::vector<Index>> group_blocks(const BlockTree& blocks, const std::vector<Index>& leaves,
                                             std::size_t clusters, bool by_column) {
  std::vector<std::vector<Index>> groups(clusters);
  for (Index b : leaves) groups[by_column ? blocks.node(b).col : blocks.node(b).row].push_back(b);
  return groups;
}

// y[r] += sum_c N(r,c) x[c] with the sum taken in column order
void apply_dense(const Eigen::MatrixXd& N, const double* x, double* y) {
  for (Eigen::Index r = 0; r < N.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < N.cols(); ++c) acc += N(r, c) * x[c];
    y[r] += acc;
  }
}

void apply_dense_transposed(const Eigen::MatrixXd& N, const double* x, double* y) {
  for (Eigen::Index c = 0; c < N.cols(); ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < N.rows(); ++r) acc += N(r, c) * x[r];
    y[c] += acc;
  }
}

void apply_nearfield(const ClusterTree& rt, const ClusterTree& ct, const BlockTree& blocks,
                     const std::vector<Eigen::MatrixXd>& nearfield, const Eigen::VectorXd& xt, Eigen::VectorXd& yt,
                     bool transposed, unsigned threads) {
  const auto& out_tree = transposed ? ct : rt;
  const auto groups = group_blocks(blocks, blocks.inadmissible_leaves(), out_tree.size(), transposed);
  parallel_for(
      groups.size(),
      [&](std::size_t g) {
        for (Index b : groups[g]) {
          const auto& bn = blocks.node(b);
          const Index r0 = rt.node(bn.row).begin, c0 = ct.node(bn.col).begin;
          if (transposed) apply_dense_transposed(nearfield[b], xt.data() + r0, yt.data() + c0);
          else apply_dense(nearfield[b], xt.data() + c0, yt.data() + r0);
        }
      },
      threads);
}

std::size_t bytes(const Eigen::MatrixXd& A) { return sizeof(double) * static_cast<std::size_t>(A.size()); }

}  // namespace

//////////////////////////////////////////////////////////////////////
//
// basis transforms
//
//////////////////////////////////////////////////////////////////////

std::vector<Eigen::VectorXd> forward_transform(const ClusterTree& tree, const ClusterBasis& basis,
                                               const Eigen::VectorXd& x_tree, unsigned threads) {
  std::vector<Eigen::VectorXd> coeffs(tree.size());
  const auto& levels = tree.levels();
  for (auto level = levels.rbegin(); level != levels.rend(); ++level) {
    const auto& clusters = *level;
    parallel_for(
        clusters.size(),
        [&](std::size_t k) {
          const Index c = clusters[k];
          const auto& tn = tree.node(c);
          const auto& bn = basis.node(c);
          if (tn.is_leaf()) {
            coeffs[c] = bn.leaf.transpose() * x_tree.segment(tn.begin, tn.size());
          } else {
            coeffs[c] = bn.transfer[0].transpose() * coeffs[tn.children[0]];
            coeffs[c] += bn.transfer[1].transpose() * coeffs[tn.children[1]];
          }
        },
        threads);
  }
  return coeffs;
}

void backward_transform(const ClusterTree& tree, const ClusterBasis& basis, std::vector<Eigen::VectorXd> coeffs,
                        Eigen::VectorXd& y_tree, unsigned threads) {
  for (const auto& clusters : tree.levels()) {
    parallel_for(
        clusters.size(),
        [&](std::size_t k) {
          const Index c = clusters[k];
          const auto& tn = tree.node(c);
          const auto& bn = basis.node(c);
          if (coeffs[c].size() == 0) coeffs[c] = Eigen::VectorXd::Zero(bn.pivots.size());
          if (tn.is_leaf()) {
            y_tree.segment(tn.begin, tn.size()) += bn.leaf * coeffs[c];
            return;
          }
          for (int i = 0; i < 2; ++i) {
            auto& child = coeffs[tn.children[i]];
            if (child.size() == 0) child = Eigen::VectorXd::Zero(basis.node(tn.children[i]).pivots.size());
            child += bn.transfer[i] * coeffs[c];
          }
        },
        threads);
  }
}

//////////////////////////////////////////////////////////////////////
//
// products
//
//////////////////////////////////////////////////////////////////////

Eigen::VectorXd mvm(const H2Matrix& h, const Eigen::VectorXd& x, unsigned threads) {
  check_length(x, h.cols(), "mvm");
  const Eigen::VectorXd xt = to_tree(h.col_tree, x);
  Eigen::VectorXd yt = Eigen::VectorXd::Zero(h.rows());

  const auto xhat = forward_transform(h.col_tree, h.col_basis, xt, threads);
  std::vector<Eigen::VectorXd> yhat(h.row_tree.size());
  const auto groups = group_blocks(h.blocks, h.blocks.admissible_leaves(), h.row_tree.size(), false);
  parallel_for(
      groups.size(),
      [&](std::size_t t) {
        yhat[t] = Eigen::VectorXd::Zero(h.row_basis.rank(static_cast<Index>(t)));
        for (Index b : groups[t]) yhat[t] += h.coupling[b] * xhat[h.blocks.node(b).col];
      },
      threads);
  backward_transform(h.row_tree, h.row_basis, std::move(yhat), yt, threads);

  apply_nearfield(h.row_tree, h.col_tree, h.blocks, h.nearfield, xt, yt, false, threads);
  return from_tree(h.row_tree, yt);
}

Eigen::VectorXd mvm_transposed(const H2Matrix& h, const Eigen::VectorXd& x, unsigned threads) {
  check_length(x, h.rows(), "mvm_transposed");
  const Eigen::VectorXd xt = to_tree(h.row_tree, x);
  Eigen::VectorXd yt = Eigen::VectorXd::Zero(h.cols());

  const auto xhat = forward_transform(h.row_tree, h.row_basis, xt, threads);
  std::vector<Eigen::VectorXd> yhat(h.col_tree.size());
  const auto groups = group_blocks(h.blocks, h.blocks.admissible_leaves(), h.col_tree.size(), true);
  parallel_for(
      groups.size(),
      [&](std::size_t s) {
        yhat[s] = Eigen::VectorXd::Zero(h.col_basis.rank(static_cast<Index>(s)));
        for (Index b : groups[s]) yhat[s] += h.coupling[b].transpose() * xhat[h.blocks.node(b).row];
      },
      threads);
  backward_transform(h.col_tree, h.col_basis, std::move(yhat), yt, threads);

  apply_nearfield(h.row_tree, h.col_tree, h.blocks, h.nearfield, xt, yt, true, threads);
  return from_tree(h.col_tree, yt);
}

Eigen::VectorXd mvm(const FlatGCAMatrix& f, const Eigen::VectorXd& x) {
  check_length(x, f.col_tree.dof_count(), "mvm");
  const Eigen::VectorXd xt = to_tree(f.col_tree, x);
  Eigen::VectorXd yt = Eigen::VectorXd::Zero(f.row_tree.dof_count());
  for (Index b : f.blocks.admissible_leaves()) {
    const auto& bn = f.blocks.node(b);
    const auto& rn = f.row_tree.node(bn.row);
    const auto& cn = f.col_tree.node(bn.col);
    const Eigen::VectorXd s = f.pivot_rows[b] * xt.segment(cn.begin, cn.size());
    yt.segment(rn.begin, rn.size()) += f.row_interpolation[bn.row].V * s;
  }
  apply_nearfield(f.row_tree, f.col_tree, f.blocks, f.nearfield, xt, yt, false, 1);
  return from_tree(f.row_tree, yt);
}

Eigen::VectorXd mvm_transposed(const FlatGCAMatrix& f, const Eigen::VectorXd& x) {
  check_length(x, f.row_tree.dof_count(), "mvm_transposed");
  const Eigen::VectorXd xt = to_tree(f.row_tree, x);
  Eigen::VectorXd yt = Eigen::VectorXd::Zero(f.col_tree.dof_count());
  for (Index b : f.blocks.admissible_leaves()) {
    const auto& bn = f.blocks.node(b);
    const auto& rn = f.row_tree.node(bn.row);
    const auto& cn = f.col_tree.node(bn.col);
    const Eigen::VectorXd s = f.row_interpolation[bn.row].V.transpose() * xt.segment(rn.begin, rn.size());
    yt.segment(cn.begin, cn.size()) += f.pivot_rows[b].transpose() * s;
  }
  apply_nearfield(f.row_tree, f.col_tree, f.blocks, f.nearfield, xt, yt, true, 1);
  return from_tree(f.col_tree, yt);
}

Eigen::VectorXd mvm(const GreenMatrix& g, const Eigen::VectorXd& x) {
  check_length(x, g.col_tree.dof_count(), "mvm");
  const Eigen::VectorXd xt = to_tree(g.col_tree, x);
  Eigen::VectorXd yt = Eigen::VectorXd::Zero(g.row_tree.dof_count());
  for (Index b : g.blocks.admissible_leaves()) {
    const auto& bn = g.blocks.node(b);
    const auto& rn = g.row_tree.node(bn.row);
    const auto& cn = g.col_tree.node(bn.col);
    const Eigen::VectorXd s = g.col_factor[b].transpose() * xt.segment(cn.begin, cn.size());
    yt.segment(rn.begin, rn.size()) += g.row_factor[bn.row] * s;
  }
  apply_nearfield(g.row_tree, g.col_tree, g.blocks, g.nearfield, xt, yt, false, 1);
  return from_tree(g.row_tree, yt);
}

Eigen::VectorXd mvm_transposed(const GreenMatrix& g, const Eigen::VectorXd& x) {
  check_length(x, g.row_tree.dof_count(), "mvm_transposed");
  const Eigen::VectorXd xt = to_tree(g.row_tree, x);
  Eigen::VectorXd yt = Eigen::VectorXd::Zero(g.col_tree.dof_count());
  for (Index b : g.blocks.admissible_leaves()) {
    const auto& bn = g.blocks.node(b);
    const auto& rn = g.row_tree.node(bn.row);
    const auto& cn = g.col_tree.node(bn.col);
    const Eigen::VectorXd s = g.row_factor[bn.row].transpose() * xt.segment(rn.begin, rn.size());
    yt.segment(cn.begin, cn.size()) += g.col_factor[b] * s;
  }
  apply_nearfield(g.row_tree, g.col_tree, g.blocks, g.nearfield, xt, yt, true, 1);
  return from_tree(g.col_tree, yt);
}

//////////////////////////////////////////////////////////////////////
//
// storage
//
//////////////////////////////////////////////////////////////////////

std::size_t dense_storage_bytes(std::size_t rows, std::size_t cols) { return sizeof(double) * rows * cols; }

StorageReport storage_report(std::size_t n) {
  StorageReport r;
  r.dense_reference = dense_storage_bytes(n, n);
  return r;
}

namespace {

void finish(StorageReport& r, const std::vector<Eigen::MatrixXd>& nearfield, std::size_t rows, std::size_t cols) {
  for (const auto& N : nearfield) r.nearfield += bytes(N);
  r.total = r.leaf_bases + r.transfers + r.couplings + r.nearfield;
  r.index_overhead += sizeof(Index) * (rows + cols);
  r.dense_reference = dense_storage_bytes(rows, cols);
}

}  // namespace

StorageReport storage_report(const H2Matrix& h) {
  StorageReport r;
  r.leaf_bases = h.row_basis.leaf_bytes() + h.col_basis.leaf_bytes();
  r.transfers = h.row_basis.transfer_bytes() + h.col_basis.transfer_bytes();
  for (const auto& S : h.coupling) r.couplings += bytes(S);
  for (std::size_t c = 0; c < h.row_basis.size(); ++c) r.index_overhead += sizeof(Index) * h.row_basis.rank(c);
  for (std::size_t c = 0; c < h.col_basis.size(); ++c) r.index_overhead += sizeof(Index) * h.col_basis.rank(c);
  finish(r, h.nearfield, h.rows(), h.cols());
  return r;
}

StorageReport storage_report(const FlatGCAMatrix& f) {
  StorageReport r;
  for (const auto& ip : f.row_interpolation) {
    r.leaf_bases += bytes(ip.V);
    r.index_overhead += sizeof(Index) * ip.pivots.size();
  }
  for (const auto& P : f.pivot_rows) r.couplings += bytes(P);
  finish(r, f.nearfield, f.row_tree.dof_count(), f.col_tree.dof_count());
  return r;
}

StorageReport storage_report(const GreenMatrix& g) {
  StorageReport r;
  for (const auto& A : g.row_factor) r.leaf_bases += bytes(A);
  for (const auto& B : g.col_factor) r.couplings += bytes(B);
  finish(r, g.nearfield, g.row_tree.dof_count(), g.col_tree.dof_count());
  return r;
}

std::string to_csv(const StorageReport& r) {
  std::ostringstream out;
  out << "category,bytes\n"
      << "leaf_bases," << r.leaf_bases << '\n'
      << "transfers," << r.transfers << '\n'
      << "couplings," << r.couplings << '\n'
      << "nearfield," << r.nearfield << '\n'
      << "total," << r.total << '\n'
      << "index_overhead," << r.index_overhead << '\n'
      << "dense_reference," << r.dense_reference << '\n';
  return out.str();
}

//////////////////////////////////////////////////////////////////////
//
// operators
//
//////////////////////////////////////////////////////////////////////

LinearOperator dense_operator(const Eigen::MatrixXd& A) {
  return {static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()),
          [&A](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; },
          [&A](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A.transpose() * x; }};
}

LinearOperator h2_operator(const H2Matrix& h, unsigned threads) {
  return {h.rows(), h.cols(), [&h, threads](const Eigen::VectorXd& x) { return mvm(h, x, threads); },
          [&h, threads](const Eigen::VectorXd& x) { return mvm_transposed(h, x, threads); }};
}

LinearOperator flat_operator(const FlatGCAMatrix& f) {
  return {f.row_tree.dof_count(), f.col_tree.dof_count(), [&f](const Eigen::VectorXd& x) { return mvm(f, x); },
          [&f](const Eigen::VectorXd& x) { return mvm_transposed(f, x); }};
}

LinearOperator green_operator(const GreenMatrix& g) {
  return {g.row_tree.dof_count(), g.col_tree.dof_count(), [&g](const Eigen::VectorXd& x) { return mvm(g, x); },
          [&g](const Eigen::VectorXd& x) { return mvm_transposed(g, x); }};
}

//////////////////////////////////////////////////////////////////////
//
// spectral norm
//
//////////////////////////////////////////////////////////////////////

namespace {

Eigen::VectorXd random_unit(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = normal(rng);
  return z / z.norm();
}

template <typename Apply, typename ApplyT>
double power_iteration(std::size_t n, Apply&& apply, ApplyT&& apply_t, int iters, std::uint64_t seed) {
  if (iters < 10) throw ParameterError("power iteration needs at least 10 iterations");
  if (n == 0) return 0.0;
  Eigen::VectorXd z = random_unit(n, seed);
  bool reseeded = false;
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd v = apply_t(apply(z));
    const double nv = v.norm();
    if (nv == 0.0) {
      // vanishing on a second random vector means a zero operator
      if (it > 0 || reseeded) return 0.0;
      reseeded = true;
      z = random_unit(n, seed + 1);
      --it;
      continue;
    }
    estimate = std::sqrt(nv);
    z = v / nv;
  }
  return estimate;
}

}  // namespace

double spectral_norm_estimate(const LinearOperator& A, int iters, std::uint64_t seed) {
  return power_iteration(
      A.cols, [&](const Eigen::VectorXd& x) { return A.apply(x); },
      [&](const Eigen::VectorXd& y) { return A.apply_transposed(y); }, iters, seed);
}

SpectralError spectral_error_estimate(const LinearOperator& ref, const LinearOperator& approx, int iters,
                                      std::uint64_t seed) {
  if (ref.rows != approx.rows || ref.cols != approx.cols)
    throw DimensionError("spectral_error_estimate: operator dimensions differ");
  const double abs = power_iteration(
      ref.cols, [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return ref.apply(x) - approx.apply(x); },
      [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return ref.apply_transposed(y) - approx.apply_transposed(y); },
      iters, seed);
  const double norm = spectral_norm_estimate(ref, iters, seed);
  if (norm == 0.0) throw DomainError("spectral_error_estimate: reference operator is zero");
  return {abs, abs / norm};
}

//////////////////////////////////////////////////////////////////////
//
// solvers
//
//////////////////////////////////////////////////////////////////////

SolveResult cg_solve(const LinearOperator& A, const Eigen::VectorXd& b, double tol, int max_iter,
                     const Eigen::VectorXd* inverse_diagonal) {
  check_length(b, A.rows, "cg_solve");
  SolveResult res;
  res.x = Eigen::VectorXd::Zero(A.cols);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.residuals.push_back(0.0);
    res.converged = true;
    return res;
  }
  auto precondition = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    if (inverse_diagonal) return inverse_diagonal->cwiseProduct(r);
    return r;
  };

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = precondition(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  res.residuals.push_back(1.0);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd Ap = A.apply(p);
    const double alpha = rz / p.dot(Ap);
    res.x += alpha * p;
    r -= alpha * Ap;
    res.iterations = it;
    const double rel = r.norm() / bnorm;
    res.residuals.push_back(rel);
    if (rel <= tol) {
      res.converged = true;
      break;
    }
    z = precondition(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return res;
}

SolveResult cgnr_solve(const LinearOperator& A, const Eigen::VectorXd& b, double tol, int max_iter) {
  check_length(b, A.rows, "cgnr_solve");
  SolveResult res;
  res.x = Eigen::VectorXd::Zero(A.cols);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.residuals.push_back(0.0);
    res.converged = true;
    return res;
  }

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = A.apply_transposed(r);
  Eigen::VectorXd p = z;
  double zz = z.squaredNorm();
  res.residuals.push_back(1.0);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd w = A.apply(p);
    const double alpha = zz / w.squaredNorm();
    res.x += alpha * p;
    r -= alpha * w;
    res.iterations = it;
    const double rel = r.norm() / bnorm;
    res.residuals.push_back(rel);
    if (rel <= tol) {
      res.converged = true;
      break;
    }
    z = A.apply_transposed(r);
    const double zz_new = z.squaredNorm();
    p = z + (zz_new / zz) * p;
    zz = zz_new;
  }
  return res;
}

}  // namespace gcah2

//
// Project     : gcah2
// Module      : test_h2.cpp
// Description : matrix-vector products, storage, norm estimation, solvers
//

#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "doctest.h"
#include "gcah2/h2.hpp"
#include "oracles.hpp"

using namespace gcah2;

namespace {

struct Fixture {
  CurvedTriangleMesh mesh;
  FunctionSpace space;
  PairIntegrator integrator;
  Eigen::MatrixXd dense;
  H2Matrix h;
  Fixture()
      : mesh(to_curved(build_sphere_mesh(3), true)),
        space(mesh, BasisKind::constant, 3),
        integrator(OperatorKind::slp, space, space, 4),
        dense(assemble_galerkin_matrix(integrator)),
        h(build_galerkin_h2(integrator, options())) {}
  static H2Options options() {
    H2Options o;
    o.leaf_size = 16;
    o.green.order = 3;
    o.green.eps = 1e-3;
    return o;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

// H2 matrix expanded block by block in tree order
Eigen::MatrixXd expand_tree_order(const H2Matrix& h) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  for (Index b : h.blocks.admissible_leaves()) {
    const auto& bn = h.blocks.node(b);
    const auto& r = h.row_tree.node(bn.row);
    const auto& c = h.col_tree.node(bn.col);
    D.block(r.begin, c.begin, r.size(), c.size()) =
        h.row_basis.expand(h.row_tree, bn.row) * h.coupling[b] * h.col_basis.expand(h.col_tree, bn.col).transpose();
  }
  for (Index b : h.blocks.inadmissible_leaves()) {
    const auto& bn = h.blocks.node(b);
    const auto& r = h.row_tree.node(bn.row);
    const auto& c = h.col_tree.node(bn.col);
    D.block(r.begin, c.begin, r.size(), c.size()) = h.nearfield[b];
  }
  return D;
}

Eigen::VectorXd to_tree(const ClusterTree& t, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  for (Index p = 0; p < x.size(); ++p) y[p] = x[t.permutation()[p]];
  return y;
}

Eigen::VectorXd from_tree(const ClusterTree& t, const Eigen::VectorXd& y) {
  Eigen::VectorXd x(y.size());
  for (Index p = 0; p < y.size(); ++p) x[t.permutation()[p]] = y[p];
  return x;
}

std::size_t bytes_of(const Eigen::MatrixXd& m) { return 8 * static_cast<std::size_t>(m.rows()) * m.cols(); }

LinearOperator diagonal(const Eigen::VectorXd& d) {
  return {static_cast<std::size_t>(d.size()), static_cast<std::size_t>(d.size()),
          [d](const Eigen::VectorXd& x) -> Eigen::VectorXd { return d.cwiseProduct(x); },
          [d](const Eigen::VectorXd& x) -> Eigen::VectorXd { return d.cwiseProduct(x); }};
}

LinearOperator zero_operator(std::size_t n) {
  return {n, n, [n](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(n); },
          [n](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(n); }};
}

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(rows, cols);
  for (Index k = 0; k < A.size(); ++k) A.data()[k] = nd(gen);
  return A;
}

}  // namespace

TEST_CASE("zero blocks give a zero product") {
  H2Matrix h = fixture().h;
  for (auto& S : h.coupling) S.setZero();
  for (auto& N : h.nearfield) N.setZero();
  const Eigen::VectorXd x = test::random_vector(h.cols(), 3);
  CHECK(mvm(h, x).isZero(0.0));
  CHECK(mvm_transposed(h, x).isZero(0.0));
}

TEST_CASE("product is linear") {
  const auto& h = fixture().h;
  const Eigen::VectorXd x = test::random_vector(h.cols(), 5), z = test::random_vector(h.cols(), 6);
  const double a = 0.7, b = -2.5;
  const Eigen::VectorXd lhs = mvm(h, a * x + b * z);
  const Eigen::VectorXd rhs = a * mvm(h, x) + b * mvm(h, z);
  CHECK((lhs - rhs).norm() <= 1e-13 * rhs.norm());
}

TEST_CASE("product against the dense matrix") {
  const auto& f = fixture();
  const auto err = spectral_error_estimate(dense_operator(f.dense), h2_operator(f.h));
  CHECK(err.rel > 0.0);
  CHECK(err.rel <= 1e-2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Eigen::VectorXd x = test::random_vector(f.dense.cols(), 100 + s);
    x /= x.norm();
    const Eigen::VectorXd ref = f.dense * x;
    CHECK((mvm(f.h, x) - ref).norm() / ref.norm() <= 10.0 * err.rel);
  }
}

TEST_CASE("permutation consistency") {
  const auto& f = fixture();
  const Eigen::MatrixXd D = expand_tree_order(f.h);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Eigen::VectorXd x = test::random_vector(f.h.cols(), 10 + s);
    const Eigen::VectorXd ref = from_tree(f.h.row_tree, D * to_tree(f.h.col_tree, x));
    CHECK((mvm(f.h, x) - ref).norm() <= 1e-13 * ref.norm());
    const Eigen::VectorXd reft = from_tree(f.h.col_tree, D.transpose() * to_tree(f.h.row_tree, x));
    CHECK((mvm_transposed(f.h, x) - reft).norm() <= 1e-13 * reft.norm());
  }
  // symmetric operator, transposed product is close to the product
  const Eigen::VectorXd x = test::random_vector(f.h.cols(), 21);
  const Eigen::VectorXd y = test::random_vector(f.h.rows(), 22);
  CHECK(std::abs(y.dot(mvm(f.h, x)) - mvm_transposed(f.h, y).dot(x)) <= 1e-13 * y.norm() * mvm(f.h, x).norm());
}

TEST_CASE("threads do not change the product") {
  const auto& h = fixture().h;
  const Eigen::VectorXd x = test::random_vector(h.cols(), 8);
  const Eigen::VectorXd y1 = mvm(h, x, 1);
  for (unsigned t : {2u, 4u}) {
    CHECK((mvm(h, x, t) - y1).norm() <= 1e-15 * y1.norm());
    CHECK((mvm_transposed(h, x, t) - mvm_transposed(h, x, 1)).norm() <= 1e-15 * y1.norm());
  }
}

TEST_CASE("forward and backward transforms are adjoint") {
  const auto& h = fixture().h;
  const auto& tree = h.row_tree;
  const auto& basis = h.row_basis;
  const Eigen::VectorXd x = test::random_vector(h.rows(), 31);
  const auto xhat = forward_transform(tree, basis, x, 1);
  REQUIRE(xhat.size() == tree.size());

  std::vector<Eigen::VectorXd> yhat(tree.size());
  double inner = 0.0;
  for (Index c = 0; c < static_cast<Index>(tree.size()); ++c) {
    yhat[c] = test::random_vector(basis.rank(c), 40 + c);
    REQUIRE(xhat[c].size() == basis.rank(c));
    inner += yhat[c].dot(xhat[c]);
    // coefficients equal the transposed expansion
    const auto& tn = tree.node(c);
    if (basis.rank(c) > 0) {
      const Eigen::VectorXd ref = basis.expand(tree, c).transpose() * x.segment(tn.begin, tn.size());
      CHECK((xhat[c] - ref).norm() <= 1e-13 * (1.0 + ref.norm()));
    }
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(h.rows());
  backward_transform(tree, basis, yhat, y, 1);
  CHECK(std::abs(y.dot(x) - inner) <= 1e-13 * y.norm() * x.norm());
}

TEST_CASE("storage accounting") {
  // dense reference
  CHECK(storage_report(32768).dense_reference == 8ull * 32768 * 32768);
  CHECK(storage_report(32768).dense_reference / (1024 * 1024) == 8192);
  CHECK(storage_report(1).dense_reference == 8);
  CHECK(dense_storage_bytes(3, 5) == 120);

  const auto& h = fixture().h;
  const auto s = storage_report(h);
  std::size_t leaf = 0, transfer = 0, coupling = 0, near = 0;
  for (const auto* basis : {&h.row_basis, &h.col_basis})
    for (Index c = 0; c < static_cast<Index>(basis->size()); ++c) {
      leaf += bytes_of(basis->node(c).leaf);
      transfer += bytes_of(basis->node(c).transfer[0]) + bytes_of(basis->node(c).transfer[1]);
    }
  for (const auto& S : h.coupling) coupling += bytes_of(S);
  for (const auto& N : h.nearfield) near += bytes_of(N);
  CHECK(s.leaf_bases == leaf);
  CHECK(s.transfers == transfer);
  CHECK(s.couplings == coupling);
  CHECK(s.nearfield == near);
  CHECK(s.total == leaf + transfer + coupling + near);
  CHECK(s.dense_reference == 8 * h.rows() * h.cols());
  CHECK(s.index_overhead > 0);

  const auto csv = to_csv(s);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "category,bytes");
  std::getline(in, line);
  CHECK(line == "leaf_bases," + std::to_string(leaf));
  CHECK(csv.find("total," + std::to_string(s.total) + "\n") != std::string::npos);
}

TEST_CASE("power iteration") {
  Eigen::VectorXd d(3);
  d << 3.0, 1.0, 0.5;
  const auto D = diagonal(d);
  const auto e = spectral_error_estimate(D, zero_operator(3), 50);
  CHECK(std::abs(e.abs - 3.0) <= 0.03);
  CHECK(std::abs(e.rel - 1.0) <= 1e-12);
  CHECK(std::abs(spectral_norm_estimate(D, 50) - 3.0) <= 0.03);

  // equal operators
  const auto same = spectral_error_estimate(D, diagonal(d));
  CHECK(same.abs == 0.0);
  CHECK(same.rel == 0.0);
  CHECK(spectral_norm_estimate(zero_operator(4)) == 0.0);

  // random matrix pair against the singular value decomposition
  const Eigen::MatrixXd A = random_matrix(100, 100, 1), B = random_matrix(100, 100, 2);
  const double s_ab = Eigen::JacobiSVD<Eigen::MatrixXd>(A - B).singularValues()[0];
  const double s_a = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()[0];
  const auto r = spectral_error_estimate(dense_operator(A), dense_operator(B));
  CHECK(std::abs(r.abs - s_ab) <= 0.05 * s_ab);
  CHECK(std::abs(r.rel - s_ab / s_a) <= 0.1 * s_ab / s_a);
  CHECK(r.abs <= s_ab * (1 + 1e-12));
  // brute force: iterate until stagnation
  Eigen::VectorXd z = test::random_vector(100, 9);
  const Eigen::MatrixXd E = A - B;
  double previous = 0.0, current = 1.0;
  for (int it = 0; it < 100000 && std::abs(current - previous) > 1e-12 * current; ++it) {
    previous = current;
    const Eigen::VectorXd v = E.transpose() * (E * z);
    current = std::sqrt(v.norm());
    z = v / v.norm();
  }
  CHECK(std::abs(r.abs - current) <= 0.05 * current);

  // scaling
  for (double c : {0.25, 7.0}) {
    const Eigen::MatrixXd cB = A - c * (A - B);
    const auto rc = spectral_error_estimate(dense_operator(A), dense_operator(cB));
    CHECK(std::abs(rc.abs - c * r.abs) <= 1e-12 * c * r.abs);
  }

  // deterministic for a fixed seed
  CHECK(spectral_error_estimate(dense_operator(A), dense_operator(B)).abs == r.abs);

  CHECK_THROWS_AS(spectral_norm_estimate(D, 9), ParameterError);
  CHECK_THROWS_AS(spectral_error_estimate(D, zero_operator(4)), DimensionError);
  CHECK_THROWS_AS(spectral_error_estimate(zero_operator(3), D), DomainError);
}

TEST_CASE("conjugate gradients") {
  const Eigen::VectorXd b = test::random_vector(10, 3);
  const auto id = cg_solve(diagonal(Eigen::VectorXd::Ones(10)), b, 1e-12, 100);
  CHECK(id.converged);
  CHECK(id.iterations == 1);
  CHECK((id.x - b).norm() <= 1e-15 * b.norm());

  Eigen::VectorXd d(3);
  d << 1.0, 2.0, 4.0;
  const auto r = cg_solve(diagonal(d), Eigen::VectorXd::Ones(3), 1e-12, 10);
  CHECK(r.converged);
  CHECK(r.iterations <= 3);
  CHECK(std::abs(r.x[0] - 1.0) <= 1e-12);
  CHECK(std::abs(r.x[1] - 0.5) <= 1e-12);
  CHECK(std::abs(r.x[2] - 0.25) <= 1e-12);
  CHECK(r.residuals.front() == 1.0);
  CHECK(r.residuals.size() == static_cast<std::size_t>(r.iterations) + 1);

  // zero right-hand side
  const auto z = cg_solve(diagonal(d), Eigen::VectorXd::Zero(3), 1e-12, 10);
  CHECK(z.converged);
  CHECK(z.x.isZero(0.0));

  // not converged within the limit
  Eigen::VectorXd wide = Eigen::VectorXd::LinSpaced(50, 1.0, 1e4);
  const auto nc = cg_solve(diagonal(wide), Eigen::VectorXd::Ones(50), 1e-14, 3);
  CHECK_FALSE(nc.converged);
  CHECK(nc.iterations == 3);

  CHECK_THROWS_AS(cg_solve(diagonal(d), Eigen::VectorXd::Ones(4), 1e-12, 10), DimensionError);
}

TEST_CASE("conjugate gradients on the H2 single layer matrix") {
  const auto& f = fixture();
  const auto op = h2_operator(f.h);
  const Eigen::VectorXd b = test::random_vector(f.h.rows(), 77);
  const auto r = cg_solve(op, b, 1e-8, 500);
  CHECK(r.converged);
  CHECK((b - mvm(f.h, r.x)).norm() <= 1e-8 * b.norm());
  MESSAGE("cg iterations: ", r.iterations);

  // diagonal scaling
  Eigen::VectorXd inv(f.dense.rows());
  for (Index i = 0; i < inv.size(); ++i) inv[i] = 1.0 / f.dense(i, i);
  const auto p = cg_solve(op, b, 1e-8, 500, &inv);
  CHECK(p.converged);
  CHECK((b - mvm(f.h, p.x)).norm() <= 1e-8 * b.norm());
}

TEST_CASE("conjugate gradients on the normal equations") {
  Eigen::MatrixXd A = random_matrix(40, 40, 11) + 20.0 * Eigen::MatrixXd::Identity(40, 40);
  const Eigen::VectorXd x = test::random_vector(40, 12);
  const Eigen::VectorXd b = A * x;
  const auto r = cgnr_solve(dense_operator(A), b, 1e-12, 200);
  CHECK(r.converged);
  CHECK((r.x - x).norm() <= 1e-10 * x.norm());
  CHECK((b - A * r.x).norm() <= 1e-12 * b.norm());
  CHECK_THROWS_AS(cgnr_solve(dense_operator(A), Eigen::VectorXd::Ones(3), 1e-12, 10), DimensionError);
}

TEST_CASE("dimension errors") {
  const auto& h = fixture().h;
  CHECK_THROWS_AS(mvm(h, Eigen::VectorXd::Ones(h.cols() + 1)), DimensionError);
  CHECK_THROWS_AS(mvm_transposed(h, Eigen::VectorXd::Ones(3)), DimensionError);
}

TEST_CASE("comparison formats in products") {
  const auto& f = fixture();
  const auto flat = build_flat_gca(f.integrator, Fixture::options());
  const auto green = build_green(f.integrator, Fixture::options());
  const Eigen::VectorXd x = test::random_vector(f.h.cols(), 19);
  const Eigen::VectorXd y = test::random_vector(f.h.rows(), 20);
  for (const auto& op : {flat_operator(flat), green_operator(green)}) {
    const Eigen::VectorXd ax = op.apply(x);
    CHECK(std::abs(y.dot(ax) - op.apply_transposed(y).dot(x)) <= 1e-13 * y.norm() * ax.norm());
    CHECK((ax - f.dense * x).norm() <= 0.1 * (f.dense * x).norm());
  }
  CHECK_THROWS_AS(mvm(flat, Eigen::VectorXd::Ones(2)), DimensionError);
  CHECK_THROWS_AS(mvm(green, Eigen::VectorXd::Ones(2)), DimensionError);
}

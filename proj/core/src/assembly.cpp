//
// Project     : gcah2
// Module      : assembly.cpp
// Description : kernels, triangle tables, dense blocks and Green factors
//

#include "gcah2/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace gcah2 {

namespace {

std::array<double, 3> barycentric(const Vec2& xhat) { return {1.0 - xhat[0] - xhat[1], xhat[0], xhat[1]}; }

void check_unique(std::span<const Index> indices, std::size_t bound, const char* who) {
  std::vector<Index> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ArgumentError(std::string(who) + ": duplicate index");
  if (!sorted.empty() && (sorted.front() < 0 || static_cast<std::size_t>(sorted.back()) >= bound))
    throw ArgumentError(std::string(who) + ": index out of range");
}

// merges two tables sorted by triangle, combining equal keys slotwise
TriangleTable merge(const TriangleTable& a, const TriangleTable& b) {
  TriangleTable out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].triangle < b[j].triangle) out.push_back(a[i++]);
    else if (b[j].triangle < a[i].triangle) out.push_back(b[j++]);
    else {
      TableRow row = a[i++];
      const TableRow& other = b[j++];
      for (int p = 0; p < 3; ++p)
        if (row.slots[p] == none) row.slots[p] = other.slots[p];
      out.push_back(row);
    }
  }
  out.insert(out.end(), a.begin() + i, a.end());
  out.insert(out.end(), b.begin() + j, b.end());
  return out;
}

TriangleTable star_rows(Index position, Index vertex, std::span<const Triangle> triangles, const VertexStars& stars) {
  TriangleTable rows;
  for (Index t : stars[vertex]) {
    TableRow row{t, {none, none, none}};
    for (int p = 0; p < 3; ++p)
      if (triangles[t][p] == vertex) row.slots[p] = position;
    rows.push_back(row);
  }
  return rows;
}

TriangleTable merge_range(std::span<const Index> indices, Index lo, Index hi, std::span<const Triangle> triangles,
                          const VertexStars& stars) {
  if (hi - lo == 1) return star_rows(lo, indices[lo], triangles, stars);
  const Index mid = lo + (hi - lo) / 2;
  return merge(merge_range(indices, lo, mid, triangles, stars), merge_range(indices, mid, hi, triangles, stars));
}

// local(i, j) evaluated in parallel chunks, scattered sequentially in (i, j) order
template <typename Local, typename Scatter>
void chunked_assembly(std::size_t nrows, std::size_t ncols, Local&& local, Scatter&& scatter, unsigned threads) {
  using Value = std::invoke_result_t<Local, std::size_t, std::size_t>;
  if (nrows == 0 || ncols == 0) return;
  const std::size_t budget = std::size_t(1) << 19;
  const std::size_t chunk = std::max<std::size_t>(1, budget / ncols);
  std::vector<Value> buffer;
  for (std::size_t r0 = 0; r0 < nrows; r0 += chunk) {
    const std::size_t r1 = std::min(nrows, r0 + chunk);
    buffer.resize((r1 - r0) * ncols);
    parallel_for(
        r1 - r0,
        [&](std::size_t i) {
          for (std::size_t c = 0; c < ncols; ++c) buffer[i * ncols + c] = local(r0 + i, c);
        },
        threads);
    for (std::size_t i = 0; i < r1 - r0; ++i)
      for (std::size_t c = 0; c < ncols; ++c) scatter(r0 + i, c, buffer[i * ncols + c]);
  }
}

std::vector<Index> iota_indices(std::size_t n) {
  std::vector<Index> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<Index>(i);
  return v;
}

}  // namespace

const char* to_string(OperatorKind kind) { return kind == OperatorKind::slp ? "slp" : "dlp"; }

double kernel_eval(OperatorKind kind, const Vec3& x, const Vec3& y, const Vec3* n_y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw SingularEvaluationError("kernel evaluated at x == y");
  if (kind == OperatorKind::slp) return inv_four_pi / r;
  if (n_y == nullptr) throw ArgumentError("double-layer kernel needs a normal");
  return inv_four_pi * d.dot(*n_y) / (r * r * r);
}

//////////////////////////////////////////////////////////////////////
//
// triangle tables
//
//////////////////////////////////////////////////////////////////////

TriangleTable triangle_table(std::span<const Index> indices, std::span<const Triangle> triangles,
                             const VertexStars& stars) {
  check_unique(indices, stars.vertex_count(), "triangle_table");
  if (indices.empty()) return {};
  return merge_range(indices, 0, static_cast<Index>(indices.size()), triangles, stars);
}

TriangleTable triangle_table(std::span<const Index> indices, const TriangleMesh& mesh) {
  return triangle_table(indices, mesh.triangles(), mesh.stars());
}

//////////////////////////////////////////////////////////////////////
//
// FunctionSpace
//
//////////////////////////////////////////////////////////////////////

FunctionSpace::FunctionSpace(const CurvedTriangleMesh& mesh, BasisKind basis, int regular_order)
    : mesh_(&mesh), basis_(basis), order_(regular_order) {
  const auto rule = triangle_gauss(regular_order);
  npts_ = rule.size();
  const std::size_t total = npts_ * mesh.triangle_count();
  for (auto* v : {&px_, &py_, &pz_, &nx_, &ny_, &nz_}) v->resize(total);
  for (int p = 0; p < shape_count(); ++p) {
    ws_[p].resize(total);
    sh_[p].resize(total);
  }

  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    for (std::size_t k = 0; k < npts_; ++k) {
      const std::size_t i = t * npts_ + k;
      const auto s = mesh.chart_unchecked(static_cast<Index>(t), rule.points[k]);
      const double w = rule.weights[k] * s.gramian;
      px_[i] = s.point[0];
      py_[i] = s.point[1];
      pz_[i] = s.point[2];
      nx_[i] = rule.weights[k] * s.normal[0];
      ny_[i] = rule.weights[k] * s.normal[1];
      nz_[i] = rule.weights[k] * s.normal[2];
      for (int p = 0; p < shape_count(); ++p) {
        sh_[p][i] = shape(p, rule.points[k]);
        ws_[p][i] = w * sh_[p][i];
      }
    }
}

std::size_t FunctionSpace::dof_count() const {
  return basis_ == BasisKind::constant ? mesh_->triangle_count() : mesh_->vertex_count();
}

double FunctionSpace::shape(int p, const Vec2& xhat) const {
  if (basis_ == BasisKind::constant) return 1.0;
  return barycentric(xhat)[p];
}

TriangleTable FunctionSpace::table(std::span<const Index> dofs) const {
  if (basis_ == BasisKind::linear) return triangle_table(dofs, mesh_->base());
  check_unique(dofs, dof_count(), "FunctionSpace::table");
  TriangleTable rows(dofs.size());
  for (std::size_t k = 0; k < dofs.size(); ++k) rows[k] = {dofs[k], {static_cast<Index>(k), none, none}};
  std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) { return a.triangle < b.triangle; });
  return rows;
}

//////////////////////////////////////////////////////////////////////
//
// PairIntegrator
//
//////////////////////////////////////////////////////////////////////

PairIntegrator::PairIntegrator(OperatorKind kind, const FunctionSpace& rows, const FunctionSpace& cols,
                               int singular_order)
    : kind_(kind), rows_(&rows), cols_(&cols), q_sing_(singular_order) {
  if (&rows.mesh() != &cols.mesh()) throw ArgumentError("PairIntegrator: spaces on different meshes");
  rules_[0] = sauter_rule(PairKind::identical, singular_order);
  rules_[1] = sauter_rule(PairKind::edge, singular_order);
  rules_[2] = sauter_rule(PairKind::vertex, singular_order);
}

SingularityCase PairIntegrator::classify(Index t, Index s) const {
  const auto& tris = rows_->mesh().base().triangles();
  return classify_pair(tris[t], tris[s]);
}

LocalMatrix PairIntegrator::integrate(Index t, Index s, const SingularityCase& c) const {
  // symmetric kernel on a single space: the pair with t < s is computed and
  // transposed so that the matrix is exactly symmetric
  if (kind_ == OperatorKind::slp && rows_ == cols_ && s < t && c.kind != PairKind::disjoint) {
    const auto& tris = rows_->mesh().base().triangles();
    const LocalMatrix m = singular(s, t, classify_pair(tris[s], tris[t]));
    LocalMatrix out;
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) out[3 * p + q] = m[3 * q + p];
    return out;
  }
  if (c.kind == PairKind::disjoint) return regular(t, s);
  return singular(t, s, c);
}

LocalMatrix PairIntegrator::regular(Index t, Index s) const {
  const std::size_t na = rows_->samples_per_triangle(), nb = cols_->samples_per_triangle();
  const std::size_t a0 = rows_->sample_offset(t), b0 = cols_->sample_offset(s);
  const int sp = rows_->shape_count(), sq = cols_->shape_count();

  const double *xx = rows_->px() + a0, *xy = rows_->py() + a0, *xz = rows_->pz() + a0;
  const double *yx = cols_->px() + b0, *yy = cols_->py() + b0, *yz = cols_->pz() + b0;

  // the weighted normal carries the gramian weight for dlp
  thread_local std::vector<double> kern;
  kern.resize(nb);
  const double* cw[3];
  for (int q = 0; q < sq; ++q)
    cw[q] = (kind_ == OperatorKind::slp ? cols_->weighted_shape(q) : cols_->shape_values(q)) + b0;
  const double *nbx = cols_->nx() + b0, *nby = cols_->ny() + b0, *nbz = cols_->nz() + b0;

  LocalMatrix out{};
  for (std::size_t a = 0; a < na; ++a) {
    const double x0 = xx[a], x1 = xy[a], x2 = xz[a];
    if (kind_ == OperatorKind::slp) {
      for (std::size_t b = 0; b < nb; ++b) {
        const double d0 = x0 - yx[b], d1 = x1 - yy[b], d2 = x2 - yz[b];
        kern[b] = 1.0 / std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
      }
    } else {
      for (std::size_t b = 0; b < nb; ++b) {
        const double d0 = x0 - yx[b], d1 = x1 - yy[b], d2 = x2 - yz[b];
        const double r2 = d0 * d0 + d1 * d1 + d2 * d2;
        kern[b] = (d0 * nbx[b] + d1 * nby[b] + d2 * nbz[b]) / (r2 * std::sqrt(r2));
      }
    }
    double sum[3] = {0.0, 0.0, 0.0};
    for (int q = 0; q < sq; ++q) {
      const double* w = cw[q];
      double acc = 0.0;
      for (std::size_t b = 0; b < nb; ++b) acc += kern[b] * w[b];
      sum[q] = acc;
    }
    for (int p = 0; p < sp; ++p) {
      const double wp = rows_->weighted_shape(p)[a0 + a];
      for (int q = 0; q < sq; ++q) out[3 * p + q] += wp * sum[q];
    }
  }
  for (auto& v : out) v *= inv_four_pi;
  return out;
}

LocalMatrix PairIntegrator::singular(Index t, Index s, const SingularityCase& c) const {
  const PairRule& rule = rules_[static_cast<int>(c.kind)];
  const auto& mesh = rows_->mesh();
  const int sp = rows_->shape_count(), sq = cols_->shape_count();

  LocalMatrix out{};
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vec2 xo = unpermute(rule.x[i], c.row_perm);
    const Vec2 yo = unpermute(rule.y[i], c.col_perm);
    const ChartSample X = mesh.chart_unchecked(t, xo);
    const ChartSample Y = mesh.chart_unchecked(s, yo);
    const Vec3 d = X.point - Y.point;
    const double r = d.norm();
    double f;
    if (kind_ == OperatorKind::slp) f = rule.weights[i] * X.gramian * Y.gramian / r;
    else f = rule.weights[i] * X.gramian * d.dot(Y.normal) / (r * r * r);

    double phi[3] = {1.0, 0.0, 0.0}, psi[3] = {1.0, 0.0, 0.0};
    if (sp == 3) {
      const auto b = barycentric(xo);
      phi[0] = b[0], phi[1] = b[1], phi[2] = b[2];
    }
    if (sq == 3) {
      const auto b = barycentric(yo);
      psi[0] = b[0], psi[1] = b[1], psi[2] = b[2];
    }
    for (int p = 0; p < sp; ++p) {
      const double fp = f * phi[p];
      for (int q = 0; q < sq; ++q) out[3 * p + q] += fp * psi[q];
    }
  }
  for (auto& v : out) v *= inv_four_pi;
  return out;
}

DenseBlock assemble_galerkin_block(const PairIntegrator& integrator, std::span<const Index> rows,
                                   std::span<const Index> cols) {
  DenseBlock block{{rows.begin(), rows.end()}, {cols.begin(), cols.end()}, Eigen::MatrixXd::Zero(rows.size(), cols.size())};
  const auto rt = integrator.row_space().table(rows);
  const auto ct = integrator.col_space().table(cols);
  chunked_assembly(
      rt.size(), ct.size(), [&](std::size_t i, std::size_t j) { return integrator.integrate(rt[i].triangle, ct[j].triangle); },
      [&](std::size_t i, std::size_t j, const LocalMatrix& local) { scatter_add(block.values, rt[i].slots, ct[j].slots, local); },
      0);
  return block;
}

Eigen::MatrixXd assemble_galerkin_matrix(const PairIntegrator& integrator) {
  const auto rows = iota_indices(integrator.row_space().dof_count());
  const auto cols = iota_indices(integrator.col_space().dof_count());
  return assemble_galerkin_block(integrator, rows, cols).values;
}

//////////////////////////////////////////////////////////////////////
//
// collocation
//
//////////////////////////////////////////////////////////////////////

CollocationIntegrator::CollocationIntegrator(OperatorKind kind, const FunctionSpace& cols, int singular_order)
    : kind_(kind), cols_(&cols) {
  if (cols.basis() != BasisKind::linear) throw ParameterError("collocation requires the linear basis");
  for (int v = 0; v < 3; ++v) duffy_[v] = duffy_rule(v, singular_order);
}

std::array<double, 3> CollocationIntegrator::integrate(Index vertex, Index s) const {
  const auto& mesh = cols_->mesh();
  const Vec3& x = mesh.base().vertex(vertex);
  const auto& tri = mesh.base().triangle(s);
  std::array<double, 3> out{0.0, 0.0, 0.0};

  int local = -1;
  for (int p = 0; p < 3; ++p)
    if (tri[p] == vertex) local = p;

  if (local >= 0) {
    const auto& rule = duffy_[local];
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const ChartSample Y = mesh.chart_unchecked(s, rule.points[k]);
      const Vec3 d = x - Y.point;
      const double r = d.norm();
      const double f =
          kind_ == OperatorKind::slp ? rule.weights[k] * Y.gramian / r : rule.weights[k] * d.dot(Y.normal) / (r * r * r);
      const auto b = barycentric(rule.points[k]);
      for (int q = 0; q < 3; ++q) out[q] += f * b[q];
    }
  } else {
    const std::size_t nb = cols_->samples_per_triangle(), b0 = cols_->sample_offset(s);
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t i = b0 + b;
      const double d0 = x[0] - cols_->px()[i], d1 = x[1] - cols_->py()[i], d2 = x[2] - cols_->pz()[i];
      const double r2 = d0 * d0 + d1 * d1 + d2 * d2;
      const double r = std::sqrt(r2);
      if (kind_ == OperatorKind::slp) {
        const double k = 1.0 / r;
        for (int q = 0; q < 3; ++q) out[q] += k * cols_->weighted_shape(q)[i];
      } else {
        const double k = (d0 * cols_->nx()[i] + d1 * cols_->ny()[i] + d2 * cols_->nz()[i]) / (r2 * r);
        for (int q = 0; q < 3; ++q) out[q] += k * cols_->shape_values(q)[i];
      }
    }
  }
  for (auto& v : out) v *= inv_four_pi;
  return out;
}

DenseBlock assemble_collocation_block(const CollocationIntegrator& integrator, std::span<const Index> rows,
                                      std::span<const Index> cols) {
  const auto& mesh = integrator.col_space().mesh();
  check_unique(rows, mesh.vertex_count(), "assemble_collocation_block");
  DenseBlock block{{rows.begin(), rows.end()}, {cols.begin(), cols.end()}, Eigen::MatrixXd::Zero(rows.size(), cols.size())};
  const auto ct = integrator.col_space().table(cols);
  chunked_assembly(
      rows.size(), ct.size(), [&](std::size_t i, std::size_t j) { return integrator.integrate(rows[i], ct[j].triangle); },
      [&](std::size_t i, std::size_t j, const std::array<double, 3>& v) {
        for (int q = 0; q < 3; ++q)
          if (ct[j].slots[q] != none) block.values(i, ct[j].slots[q]) += v[q];
      },
      0);
  return block;
}

Eigen::MatrixXd assemble_collocation_matrix(const CollocationIntegrator& integrator) {
  const auto n = iota_indices(integrator.col_space().dof_count());
  return assemble_collocation_block(integrator, n, n).values;
}

//////////////////////////////////////////////////////////////////////
//
// mass blocks
//
//////////////////////////////////////////////////////////////////////

DenseBlock mass_block(const FunctionSpace& rows_space, const FunctionSpace& cols_space, std::span<const Index> rows,
                      std::span<const Index> cols, int order) {
  if (&rows_space.mesh() != &cols_space.mesh()) throw ArgumentError("mass_block: spaces on different meshes");
  DenseBlock block{{rows.begin(), rows.end()}, {cols.begin(), cols.end()}, Eigen::MatrixXd::Zero(rows.size(), cols.size())};
  const auto rt = rows_space.table(rows);
  const auto ct = cols_space.table(cols);
  const auto rule = triangle_gauss(order);
  const auto& mesh = rows_space.mesh();

  std::size_t i = 0, j = 0;
  while (i < rt.size() && j < ct.size()) {
    if (rt[i].triangle < ct[j].triangle) {
      ++i;
      continue;
    }
    if (ct[j].triangle < rt[i].triangle) {
      ++j;
      continue;
    }
    const Index t = rt[i].triangle;
    LocalMatrix local{};
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double w = rule.weights[k] * mesh.chart_unchecked(t, rule.points[k]).gramian;
      for (int p = 0; p < rows_space.shape_count(); ++p)
        for (int q = 0; q < cols_space.shape_count(); ++q)
          local[3 * p + q] += w * rows_space.shape(p, rule.points[k]) * cols_space.shape(q, rule.points[k]);
    }
    scatter_add(block.values, rt[i].slots, ct[j].slots, local);
    ++i;
    ++j;
  }
  return block;
}

DenseBlock mass_block(const FunctionSpace& space, std::span<const Index> rows, std::span<const Index> cols, int order) {
  return mass_block(space, space, rows, cols, order);
}

//////////////////////////////////////////////////////////////////////
//
// Green factors
//
//////////////////////////////////////////////////////////////////////

namespace {

constexpr double min_distance = 1e-12;

// accumulates for one surface point x with weight w: g(x,z_nu) and the
// normal derivative at z_nu of g(x, .)
template <typename Add>
void green_point(const GreenRule& rule, double x0, double x1, double x2, Add&& add) {
  const std::size_t k = rule.size();
  for (std::size_t nu = 0; nu < k; ++nu) {
    const Vec3& z = rule.points[nu];
    const Vec3& n = rule.normals[nu];
    const double d0 = x0 - z[0], d1 = x1 - z[1], d2 = x2 - z[2];
    const double r2 = d0 * d0 + d1 * d1 + d2 * d2;
    const double r = std::sqrt(r2);
    if (r < min_distance) throw GeometryError("Green quadrature point on the surface");
    const double g = inv_four_pi / r;
    // gradient of g(x, .) at z is (x - z)/(4 pi r^3)
    const double dg = inv_four_pi * (d0 * n[0] + d1 * n[1] + d2 * n[2]) / (r2 * r);
    add(nu, g, dg);
  }
}

void check_factor_args(const GreenRule& rule, double d) {
  if (!(d > 0.0)) throw ParameterError("Green factor: scaling parameter must be positive");
  if (rule.size() == 0) throw ArgumentError("Green factor: empty rule");
}

}  // namespace

Eigen::MatrixXd green_row_factor(const FunctionSpace& space, const GreenRule& rule, double d,
                                 std::span<const Index> dofs) {
  check_factor_args(rule, d);
  const std::size_t k = rule.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dofs.size(), 2 * k);
  std::vector<double> sw(k);
  for (std::size_t nu = 0; nu < k; ++nu) sw[nu] = std::sqrt(rule.weights[nu]);

  const auto table = space.table(dofs);
  const std::size_t np = space.samples_per_triangle();
  for (const auto& row : table) {
    const std::size_t a0 = space.sample_offset(row.triangle);
    for (std::size_t a = 0; a < np; ++a) {
      const std::size_t i = a0 + a;
      green_point(rule, space.px()[i], space.py()[i], space.pz()[i], [&](std::size_t nu, double g, double dg) {
        for (int p = 0; p < space.shape_count(); ++p) {
          if (row.slots[p] == none) continue;
          const double w = space.weighted_shape(p)[i] * sw[nu];
          A(row.slots[p], nu) += w * g;
          A(row.slots[p], nu + k) += -d * w * dg;
        }
      });
    }
  }
  return A;
}

Eigen::MatrixXd green_col_factor(const FunctionSpace& space, const GreenRule& rule, double d,
                                 std::span<const Index> dofs) {
  check_factor_args(rule, d);
  const std::size_t k = rule.size();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dofs.size(), 2 * k);
  std::vector<double> sw(k);
  for (std::size_t nu = 0; nu < k; ++nu) sw[nu] = std::sqrt(rule.weights[nu]);

  const auto table = space.table(dofs);
  const std::size_t np = space.samples_per_triangle();
  for (const auto& row : table) {
    const std::size_t a0 = space.sample_offset(row.triangle);
    for (std::size_t a = 0; a < np; ++a) {
      const std::size_t i = a0 + a;
      green_point(rule, space.px()[i], space.py()[i], space.pz()[i], [&](std::size_t nu, double g, double dg) {
        for (int p = 0; p < space.shape_count(); ++p) {
          if (row.slots[p] == none) continue;
          const double w = space.weighted_shape(p)[i] * sw[nu];
          // g is symmetric, dg/dn_z(z, y) = dg/dn_z(y, z)
          B(row.slots[p], nu) += w * dg;
          B(row.slots[p], nu + k) += w / d * g;
        }
      });
    }
  }
  return B;
}

Eigen::MatrixXd green_point_factor(const CurvedTriangleMesh& mesh, const GreenRule& rule, double d,
                                   std::span<const Index> vertices) {
  check_factor_args(rule, d);
  const std::size_t k = rule.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(vertices.size(), 2 * k);
  for (std::size_t r = 0; r < vertices.size(); ++r) {
    const Vec3& x = mesh.base().vertex(vertices[r]);
    green_point(rule, x[0], x[1], x[2], [&](std::size_t nu, double g, double dg) {
      const double sw = std::sqrt(rule.weights[nu]);
      A(r, nu) = sw * g;
      A(r, nu + k) = -d * sw * dg;
    });
  }
  return A;
}

}  // namespace gcah2

//
// Project     : gcah2
// Module      : experiments.cpp
// Description : compression and solve experiments
//

#include "gcah2_tools/experiments.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gcah2/mesh_io.hpp"

namespace gcah2::tools {

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point start) {
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return out.str();
}

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<Index> all_indices(std::size_t n) {
  std::vector<Index> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<Index>(i);
  return v;
}

}  // namespace

const char* to_string(Geometry g) { return g == Geometry::plane ? "plane" : "curved"; }
const char* to_string(Discretization d) { return d == Discretization::galerkin ? "galerkin" : "collocation"; }

H2Options ExperimentConfig::h2_options() const {
  H2Options o;
  o.eta = eta;
  o.leaf_size = leaf_size;
  o.green.order = green_order;
  o.green.delta_factor = delta_factor;
  o.green.eps = aca_eps;
  o.assembly.threads = threads;
  o.assembly.capacity = batch_capacity;
  return o;
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!c.mesh_path && (c.level < 0 || c.level > max_sphere_level))
    fail("level must be in [0, " + std::to_string(max_sphere_level) + "]");
  if (!(c.eta > 0.0)) fail("eta must be positive");
  if (c.green_order < 1) fail("green-order must be at least 1");
  if (!(c.delta_factor > 0.0)) fail("delta-factor must be positive");
  if (!(c.aca_eps > 0.0)) fail("aca-eps must be positive");
  if (c.leaf_size < 1) fail("leaf-size must be at least 1");
  if (c.q_reg < 1 || c.q_sing < 1) fail("quadrature orders must be at least 1");
  if (!(c.lambda > 0.0 && c.lambda < 1.0)) fail("lambda must lie in (0, 1)");
  if (!(c.source.norm() > 1.0)) fail("source must lie outside the closed unit ball");
  if (c.power_iters < 10) fail("power-iters must be at least 10");
  if (!(c.cg_tol > 0.0)) fail("cg-tol must be positive");
  if (c.max_iter < 1) fail("max-iter must be positive");
  if (c.batch_capacity < 1) fail("batch-capacity must be positive");
  if (c.disc == Discretization::collocation && c.basis != BasisKind::linear)
    fail("collocation requires the linear basis");
}

CurvedTriangleMesh load_mesh(const ExperimentConfig& c) {
  if (!c.mesh_path) return to_curved(build_sphere_mesh(c.level), c.geometry == Geometry::curved);
  if (!std::filesystem::is_regular_file(*c.mesh_path)) throw ConfigError("no mesh file " + c.mesh_path->string());
  try {
    auto mesh = read_mesh(*c.mesh_path);
    if (is_curved(mesh)) {
      auto& curved = std::get<CurvedTriangleMesh>(mesh);
      // a plane geometry ignores the midpoints
      if (c.geometry == Geometry::plane) return to_curved(curved.base(), false);
      return std::move(curved);
    }
    const auto& plane = std::get<TriangleMesh>(mesh);
    if (c.geometry == Geometry::curved) throw ConfigError("mesh file has no midpoints for the curved geometry");
    return to_curved(plane, false);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("cannot read mesh: ") + e.what());
  } catch (const MeshError& e) {
    throw ConfigError(std::string("invalid mesh: ") + e.what());
  }
}

//////////////////////////////////////////////////////////////////////
//
// CSV
//
//////////////////////////////////////////////////////////////////////

const std::string& csv_header() {
  static const std::string header =
      "method,basis,geometry,disc,level,n,eta,m,eps,storage_bytes,setup_s,solve_s,rel_spec_err,l2_err,cg_iters";
  return header;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string to_csv(const ReportRow& r) {
  const auto& c = r.config;
  std::vector<std::string> f = {r.method,
                                to_string(c.basis),
                                to_string(c.geometry),
                                to_string(c.disc),
                                std::to_string(c.level),
                                std::to_string(r.n),
                                format_double(c.eta),
                                std::to_string(c.green_order),
                                format_double(c.aca_eps),
                                std::to_string(r.storage_bytes),
                                format_double(r.setup_s),
                                optional_field(r.solve_s),
                                optional_field(r.rel_spec_err),
                                optional_field(r.l2_err),
                                r.cg_iters ? std::to_string(*r.cg_iters) : std::string()};
  std::string line;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (k) line += ',';
    line += csv_field(f[k]);
  }
  return line;
}

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << csv_header() << "\r\n";
  for (const auto& r : rows) out << to_csv(r) << "\r\n";
}

//////////////////////////////////////////////////////////////////////
//
// compression
//
//////////////////////////////////////////////////////////////////////

std::vector<ReportRow> run_compress(const ExperimentConfig& config, const CompressRequest& request) {
  validate(config);
  const auto mesh = load_mesh(config);
  const FunctionSpace space(mesh, config.basis, config.q_reg);
  const std::size_t n = config.disc == Discretization::galerkin ? space.dof_count() : mesh.vertex_count();
  if (request.dense_oracle && n > dense_guard)
    throw GuardRefusal("dense oracle refused for n = " + std::to_string(n) + " > " + std::to_string(dense_guard));
  if (config.disc == Discretization::collocation && (request.green || request.flat))
    throw ConfigError("Green-only and flat GCA are available for the Galerkin discretization");

  const auto options = config.h2_options();
  const PairIntegrator galerkin(OperatorKind::slp, space, space, config.q_sing);
  const FunctionSpace linear(mesh, BasisKind::linear, config.q_reg);
  const CollocationIntegrator collocation(OperatorKind::slp, linear, config.q_sing);
  std::vector<ReportRow> rows;
  auto row = [&](const char* method) {
    ReportRow r;
    r.method = method;
    r.config = config;
    r.n = n;
    return r;
  };

  Eigen::MatrixXd dense;
  std::optional<LinearOperator> ref;
  if (request.dense_oracle) {
    auto r = row("dense");
    const auto start = clock::now();
    dense = config.disc == Discretization::galerkin ? assemble_galerkin_matrix(galerkin)
                                                    : assemble_collocation_matrix(collocation);
    r.setup_s = seconds_since(start);
    r.storage_bytes = dense_storage_bytes(dense.rows(), dense.cols());
    r.rel_spec_err = 0.0;
    ref = dense_operator(dense);
    rows.push_back(r);
  }
  auto error_of = [&](const LinearOperator& op) -> std::optional<double> {
    if (!ref) return std::nullopt;
    return spectral_error_estimate(*ref, op, config.power_iters, config.seed).rel;
  };

  if (request.green) {
    auto r = row("green");
    const auto start = clock::now();
    const auto g = build_green(galerkin, options);
    r.setup_s = seconds_since(start);
    r.storage_bytes = storage_report(g).total;
    r.rel_spec_err = error_of(green_operator(g));
    rows.push_back(r);
  }
  if (request.flat) {
    auto r = row("flat_gca");
    const auto start = clock::now();
    const auto f = build_flat_gca(galerkin, options);
    r.setup_s = seconds_since(start);
    r.storage_bytes = storage_report(f).total;
    r.rel_spec_err = error_of(flat_operator(f));
    rows.push_back(r);
  }
  if (request.gcah2) {
    auto r = row("gcah2");
    const auto start = clock::now();
    const auto h = config.disc == Discretization::galerkin ? build_galerkin_h2(galerkin, options)
                                                           : build_collocation_h2(collocation, options);
    r.setup_s = seconds_since(start);
    r.storage_bytes = storage_report(h).total;
    r.rel_spec_err = error_of(h2_operator(h, config.threads));
    rows.push_back(r);
  }
  return rows;
}

//////////////////////////////////////////////////////////////////////
//
// Dirichlet problem
//
//////////////////////////////////////////////////////////////////////

double exact_potential(const Vec3& x, const Vec3& source) { return inv_four_pi / (x - source).norm(); }

double exact_flux(const Vec3& x, const Vec3& n, const Vec3& source) {
  const Vec3 r = x - source;
  const double d = r.norm();
  return -inv_four_pi * n.dot(r) / (d * d * d);
}

double l2_flux_error(const FunctionSpace& space, const Eigen::VectorXd& coeffs, const Vec3& source, bool sphere,
                     int order) {
  const auto& mesh = space.mesh();
  const auto rule = triangle_gauss(order);
  const bool linear = space.basis() == BasisKind::linear;
  double sum = 0.0;
  for (Index t = 0; t < static_cast<Index>(mesh.triangle_count()); ++t) {
    const auto& tri = mesh.base().triangle(t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto s = mesh.chart(t, rule.points[k]);
      double uh = 0.0;
      if (linear)
        for (int p = 0; p < 3; ++p) uh += space.shape(p, rule.points[k]) * coeffs[tri[p]];
      else
        uh = coeffs[t];
      double e;
      if (sphere) {
        // flux of the unit sphere at the radial projection
        const Vec3 y = s.point.normalized();
        e = uh - exact_flux(y, y, source);
      } else {
        e = uh - exact_flux(s.point, s.normal / s.gramian, source);
      }
      sum += rule.weights[k] * s.gramian * e * e;
    }
  }
  return std::sqrt(sum);
}

ReportRow run_solve(const ExperimentConfig& config) {
  validate(config);
  const auto mesh = load_mesh(config);
  const FunctionSpace space(mesh, config.basis, config.q_reg);
  const FunctionSpace linear(mesh, BasisKind::linear, config.q_reg);
  const bool galerkin = config.disc == Discretization::galerkin;
  const std::size_t n = galerkin ? space.dof_count() : mesh.vertex_count();
  if (n > dense_guard)
    throw GuardRefusal("dense double layer right-hand side refused for n = " + std::to_string(n) + " > " +
                       std::to_string(dense_guard));

  ReportRow r;
  r.method = "gcah2";
  r.config = config;
  r.n = n;

  // Dirichlet data interpolated in the vertices
  Eigen::VectorXd v(mesh.vertex_count());
  for (Index i = 0; i < v.size(); ++i) v[i] = exact_potential(mesh.base().vertex(i), config.source);

  const auto options = config.h2_options();
  SolveResult res;
  if (galerkin) {
    const PairIntegrator slp(OperatorKind::slp, space, space, config.q_sing);
    auto start = clock::now();
    const auto h = build_galerkin_h2(slp, options);
    r.setup_s = seconds_since(start);
    r.storage_bytes = storage_report(h).total;

    const PairIntegrator dlp(OperatorKind::dlp, space, linear, config.q_sing);
    const Eigen::MatrixXd K = assemble_galerkin_matrix(dlp);
    const auto rows = all_indices(space.dof_count()), cols = all_indices(linear.dof_count());
    const Eigen::MatrixXd M = mass_block(space, linear, rows, cols, 6).values;
    const Eigen::VectorXd b = config.lambda * (M * v) + K * v;

    start = clock::now();
    res = cg_solve(h2_operator(h, config.threads), b, config.cg_tol, config.max_iter);
    r.solve_s = seconds_since(start);
  } else {
    const CollocationIntegrator slp(OperatorKind::slp, linear, config.q_sing);
    auto start = clock::now();
    const auto h = build_collocation_h2(slp, options);
    r.setup_s = seconds_since(start);
    r.storage_bytes = storage_report(h).total;

    const CollocationIntegrator dlp(OperatorKind::dlp, linear, config.q_sing);
    const Eigen::MatrixXd K = assemble_collocation_matrix(dlp);
    const Eigen::VectorXd b = config.lambda * v + K * v;

    start = clock::now();
    res = cgnr_solve(h2_operator(h, config.threads), b, config.cg_tol, config.max_iter);
    r.solve_s = seconds_since(start);
  }
  r.cg_iters = res.iterations;
  r.converged = res.converged;
  r.l2_err = l2_flux_error(space, res.x, config.source, !config.mesh_path);
  return r;
}

std::string run_stats(const ExperimentConfig& config) {
  validate(config);
  const auto mesh = load_mesh(config);
  const BasisKind basis = config.disc == Discretization::collocation ? BasisKind::linear : config.basis;
  const auto tree = build_cluster_tree(mesh, basis, config.leaf_size);
  const auto blocks = build_block_tree(tree, tree, config.eta);
  return to_csv(tree_statistics(tree, blocks));
}

}  // namespace gcah2::tools

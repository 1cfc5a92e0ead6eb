#pragma once
//
// Project     : gcah2
// Module      : experiments.hpp
// Description : experiment configuration, compression and Dirichlet solve
//               runs, CSV reporting
//

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcah2/h2.hpp"

namespace gcah2::tools {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// dense oracle or right-hand side above the size guard
struct GuardRefusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Geometry { plane, curved };
enum class Discretization { galerkin, collocation };

const char* to_string(Geometry g);
const char* to_string(Discretization d);

inline constexpr std::size_t dense_guard = 8192;

struct ExperimentConfig {
  int level = 3;
  Geometry geometry = Geometry::curved;
  BasisKind basis = BasisKind::constant;
  Discretization disc = Discretization::galerkin;
  double eta = 1.0;
  int green_order = 4;
  double delta_factor = 0.5;
  double aca_eps = 1e-5;
  Index leaf_size = 32;
  int q_reg = 3;
  int q_sing = 5;
  double lambda = 0.5;
  Vec3 source = Vec3(1.2, 0.0, 0.0);
  std::uint64_t seed = default_power_seed;
  int power_iters = default_power_iterations;
  double cg_tol = 1e-10;
  int max_iter = 2000;
  unsigned threads = 0;
  std::size_t batch_capacity = default_batch_capacity;
  std::optional<std::filesystem::path> mesh_path;

  H2Options h2_options() const;
};

// throws ConfigError
void validate(const ExperimentConfig& config);

// the configured mesh file, or the sphere of the configured level
CurvedTriangleMesh load_mesh(const ExperimentConfig& config);

//
// report rows
//
struct ReportRow {
  std::string method;
  ExperimentConfig config;
  std::size_t n = 0;
  std::size_t storage_bytes = 0;
  double setup_s = 0.0;
  std::optional<double> solve_s;
  std::optional<double> rel_spec_err;
  std::optional<double> l2_err;
  std::optional<int> cg_iters;
  bool converged = true;
};

const std::string& csv_header();
std::string to_csv(const ReportRow& row);
void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);
// RFC-4180 field quoting
std::string csv_field(const std::string& value);

//
// compression: dense oracle, Green-only, flat GCA and GCA-H2
//
struct CompressRequest {
  bool dense_oracle = true;
  bool green = true;
  bool flat = true;
  bool gcah2 = true;
};

std::vector<ReportRow> run_compress(const ExperimentConfig& config, const CompressRequest& request = {});

//
// Dirichlet problem with the exact solution 1/(4 pi |x - x*|)
//
double exact_potential(const Vec3& x, const Vec3& source);
// derivative in direction of the unit normal n
double exact_flux(const Vec3& x, const Vec3& n, const Vec3& source);

// L2 norm of u_h - du/dn over the discrete surface; with `sphere` the exact
// flux is taken on the unit sphere at the radial projection of each point
double l2_flux_error(const FunctionSpace& space, const Eigen::VectorXd& coeffs, const Vec3& source, bool sphere,
                     int order = 6);

ReportRow run_solve(const ExperimentConfig& config);

// cluster and block tree statistics of the configured discretization
std::string run_stats(const ExperimentConfig& config);

}  // namespace gcah2::tools

//
// Project     : gcah2
// Module      : main.cpp
// Description : command-line driver (mesh, compress, solve, stats)
//

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "gcah2/mesh_io.hpp"
#include "gcah2_tools/experiments.hpp"

using namespace gcah2;
using namespace gcah2::tools;

namespace {

enum exit_code { exit_ok = 0, exit_config = 2, exit_guard = 3 };

Vec3 parse_point(const std::string& text) {
  std::istringstream in(text);
  Vec3 p;
  char sep;
  if (!(in >> p[0] >> sep >> p[1] >> sep >> p[2]) || !(in >> std::ws).eof())
    throw ConfigError("expected x,y,z for the source point, got '" + text + "'");
  return p;
}

struct Cli {
  ExperimentConfig config;
  std::string source = "1.2,0,0";
  std::string mesh;
  std::string out;
};

void add_config_options(CLI::App* cmd, Cli& cli) {
  auto& c = cli.config;
  const std::map<std::string, Geometry> geometries = {{"plane", Geometry::plane}, {"curved", Geometry::curved}};
  const std::map<std::string, BasisKind> bases = {{"constant", BasisKind::constant}, {"linear", BasisKind::linear}};
  const std::map<std::string, Discretization> discs = {{"galerkin", Discretization::galerkin},
                                                       {"collocation", Discretization::collocation}};
  cmd->add_option("--level", c.level, "sphere refinement level")->capture_default_str();
  cmd->add_option("--geometry", c.geometry, "plane or curved")
      ->transform(CLI::CheckedTransformer(geometries, CLI::ignore_case));
  cmd->add_option("--basis", c.basis, "constant or linear")->transform(CLI::CheckedTransformer(bases, CLI::ignore_case));
  cmd->add_option("--disc", c.disc, "galerkin or collocation")
      ->transform(CLI::CheckedTransformer(discs, CLI::ignore_case));
  cmd->add_option("--eta", c.eta, "admissibility parameter")->capture_default_str();
  cmd->add_option("--green-order", c.green_order, "Gauss points per direction on each box face")->capture_default_str();
  cmd->add_option("--delta-factor", c.delta_factor, "box expansion relative to the cluster diameter")
      ->capture_default_str();
  cmd->add_option("--aca-eps", c.aca_eps, "cross approximation tolerance")->capture_default_str();
  cmd->add_option("--leaf-size", c.leaf_size, "maximal leaf cluster size")->capture_default_str();
  cmd->add_option("--q-reg", c.q_reg, "regular quadrature order")->capture_default_str();
  cmd->add_option("--q-sing", c.q_sing, "singular quadrature order")->capture_default_str();
  cmd->add_option("--lambda", c.lambda, "factor of the identity in the boundary equation")->capture_default_str();
  cmd->add_option("--source", cli.source, "source point x,y,z of the exact solution")->capture_default_str();
  cmd->add_option("--seed", c.seed, "power iteration seed")->capture_default_str();
  cmd->add_option("--power-iters", c.power_iters, "power iteration steps")->capture_default_str();
  cmd->add_option("--cg-tol", c.cg_tol, "relative residual tolerance")->capture_default_str();
  cmd->add_option("--max-iter", c.max_iter, "maximal CG iterations")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads, 0 for all cores")->capture_default_str();
  cmd->add_option("--batch-capacity", c.batch_capacity, "tasks per quadrature batch")->capture_default_str();
  cmd->add_option("--mesh", cli.mesh, "mesh file instead of the generated sphere");
  cmd->add_option("--out", cli.out, "report file, default stdout");
}

void finish_config(Cli& cli) {
  cli.config.source = parse_point(cli.source);
  if (!cli.mesh.empty()) cli.config.mesh_path = cli.mesh;
}

template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GCA-H2 boundary element experiments", "gcah2"};
  app.require_subcommand(1);

  // mesh
  int mesh_level = 3;
  bool mesh_curved = false;
  std::string mesh_out;
  auto* mesh_cmd = app.add_subcommand("mesh", "write a sphere mesh");
  mesh_cmd->add_option("--level", mesh_level, "sphere refinement level")->capture_default_str();
  mesh_cmd->add_flag("--curved", mesh_curved, "add edge midpoints on the sphere");
  mesh_cmd->add_option("--out", mesh_out, "mesh file")->required();

  // compress
  Cli compress;
  bool no_oracle = false;
  std::vector<std::string> methods = {"green", "flat", "gcah2"};
  auto* compress_cmd = app.add_subcommand("compress", "compare Green-only, flat GCA and GCA-H2 against the dense matrix");
  add_config_options(compress_cmd, compress);
  compress_cmd->add_flag("--no-oracle", no_oracle, "skip the dense matrix and the error estimate");
  compress_cmd->add_option("--methods", methods, "subset of green, flat, gcah2")
      ->delimiter(',')
      ->check(CLI::IsMember({"green", "flat", "gcah2"}))
      ->capture_default_str();

  // solve
  Cli solve;
  auto* solve_cmd = app.add_subcommand("solve", "Dirichlet problem with a point source solution");
  add_config_options(solve_cmd, solve);

  // stats
  Cli stats;
  auto* stats_cmd = app.add_subcommand("stats", "cluster and block tree statistics");
  add_config_options(stats_cmd, stats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    if (*mesh_cmd) {
      if (mesh_level < 0 || mesh_level > max_sphere_level) throw ConfigError("level out of range");
      const auto plane = build_sphere_mesh(mesh_level);
      if (mesh_curved) write_mesh(mesh_out, to_curved(plane, true));
      else write_mesh(mesh_out, plane);
    } else if (*compress_cmd) {
      finish_config(compress);
      CompressRequest request;
      request.dense_oracle = !no_oracle;
      request.green = std::find(methods.begin(), methods.end(), "green") != methods.end();
      request.flat = std::find(methods.begin(), methods.end(), "flat") != methods.end();
      request.gcah2 = std::find(methods.begin(), methods.end(), "gcah2") != methods.end();
      const auto rows = run_compress(compress.config, request);
      with_output(compress.out, [&](std::ostream& out) { write_csv(out, rows); });
    } else if (*solve_cmd) {
      finish_config(solve);
      const auto row = run_solve(solve.config);
      if (!row.converged) std::cerr << "gcah2: solver did not converge in " << *row.cg_iters << " iterations\n";
      with_output(solve.out, [&](std::ostream& out) { write_csv(out, {row}); });
    } else if (*stats_cmd) {
      finish_config(stats);
      const auto csv = run_stats(stats.config);
      with_output(stats.out, [&](std::ostream& out) { out << csv; });
    }
  } catch (const GuardRefusal& e) {
    std::cerr << "gcah2: " << e.what() << '\n';
    return exit_guard;
  } catch (const ConfigError& e) {
    std::cerr << "gcah2: " << e.what() << '\n';
    return exit_config;
  } catch (const SizeLimitError& e) {
    std::cerr << "gcah2: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "gcah2: " << e.what() << '\n';
    return 1;
  }
  return exit_ok;
}

#pragma once

#include "nodal/ladder.hpp"
#include "nodal/orbits.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nodal {

struct ProblemConfig {
  int N = 4;
  double R = 1.0;  // obstacle B_R; the exterior is truncated at mesh.r_max
};

struct NonlinearityConfig {
  std::string kind = "double_power";  // double_power | pure_power
  double p = 3.0;
  double q = 6.0;
  double amplitude = 6.0;
  double theta = 3.0;
};

struct PotentialConfig {
  std::string kind = "zero";  // zero | gaussian | table | grid
  double depth = 0.0;
  double width = 1.0;
  std::vector<double> radii;
  std::vector<double> values;       // table values, or grid values in (rho, theta, |y|) order
  std::vector<int> grid_shape;      // grid: n_rho, n_theta, n_y
  std::vector<double> grid_extent;  // grid: rho_max, y_max
  int period_fold = 1;
  double tail_exponent = 4.0;
  double r_exponent = 3.0;  // L^r exponent in the integrability check, r > N/2
};

struct MeshConfig {
  int nodes = 400;      // radial ladder grid
  double r_max = 0.0;   // <= 0 selects 40 R
  double r_inf = 60.0;  // ball radius for c_inf
  int ball_nodes = 512;
  int min_cells = 12;
  int theta_cells = 8;  // sector mesh
  int phi_cells = 8;
};

struct GroupConfig {
  std::string kind = "Zn_cross_ONminus2";
  int n = 5;
  std::vector<int> blocks;
  std::vector<std::vector<double>> generators;  // row-major N x N

  GroupSpec spec(int N) const;
};

struct ObstacleConfig {
  std::string kind = "ball";  // ball | petal (invariance check only)
  int petals = 0;
  double amplitude = 0.0;
};

struct SolverConfig {
  int max_steps = 4000;
  double tolerance = 1e-8;
  double nodal_tolerance = 1e-7;
  int starts = 5;
  double dt_max = 1.0;
  int alpha_samples = 64;
  int search_budget = 600;
};

struct RunConfig {
  ProblemConfig problem;
  NonlinearityConfig nonlinearity;
  PotentialConfig potential;
  MeshConfig mesh;
  int depth = 2;  // ladder depth m
  GroupConfig group;
  ObstacleConfig obstacle;
  SolverConfig solver;
  std::uint64_t seed = 1;
  int max_threads = 1;
  std::string output = "nodal_out";

  Nonlinearity make_nonlinearity() const;
  Potential make_potential() const;
  LadderOptions ladder_options() const;
  SolverOptions solver_options() const;
  Obstacle make_obstacle() const;
};

/// Throws ConfigError naming the field (and line, when parsed from text).
void validate(const RunConfig& config);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical YAML; numbers use the shortest decimal that round-trips.
std::string dump_config(const RunConfig& config);

}  // namespace nodal

#include "nodal/config.hpp"

#include "nodal/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace nodal {

GroupSpec GroupConfig::spec(int N) const {
  if (kind == "full_orthogonal") return GroupSpec::full_orthogonal(N);
  if (kind == "product_of_orthogonals") return GroupSpec::product_of_orthogonals(blocks);
  if (kind == "cyclic_diagonal_Zn") return GroupSpec::cyclic_diagonal(n, N);
  if (kind == "Zn_cross_ONminus2") return GroupSpec::cyclic_cross_orthogonal(n, N);
  if (kind == "finite_generated") {
    std::vector<Eigen::MatrixXd> gens;
    for (const auto& g : generators) {
      if (static_cast<int>(g.size()) != N * N) throw ConfigError("group.generators: each needs N*N entries");
      Eigen::MatrixXd m(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) m(i, j) = g[static_cast<std::size_t>(i * N + j)];
      gens.push_back(std::move(m));
    }
    return GroupSpec::finite_generated(std::move(gens));
  }
  throw ConfigError("group.kind: unknown group '" + kind + "'");
}

Nonlinearity RunConfig::make_nonlinearity() const {
  const auto& c = nonlinearity;
  if (c.kind == "double_power") return Nonlinearity::double_power(c.p, c.q, c.amplitude, c.theta);
  if (c.kind == "pure_power") return Nonlinearity::pure_power(c.p, c.amplitude, c.theta);
  throw ConfigError("nonlinearity.kind: unknown kind '" + c.kind + "'");
}

Potential RunConfig::make_potential() const {
  const auto& c = potential;
  if (c.kind == "zero") return Potential::zero();
  if (c.kind == "gaussian") return Potential::gaussian(c.depth, c.width);
  if (c.kind == "table") return Potential::table(c.radii, c.values, c.tail_exponent);
  if (c.kind == "grid") {
    if (c.grid_shape.size() != 3 || c.grid_extent.size() != 2)
      throw ConfigError("potential.grid_shape needs 3 entries and potential.grid_extent 2");
    PotentialGrid g;
    g.n_rho = c.grid_shape[0];
    g.n_theta = c.grid_shape[1];
    g.n_y = c.grid_shape[2];
    g.rho_max = c.grid_extent[0];
    g.y_max = c.grid_extent[1];
    g.period_fold = c.period_fold;
    g.values = c.values;
    return Potential::grid(std::move(g));
  }
  throw ConfigError("potential.kind: unknown kind '" + c.kind + "'");
}

LadderOptions RunConfig::ladder_options() const {
  LadderOptions o;
  o.nodes = mesh.nodes;
  o.r_max = mesh.r_max;
  o.r_inf = mesh.r_inf;
  o.ball_nodes = mesh.ball_nodes;
  o.min_cells = mesh.min_cells;
  o.search_budget = solver.search_budget;
  o.solver = solver_options();
  return o;
}

SolverOptions RunConfig::solver_options() const {
  SolverOptions o;
  o.max_steps = solver.max_steps;
  o.tolerance = solver.tolerance;
  o.starts = solver.starts;
  o.seed = seed;
  o.max_threads = max_threads;
  o.dt_max = solver.dt_max;
  return o;
}

Obstacle RunConfig::make_obstacle() const {
  Obstacle o;
  o.radius = problem.R;
  if (obstacle.kind == "petal") {
    o.kind = Obstacle::Kind::petal;
    o.petals = obstacle.petals;
    o.amplitude = obstacle.amplitude;
  } else if (obstacle.kind != "ball") {
    throw ConfigError("obstacle.kind: unknown kind '" + obstacle.kind + "'");
  }
  return o;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.problem.N >= 3, "problem.N: must be at least 3");
  require(c.problem.R > 0.0, "problem.R: must be positive");
  require(c.mesh.nodes >= 16, "mesh.nodes: must be at least 16");
  require(c.mesh.r_max <= 0.0 || c.mesh.r_max > c.problem.R, "mesh.r_max: must exceed problem.R");
  require(c.mesh.r_inf > 0.0, "mesh.r_inf: must be positive");
  require(c.mesh.ball_nodes >= 16, "mesh.ball_nodes: must be at least 16");
  require(c.mesh.min_cells >= 2, "mesh.min_cells: must be at least 2");
  require(c.mesh.theta_cells >= 8 && c.mesh.phi_cells >= 8, "mesh.theta_cells/phi_cells: need at least 8");
  require(c.depth >= 1, "depth: must be at least 1");
  require(c.solver.max_steps >= 1, "solver.max_steps: must be positive");
  require(c.solver.tolerance > 0.0, "solver.tolerance: must be positive");
  require(c.solver.nodal_tolerance > 0.0, "solver.nodal_tolerance: must be positive");
  require(c.solver.starts >= 1, "solver.starts: must be positive");
  require(c.solver.dt_max > 0.0, "solver.dt_max: must be positive");
  require(c.solver.alpha_samples >= 1, "solver.alpha_samples: must be positive");
  require(c.solver.search_budget >= 1, "solver.search_budget: must be positive");
  require(c.potential.r_exponent > 0.5 * c.problem.N, "potential.r_exponent: must exceed N/2");
  require(c.max_threads >= 1, "max_threads: must be positive");
  require(!c.output.empty() && c.output.find_first_of("\"\n") == std::string::npos,
          "output: must be a non-empty path without quotes");
  try {
    c.make_nonlinearity();
    c.make_potential();
    c.group.spec(c.problem.N);
    c.make_obstacle();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string where(const YAML::Node& n, const std::string& field) {
  std::ostringstream s;
  s << field;
  if (n.Mark().line >= 0) s << " (line " << n.Mark().line + 1 << ")";
  return s.str();
}

template <class T>
void read(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
  const YAML::Node n = parent[key];
  if (!n) return;
  try {
    out = n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(n, path + key) + ": malformed value");
  }
}

void check_keys(const YAML::Node& n, const std::string& path, std::set<std::string> allowed) {
  if (!n) return;
  if (!n.IsMap()) throw ConfigError(where(n, path.empty() ? "config" : path) + ": expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where(kv.first, path + key) + ": unknown field");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig c;
  if (root.IsNull()) {
    validate(c);
    return c;
  }
  check_keys(root, "", {"problem", "nonlinearity", "potential", "mesh", "depth", "group", "obstacle", "solver",
                        "seed", "max_threads", "output"});
  const auto pr = root["problem"];
  check_keys(pr, "problem.", {"N", "R"});
  read(pr, "N", "problem.", c.problem.N);
  read(pr, "R", "problem.", c.problem.R);
  const auto nl = root["nonlinearity"];
  check_keys(nl, "nonlinearity.", {"kind", "p", "q", "amplitude", "theta"});
  read(nl, "kind", "nonlinearity.", c.nonlinearity.kind);
  read(nl, "p", "nonlinearity.", c.nonlinearity.p);
  read(nl, "q", "nonlinearity.", c.nonlinearity.q);
  read(nl, "amplitude", "nonlinearity.", c.nonlinearity.amplitude);
  read(nl, "theta", "nonlinearity.", c.nonlinearity.theta);
  const auto po = root["potential"];
  check_keys(po, "potential.", {"kind", "depth", "width", "radii", "values", "tail_exponent", "r_exponent",
                                     "grid_shape", "grid_extent", "period_fold"});
  read(po, "kind", "potential.", c.potential.kind);
  read(po, "depth", "potential.", c.potential.depth);
  read(po, "width", "potential.", c.potential.width);
  read(po, "radii", "potential.", c.potential.radii);
  read(po, "values", "potential.", c.potential.values);
  read(po, "tail_exponent", "potential.", c.potential.tail_exponent);
  read(po, "r_exponent", "potential.", c.potential.r_exponent);
  read(po, "grid_shape", "potential.", c.potential.grid_shape);
  read(po, "grid_extent", "potential.", c.potential.grid_extent);
  read(po, "period_fold", "potential.", c.potential.period_fold);
  const auto me = root["mesh"];
  check_keys(me, "mesh.", {"nodes", "r_max", "r_inf", "ball_nodes", "min_cells", "theta_cells", "phi_cells"});
  read(me, "nodes", "mesh.", c.mesh.nodes);
  read(me, "r_max", "mesh.", c.mesh.r_max);
  read(me, "r_inf", "mesh.", c.mesh.r_inf);
  read(me, "ball_nodes", "mesh.", c.mesh.ball_nodes);
  read(me, "min_cells", "mesh.", c.mesh.min_cells);
  read(me, "theta_cells", "mesh.", c.mesh.theta_cells);
  read(me, "phi_cells", "mesh.", c.mesh.phi_cells);
  read(root, "depth", "", c.depth);
  const auto gr = root["group"];
  check_keys(gr, "group.", {"kind", "n", "blocks", "generators"});
  read(gr, "kind", "group.", c.group.kind);
  read(gr, "n", "group.", c.group.n);
  read(gr, "blocks", "group.", c.group.blocks);
  read(gr, "generators", "group.", c.group.generators);
  const auto ob = root["obstacle"];
  check_keys(ob, "obstacle.", {"kind", "petals", "amplitude"});
  read(ob, "kind", "obstacle.", c.obstacle.kind);
  read(ob, "petals", "obstacle.", c.obstacle.petals);
  read(ob, "amplitude", "obstacle.", c.obstacle.amplitude);
  const auto so = root["solver"];
  check_keys(so, "solver.", {"max_steps", "tolerance", "nodal_tolerance", "starts", "dt_max", "alpha_samples",
                             "search_budget"});
  read(so, "max_steps", "solver.", c.solver.max_steps);
  read(so, "tolerance", "solver.", c.solver.tolerance);
  read(so, "nodal_tolerance", "solver.", c.solver.nodal_tolerance);
  read(so, "starts", "solver.", c.solver.starts);
  read(so, "dt_max", "solver.", c.solver.dt_max);
  read(so, "alpha_samples", "solver.", c.solver.alpha_samples);
  read(so, "search_budget", "solver.", c.solver.search_budget);
  read(root, "seed", "", c.seed);
  read(root, "max_threads", "", c.max_threads);
  read(root, "output", "", c.output);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string decimal(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";  // keep it a real in YAML
  return s;
}

template <class T>
std::string list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>)
      s += decimal(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s + "]";
}

}  // namespace

std::string dump_config(const RunConfig& c) {
  std::ostringstream o;
  o << "problem:\n  N: " << c.problem.N << "\n  R: " << decimal(c.problem.R) << "\n";
  o << "nonlinearity:\n  kind: " << c.nonlinearity.kind << "\n  p: " << decimal(c.nonlinearity.p)
    << "\n  q: " << decimal(c.nonlinearity.q) << "\n  amplitude: " << decimal(c.nonlinearity.amplitude)
    << "\n  theta: " << decimal(c.nonlinearity.theta) << "\n";
  o << "potential:\n  kind: " << c.potential.kind << "\n  depth: " << decimal(c.potential.depth)
    << "\n  width: " << decimal(c.potential.width) << "\n  radii: " << list(c.potential.radii)
    << "\n  values: " << list(c.potential.values) << "\n  tail_exponent: " << decimal(c.potential.tail_exponent)
    << "\n  r_exponent: " << decimal(c.potential.r_exponent) << "\n  grid_shape: " << list(c.potential.grid_shape)
    << "\n  grid_extent: " << list(c.potential.grid_extent) << "\n  period_fold: " << c.potential.period_fold << "\n";
  o << "mesh:\n  nodes: " << c.mesh.nodes << "\n  r_max: " << decimal(c.mesh.r_max)
    << "\n  r_inf: " << decimal(c.mesh.r_inf) << "\n  ball_nodes: " << c.mesh.ball_nodes
    << "\n  min_cells: " << c.mesh.min_cells << "\n  theta_cells: " << c.mesh.theta_cells
    << "\n  phi_cells: " << c.mesh.phi_cells << "\n";
  o << "depth: " << c.depth << "\n";
  o << "group:\n  kind: " << c.group.kind << "\n  n: " << c.group.n << "\n  blocks: " << list(c.group.blocks)
    << "\n  generators:";
  if (c.group.generators.empty()) o << " []";
  for (const auto& g : c.group.generators) o << "\n    - " << list(g);
  o << "\n";
  o << "obstacle:\n  kind: " << c.obstacle.kind << "\n  petals: " << c.obstacle.petals
    << "\n  amplitude: " << decimal(c.obstacle.amplitude) << "\n";
  o << "solver:\n  max_steps: " << c.solver.max_steps << "\n  tolerance: " << decimal(c.solver.tolerance)
    << "\n  nodal_tolerance: " << decimal(c.solver.nodal_tolerance) << "\n  starts: " << c.solver.starts
    << "\n  dt_max: " << decimal(c.solver.dt_max) << "\n  alpha_samples: " << c.solver.alpha_samples
    << "\n  search_budget: " << c.solver.search_budget << "\n";
  o << "seed: " << c.seed << "\nmax_threads: " << c.max_threads << "\noutput: \"" << c.output << "\"\n";
  return o.str();
}

}  // namespace nodal

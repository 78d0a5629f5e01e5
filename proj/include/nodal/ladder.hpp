#pragma once

#include "nodal/flow.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nodal {

struct AnnulusState {
  double inner = 0.0;
  double outer = 0.0;
  double energy = 0.0;
  std::vector<double> radii;  // profile of the ground state omega
  std::vector<double> values;
};

/// Radial ground state on the annulus a < |x| < b.
AnnulusState annulus_ground_state(double a, double b, const Potential& pot, const Nonlinearity& nl,
                                  int N, int nodes = 400, const SolverOptions& solver = {});

struct LimitEnergy {
  double value = 0.0;
  double refined = 0.0;      // R_inf and resolution doubled
  double sensitivity = 0.0;  // |refined - value| / value
  double r_inf = 0.0;
  int nodes = 0;
};

/// Ground energy of -Delta u = f(u) on R^N, computed on the ball B_{R_inf};
/// throws SolverError when doubling R_inf and the resolution moves it by more than 2%.
LimitEnergy limit_ground_energy(const Nonlinearity& nl, int N, double r_inf = 60.0, int nodes = 512,
                                const SolverOptions& solver = {});

struct LadderOptions {
  int nodes = 400;       // global radial grid on (R, R_max)
  double r_max = 0.0;    // <= 0 selects 40 R
  double r_inf = 60.0;   // ball radius for the limit problem
  int ball_nodes = 512;
  int min_cells = 12;    // smallest annulus, in grid cells
  int search_budget = 600;
  SolverOptions solver;
};

struct LadderRow {
  int k = 0;
  std::vector<int> breaks;  // grid indices a_1 = i_0 < i_1 < ... < i_k = b_k
  std::vector<std::pair<double, double>> annuli;
  std::vector<double> energies;
  double c = 0.0;
  double ell = 0.0;
  double search_margin = 0.0;  // min energy increase over +-1 moves of single breaks
  bool local_minimum = true;
};

struct LadderTable {
  int N = 4;
  double R = 0.0;
  double r_max = 0.0;
  int depth = 0;
  double c0 = 0.0;
  LimitEnergy limit;
  double c_inf = 0.0;
  double tol_ladder = 0.0;  // 1e-6 c_0
  std::vector<double> grid;
  std::vector<LadderRow> rows;  // rows[k-1] describes c_k
  /// omega profiles on the grid, keyed by (first, last) grid index.
  std::map<std::pair<int, int>, AnnulusState> omegas;
  int evaluations = 0;
  bool budget_exhausted = false;
  /// Non-empty when a row failed; rows before it are kept.
  std::string error;
  LadderOptions options;

  const LadderRow& row(int k) const { return rows.at(static_cast<std::size_t>(k - 1)); }
};

/// Minimises sum I_V(omega_i) over k adjacent annuli R = a_1 < b_1 = a_2 < ... < b_k = R_max
/// for k = 1..m. Adjacent families suffice: shrinking an annulus never lowers its energy.
/// A SolverError inside row k stops the table there and is recorded in `error`.
LadderTable build_ladder(double R, int m, const Potential& pot, const Nonlinearity& nl, int N,
                         const LadderOptions& options = {});

struct Verdict {
  int k = 0;
  double ell = 0.0;
  bool below_threshold = false;
  int guaranteed_pairs = 0;  // 1 positive + (k-1) nodal when below the threshold
  double energy_bound = 0.0; // ell_k * c_inf
};

/// min_orbit = nullopt stands for an infinite minimal orbit.
std::vector<Verdict> threshold_verdict(const LadderTable& table, std::optional<long> min_orbit);

/// Checks c_{k-1} + c_0 <= c_k + tol_ladder and ell_{k-1} < ell_k.
bool ladder_is_monotone(const LadderTable& table);

/// Sum of signs_i omega_i for row k, sampled on the target mesh (whose radial
/// nodes must contain the ladder grid on the relevant range), then projected
/// onto the Nehari set (one sign) or the nodal Nehari set (mixed signs).
DiscreteField multibump_seed(const LadderTable& table, int k, const std::vector<int>& signs,
                             const EnergyModel& model);

/// Same for an explicit list of annuli, which must be pairwise disjoint.
DiscreteField multibump_seed(const std::vector<AnnulusState>& annuli, const std::vector<int>& signs,
                             const EnergyModel& model);

}  // namespace nodal

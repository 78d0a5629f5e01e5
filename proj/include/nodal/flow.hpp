#pragma once

#include "nodal/energy.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace nodal {

enum class Projection { none, nehari, nodal };

struct FlowOptions {
  Projection projection = Projection::none;
  double dt_max = 1.0;
  /// Radius of the cone neighbourhoods whose entrance is recorded; NaN disables.
  double alpha = std::numeric_limits<double>::quiet_NaN();
  /// Sublevel I_V <= level whose entrance is recorded.
  std::optional<double> level;
};

struct StepRecord {
  double t = 0.0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double dt = 0.0;          // 0 for the start and for Newton polishing entries
  double cone_plus = 0.0;   // surrogate distance to P
  double cone_minus = 0.0;  // surrogate distance to -P
};

struct FlowEvent {
  enum class Kind { enter_cone_plus, enter_cone_minus, enter_sublevel } kind;
  double t = 0.0;
};

std::string to_string(FlowEvent::Kind kind);

/// Snapshot of a flow trajectory; the last history entry describes `field`.
struct FlowState {
  DiscreteField field;
  DiscreteField gradient;
  double t = 0.0;
  double grad_norm = 0.0;
  double cone_plus = 0.0;
  double cone_minus = 0.0;
  double next_dt = 1.0;
  std::vector<StepRecord> history;
  std::vector<FlowEvent> events;
};

FlowState start_flow(const EnergyModel& model, DiscreteField u, const FlowOptions& options = {});

/// One accepted descent step v = P(u - dt grad I_V(u)) with backtracking:
/// accepted once I_V(v) <= I_V(u) - dt/2 ||grad||_V^2 (+1e-12 |I_V(u)| for
/// rounding), halving dt otherwise; 60 halvings raise StagnationError.
FlowState flow_step(const EnergyModel& model, const FlowState& state, double dt,
                    const FlowOptions& options = {});

// ---------------------------------------------------------------------------

enum class OutcomeKind { positive_ground_state, nodal, escaped_to_sublevel, max_time };

std::string to_string(OutcomeKind kind);

struct SolveOutcome {
  OutcomeKind kind = OutcomeKind::max_time;
  DiscreteField field;
  double energy = 0.0;
  double residual = 0.0;           // ||grad I_V||_V
  double relative_residual = 0.0;  // residual / ||u||_V
  NehariDiagnostics nehari;
  SignMasses masses;
  double mass_floor = 0.0;
  double cone_plus = 0.0;
  double cone_minus = 0.0;
  int seed_id = 0;
  int steps = 0;
  int newton_steps = 0;  // polishing iterations after the descent stalled
  std::vector<StepRecord> history;
  std::vector<FlowEvent> events;
  /// Nodal runs: level the result must not exceed, and whether it holds.
  std::optional<double> level;
  bool within_level = true;
  /// All multi-start runs, sorted by (energy, seed id); empty for single runs.
  std::vector<double> start_energies;
  std::vector<bool> start_converged;
};

struct SolverOptions {
  int max_steps = 4000;
  double tolerance = 1e-8;  // on ||grad||_V / ||u||_V
  int starts = 5;
  std::uint64_t seed = 1;
  int max_threads = 1;
  double dt_max = 1.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  /// Absolute slack when comparing a nodal energy with its level.
  double level_tolerance = 0.0;
};

/// Nonnegative seeds: a centred bump plus seeded random positive bumps.
std::vector<DiscreteField> positive_seeds(const EnergyModel& model, int count, std::uint64_t seed);

/// Nehari-projected descent from one seed (sign-definite or not).
SolveOutcome solve_positive_from(const EnergyModel& model, const DiscreteField& seed,
                                 const SolverOptions& options, int seed_id = 0);

/// Multi-start ground-state search; the lowest converged energy wins.
SolveOutcome solve_positive(const EnergyModel& model, const SolverOptions& options = {});

/// Nodal-projected descent (use tolerance 1e-7); `level` (e.g. d_k of the
/// seed family) is checked against the final energy. On meshes the descent
/// can stall at a kink of the nodewise split, short of a critical point; it
/// is then polished by Newton iterations on grad I_V = 0, accepted only while
/// the residual shrinks and both signs survive.
SolveOutcome solve_nodal(const EnergyModel& model, const DiscreteField& seed,
                         const SolverOptions& options, std::optional<double> level = {});

}  // namespace nodal

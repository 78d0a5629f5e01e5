#include "nodal/flow.hpp"

#include "nodal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

namespace nodal {

std::string to_string(FlowEvent::Kind kind) {
  switch (kind) {
    case FlowEvent::Kind::enter_cone_plus: return "enter_cone_plus";
    case FlowEvent::Kind::enter_cone_minus: return "enter_cone_minus";
    case FlowEvent::Kind::enter_sublevel: return "enter_sublevel";
  }
  return "unknown";
}

std::string to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::positive_ground_state: return "positive_ground_state";
    case OutcomeKind::nodal: return "nodal";
    case OutcomeKind::escaped_to_sublevel: return "escaped_to_sublevel";
    case OutcomeKind::max_time: return "max_time";
  }
  return "unknown";
}

namespace {

bool has_event(const FlowState& s, FlowEvent::Kind kind) {
  return std::any_of(s.events.begin(), s.events.end(), [&](const FlowEvent& e) { return e.kind == kind; });
}

void record(const EnergyModel& model, FlowState& s, double dt, const FlowOptions& options) {
  s.gradient = model.gradient(s.field);
  s.grad_norm = model.norm(s.gradient);
  s.cone_plus = model.cone_distance(s.field, Sign::plus).v_norm;
  s.cone_minus = model.cone_distance(s.field, Sign::minus).v_norm;
  const double e = model.energy(s.field);
  s.history.push_back({s.t, e, s.grad_norm, dt, s.cone_plus, s.cone_minus});
  using K = FlowEvent::Kind;
  if (std::isfinite(options.alpha)) {
    if (s.cone_plus <= options.alpha && !has_event(s, K::enter_cone_plus))
      s.events.push_back({K::enter_cone_plus, s.t});
    if (s.cone_minus <= options.alpha && !has_event(s, K::enter_cone_minus))
      s.events.push_back({K::enter_cone_minus, s.t});
  }
  if (options.level && e <= *options.level && !has_event(s, K::enter_sublevel))
    s.events.push_back({K::enter_sublevel, s.t});
}

DiscreteField project(const EnergyModel& model, DiscreteField v, Projection p) {
  switch (p) {
    case Projection::none: return v;
    case Projection::nehari: return model.nehari_scale(v).scaled;
    case Projection::nodal: return model.nodal_project(v);
  }
  return v;
}

}  // namespace

FlowState start_flow(const EnergyModel& model, DiscreteField u, const FlowOptions& options) {
  FlowState s;
  s.field = std::move(u);
  s.next_dt = options.dt_max;
  record(model, s, 0.0, options);
  return s;
}

FlowState flow_step(const EnergyModel& model, const FlowState& state, double dt,
                    const FlowOptions& options) {
  if (!(dt > 0.0)) throw DomainError("flow step needs dt > 0");
  if (state.grad_norm == 0.0) return state;
  const double e0 = model.energy(state.field);
  const double g2 = state.grad_norm * state.grad_norm;
  std::vector<double> tried;
  double step = std::min(dt, options.dt_max);
  for (int attempt = 0; attempt <= 60; ++attempt) {
    DiscreteField v = model.field(state.field.values - step * state.gradient.values);
    bool admissible = true;
    try {
      v = project(model, std::move(v), options.projection);
    } catch (const SignError&) {
      admissible = false;  // the step wiped out a sign; shorten it
    } catch (const BracketError&) {
      admissible = false;
    }
    if (admissible) {
      const double e1 = model.energy(v);
      tried.push_back(e1);
      if (e1 <= e0 - 0.5 * step * g2 + 1e-12 * std::abs(e0)) {
        FlowState next = state;
        next.field = std::move(v);
        next.t += step;
        next.next_dt = std::min(options.dt_max, 2.0 * step);
        record(model, next, step, options);
        return next;
      }
    }
    step *= 0.5;
  }
  throw StagnationError("line search failed after 60 halvings", tried);
}

// ---------------------------------------------------------------------------

std::vector<DiscreteField> positive_seeds(const EnergyModel& model, int count, std::uint64_t seed) {
  const auto& mesh = model.mesh();
  const double a = mesh.inner_radius();
  const double b = mesh.outer_radius();
  // Concentrate seeds where the ground state lives: within a few obstacle radii.
  const double span = std::min(b - a, std::max(4.0 * std::max(a, 1.0), 0.25 * (b - a)));
  std::vector<DiscreteField> seeds;
  seeds.push_back(radial_bump(model, a, a + span));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 1; k < count; ++k) {
    Vector v = Vector::Zero(mesh.node_count());
    const int bumps = 1 + static_cast<int>(3 * unit(rng));
    for (int j = 0; j < bumps; ++j) {
      const double r0 = a + span * 0.6 * unit(rng);
      const double r1 = std::min(b, r0 + span * (0.2 + 0.8 * unit(rng)));
      v += radial_bump(model, r0, r1, 0.2 + unit(rng)).values;
    }
    if (!mesh.is_radial()) {
      // Angular modulation keeps the seed nonnegative while breaking radial symmetry.
      const double amp_theta = 0.8 * unit(rng);
      const double amp_phi = 0.8 * unit(rng);
      const double period = 2.0 * std::numbers::pi / mesh.n_fold();
      for (int i = 0; i < mesh.node_count(); ++i) {
        const auto& p = mesh.points()[static_cast<std::size_t>(i)];
        const double phi = std::atan2(p.y_norm, p.rho);
        v[i] *= 1.0 + amp_theta * std::cos(2.0 * std::numbers::pi * p.theta / period) +
                amp_phi * std::cos(2.0 * phi);
        v[i] = std::max(v[i], 0.0);
      }
    }
    seeds.push_back(model.field(std::move(v)));
  }
  return seeds;
}

namespace {

SolveOutcome finish(const EnergyModel& model, const FlowState& s, OutcomeKind kind, int seed_id) {
  SolveOutcome out;
  out.kind = kind;
  out.field = s.field;
  out.energy = model.energy(s.field);
  out.residual = s.grad_norm;
  const double n = model.norm(s.field);
  out.relative_residual = n > 0.0 ? s.grad_norm / n : 0.0;
  out.nehari = model.diagnostics(s.field);
  out.masses = model.sign_masses(s.field);
  out.mass_floor = model.mass_floor();
  out.cone_plus = s.cone_plus;
  out.cone_minus = s.cone_minus;
  out.seed_id = seed_id;
  out.steps = static_cast<int>(s.history.size()) - 1;
  out.history = s.history;
  out.events = s.events;
  return out;
}

}  // namespace

SolveOutcome solve_positive_from(const EnergyModel& model, const DiscreteField& seed,
                                 const SolverOptions& options, int seed_id) {
  if (model.norm_squared(seed) == 0.0) throw DomainError("positive solve needs a nonzero seed");
  FlowOptions fo;
  fo.projection = Projection::nehari;
  fo.dt_max = options.dt_max;
  fo.alpha = options.alpha;
  fo.level = 0.0;
  FlowState s = start_flow(model, model.nehari_scale(seed).scaled, fo);
  for (int step = 0; step < options.max_steps; ++step) {
    if (s.grad_norm <= options.tolerance * model.norm(s.field)) break;
    s = flow_step(model, s, s.next_dt, fo);
    if (model.energy(s.field) <= 0.0) return finish(model, s, OutcomeKind::escaped_to_sublevel, seed_id);
  }
  const bool converged = s.grad_norm <= options.tolerance * model.norm(s.field);
  SolveOutcome out = finish(model, s, converged ? OutcomeKind::positive_ground_state : OutcomeKind::max_time, seed_id);
  if (converged) {
    // A solution of one sign: report it as the nonnegative representative.
    if (out.cone_plus > out.cone_minus) {
      out.field = model.field(-out.field.values);
      std::swap(out.cone_plus, out.cone_minus);
      std::swap(out.masses.plus, out.masses.minus);
    }
    if (out.cone_plus > 1e-8) out.kind = OutcomeKind::max_time;
  }
  return out;
}

SolveOutcome solve_positive(const EnergyModel& model, const SolverOptions& options) {
  const auto seeds = positive_seeds(model, std::max(1, options.starts), options.seed);
  std::vector<std::optional<SolveOutcome>> results(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::mutex mutex;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mutex);
        if (next >= seeds.size()) return;
        k = next++;
      }
      try {
        results[k] = solve_positive_from(model, seeds[k], options, static_cast<int>(k));
      } catch (const Error& e) {
        errors[k] = e.what();
      }
    }
  };
  const int threads = std::clamp(options.max_threads, 1, static_cast<int>(seeds.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<const SolveOutcome*> ok;
  for (const auto& r : results)
    if (r) ok.push_back(&*r);
  std::sort(ok.begin(), ok.end(), [](const SolveOutcome* x, const SolveOutcome* y) {
    const bool cx = x->kind == OutcomeKind::positive_ground_state;
    const bool cy = y->kind == OutcomeKind::positive_ground_state;
    if (cx != cy) return cx;
    if (x->energy != y->energy) return x->energy < y->energy;
    return x->seed_id < y->seed_id;
  });
  if (ok.empty()) {
    std::string msg = "all ground-state starts failed";
    for (const auto& e : errors)
      if (!e.empty()) msg += "; " + e;
    throw SolverError(msg);
  }
  SolveOutcome best = *ok.front();
  for (const auto* r : ok) {
    best.start_energies.push_back(r->energy);
    best.start_converged.push_back(r->kind == OutcomeKind::positive_ground_state);
  }
  return best;
}

SolveOutcome solve_nodal(const EnergyModel& model, const DiscreteField& seed,
                         const SolverOptions& options, std::optional<double> level) {
  if (!seed.has_positive_part() || !seed.has_negative_part())
    throw SignError("nodal solve needs a seed with both signs");
  FlowOptions fo;
  fo.projection = Projection::nodal;
  fo.dt_max = options.dt_max;
  fo.alpha = options.alpha;
  fo.level = level;
  const double floor = model.mass_floor();
  FlowState s = start_flow(model, model.nodal_project(seed), fo);
  const double tol = options.tolerance;
  auto converged = [&] { return s.grad_norm <= tol * model.norm(s.field); };
  constexpr std::size_t window = 100;
  for (int step = 0; step < options.max_steps; ++step) {
    if (converged()) break;
    s = flow_step(model, s, s.next_dt, fo);
    const auto m = model.sign_masses(s.field);
    if (m.plus <= floor || m.minus <= floor)
      throw SignError("sign collapse during the nodal flow; try a different seed");
    const auto& h = s.history;
    if (h.size() > window && std::abs(h.back().energy - h[h.size() - 1 - window].energy) <=
                                 1e-13 * std::abs(h.back().energy))
      break;  // energy flat: stalled on the constraint
  }
  int newton = 0;
  for (; newton < 20 && !converged(); ++newton) {
    DiscreteField d;
    try {
      d = model.newton_direction(s.field);
    } catch (const SolverError&) {
      break;
    }
    bool accepted = false;
    for (double lambda = 1.0; lambda > 1e-3 && !accepted; lambda *= 0.5) {
      FlowState next = s;
      next.field = model.field(s.field.values + lambda * d.values);
      const auto m = model.sign_masses(next.field);
      if (m.plus <= floor || m.minus <= floor) continue;
      next.gradient = model.gradient(next.field);
      next.grad_norm = model.norm(next.gradient);
      if (next.grad_norm < s.grad_norm) {
        record(model, next, 0.0, fo);
        s = std::move(next);
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  SolveOutcome out = finish(model, s, converged() ? OutcomeKind::nodal : OutcomeKind::max_time, 0);
  out.newton_steps = newton;
  if (out.kind == OutcomeKind::nodal &&
      (!out.nehari.nodal_member || out.masses.plus <= floor || out.masses.minus <= floor))
    out.kind = OutcomeKind::max_time;
  out.level = level;
  if (level) out.within_level = out.energy <= *level + options.level_tolerance + 1e-12 * std::abs(*level);
  return out;
}

}  // namespace nodal

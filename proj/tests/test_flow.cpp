#include "nodal/errors.hpp"
#include "nodal/flow.hpp"
#include "nodal/ladder.hpp"

#include <doctest.h>
#include <oracles.hpp>

#include <cmath>
#include <random>

using namespace nodal;

namespace {

const Nonlinearity kDefault = Nonlinearity::double_power(3, 6, 6, 3);
const Nonlinearity kMild = Nonlinearity::double_power(3.5, 4.5, 4.5, 3.5);

EnergyModel annulus_model(double a, double b, int nodes) {
  return EnergyModel::create(build_radial(MeshKind::radial_annulus, 4, a, b, nodes, {}), Potential::zero(),
                             kDefault);
}

}  // namespace

TEST_CASE("plain flow descends and respects the Armijo bound") {
  const auto m = annulus_model(1.0, 3.0, 200);
  auto s = start_flow(m, radial_bump(m, 1.2, 2.6, 0.5));
  for (int k = 0; k < 30 && s.grad_norm > 0.0; ++k) {
    const auto next = flow_step(m, s, s.next_dt);
    const double de = next.history.back().energy - s.history.back().energy;
    const double dt = next.history.back().dt;
    CHECK(dt <= 1.0);
    CHECK(de <= -0.5 * dt * s.grad_norm * s.grad_norm + 1e-12 * std::abs(s.history.back().energy));
    CHECK(next.t == doctest::Approx(s.t + dt));
    s = next;
  }
  CHECK(s.history.size() > 2);
  CHECK_THROWS_AS(flow_step(m, s, 0.0), DomainError);
}

TEST_CASE("flow records cone and sublevel events") {
  const auto m = annulus_model(1.0, 3.0, 200);
  FlowOptions fo;
  fo.alpha = 1e6;
  fo.level = 0.0;
  auto s = start_flow(m, radial_bump(m, 1.2, 2.6, 0.05), fo);
  REQUIRE(s.events.size() == 2);
  CHECK(s.events[0].kind == FlowEvent::Kind::enter_cone_plus);
  CHECK(s.events[1].kind == FlowEvent::Kind::enter_cone_minus);
  CHECK(to_string(FlowEvent::Kind::enter_sublevel) == "enter_sublevel");
  // A large bump has negative energy already.
  auto t = start_flow(m, radial_bump(m, 1.2, 2.6, 50.0), fo);
  CHECK(std::any_of(t.events.begin(), t.events.end(),
                    [](const FlowEvent& e) { return e.kind == FlowEvent::Kind::enter_sublevel; }));
}

TEST_CASE("ground state agrees with the shooting oracle") {
  const auto m = annulus_model(1.0, 2.0, 400);
  const auto out = solve_positive(m);
  const auto ref = oracle::shoot_annulus(kDefault, 4, 1.0, 2.0);
  REQUIRE(out.kind == OutcomeKind::positive_ground_state);
  CHECK(std::abs(out.energy / ref.energy - 1.0) < 1e-3);
  CHECK(out.cone_plus <= 1e-8);
  CHECK(std::abs(out.nehari.psi_value) <= out.nehari.tolerance);
  CHECK(out.relative_residual <= 1e-8);
  // Histories are monotone in energy.
  for (std::size_t k = 1; k < out.history.size(); ++k)
    CHECK(out.history[k].energy <= out.history[k - 1].energy + 1e-12 * std::abs(out.history[k - 1].energy));
}

TEST_CASE("multi-start is seed independent and deterministic") {
  const auto m = annulus_model(1.0, 2.0, 200);
  SolverOptions o;
  o.starts = 6;
  const auto a = solve_positive(m, o);
  REQUIRE(a.start_energies.size() == 6);
  for (std::size_t k = 0; k < a.start_energies.size(); ++k) {
    CHECK(a.start_converged[k]);
    CHECK(a.start_energies[k] == doctest::Approx(a.energy).epsilon(1e-7));
  }
  o.max_threads = 3;
  const auto b = solve_positive(m, o);
  CHECK(b.energy == a.energy);
  CHECK(b.seed_id == a.seed_id);
  CHECK((b.field.values - a.field.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mirrored seed gives the nonnegative representative") {
  const auto m = annulus_model(1.0, 2.0, 200);
  const auto bump = radial_bump(m, 1.1, 1.9);
  const auto up = solve_positive_from(m, bump, {});
  const auto down = solve_positive_from(m, m.field(-bump.values), {});
  REQUIRE(up.kind == OutcomeKind::positive_ground_state);
  REQUIRE(down.kind == OutcomeKind::positive_ground_state);
  CHECK(down.energy == doctest::Approx(up.energy).epsilon(1e-10));
  CHECK(down.field.values.minCoeff() >= -1e-12);
  CHECK(down.cone_plus <= 1e-8);
  CHECK_THROWS_AS(solve_positive_from(m, m.zero(), {}), DomainError);
}

TEST_CASE("nodal solve on two radial annuli") {
  const auto m = EnergyModel::create(build_radial(MeshKind::radial_annulus, 4, 1.0, 3.0, 401, {}),
                                    Potential::zero(), kMild);
  const auto& r = m.mesh().points();
  std::vector<double> inner, outer;
  for (const auto& p : r) (p.radius <= 2.0 + 1e-12 ? inner : outer).push_back(p.radius);
  outer.insert(outer.begin(), inner.back());
  SolverOptions so;
  const auto w1 = annulus_ground_state(1.0, 2.0, Potential::zero(), kMild, 4, 201, so);
  const auto w2 = annulus_ground_state(2.0, 3.0, Potential::zero(), kMild, 4, 201, so);
  const double level = w1.energy + w2.energy;
  const auto seed = multibump_seed(std::vector<AnnulusState>{w1, w2}, {1, -1}, m);
  CHECK(m.energy(seed) == doctest::Approx(level).epsilon(1e-9));
  so.tolerance = 1e-7;
  const auto out = solve_nodal(m, seed, so, level);
  REQUIRE(out.kind == OutcomeKind::nodal);
  CHECK(out.within_level);
  CHECK(out.energy <= level + 1e-9 * level);
  CHECK(out.nehari.nodal_member);
  CHECK(std::abs(out.nehari.psi_plus) <= 1e-6 * m.norm_squared(out.field));
  CHECK(std::abs(out.nehari.psi_minus) <= 1e-6 * m.norm_squared(out.field));
  CHECK(out.masses.plus > out.mass_floor);
  CHECK(out.masses.minus > out.mass_floor);
  CHECK_THROWS_AS(solve_nodal(m, radial_bump(m, 1.2, 2.5), so), SignError);
}

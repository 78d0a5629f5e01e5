#include "nodal/errors.hpp"
#include "nodal/ladder.hpp"

#include <doctest.h>

#include <cmath>

using namespace nodal;

namespace {

const Nonlinearity kDefault = Nonlinearity::double_power(3, 6, 6, 3);

LadderOptions small_options() {
  LadderOptions o;
  o.nodes = 200;
  o.r_max = 8.0;
  o.min_cells = 10;
  return o;
}

Potential grid_potential() {
  PotentialGrid g;
  g.n_rho = g.n_theta = g.n_y = 4;
  g.rho_max = g.y_max = 4.0;
  g.values.assign(64, 0.0);
  return Potential::grid(g);
}

}  // namespace

TEST_CASE("annulus energies are monotone in the domain") {
  const auto& V = Potential::zero();
  const double e12 = annulus_ground_state(1.0, 2.0, V, kDefault, 4, 200).energy;
  const double e13 = annulus_ground_state(1.0, 3.0, V, kDefault, 4, 200).energy;
  const double e152 = annulus_ground_state(1.5, 2.0, V, kDefault, 4, 200).energy;
  CHECK(e13 < e12);
  CHECK(e152 > e12);
  CHECK_THROWS_AS(annulus_ground_state(1.0, 1.0, V, kDefault, 4), GeometryError);
  CHECK_THROWS_AS(annulus_ground_state(0.0, 1.0, V, kDefault, 4), GeometryError);
  const auto crit = Nonlinearity::pure_power(4.0, 10.0, 3.0);
  CHECK_THROWS_AS(annulus_ground_state(1.0, 2.0, V, crit, 4), ConfigError);
}

TEST_CASE("small ladder") {
  const auto t = build_ladder(1.0, 3, Potential::zero(), kDefault, 4, small_options());
  REQUIRE(t.rows.size() == 3);
  CHECK(t.row(1).c == t.c0);
  CHECK(t.row(1).breaks == std::vector<int>{0, 199});
  CHECK(ladder_is_monotone(t));
  CHECK(t.limit.sensitivity < 0.02);
  for (const auto& row : t.rows) {
    CHECK(row.local_minimum);
    CHECK(row.breaks.front() == 0);
    CHECK(row.breaks.back() == 199);
    CHECK(row.annuli.front().first == t.R);
    CHECK(row.annuli.back().second == doctest::Approx(t.r_max).epsilon(1e-14));
    double sum = 0.0;
    for (double e : row.energies) sum += e;
    CHECK(sum == doctest::Approx(row.c).epsilon(1e-14));
    CHECK(row.ell == doctest::Approx(row.c / t.c_inf));
  }
  for (int k = 2; k <= 3; ++k) CHECK(t.row(k - 1).c + t.c0 <= t.row(k).c + t.tol_ladder);

  // d_k additivity: the sign-alternating multibump on the grid mesh has the
  // sum of the annulus energies.
  auto model = EnergyModel::create(build_radial_from_nodes(MeshKind::radial_annulus, 4, t.grid),
                                   Potential::zero(), kDefault);
  const auto seed = multibump_seed(t, 3, {1, -1, 1}, model);
  CHECK(model.energy(seed) == doctest::Approx(t.row(3).c).epsilon(1e-9));
  const auto pos = multibump_seed(t, 2, {1, 1}, model);
  CHECK(model.diagnostics(pos).member);
  CHECK_THROWS_AS(multibump_seed(t, 4, {1, 1, 1, 1}, model), DomainError);
  CHECK_THROWS_AS(multibump_seed(t, 2, {1}, model), DomainError);
  CHECK_THROWS_AS(multibump_seed(t, 2, {1, 0}, model), DomainError);

  const auto& r1 = t.row(2);
  auto a = t.omegas.at({r1.breaks[0], r1.breaks[1]});
  auto b = t.omegas.at({r1.breaks[0], r1.breaks[2]});
  CHECK_THROWS_AS(multibump_seed(std::vector<AnnulusState>{a, b}, {1, -1}, model), GeometryError);

  const auto none = threshold_verdict(t, std::nullopt);
  for (const auto& v : none) {
    CHECK(v.below_threshold);
    CHECK(v.guaranteed_pairs == v.k);
    CHECK(v.energy_bound == doctest::Approx(t.row(v.k).c));
  }
  const auto low = threshold_verdict(t, 1);
  for (const auto& v : low) CHECK(v.below_threshold == (v.ell < 1.0));
}

TEST_CASE("ladder input validation") {
  const auto& V = Potential::zero();
  CHECK_THROWS_AS(build_ladder(1.0, 0, V, kDefault, 4, small_options()), DomainError);
  CHECK_THROWS_AS(build_ladder(0.0, 1, V, kDefault, 4, small_options()), GeometryError);
  auto o = small_options();
  o.r_max = 1.0;
  CHECK_THROWS_AS(build_ladder(1.0, 1, V, kDefault, 4, o), GeometryError);
  o = small_options();
  o.min_cells = 100;
  CHECK_THROWS_AS(build_ladder(1.0, 2, V, kDefault, 4, o), GeometryError);
  CHECK_THROWS_AS(build_ladder(1.0, 1, V, Nonlinearity::pure_power(4.0, 10.0, 3.0), 4, o), ConfigError);
  CHECK_THROWS_AS(build_ladder(1.0, 1, grid_potential(), kDefault, 4,
                               small_options()),
                  ConfigError);
}

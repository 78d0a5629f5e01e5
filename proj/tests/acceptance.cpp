// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "nodal/errors.hpp"
#include "nodal/field_io.hpp"
#include "nodal/ladder.hpp"
#include "nodal/orbits.hpp"
#include "nodal/runner.hpp"

#include <oracles.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace nodal;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const Nonlinearity kDefault = Nonlinearity::double_power(3, 6, 6, 3);

// Frozen from the shooting oracle (dense dopri5 at 1e-13): annulus (1, 2), N = 4.
constexpr double kShootingEnergy = 7726.37981815;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

// Energy histories from every flow run of the suite, for the invariant check.
std::vector<std::vector<StepRecord>> g_histories;

// Shared end-to-end run of the two-pair configuration.
const fs::path g_root = fs::temp_directory_path() / ("nodal_acceptance_" + std::to_string(::getpid()));

int run_pipeline(const fs::path& out, int threads) {
  RunOptions o;
  o.config_path = std::string(NODAL_CONFIG_DIR) + "/z5_two_pairs.yaml";
  o.out_dir = out.string();
  o.max_threads = threads;
  std::ostringstream sink;
  for (const char* c : {"check", "ladder", "orbit", "solve", "report"}) {
    const int code = run_command(c, o, sink, sink);
    if (code != exit_ok) return code;
  }
  return exit_ok;
}

std::vector<StepRecord> read_log(const fs::path& path) {
  std::vector<StepRecord> h;
  std::istringstream in(read_text(path.string()));
  std::string line;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    if (j.contains("event")) continue;
    h.push_back({j["t"], j["energy"], j["grad_norm"], j["dt"], j["cone_plus"], j["cone_minus"]});
  }
  return h;
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = EnergyModel::create(build_radial(MeshKind::radial_annulus, 4, 1.0, 2.0, 400, {}),
                                     Potential::zero(), kDefault);
  const auto s = solve_positive(m);
  const double elapsed = seconds_since(t0);
  g_histories.push_back(s.history);
  const auto ref = oracle::shoot_annulus(kDefault, 4, 1.0, 2.0);
  const double rel = std::abs(s.energy / ref.energy - 1.0);
  const bool frozen = std::abs(ref.energy / kShootingEnergy - 1.0) < 1e-9;
  return {s.kind == OutcomeKind::positive_ground_state && rel < 1e-3 && elapsed < 10.0 && frozen,
          "flow " + fmt(s.energy, 10) + " vs shooting " + fmt(ref.energy, 10) + ", rel " + fmt(rel, 3) + ", " +
              fmt(elapsed, 3) + " s"};
}

Outcome ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::vector<std::pair<std::string, EnergyModel>> models = {
      {"annulus", EnergyModel::create(build_radial(MeshKind::radial_annulus, 4, 1.0, 3.0, 200, {}),
                                      Potential::gaussian(1.5, 1.0), kDefault)},
      {"exterior", EnergyModel::create(build_radial(MeshKind::radial_exterior_truncated, 4, 1.0, 40.0, 200,
                                                    Grading::geometric()),
                                       Potential::zero(), kDefault)},
      {"ball", EnergyModel::create(build_radial(MeshKind::radial_ball, 4, 0.0, 5.0, 200, {}), Potential::zero(),
                                   kDefault)},
      {"sector3d", EnergyModel::create(build_sector3d(4, 5, 1.0, 3.0, {12, 8, 8}, {}), Potential::zero(), kDefault)}};
  double worst = 0.0;
  for (const auto& [name, m] : models) {
    for (int k = 0; k < 20; ++k) {
      Vector uv(m.mesh().node_count()), vv(m.mesh().node_count());
      for (int i = 0; i < uv.size(); ++i) {
        const bool d = m.mesh().is_dirichlet(i);
        uv[i] = d ? 0.0 : 1.5 * g(rng);
        vv[i] = d ? 0.0 : g(rng);
      }
      const double h = 1e-4;
      const double fd = (m.energy(m.field(uv + h * vv)) - m.energy(m.field(uv - h * vv))) / (2 * h);
      const double an = m.inner(m.gradient(m.field(uv)), m.field(vv));
      worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-300));
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-5 && elapsed < 60.0,
          "worst relative FD mismatch " + fmt(worst, 3) + " over 4 mesh kinds x 20 pairs, " + fmt(elapsed, 3) + " s"};
}

Outcome ac3() {
  const auto pure = Nonlinearity::pure_power(3.5, 1.0, 3.5);  // f(s) = |s|^{p-2} s
  const auto m = EnergyModel::create(build_radial(MeshKind::radial_annulus, 4, 1.0, 3.0, 200, {}),
                                     Potential::gaussian(1.0, 1.0), pure);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random_field = [&](const EnergyModel& model) {
    Vector v = Vector::Zero(model.mesh().node_count());
    const double a = model.mesh().inner_radius(), b = model.mesh().outer_radius();
    for (int f = 1; f <= 4; ++f) {
      const double c = g(rng);
      for (int i = 0; i < v.size(); ++i)
        if (!model.mesh().is_dirichlet(i))
          v[i] += c * std::sin(f * std::numbers::pi * (model.mesh().points()[static_cast<std::size_t>(i)].radius - a) / (b - a));
    }
    return model.field(v);
  };
  double closed_err = 0.0, fixed_err = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto u = random_field(m);
    const double lp = (m.mesh().weights().array() * u.values.array().abs().pow(3.5)).sum();
    const double closed = std::pow(m.norm_squared(u) / lp, 1.0 / 1.5);
    const auto s = m.nehari_scale(u);
    closed_err = std::max(closed_err, std::abs(s.t / closed - 1.0));
    fixed_err = std::max(fixed_err, std::abs(m.nehari_scale(s.scaled).t - 1.0));
  }
  int unimodal = 0;
  const auto md = EnergyModel::create(build_radial(MeshKind::radial_annulus, 4, 1.0, 3.0, 200, {}),
                                      Potential::gaussian(1.0, 1.0), kDefault);
  for (int k = 0; k < 50; ++k) {
    const auto u = random_field(md);
    const double tu = md.nehari_scale(u).t;
    int turns = 0, dir = 1, arg = 0;
    double prev = 0.0, best = -1e300;
    for (int j = 1; j <= 200; ++j) {
      const double e = md.ray_energy(u, 3.0 * tu * j / 200.0);
      const int d = e > prev ? 1 : -1;
      if (d != dir) ++turns;
      dir = d;
      prev = e;
      if (e > best) best = e, arg = j;
    }
    if (turns == 1 && std::abs(arg - 200.0 / 3.0) <= 1.0) ++unimodal;
  }
  return {closed_err <= 1e-10 && fixed_err <= 1e-10 && unimodal == 50,
          "t_u closed-form error " + fmt(closed_err, 3) + ", |t_u - 1| on members " + fmt(fixed_err, 3) +
              ", unique ray maximum " + std::to_string(unimodal) + "/50"};
}

Outcome ac4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto t = build_ladder(1.0, 3, Potential::zero(), kDefault, 4);
  const double elapsed = seconds_since(t0);
  bool ok = t.error.empty() && t.rows.size() == 3;
  std::string detail;
  for (int k = 2; ok && k <= 3; ++k) ok = t.row(k - 1).c + t.c0 <= t.row(k).c + 1e-6 * t.c0;
  ok = ok && t.row(1).ell < t.row(2).ell && t.row(2).ell < t.row(3).ell;
  // d_k: the supremum of I_V over span{omega_i} equals sum I_V(omega_i), attained at unit coefficients.
  auto model = EnergyModel::create(build_radial_from_nodes(MeshKind::radial_annulus, 4, t.grid), Potential::zero(),
                                   kDefault);
  double additivity = 0.0, excess = -1e300;
  for (int k = 2; k <= 3 && ok; ++k) {
    const auto& row = t.row(k);
    std::vector<Vector> parts;
    for (std::size_t q = 0; q + 1 < row.breaks.size(); ++q) {
      const auto& w = t.omegas.at({row.breaks[q], row.breaks[q + 1]});
      parts.push_back(interpolate_radial(model.mesh(), w.radii, Eigen::Map<const Vector>(w.values.data(), static_cast<Eigen::Index>(w.values.size()))));
    }
    auto energy_at = [&](const std::vector<double>& coef) {
      Vector v = Vector::Zero(model.mesh().node_count());
      for (std::size_t q = 0; q < parts.size(); ++q) v += coef[q] * parts[q];
      return model.energy(model.field(v));
    };
    std::vector<double> ones(parts.size(), 1.0);
    std::vector<double> alt(parts.size());
    for (std::size_t q = 0; q < parts.size(); ++q) alt[q] = q % 2 ? -1.0 : 1.0;
    additivity = std::max({additivity, std::abs(energy_at(ones) / row.c - 1.0), std::abs(energy_at(alt) / row.c - 1.0)});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int s = 0; s < 200; ++s) {
      std::vector<double> coef(parts.size());
      for (auto& c : coef) c = u(rng) * (u(rng) < 1.0 ? 1.0 : -1.0);
      excess = std::max(excess, energy_at(coef) - row.c);
    }
  }
  ok = ok && additivity <= 1e-9 && excess <= 1e-9 * t.row(3).c && elapsed < 1800.0;
  detail = "ell = " + fmt(t.row(1).ell) + ", " + fmt(t.row(2).ell) + ", " + fmt(t.row(3).ell) +
           "; d_k additivity " + fmt(additivity, 3) + ", max sampled excess over d_k " + fmt(excess, 3) + "; " +
           fmt(elapsed, 3) + " s";
  return {ok, detail};
}

Outcome ac5() {
  const int code = run_pipeline(g_root / "a", 4);
  if (code != exit_ok) return {false, "pipeline exit code " + std::to_string(code)};
  const auto s = json::parse(read_text((g_root / "a" / "solve.json").string()));
  const auto& sol = s["solutions"];
  if (sol.size() != 2 || sol[0].contains("error") || sol[1].contains("error")) return {false, "missing solutions"};
  const auto& u1 = sol[0]["outcome"];
  const auto& u2 = sol[1]["outcome"];
  const double c_inf = s["c_inf"];
  const double ell2 = s["verdicts"][1]["ell"];
  double lowest = 1e300;
  for (std::size_t q = 0; q < sol[0]["start_energies"].size(); ++q)
    if (sol[0]["start_converged"][q].get<bool>()) lowest = std::min(lowest, sol[0]["start_energies"][q].get<double>());
  const double e1 = u1["energy"], e2 = u2["energy"], n2 = u2["norm_squared"];
  const bool ok = sol[0]["certified"].get<bool>() && sol[1]["certified"].get<bool>() && s["min_orbit"] == 5 && ell2 < 5.0 && u1["kind"] == "positive_ground_state" &&
                  u1["cone_plus"].get<double>() <= 1e-8 && e1 <= lowest && e1 <= e2 && u2["kind"] == "nodal" &&
                  std::abs(u2["psi_plus"].get<double>()) <= 1e-6 * n2 &&
                  std::abs(u2["psi_minus"].get<double>()) <= 1e-6 * n2 &&
                  u2["mass_plus"].get<double>() > u2["mass_floor"].get<double>() &&
                  u2["mass_minus"].get<double>() > u2["mass_floor"].get<double>() && e2 <= ell2 * c_inf + 1e-3 * c_inf;
  for (const char* log : {"u1.jsonl", "u2.jsonl"}) g_histories.push_back(read_log(g_root / "a" / "logs" / log));
  return {ok, "ell_2 " + fmt(ell2) + " < 5; I(u1) " + fmt(e1, 10) + ", |u1^-| " + fmt(u1["cone_plus"], 3) +
                  "; I(u2) " + fmt(e2, 10) + " <= ell_2 c_inf " + fmt(ell2 * c_inf, 10) + ", Psi(u2+-) " +
                  fmt(u2["psi_plus"], 3) + ", " + fmt(u2["psi_minus"], 3)};
}

Outcome ac6() {
  const auto nl = Nonlinearity::double_power(3.5, 4.5, 4.5, 3.5);
  auto nodes = radial_nodes(0.1, 40.0, 120, Grading::geometric());
  const auto m = EnergyModel::create(build_sector3d_from_nodes(4, 5, nodes, 8, 8), Potential::zero(), nl);
  const auto alpha = estimate_alpha(m, 7);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int increases = 0, steps = 0;
  for (int s = 0; s < 200; ++s) {
    // Positive bump plus a negative, angularly localised bump, scaled into B_alpha(P).
    const double r0 = 0.1 + 5.0 * U(rng);
    const auto pos = radial_bump(m, r0, std::min(40.0, r0 * (1.5 + 5.0 * U(rng))), std::pow(10.0, 2.0 * U(rng) - 1.0));
    const double c0 = 0.1 * std::pow(400.0, U(rng));
    Vector neg = radial_bump(m, 0.7 * c0, std::min(40.0, 1.4 * c0), 1.0).values;
    const double th0 = 2.0 * std::numbers::pi / 5.0 * U(rng);
    for (int i = 0; i < neg.size(); ++i) {
      const double th = m.mesh().points()[static_cast<std::size_t>(i)].theta - th0;
      neg[i] *= std::exp(-th * th / 0.1);
    }
    const double nn = std::sqrt(m.form().norm_squared(neg));
    if (!(nn > 0.0)) continue;
    const auto u0 = m.field(pos.values - (U(rng) * alpha.alpha / nn) * neg);
    FlowOptions fo;  // plain flow
    auto st = start_flow(m, u0, fo);
    for (int k = 0; k < 25 && st.grad_norm > 0.0; ++k) {
      try {
        st = flow_step(m, st, st.next_dt, fo);
      } catch (const SolverError&) {
        break;
      }
    }
    for (std::size_t k = 1; k < st.history.size(); ++k) {
      ++steps;
      if (st.history[k].cone_plus > st.history[k - 1].cone_plus + 1e-12 * st.history[0].cone_plus) ++increases;
    }
    g_histories.push_back(st.history);
  }
  int energy_violations = 0, accepted = 0;
  for (const auto& h : g_histories)
    for (std::size_t k = 1; k < h.size(); ++k) {
      if (h[k].dt <= 0.0) continue;  // Newton polishing entries are not flow steps
      ++accepted;
      if (h[k].energy > h[k - 1].energy + 1e-12 * std::abs(h[k - 1].energy)) ++energy_violations;
    }
  return {increases == 0 && energy_violations == 0 && steps > 0,
          "alpha_h " + fmt(alpha.alpha) + "; cone-distance increases " + std::to_string(increases) + "/" +
              std::to_string(steps) + " steps from 200 starts; energy increases " +
              std::to_string(energy_violations) + "/" + std::to_string(accepted) + " accepted steps"};
}

Eigen::MatrixXd rotation(int N, int i, double angle) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(N, N);
  r(i, i) = r(i + 1, i + 1) = std::cos(angle);
  r(i + 1, i) = std::sin(angle);
  r(i, i + 1) = -std::sin(angle);
  return r;
}

Outcome ac7() {
  bool ok = true;
  for (int n = 2; n <= 12; ++n) {
    ok = ok && min_orbit_cardinality(GroupSpec::cyclic_diagonal(n, 4)).value == n;
    ok = ok && min_orbit_cardinality(GroupSpec::cyclic_cross_orthogonal(n, 4)).value == n;
    const Eigen::MatrixXd diag = rotation(4, 0, 2 * std::numbers::pi / n) * rotation(4, 2, 2 * std::numbers::pi / n);
    ok = ok && min_orbit_cardinality(GroupSpec::finite_generated({diag})).value == n;
  }
  ok = ok && !min_orbit_cardinality(GroupSpec::full_orthogonal(4)).value &&
       !min_orbit_cardinality(GroupSpec::product_of_orthogonals({2, 2})).value;
  // Orbit-stabilizer on dihedral groups D_n (order 2n <= 48) and the signed permutations of R^3 (48).
  std::vector<GroupSpec> finite;
  Eigen::MatrixXd reflect = Eigen::MatrixXd::Identity(2, 2);
  reflect(1, 1) = -1.0;
  for (int n = 2; n <= 24; ++n) finite.push_back(GroupSpec::finite_generated({rotation(2, 0, 2 * std::numbers::pi / n), reflect}));
  Eigen::MatrixXd swap = Eigen::MatrixXd::Zero(3, 3), cyc = Eigen::MatrixXd::Zero(3, 3), flip = Eigen::MatrixXd::Identity(3, 3);
  swap(0, 1) = swap(1, 0) = swap(2, 2) = 1.0;
  cyc(1, 0) = cyc(2, 1) = cyc(0, 2) = 1.0;
  flip(0, 0) = -1.0;
  finite.push_back(GroupSpec::finite_generated({swap, cyc, flip}));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  int checked = 0, exact = 0;
  for (const auto& grp : finite) {
    const long order = static_cast<long>(enumerate_group(grp).size());
    const int N = grp.dimension();
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < N; ++i) pts.push_back(Eigen::VectorXd::Unit(N, i));
    pts.push_back(Eigen::VectorXd::Ones(N));
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd x(N);
      for (int i = 0; i < N; ++i) x[i] = g(rng);
      pts.push_back(x);
    }
    for (const auto& x : pts) {
      const auto r = isotropy_report(grp, x);
      ++checked;
      if (r.orbit && r.isotropy_order && *r.orbit * *r.isotropy_order == order && r.orbit_stabilizer_ok) ++exact;
    }
  }
  return {ok && exact == checked,
          "Z_n, Z_n x O(2) minima = n for n = 2..12, O(4) and O(2)xO(2) infinite; orbit-stabilizer exact at " +
              std::to_string(exact) + "/" + std::to_string(checked) + " points on " + std::to_string(finite.size()) +
              " groups"};
}

Outcome ac8() {
  const auto rep = check_hypotheses(kDefault, Potential::zero(), 4, 3.0);
  const bool f_ok = rep.f1_ok && rep.f2_ok && rep.f3_ok && rep.f1.margin > 0 && rep.f2.margin > 0 && rep.f3.margin > 0;
  const auto crit = Nonlinearity::pure_power(critical_exponent(4), 10.0, 3.0);
  const bool crit_fails = !check_growth_f1(crit, 4, log_sample_grid()).ok;
  const auto k = critical_gaussian_depth(1.0, 4, 3.0, 1e-5);
  const bool flips = (k.upper - k.lower) < 1e-4 && check_v1(Potential::gaussian(k.lower, 1.0), 4, 3.0).ok &&
                     !check_v1(Potential::gaussian(k.upper, 1.0), 4, 3.0).ok;
  return {f_ok && crit_fails && flips,
          "margins f1 " + fmt(rep.f1.margin, 3) + ", f2 " + fmt(rep.f2.margin, 3) + ", f3 " + fmt(rep.f3.margin, 3) +
              "; critical power fails f1: " + (crit_fails ? "yes" : "no") + "; kappa* in [" + fmt(k.lower, 10) +
              ", " + fmt(k.upper, 10) + "]"};
}

Outcome ac9() {
  const auto base = build_ladder(1.0, 1, Potential::zero(), kDefault, 4);
  LadderOptions doubled;
  doubled.r_max = 80.0;
  doubled.nodes = 800;
  const auto fine = build_ladder(1.0, 1, Potential::zero(), kDefault, 4, doubled);
  const double dc1 = std::abs(fine.c0 / base.c0 - 1.0);
  const double dinf = std::abs(base.limit.refined / base.limit.value - 1.0);
  return {dc1 < 0.01 && dinf < 0.01,
          "c_inf " + fmt(base.limit.value, 8) + " -> " + fmt(base.limit.refined, 8) + " (" + fmt(dinf, 3) + "), c_1 " +
              fmt(base.c0, 8) + " -> " + fmt(fine.c0, 8) + " (" + fmt(dc1, 3) + ")"};
}

Outcome ac10() {
  const int code = run_pipeline(g_root / "b", 2);
  if (code != exit_ok) return {false, "rerun exit code " + std::to_string(code)};
  int files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(g_root / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), g_root / "a");
    if (rel == "manifest.json") continue;
    ++files;
    if (!fs::exists(g_root / "b" / rel) || read_text(e.path().string()) != read_text((g_root / "b" / rel).string()))
      ++differ;
  }
  auto ma = json::parse(read_text((g_root / "a" / "manifest.json").string()));
  auto mb = json::parse(read_text((g_root / "b" / "manifest.json").string()));
  for (auto* m : {&ma, &mb}) {
    m->erase("timing");
    m->erase("execution");
  }
  return {differ == 0 && files > 0 && ma == mb,
          std::to_string(files - differ) + "/" + std::to_string(files) +
              " report files byte-identical (4 vs 2 threads); manifest equal outside timing/execution"};
}

}  // namespace

int main() {
  fs::remove_all(g_root);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"radial oracle equivalence", ac1}, {"gradient correctness", ac2}, {"Nehari machinery", ac3},
      {"ladder structure", ac4},          {"nodal certification", ac5},  {"flow invariants", ac6},
      {"orbit computations", ac7},        {"hypothesis checkers", ac8},  {"truncation robustness", ac9},
      {"determinism", ac10}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) ++failures;
    std::cout << "AC" << i + 1 << (i + 1 < 10 ? "  " : " ") << (r.pass ? "PASS" : "FAIL") << "  " << criteria[i].first
              << ": " << r.detail << "  [" << fmt(seconds_since(t0), 3) << " s]" << std::endl;
  }
  fs::remove_all(g_root);
  return failures == 0 ? 0 : 1;
}

#include "nodal/ladder.hpp"

#include "nodal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace nodal {

namespace {

void require_admissible(const Potential& pot, const Nonlinearity& nl, int N) {
  if (!pot.is_radial()) throw ConfigError("the energy ladder needs a radial potential");
  if (!check_growth_f1(nl, N, log_sample_grid(1e-6, 1e6, 201)).ok)
    throw ConfigError("nonlinearity fails the growth hypothesis; no zero-mass ground state to compute");
}

AnnulusState solve_on_nodes(std::vector<double> nodes, const Potential& pot, const Nonlinearity& nl,
                            int N, const SolverOptions& solver) {
  auto model = EnergyModel::create(build_radial_from_nodes(MeshKind::radial_annulus, N, nodes), pot, nl);
  const SolveOutcome out = solve_positive(model, solver);
  if (out.kind != OutcomeKind::positive_ground_state) {
    std::ostringstream msg;
    msg << "annulus ground state did not converge on (" << nodes.front() << ", " << nodes.back()
        << "): " << to_string(out.kind);
    throw SolverError(msg.str());
  }
  AnnulusState s;
  s.inner = nodes.front();
  s.outer = nodes.back();
  s.energy = out.energy;
  s.radii = std::move(nodes);
  s.values.assign(out.field.values.data(), out.field.values.data() + out.field.values.size());
  return s;
}

}  // namespace

AnnulusState annulus_ground_state(double a, double b, const Potential& pot, const Nonlinearity& nl,
                                  int N, int nodes, const SolverOptions& solver) {
  if (!(a > 0.0) || !(b > a)) throw GeometryError("annulus needs 0 < a < b");
  require_admissible(pot, nl, N);
  return solve_on_nodes(radial_nodes(a, b, nodes, Grading::uniform()), pot, nl, N, solver);
}

LimitEnergy limit_ground_energy(const Nonlinearity& nl, int N, double r_inf, int nodes,
                                const SolverOptions& solver) {
  require_admissible(Potential::zero(), nl, N);
  auto ball = [&](double r, int n) {
    auto model = EnergyModel::create(build_radial(MeshKind::radial_ball, N, 0.0, r, n, Grading::geometric()),
                                     Potential::zero(), nl);
    const SolveOutcome out = solve_positive(model, solver);
    if (out.kind != OutcomeKind::positive_ground_state)
      throw SolverError("limit-problem ground state did not converge: " + to_string(out.kind));
    return out.energy;
  };
  LimitEnergy e;
  e.r_inf = r_inf;
  e.nodes = nodes;
  e.value = ball(r_inf, nodes);
  e.refined = ball(2.0 * r_inf, 2 * nodes);
  e.sensitivity = std::abs(e.refined - e.value) / e.value;
  if (e.sensitivity > 0.02) {
    std::ostringstream msg;
    msg << "limit energy is not converged in the truncation radius (sensitivity " << e.sensitivity << ")";
    throw SolverError(msg.str());
  }
  return e;
}

// ---------------------------------------------------------------------------

namespace {

class LadderSearch {
 public:
  LadderSearch(LadderTable& table, const Potential& pot, const Nonlinearity& nl)
      : t_(table), pot_(pot), nl_(nl) {}

  /// Evaluations past the budget are refused only while searching.
  bool limited = false;

  double annulus(int i, int j) {
    const auto key = std::make_pair(i, j);
    auto it = t_.omegas.find(key);
    if (it != t_.omegas.end()) return it->second.energy;
    if (limited && t_.evaluations >= t_.options.search_budget) {
      t_.budget_exhausted = true;
      return std::numeric_limits<double>::infinity();
    }
    ++t_.evaluations;
    std::vector<double> nodes(t_.grid.begin() + i, t_.grid.begin() + j + 1);
    auto s = solve_on_nodes(std::move(nodes), pot_, nl_, t_.N, t_.options.solver);
    const double e = s.energy;
    t_.omegas.emplace(key, std::move(s));
    return e;
  }

  double total(const std::vector<int>& b) {
    double sum = 0.0;
    for (std::size_t q = 0; q + 1 < b.size(); ++q) sum += annulus(b[q], b[q + 1]);
    return sum;
  }

  // Energy of the two annuli adjacent to break j when it sits at x.
  double local(const std::vector<int>& b, std::size_t j, int x) {
    return annulus(b[j - 1], x) + annulus(x, b[j + 1]);
  }

  // Discrete golden-section minimisation of local() over break j.
  bool minimise_break(std::vector<int>& b, std::size_t j) {
    const int cells = t_.options.min_cells;
    int lo = b[j - 1] + cells;
    int hi = b[j + 1] - cells;
    if (hi <= lo) return false;
    constexpr double g = 0.3819660112501051;
    while (hi - lo > 3) {
      const int x1 = lo + static_cast<int>(std::lround(g * (hi - lo)));
      const int x2 = hi - static_cast<int>(std::lround(g * (hi - lo)));
      if (x1 >= x2) break;
      if (local(b, j, x1) <= local(b, j, x2))
        hi = x2;
      else
        lo = x1;
    }
    int best = b[j];
    double best_e = local(b, j, best);
    for (int x = lo; x <= hi; ++x) {
      const double e = local(b, j, x);
      if (e < best_e || (e == best_e && x < best)) {
        best_e = e;
        best = x;
      }
    }
    const bool moved = best != b[j];
    b[j] = best;
    return moved;
  }

 private:
  LadderTable& t_;
  const Potential& pot_;
  const Nonlinearity& nl_;
};

}  // namespace

LadderTable build_ladder(double R, int m, const Potential& pot, const Nonlinearity& nl, int N,
                         const LadderOptions& options) {
  if (m < 1) throw DomainError("ladder depth must be at least 1");
  if (!(R > 0.0)) throw GeometryError("obstacle radius must be positive");
  require_admissible(pot, nl, N);

  LadderTable t;
  t.N = N;
  t.R = R;
  t.depth = m;
  t.options = options;
  t.r_max = options.r_max > 0.0 ? options.r_max : 40.0 * R;
  if (!(t.r_max > R)) throw GeometryError("R_max must exceed R");
  const int cells = options.nodes - 1;
  if (m * options.min_cells > cells) throw GeometryError("ladder grid too coarse for the requested depth");
  // Log-uniform nodes: every annulus is resolved relative to its own radius.
  t.grid = radial_nodes(R, t.r_max, options.nodes, Grading::geometric(std::pow(t.r_max / R, 1.0 / cells)));

  LadderSearch search(t, pot, nl);
  const int last = options.nodes - 1;
  t.c0 = search.annulus(0, last);
  t.tol_ladder = 1e-6 * t.c0;
  t.limit = limit_ground_energy(nl, N, options.r_inf, options.ball_nodes, options.solver);
  t.c_inf = t.limit.value;

  for (int k = 1; k <= m; ++k) {
    try {
      LadderRow row;
      row.k = k;
      row.breaks.resize(static_cast<std::size_t>(k + 1));
      for (int q = 0; q <= k; ++q) row.breaks[static_cast<std::size_t>(q)] = last * q / k;
      search.limited = true;
      for (int sweep = 0; sweep < 50; ++sweep) {
        bool moved = false;
        for (std::size_t j = 1; j + 1 < row.breaks.size(); ++j) moved |= search.minimise_break(row.breaks, j);
        if (!moved || t.budget_exhausted) break;
      }
      search.limited = false;
      row.c = search.total(row.breaks);
      row.search_margin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 1; j + 1 < row.breaks.size(); ++j) {
        for (int d : {-1, 1}) {
          auto b = row.breaks;
          b[j] += d;
          if (b[j] - b[j - 1] < options.min_cells || b[j + 1] - b[j] < options.min_cells) continue;
          const double diff = search.total(b) - row.c;
          row.search_margin = std::min(row.search_margin, diff);
        }
      }
      if (!std::isfinite(row.search_margin)) row.search_margin = 0.0;
      row.local_minimum = row.search_margin >= 0.0;
      for (std::size_t q = 0; q + 1 < row.breaks.size(); ++q) {
        const auto& s = t.omegas.at({row.breaks[q], row.breaks[q + 1]});
        row.annuli.emplace_back(s.inner, s.outer);
        row.energies.push_back(s.energy);
      }
      row.ell = row.c / t.c_inf;
      t.rows.push_back(std::move(row));
    } catch (const SolverError& e) {
      search.limited = false;
      t.error = "row " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return t;
}

bool ladder_is_monotone(const LadderTable& t) {
  for (int k = 2; k <= static_cast<int>(t.rows.size()); ++k) {
    if (!(t.row(k - 1).c + t.c0 <= t.row(k).c + t.tol_ladder)) return false;
    if (!(t.row(k - 1).ell < t.row(k).ell)) return false;
  }
  return true;
}

std::vector<Verdict> threshold_verdict(const LadderTable& t, std::optional<long> min_orbit) {
  std::vector<Verdict> out;
  for (const auto& row : t.rows) {
    Verdict v;
    v.k = row.k;
    v.ell = row.ell;
    v.below_threshold = !min_orbit || row.ell < static_cast<double>(*min_orbit);
    v.guaranteed_pairs = v.below_threshold ? row.k : 0;
    v.energy_bound = row.ell * t.c_inf;
    out.push_back(v);
  }
  // Guarantees are cumulative: k pairs need ell_k below the threshold.
  return out;
}

DiscreteField multibump_seed(const std::vector<AnnulusState>& annuli, const std::vector<int>& signs,
                             const EnergyModel& model) {
  if (annuli.empty() || annuli.size() != signs.size())
    throw DomainError("multibump seed needs one sign per annulus");
  for (std::size_t i = 0; i < annuli.size(); ++i)
    for (std::size_t j = i + 1; j < annuli.size(); ++j) {
      const auto& x = annuli[i];
      const auto& y = annuli[j];
      if (x.inner < y.outer && y.inner < x.outer) throw GeometryError("multibump annuli overlap");
    }
  const auto& mesh = model.mesh();
  std::vector<Vector> parts;
  Vector sum = Vector::Zero(mesh.node_count());
  for (std::size_t i = 0; i < annuli.size(); ++i) {
    if (signs[i] != 1 && signs[i] != -1) throw DomainError("multibump signs must be +1 or -1");
    Vector v(static_cast<Eigen::Index>(annuli[i].values.size()));
    for (Eigen::Index q = 0; q < v.size(); ++q) v[q] = annuli[i].values[static_cast<std::size_t>(q)];
    parts.push_back(interpolate_radial(mesh, annuli[i].radii, v));
    sum += signs[i] * parts.back();
  }
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      const double overlap = mesh.weights().dot(parts[i].cwiseAbs().cwiseProduct(parts[j].cwiseAbs()));
      if (overlap != 0.0) throw GeometryError("multibump supports overlap on the target mesh");
    }
  DiscreteField u = model.field(std::move(sum));
  if (u.has_positive_part() && u.has_negative_part()) return model.nodal_project(u);
  return model.nehari_scale(u).scaled;
}

DiscreteField multibump_seed(const LadderTable& table, int k, const std::vector<int>& signs,
                             const EnergyModel& model) {
  if (k < 1 || k > static_cast<int>(table.rows.size())) throw DomainError("multibump depth exceeds the ladder");
  if (static_cast<int>(signs.size()) != k) throw DomainError("multibump seed needs k signs");
  const auto& row = table.row(k);
  std::vector<AnnulusState> annuli;
  for (std::size_t q = 0; q + 1 < row.breaks.size(); ++q)
    annuli.push_back(table.omegas.at({row.breaks[q], row.breaks[q + 1]}));
  return multibump_seed(annuli, signs, model);
}

}  // namespace nodal

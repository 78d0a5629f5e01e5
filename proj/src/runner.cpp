#include "nodal/runner.hpp"

#include "nodal/errors.hpp"
#include "nodal/field_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>

namespace nodal {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

double finite_or_zero(double x) { return std::isfinite(x) ? x : 0.0; }

json to_json(const CheckResult& r) {
  return {{"ok", r.ok}, {"margin", r.margin}, {"worst_sample", r.worst_sample}, {"message", r.message}};
}

json to_json(const std::optional<long>& orbit) { return orbit ? json(*orbit) : json("infinite"); }

// Output directory owned by one process: lock file, manifest, file inventory.
class Workspace {
 public:
  /// `adopt` keeps an existing manifest as is (reports read other runs).
  Workspace(const std::string& dir, const RunConfig& config, bool adopt = false) : dir_(dir) {
    fs::create_directories(dir_);
    lock_ = (dir_ / ".lock").string();
    std::FILE* f = std::fopen(lock_.c_str(), "wx");
    if (!f) throw UsageError("output directory " + dir + " is locked by another run (remove .lock if stale)");
    std::fclose(f);
    // Where and how wide a run executes does not change its results; those
    // settings live in the manifest's "execution" field, next to "timing".
    RunConfig canonical = config;
    canonical.output = "nodal_out";
    canonical.max_threads = 1;
    const std::string text = dump_config(canonical);
    const std::string hash = sha256_hex(text);
    const auto mpath = dir_ / "manifest.json";
    if (fs::exists(mpath)) {
      try {
        manifest = json::parse(read_text(mpath.string()));
      } catch (const json::exception& e) {
        release();
        throw IntegrityError(std::string("unreadable manifest: ") + e.what());
      }
      if (adopt) return;
      if (manifest.value("config_sha256", "") != hash) manifest = json::object();  // new config: stale stages
    }
    if (manifest.empty()) manifest = {{"config_sha256", hash}, {"stages", json::object()}, {"files", json::object()},
                                      {"timing", json::object()}, {"forced", json::array()}};
    manifest["execution"] = {{"output", config.output}, {"max_threads", config.max_threads}};
    write_text(path("config.yaml"), text);
    record("config.yaml");
  }
  ~Workspace() { release(); }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }
  void mkdir(const std::string& rel) const { fs::create_directories(dir_ / rel); }
  void record(const std::string& rel) { manifest["files"][rel] = sha256_file(path(rel)); }
  void write_json(const std::string& rel, const json& j) {
    write_text(path(rel), dump_json(j));
    record(rel);
  }
  void record_field(const std::string& stem_rel) {
    record(stem_rel + ".csv");
    record(stem_rel + ".json");
  }
  void stage(const std::string& name, const std::string& status, const std::string& message = "") {
    manifest["stages"][name] = {{"status", status}, {"message", message}};
  }
  std::string stage_status(const std::string& name) const {
    const auto& s = manifest["stages"];
    return s.contains(name) ? s[name].value("status", "") : "";
  }
  void forced(const std::string& name) {
    auto& f = manifest["forced"];
    if (std::find(f.begin(), f.end(), name) == f.end()) f.push_back(name);
  }
  void timing(const std::string& name, double seconds) { manifest["timing"][name] = seconds; }
  void save() const { write_text(path("manifest.json"), dump_json(manifest)); }

  json manifest;

 private:
  void release() {
    if (!lock_.empty()) std::remove(lock_.c_str());
    lock_.clear();
  }
  fs::path dir_;
  std::string lock_;
};

void verify_files(const json& manifest, const fs::path& dir) {
  if (!manifest.contains("files") || manifest["files"].empty())
    throw IntegrityError("manifest lists no files");
  for (const auto& [rel, hash] : manifest["files"].items()) {
    const auto p = dir / rel;
    if (!fs::exists(p)) throw IntegrityError("missing file " + rel);
    if (sha256_file(p.string()) != hash.get<std::string>()) throw IntegrityError("hash mismatch in " + rel);
  }
}

json read_manifest(const fs::path& dir) {
  const auto p = dir / "manifest.json";
  if (!fs::exists(p)) throw IntegrityError("no manifest in " + dir.string());
  try {
    const json m = json::parse(read_text(p.string()));
    if (!m.is_object() || m.empty()) throw IntegrityError("empty manifest in " + dir.string());
    return m;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("unreadable manifest: ") + e.what());
  }
}

void require_check(Workspace& ws, const RunOptions& o, const std::string& stage) {
  if (ws.stage_status("check") == "pass") return;
  if (o.force) {
    ws.forced(stage);
    return;
  }
  throw ConfigError("no hypothesis pass recorded for this configuration; run `nodal check` first or pass --force");
}

std::string omega_stem(int i, int j) { return "omega/omega_" + std::to_string(i) + "_" + std::to_string(j); }

// ---------------------------------------------------------------------------

int cmd_check(const RunConfig& c, Workspace& ws, std::ostream& out) {
  const auto rep = check_hypotheses(c.make_nonlinearity(), c.make_potential(), c.problem.N, c.potential.r_exponent);
  json j = {{"f1", to_json(rep.f1)},
            {"f2", to_json(rep.f2)},
            {"f3", to_json(rep.f3)},
            {"v1",
             {{"ok", rep.v1_ok},
              {"converged", rep.v1.converged},
              {"vminus_integral", rep.v1.vminus_integral},
              {"sobolev_power", rep.v1.sobolev_power},
              {"v_half_integral", rep.v1.v_half_integral},
              {"v_r_integral", rep.v1.v_r_integral},
              {"refinement_change", rep.v1.refinement_change},
              {"error", rep.v1_error}}},
            {"S", rep.S_value},
            {"all_ok", rep.all_ok()},
            {"worst_violation",
             {{"hypothesis", rep.worst_violation.hypothesis},
              {"sample", rep.worst_violation.sample},
              {"margin", finite_or_zero(rep.worst_violation.margin)}}}};
  ws.write_json("check.json", j);
  ws.stage("check", rep.all_ok() ? "pass" : "fail");
  auto line = [&](const char* name, bool ok, double margin) {
    out << name << (ok ? " pass" : " FAIL") << "  margin " << margin << "\n";
  };
  line("f1", rep.f1_ok, rep.f1.margin);
  line("f2", rep.f2_ok, rep.f2.margin);
  line("f3", rep.f3_ok, rep.f3.margin);
  out << "v1" << (rep.v1_ok ? " pass" : " FAIL") << "  int|V-|^{N/2} " << rep.v1.vminus_integral << " vs S^{N/2} "
      << rep.v1.sobolev_power << (rep.v1_error.empty() ? "" : "  (" + rep.v1_error + ")") << "\n";
  return rep.all_ok() ? exit_ok : exit_hypothesis;
}

json ladder_json(const LadderTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json annuli = json::array(), omegas = json::array();
    for (const auto& [a, b] : r.annuli) annuli.push_back({a, b});
    for (std::size_t q = 0; q + 1 < r.breaks.size(); ++q) omegas.push_back(omega_stem(r.breaks[q], r.breaks[q + 1]));
    rows.push_back({{"k", r.k},
                    {"breaks", r.breaks},
                    {"annuli", annuli},
                    {"energies", r.energies},
                    {"c", r.c},
                    {"ell", r.ell},
                    {"search_margin", r.search_margin},
                    {"local_minimum", r.local_minimum},
                    {"omegas", omegas}});
  }
  return {{"N", t.N},
          {"R", t.R},
          {"r_max", t.r_max},
          {"depth", t.depth},
          {"c0", t.c0},
          {"c_inf", t.c_inf},
          {"limit",
           {{"value", t.limit.value},
            {"refined", t.limit.refined},
            {"sensitivity", t.limit.sensitivity},
            {"r_inf", t.limit.r_inf},
            {"nodes", t.limit.nodes}}},
          {"tol_ladder", t.tol_ladder},
          {"monotone", ladder_is_monotone(t)},
          {"evaluations", t.evaluations},
          {"budget_exhausted", t.budget_exhausted},
          {"grid", t.grid},
          {"rows", rows},
          {"error", t.error}};
}

int cmd_ladder(const RunConfig& c, Workspace& ws, const RunOptions& o, std::ostream& out, std::ostream& err) {
  require_check(ws, o, "ladder");
  const auto t = build_ladder(c.problem.R, c.depth, c.make_potential(), c.make_nonlinearity(), c.problem.N,
                              c.ladder_options());
  ws.mkdir("omega");
  for (const auto& r : t.rows)
    for (std::size_t q = 0; q + 1 < r.breaks.size(); ++q) {
      const int i = r.breaks[q], j = r.breaks[q + 1];
      const auto stem = omega_stem(i, j);
      if (ws.manifest["files"].contains(stem + ".csv") && fs::exists(ws.path(stem + ".csv"))) continue;
      const auto& s = t.omegas.at({i, j});
      write_profile(ws.path(stem), s.radii, s.values,
                    {{"inner", s.inner}, {"outer", s.outer}, {"energy", s.energy}, {"first", i}, {"last", j}});
      ws.record_field(stem);
    }
  ws.write_json("ladder.json", ladder_json(t));
  out << std::setprecision(10) << "c_inf " << t.c_inf << "  (sensitivity " << t.limit.sensitivity << ")\n"
      << "c_0 " << t.c0 << "\n";
  for (const auto& r : t.rows) out << "ell_" << r.k << " " << r.ell << "  c_" << r.k << " " << r.c << "\n";
  out << "monotone " << (ladder_is_monotone(t) ? "yes" : "no") << "\n";
  if (!t.error.empty()) {
    ws.stage("ladder", "partial", t.error);
    err << "warning: ladder incomplete, partial table persisted: " << t.error << "\n";
    return exit_solver;
  }
  ws.stage("ladder", "ok");
  return exit_ok;
}

json verdict_json(const std::vector<Verdict>& vs) {
  json a = json::array();
  for (const auto& v : vs)
    a.push_back({{"k", v.k},
                 {"ell", v.ell},
                 {"below_threshold", v.below_threshold},
                 {"guaranteed_pairs", v.guaranteed_pairs},
                 {"energy_bound", v.energy_bound}});
  return a;
}

json orbit_json(const RunConfig& c, const MinOrbit& m) {
  const auto g = c.group.spec(c.problem.N);
  json iso = json::array();
  const int N = c.problem.N;
  std::vector<Eigen::VectorXd> probes = {Eigen::VectorXd::Unit(N, 0), Eigen::VectorXd::Unit(N, N - 1),
                                         Eigen::VectorXd::Ones(N)};
  for (const auto& x : probes) {
    const auto r = isotropy_report(g, x);
    iso.push_back({{"point", std::vector<double>(x.data(), x.data() + x.size())},
                   {"orbit", to_json(r.orbit)},
                   {"isotropy_order", r.isotropy_order ? json(*r.isotropy_order) : json(nullptr)},
                   {"orbit_stabilizer_ok", r.orbit_stabilizer_ok},
                   {"description", r.description}});
  }
  return {{"group", to_string(g.kind())},
          {"min_orbit", to_json(m.value)},
          {"min_orbit_label", m.label()},
          {"samples", m.samples},
          {"threshold", m.value ? json(*m.value) : json("infinite")},
          {"isotropy", iso},
          {"domain_invariant", check_domain_invariance(g, c.make_obstacle(), c.seed)}};
}

int cmd_orbit(const RunConfig& c, Workspace& ws, std::ostream& out) {
  const auto m = min_orbit_cardinality(c.group.spec(c.problem.N), c.seed);
  json j = orbit_json(c, m);
  if (fs::exists(ws.path("ladder.json"))) {
    const auto t = load_ladder(ws.path(""));
    j["verdicts"] = verdict_json(threshold_verdict(t, m.value));
    j["c_inf"] = t.c_inf;
  }
  ws.write_json("orbit.json", j);
  ws.stage("orbit", j["domain_invariant"].get<bool>() ? "ok" : "not_invariant");
  out << "group " << j["group"].get<std::string>() << "  min orbit " << j["min_orbit"].dump() << " ("
      << m.label() << ")\n";
  out << "domain invariant " << (j["domain_invariant"].get<bool>() ? "yes" : "no") << "\n";
  if (j.contains("verdicts"))
    for (const auto& v : j["verdicts"])
      out << "ell_" << v["k"] << " " << v["ell"] << (v["below_threshold"].get<bool>() ? " < " : " >= ")
          << j["threshold"].dump() << "\n";
  return j["domain_invariant"].get<bool>() ? exit_ok : exit_hypothesis;
}

// ---------------------------------------------------------------------------

WeightedMesh solve_mesh(const RunConfig& c, const LadderTable& t, std::string& description) {
  const auto g = c.group.spec(c.problem.N);
  const bool sector = (g.kind() == GroupKind::Zn_cross_ONminus2 || g.kind() == GroupKind::cyclic_diagonal_Zn) &&
                      c.problem.N >= 4;
  if (sector) {
    description = "Z_" + std::to_string(g.n()) + " x O(N-2)-invariant fields on the sector mesh";
    return build_sector3d_from_nodes(c.problem.N, g.n(), t.grid, c.mesh.phi_cells, c.mesh.theta_cells, {});
  }
  description = "radial fields (invariant under every orthogonal group)";
  return build_radial_from_nodes(MeshKind::radial_annulus, c.problem.N, t.grid, {});
}

void write_log(const std::string& path, const SolveOutcome& s) {
  std::string text;
  for (const auto& h : s.history)
    text += json({{"t", h.t},
                  {"energy", h.energy},
                  {"grad_norm", h.grad_norm},
                  {"dt", h.dt},
                  {"cone_plus", h.cone_plus},
                  {"cone_minus", h.cone_minus}})
                .dump() +
            "\n";
  for (const auto& e : s.events) text += json({{"event", to_string(e.kind)}, {"t", e.t}}).dump() + "\n";
  write_text(path, text);
}

json outcome_json(const SolveOutcome& s) {
  return {{"kind", to_string(s.kind)},
          {"energy", s.energy},
          {"residual", s.residual},
          {"relative_residual", s.relative_residual},
          {"norm_squared", 0.0},
          {"psi", s.nehari.psi_value},
          {"psi_plus", s.nehari.psi_plus},
          {"psi_minus", s.nehari.psi_minus},
          {"nehari_member", s.nehari.member},
          {"nodal_member", s.nehari.nodal_member},
          {"mass_plus", s.masses.plus},
          {"mass_minus", s.masses.minus},
          {"mass_floor", s.mass_floor},
          {"cone_plus", s.cone_plus},
          {"cone_minus", s.cone_minus},
          {"steps", s.steps},
          {"newton_steps", s.newton_steps},
          {"seed_id", s.seed_id}};
}

int cmd_solve(const RunConfig& c, Workspace& ws, const RunOptions& o, std::ostream& out, std::ostream& err) {
  require_check(ws, o, "solve");
  if (!fs::exists(ws.path("ladder.json")))
    throw UsageError("no ladder table in " + ws.path("") + "; run `nodal ladder` first");
  const auto t = load_ladder(ws.path(""));
  const auto min_orbit = min_orbit_cardinality(c.group.spec(c.problem.N), c.seed);
  const auto verdicts = threshold_verdict(t, min_orbit.value);

  std::string description;
  auto model = EnergyModel::create(solve_mesh(c, t, description), c.make_potential(), c.make_nonlinearity());
  const auto alpha = estimate_alpha(model, c.seed, c.solver.alpha_samples);
  SolverOptions so = c.solver_options();
  so.alpha = alpha.alpha;
  ws.mkdir("fields");
  ws.mkdir("logs");

  json solutions = json::array();
  bool all_ok = true;
  out << std::setprecision(10) << "mesh " << description << ", " << model.mesh().node_count() << " nodes\n"
      << "alpha_h " << alpha.alpha << "\n";

  auto persist = [&](int k, const SolveOutcome& s, json& entry) {
    const std::string stem = "fields/u" + std::to_string(k);
    write_field(ws.path(stem), model.mesh(), s.field.values, {{"k", k}, {"kind", to_string(s.kind)}, {"energy", s.energy}});
    ws.record_field(stem);
    const std::string log = "logs/u" + std::to_string(k) + ".jsonl";
    write_log(ws.path(log), s);
    ws.record(log);
    entry["field"] = stem;
    entry["log"] = log;
  };

  // k = 1: positive ground state.
  {
    json e = {{"k", 1}, {"guaranteed", !verdicts.empty() && verdicts[0].below_threshold}};
    try {
      const auto s = solve_positive(model, so);
      e["outcome"] = outcome_json(s);
      e["outcome"]["norm_squared"] = model.norm_squared(s.field);
      double lowest = s.energy;
      for (std::size_t q = 0; q < s.start_energies.size(); ++q)
        if (s.start_converged[q]) lowest = std::min(lowest, s.start_energies[q]);
      const json cert = {{"converged", s.kind == OutcomeKind::positive_ground_state},
                         {"negative_part", s.cone_plus <= 1e-8},
                         {"lowest_among_starts", s.energy <= lowest},
                         {"nehari_member", s.nehari.member}};
      e["start_energies"] = s.start_energies;
      e["start_converged"] = s.start_converged;
      e["certificates"] = cert;
      bool ok = true;
      for (const auto& [name, v] : cert.items()) ok = ok && v.get<bool>();
      e["certified"] = ok;
      all_ok = all_ok && ok;
      persist(1, s, e);
      out << "u1 " << to_string(s.kind) << " E=" << s.energy << (ok ? " certified" : " NOT certified") << "\n";
    } catch (const Error& ex) {
      e["error"] = ex.what();
      e["certified"] = false;
      all_ok = false;
      err << "u1 failed: " << ex.what() << "\n";
    }
    solutions.push_back(e);
  }

  for (int k = 2; k <= c.depth && k <= static_cast<int>(t.rows.size()); ++k) {
    const auto& v = verdicts[static_cast<std::size_t>(k - 1)];
    const double bound = t.row(k).ell * t.c_inf;
    json e = {{"k", k}, {"guaranteed", v.below_threshold}, {"level", t.row(k).c}, {"energy_bound", bound}};
    if (!v.below_threshold) e["note"] = "not guaranteed";
    try {
      std::vector<int> signs;
      for (int q = 0; q < k; ++q) signs.push_back(q % 2 == 0 ? 1 : -1);
      const auto seed = multibump_seed(t, k, signs, model);
      SolverOptions no = so;
      no.tolerance = c.solver.nodal_tolerance;
      no.level_tolerance = t.tol_ladder;
      const auto s = solve_nodal(model, seed, no, t.row(k).c);
      const double n2 = model.norm_squared(s.field);
      e["outcome"] = outcome_json(s);
      e["outcome"]["norm_squared"] = n2;
      json cert = {{"converged", s.kind == OutcomeKind::nodal},
                   {"nodal_member", s.nehari.nodal_member},
                   {"psi_residuals", std::abs(s.nehari.psi_plus) <= 1e-6 * n2 && std::abs(s.nehari.psi_minus) <= 1e-6 * n2},
                   {"masses_above_floor", s.masses.plus > s.mass_floor && s.masses.minus > s.mass_floor},
                   {"alpha_separated", s.cone_plus > alpha.alpha && s.cone_minus > alpha.alpha},
                   {"within_level", s.within_level}};
      if (v.below_threshold) cert["energy_bound"] = s.energy <= bound + 1e-3 * t.c_inf;
      e["certificates"] = cert;
      bool ok = true;
      for (const auto& [name, x] : cert.items()) ok = ok && x.get<bool>();
      e["certified"] = ok;
      all_ok = all_ok && ok;
      persist(k, s, e);
      out << "u" << k << " " << to_string(s.kind) << " E=" << s.energy << " bound " << bound
          << (ok ? " certified" : " NOT certified") << (v.below_threshold ? "" : " (not guaranteed)") << "\n";
    } catch (const Error& ex) {
      e["error"] = ex.what();
      e["certified"] = false;
      all_ok = false;
      err << "u" << k << " failed: " << ex.what() << "\n";
    }
    solutions.push_back(e);
  }

  int guaranteed = 0;
  for (const auto& v : verdicts)
    if (v.below_threshold && v.k <= c.depth) guaranteed = v.k;
  json report = {{"mesh", {{"description", description}, {"nodes", model.mesh().node_count()}}},
                 {"alpha", {{"constant", alpha.constant}, {"alpha", alpha.alpha}, {"samples", alpha.samples}}},
                 {"min_orbit", to_json(min_orbit.value)},
                 {"min_orbit_label", min_orbit.label()},
                 {"c_inf", t.c_inf},
                 {"verdicts", verdict_json(verdicts)},
                 {"guaranteed_solutions", guaranteed},
                 {"solutions", solutions},
                 {"all_certified", all_ok}};
  ws.write_json("solve.json", report);
  ws.manifest["verdict"] = {{"guaranteed_solutions", guaranteed}, {"all_certified", all_ok}};
  ws.stage("solve", all_ok ? "ok" : "failed");
  return all_ok ? exit_ok : exit_solver;
}

// ---------------------------------------------------------------------------

int cmd_report(Workspace& ws, std::ostream& out) {
  const fs::path dir = ws.path("");
  verify_files(read_manifest(dir), dir);
  std::ostringstream txt;
  txt << std::setprecision(10);
  ws.mkdir("report");
  if (fs::exists(ws.path("check.json"))) {
    const auto j = json::parse(read_text(ws.path("check.json")));
    txt << "Hypotheses: " << (j["all_ok"].get<bool>() ? "all pass" : "FAILED") << " (f1 margin "
        << j["f1"]["margin"] << ", f2 margin " << j["f2"]["margin"] << ", f3 margin " << j["f3"]["margin"] << ")\n";
  }
  json ladder;
  if (fs::exists(ws.path("ladder.json"))) {
    ladder = json::parse(read_text(ws.path("ladder.json")));
    txt << "Ladder: c_inf " << ladder["c_inf"] << " (truncation sensitivity " << ladder["limit"]["sensitivity"]
        << "), c_0 " << ladder["c0"] << ", R_max " << ladder["r_max"] << "\n";
    for (const auto& r : ladder["rows"])
      txt << "  ell_" << r["k"] << " = " << r["ell"] << "  search margin " << r["search_margin"] << "\n";
  }
  std::string csv = "k,kind,energy,level,energy_bound,guaranteed,certified\n";
  if (fs::exists(ws.path("solve.json"))) {
    const auto s = json::parse(read_text(ws.path("solve.json")));
    txt << "Solve on " << s["mesh"]["description"].get<std::string>() << "; min orbit " << s["min_orbit"].dump()
        << " (" << s["min_orbit_label"].get<std::string>() << "), alpha_h " << s["alpha"]["alpha"] << "\n";
    for (const auto& e : s["solutions"]) {
      const int k = e["k"];
      if (e.contains("error")) {
        txt << "  u" << k << ": failed: " << e["error"].get<std::string>() << "\n";
        csv += std::to_string(k) + ",failed,,,," + (e["guaranteed"].get<bool>() ? "1" : "0") + ",0\n";
        continue;
      }
      const auto& oc = e["outcome"];
      const bool positive = k == 1;
      txt << "  u" << k << ": " << (positive ? "positive" : "sign-changing") << ", I_V = " << oc["energy"];
      if (!positive)
        txt << " vs ell_" << k << " c_inf = " << e["energy_bound"] << "; Psi(u+) " << oc["psi_plus"] << ", Psi(u-) "
            << oc["psi_minus"];
      txt << "; residual " << oc["relative_residual"] << ", " << oc["steps"] << " steps"
          << (e["certified"].get<bool>() ? ", certified" : ", NOT certified")
          << (e["guaranteed"].get<bool>() ? "" : " (not guaranteed)") << "\n";
      std::ostringstream row;
      row << std::setprecision(17) << k << "," << oc["kind"].get<std::string>() << "," << oc["energy"].get<double>()
          << "," << (e.contains("level") ? e["level"].dump() : "") << ","
          << (e.contains("energy_bound") ? e["energy_bound"].dump() : "") << ","
          << (e["guaranteed"].get<bool>() ? 1 : 0) << "," << (e["certified"].get<bool>() ? 1 : 0) << "\n";
      csv += row.str();
      // Plot-ready slice: the first theta cell (all of a radial field).
      const auto f = read_field(ws.path(e["field"].get<std::string>()));
      const auto& th = f.column("theta");
      const double th0 = *std::min_element(th.begin(), th.end());
      std::ostringstream slice;
      slice << std::setprecision(17) << "radius,rho,y_norm,value\n";
      for (std::size_t i = 0; i < th.size(); ++i)
        if (th[i] == th0)
          slice << f.column("radius")[i] << "," << f.column("rho")[i] << "," << f.column("y_norm")[i] << ","
                << f.column("value")[i] << "\n";
      const std::string rel = "report/slice_u" + std::to_string(k) + ".csv";
      write_text(ws.path(rel), slice.str());
      ws.record(rel);
    }
  }
  write_text(ws.path("report/energies.csv"), csv);
  ws.record("report/energies.csv");
  write_text(ws.path("report/summary.txt"), txt.str());
  ws.record("report/summary.txt");
  ws.stage("report", "ok");
  out << txt.str();
  return exit_ok;
}

}  // namespace

RunConfig effective_config(const RunOptions& o) {
  RunConfig c = o.config_path.empty() ? parse_config("") : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.max_threads) c.max_threads = *o.max_threads;
  if (!o.out_dir.empty()) c.output = o.out_dir;
  validate(c);
  return c;
}

LadderTable load_ladder(const std::string& dir_str) {
  const fs::path dir(dir_str);
  const json manifest = read_manifest(dir);
  const auto& files = manifest["files"];
  auto verified = [&](const std::string& rel) {
    if (!files.contains(rel)) throw IntegrityError(rel + " is not listed in the manifest");
    if (sha256_file((dir / rel).string()) != files[rel].get<std::string>())
      throw IntegrityError("hash mismatch in " + rel);
    return (dir / rel).string();
  };
  json j;
  try {
    j = json::parse(read_text(verified("ladder.json")));
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("unreadable ladder.json: ") + e.what());
  }
  LadderTable t;
  t.N = j["N"];
  t.R = j["R"];
  t.r_max = j["r_max"];
  t.depth = j["depth"];
  t.c0 = j["c0"];
  t.c_inf = j["c_inf"];
  t.limit = {j["limit"]["value"], j["limit"]["refined"], j["limit"]["sensitivity"], j["limit"]["r_inf"],
             j["limit"]["nodes"]};
  t.tol_ladder = j["tol_ladder"];
  t.evaluations = j["evaluations"];
  t.budget_exhausted = j["budget_exhausted"];
  t.grid = j["grid"].get<std::vector<double>>();
  t.error = j["error"];
  for (const auto& r : j["rows"]) {
    LadderRow row;
    row.k = r["k"];
    row.breaks = r["breaks"].get<std::vector<int>>();
    for (const auto& a : r["annuli"]) row.annuli.emplace_back(a[0], a[1]);
    row.energies = r["energies"].get<std::vector<double>>();
    row.c = r["c"];
    row.ell = r["ell"];
    row.search_margin = r["search_margin"];
    row.local_minimum = r["local_minimum"];
    for (std::size_t q = 0; q + 1 < row.breaks.size(); ++q) {
      const int i = row.breaks[q], k = row.breaks[q + 1];
      if (t.omegas.count({i, k})) continue;
      const std::string stem = omega_stem(i, k);
      verified(stem + ".csv");
      verified(stem + ".json");
      const auto f = read_field((dir / stem).string());
      AnnulusState s;
      s.inner = f.meta["inner"];
      s.outer = f.meta["outer"];
      s.energy = f.meta["energy"];
      s.radii = f.column("radius");
      s.values = f.column("value");
      t.omegas.emplace(std::make_pair(i, k), std::move(s));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

int run_command(const std::string& command, const RunOptions& o, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    c = effective_config(o);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return exit_usage;
  }
  if (command != "check" && command != "ladder" && command != "orbit" && command != "solve" && command != "report") {
    err << "unknown command " << command << "\n";
    return exit_usage;
  }
  try {
    if (command == "report") {
      // Integrity first: an empty or tampered directory must not be touched.
      if (!fs::exists(fs::path(c.output) / "manifest.json")) throw IntegrityError("no manifest in " + c.output);
      verify_files(read_manifest(c.output), c.output);
    }
    Workspace ws(c.output, c, command == "report");
    const auto start = std::chrono::steady_clock::now();
    int code = exit_ok;
    try {
      if (command == "check") code = cmd_check(c, ws, out);
      else if (command == "ladder") code = cmd_ladder(c, ws, o, out, err);
      else if (command == "orbit") code = cmd_orbit(c, ws, out);
      else if (command == "solve") code = cmd_solve(c, ws, o, out, err);
      else code = cmd_report(ws, out);
    } catch (...) {
      ws.timing(command, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      ws.save();
      throw;
    }
    ws.timing(command, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    ws.save();
    return code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << "\n";
    return exit_integrity;
  } catch (const ConfigError& e) {
    err << "hypothesis error: " << e.what() << "\n";
    return exit_hypothesis;
  } catch (const DefinitenessError& e) {
    err << "hypothesis error: " << e.what() << "\n";
    return exit_hypothesis;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return exit_solver;
  } catch (const SignError& e) {
    err << "solver error: " << e.what() << "\n";
    return exit_solver;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_solver;
  }
}

}  // namespace nodal

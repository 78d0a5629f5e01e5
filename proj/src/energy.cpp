#include "nodal/energy.hpp"

#include "nodal/errors.hpp"

#include <Eigen/SparseLU>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace nodal {

DiscreteField DiscreteField::positive_part() const {
  return {mesh_id, values.cwiseMax(0.0), {}, {}, {}};
}

DiscreteField DiscreteField::negative_part() const {
  return {mesh_id, values.cwiseMin(0.0), {}, {}, {}};
}

EnergyModel::EnergyModel(std::shared_ptr<const WeightedMesh> mesh,
                         std::shared_ptr<const VForm> form, Nonlinearity nonlinearity)
    : mesh_(std::move(mesh)), form_(std::move(form)), nl_(nonlinearity) {
  if (!mesh_ || !form_) throw DomainError("energy model needs a mesh and a V-form");
  if (form_->mesh_id() != mesh_->id()) throw DomainError("V-form was assembled on another mesh");
  critical_ = critical_exponent(mesh_->dimension());
}

EnergyModel EnergyModel::create(WeightedMesh mesh, const Potential& pot, Nonlinearity nonlinearity) {
  auto m = std::make_shared<const WeightedMesh>(std::move(mesh));
  auto f = std::make_shared<const VForm>(assemble_vform(*m, pot));
  return EnergyModel(m, f, nonlinearity);
}

void EnergyModel::check_mesh(const DiscreteField& u) const {
  if (u.mesh_id != mesh_->id() || u.values.size() != mesh_->node_count())
    throw DomainError("field does not live on this model's mesh");
}

DiscreteField EnergyModel::field(Vector values) const {
  if (values.size() != mesh_->node_count()) throw DomainError("field size does not match mesh");
  if (!values.allFinite()) throw DomainError("field has non-finite coefficients");
  for (int i = 0; i < mesh_->node_count(); ++i)
    if (mesh_->is_dirichlet(i) && values[i] != 0.0)
      throw DomainError("field is nonzero on a Dirichlet node");
  return {mesh_->id(), std::move(values), {}, {}, {}};
}

DiscreteField EnergyModel::zero() const { return field(Vector::Zero(mesh_->node_count())); }

double EnergyModel::norm_squared(const DiscreteField& u) const {
  check_mesh(u);
  if (!u.cached_norm_squared) u.cached_norm_squared = form_->norm_squared(u.values);
  return *u.cached_norm_squared;
}

double EnergyModel::norm(const DiscreteField& u) const { return std::sqrt(norm_squared(u)); }

double EnergyModel::inner(const DiscreteField& u, const DiscreteField& v) const {
  check_mesh(u);
  check_mesh(v);
  return form_->inner(u.values, v.values);
}

double EnergyModel::primitive_integral(const DiscreteField& u) const {
  check_mesh(u);
  if (!u.cached_primitive_integral) {
    const Vector& w = mesh_->weights();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < u.values.size(); ++i)
      if (u.values[i] != 0.0) sum += w[i] * nl_.primitive(u.values[i]);
    u.cached_primitive_integral = sum;
  }
  return *u.cached_primitive_integral;
}

double EnergyModel::energy(const DiscreteField& u) const {
  if (!u.cached_energy) u.cached_energy = 0.5 * norm_squared(u) - primitive_integral(u);
  return *u.cached_energy;
}

double EnergyModel::ray_energy(const DiscreteField& u, double t) const {
  return energy(DiscreteField{u.mesh_id, t * u.values, {}, {}, {}});
}

Vector EnergyModel::source(const Vector& u) const {
  const Vector& w = mesh_->weights();
  Vector b(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    b[i] = mesh_->is_dirichlet(static_cast<int>(i)) ? 0.0 : w[i] * nl_.value(u[i]);
  return b;
}

DiscreteField EnergyModel::auxiliary(const DiscreteField& u, LinearSolveInfo* info) const {
  check_mesh(u);
  return {u.mesh_id, form_->solve(source(u.values), 1e-10, info), {}, {}, {}};
}

DiscreteField EnergyModel::gradient(const DiscreteField& u, LinearSolveInfo* info) const {
  DiscreteField q = auxiliary(u, info);
  return {u.mesh_id, u.values - q.values, {}, {}, {}};
}

DiscreteField EnergyModel::newton_direction(const DiscreteField& u) const {
  check_mesh(u);
  const Vector& w = mesh_->weights();
  SparseMatrix h = form_->matrix();
  for (Eigen::Index i = 0; i < u.values.size(); ++i)
    if (!mesh_->is_dirichlet(static_cast<int>(i))) h.coeffRef(i, i) -= w[i] * nl_.derivative(u.values[i]);
  h.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(h);
  if (lu.info() != Eigen::Success) throw SolverError("singular Hessian in the Newton correction");
  Vector d = lu.solve(source(u.values) - form_->matrix() * u.values);
  if (lu.info() != Eigen::Success || !d.allFinite()) throw SolverError("Newton correction failed");
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (mesh_->is_dirichlet(static_cast<int>(i))) d[i] = 0.0;
  return {u.mesh_id, std::move(d), {}, {}, {}};
}

double EnergyModel::derivative(const DiscreteField& u, const DiscreteField& v) const {
  check_mesh(v);
  return inner(u, v) - source(u.values).dot(v.values);
}

double EnergyModel::psi(const DiscreteField& u) const {
  return norm_squared(u) - source(u.values).dot(u.values);
}

double EnergyModel::psi_part(const DiscreteField& u, Sign part) const {
  const DiscreteField p = part == Sign::plus ? u.positive_part() : u.negative_part();
  return derivative(u, p);
}

// Positive root of t a + shift - sum w f(t v) v, i.e. of
// h(t) = a + shift / t - sum w f(t v) v / t, which is strictly decreasing.
double EnergyModel::ray_root(const Vector& v, double a, double shift) const {
  const Vector& w = mesh_->weights();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) support.push_back(i);
  if (support.empty() || !(a > 0.0)) throw DomainError("Nehari scaling of the zero field");
  auto h = [&](double t) {
    double sum = 0.0;
    for (auto i : support) sum += w[i] * nl_.value(t * v[i]) * v[i];
    return a + shift / t - sum / t;
  };
  double lo = 1.0;
  double hi = 1.0;
  double h_lo = h(lo);
  double h_hi = h_lo;
  int grow = 0;
  while (h_hi > 0.0) {
    if (++grow > 400) throw BracketError("no sign change of the ray derivative (upper bracket)");
    lo = hi;
    h_lo = h_hi;
    hi *= 2.0;
    h_hi = h(hi);
  }
  while (h_lo < 0.0) {
    if (++grow > 400) throw BracketError("no sign change of the ray derivative (lower bracket)");
    hi = lo;
    h_hi = h_lo;
    lo *= 0.5;
    h_lo = h(lo);
  }
  if (h_lo == 0.0) return lo;
  if (h_hi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::min(x, y); };
  const auto r = boost::math::tools::toms748_solve(h, lo, hi, h_lo, h_hi, tol, max_iter);
  return 0.5 * (r.first + r.second);
}

NehariScaling EnergyModel::nehari_scale(const DiscreteField& u) const {
  check_mesh(u);
  const double t = ray_root(u.values, norm_squared(u), 0.0);
  return {t, DiscreteField{u.mesh_id, t * u.values, {}, {}, {}}};
}

DiscreteField EnergyModel::nodal_project(const DiscreteField& u) const {
  check_mesh(u);
  if (!u.has_positive_part() || !u.has_negative_part())
    throw SignError("nodal projection needs both a positive and a negative part");
  const Vector up = u.values.cwiseMax(0.0);
  const Vector um = u.values.cwiseMin(0.0);
  const double a_plus = form_->norm_squared(up);
  const double a_minus = form_->norm_squared(um);
  // Nonnegative for an M-matrix form: the parts only couple across sign changes.
  const double c = std::max(0.0, form_->inner(up, um));
  // Gauss-Seidel on the two coupled scalar conditions psi_part(+-) = 0.
  double tp = 1.0;
  double tm = 1.0;
  for (int it = 0; it < 500; ++it) {
    const double tp_new = ray_root(up, a_plus, tm * c);
    const double tm_new = ray_root(um, a_minus, tp_new * c);
    const double change = std::max(std::abs(tp_new - tp) / tp_new, std::abs(tm_new - tm) / tm_new);
    tp = tp_new;
    tm = tm_new;
    if (change <= 1e-14) break;
  }
  return {u.mesh_id, tp * up + tm * um, {}, {}, {}};
}

NehariDiagnostics EnergyModel::diagnostics(const DiscreteField& u) const {
  NehariDiagnostics d;
  const double n2 = norm_squared(u);
  d.tolerance = 1e-8 * n2;
  d.psi_value = psi(u);
  d.psi_plus = psi_part(u, Sign::plus);
  d.psi_minus = psi_part(u, Sign::minus);
  if (n2 > 0.0) d.t_u = nehari_scale(u).t;
  d.member = n2 > 0.0 && std::abs(d.psi_value) <= d.tolerance;
  d.nodal_member = u.has_positive_part() && u.has_negative_part() &&
                   std::abs(d.psi_plus) <= d.tolerance && std::abs(d.psi_minus) <= d.tolerance;
  return d;
}

ConeDistance EnergyModel::cone_distance(const DiscreteField& u, Sign cone) const {
  check_mesh(u);
  const Vector off = cone == Sign::plus ? Vector(u.values.cwiseMin(0.0)) : Vector(u.values.cwiseMax(0.0));
  const Vector& w = mesh_->weights();
  double mass = 0.0;
  for (Eigen::Index i = 0; i < off.size(); ++i)
    if (off[i] != 0.0) mass += w[i] * std::pow(std::abs(off[i]), critical_);
  return {std::sqrt(form_->norm_squared(off)), std::pow(mass, 1.0 / critical_)};
}

SignMasses EnergyModel::sign_masses(const DiscreteField& u) const {
  check_mesh(u);
  const Vector& w = mesh_->weights();
  SignMasses m;
  for (Eigen::Index i = 0; i < u.values.size(); ++i) {
    const double x = u.values[i];
    (x > 0.0 ? m.plus : m.minus) += x != 0.0 ? w[i] * std::pow(std::abs(x), critical_) : 0.0;
  }
  return m;
}

double EnergyModel::mass_floor() const {
  return 1e-6 * std::pow(mesh_->total_weight(), (2.0 - critical_) / critical_);
}

double EnergyModel::nehari_lower_bound() const {
  // |u_i| <= sqrt((A^{-1})_ii) ||u||_V, sum w u^2 <= ||u||_V^2 / lambda and
  // f(s)s <= |s|^{2*}; combine on the Nehari set ||u||^2 = sum w f(u) u.
  double max_diag = 0.0;
  Vector e = Vector::Zero(mesh_->node_count());
  for (int i = 0; i < mesh_->node_count(); ++i) {
    if (mesh_->is_dirichlet(i)) continue;
    e[i] = 1.0;
    max_diag = std::max(max_diag, form_->solve(e)[i]);
    e[i] = 0.0;
  }
  return std::pow(form_->smallest_ritz(), 1.0 / (critical_ - 2.0)) / std::sqrt(max_diag);
}

DiscreteField radial_bump(const EnergyModel& model, double r0, double r1, double peak) {
  if (!(r1 > r0)) throw GeometryError("bump support must have r0 < r1");
  const auto& mesh = model.mesh();
  Vector v = Vector::Zero(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.is_dirichlet(i)) continue;
    const double r = mesh.points()[static_cast<std::size_t>(i)].radius;
    if (r <= r0 || r >= r1) continue;
    const double s = std::sin(std::numbers::pi * (r - r0) / (r1 - r0));
    v[i] = peak * s * s;
  }
  return model.field(std::move(v));
}

namespace {

struct BubbleParams {
  double rc, eps, height;
  bool angular;
  double theta0, phi0, sigma;
  double bg_center, bg_width, bg_height;  // bg_height 0: no positive background
};

double contraction_ratio(const EnergyModel& model, const BubbleParams& prm, double crit) {
  const auto& mesh = model.mesh();
  const int N = mesh.dimension();
  const double period = 2.0 * std::numbers::pi / mesh.n_fold();
  Vector v = Vector::Zero(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.is_dirichlet(i)) continue;
    const auto& p = mesh.points()[static_cast<std::size_t>(i)];
    const double x = (p.radius - prm.rc) / prm.eps;
    double val = -prm.height * std::pow(1.0 + x * x, -0.5 * (N - 2));
    if (prm.angular) {
      double dt = std::abs(p.theta - prm.theta0);
      dt = std::min(dt, period - dt);
      const double dp = std::atan2(p.y_norm, p.rho) - prm.phi0;
      val *= std::exp(-(dt * dt + dp * dp) / (prm.sigma * prm.sigma));
    }
    v[i] = val;
  }
  if (prm.bg_height > 0.0) {
    const double hi = std::min(mesh.outer_radius(), prm.bg_center + prm.bg_width);
    if (hi > prm.bg_center) v += radial_bump(model, prm.bg_center, hi, prm.bg_height).values;
  }
  const DiscreteField u = model.field(std::move(v));
  const double dist = model.cone_distance(u, Sign::plus).v_norm;
  if (!(dist > 0.0)) return 0.0;
  const double qdist = model.cone_distance(model.auxiliary(u), Sign::plus).v_norm;
  return qdist / std::pow(dist, crit - 1.0);
}

}  // namespace

AlphaEstimate estimate_alpha(const EnergyModel& model, std::uint64_t seed, int samples) {
  // The supremum is approached by concentrated profiles: the negative parts
  // are bubbles (1 + ((r - r_c)/eps)^2)^{-(N-2)/2}, optionally localised in
  // angle and added to a positive background. Random sampling is followed by
  // a multiplicative pattern search from the best sample.
  const auto& mesh = model.mesh();
  const double crit = critical_exponent(mesh.dimension());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = std::max(mesh.inner_radius(), 1e-3 * mesh.outer_radius());
  const double b = mesh.outer_radius();
  const double period = 2.0 * std::numbers::pi / mesh.n_fold();
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, unit(rng)); };

  AlphaEstimate est;
  BubbleParams best{};
  double best_ratio = -1.0;
  for (int k = 0; k < samples; ++k) {
    BubbleParams prm;
    prm.rc = log_uniform(a, b);
    prm.eps = prm.rc * log_uniform(1e-2, 1.0);
    prm.height = log_uniform(1e-2, 1e2);
    prm.angular = !mesh.is_radial() && unit(rng) < 0.5;
    prm.theta0 = period * unit(rng);
    prm.phi0 = 0.5 * std::numbers::pi * unit(rng);
    prm.sigma = log_uniform(0.05, 0.5);
    prm.bg_center = log_uniform(a, b);
    prm.bg_width = prm.bg_center * unit(rng);
    prm.bg_height = unit(rng) < 0.5 ? log_uniform(1e-2, 1e2) : 0.0;
    const double r = contraction_ratio(model, prm, crit);
    ++est.samples;
    if (r > best_ratio) {
      best_ratio = r;
      best = prm;
    }
  }
  if (best_ratio > 0.0) {
    double step = 2.0;
    for (int it = 0; it < 12 && step > 1.05; ++it) {
      bool improved = false;
      for (int c = 0; c < 4; ++c)
        for (double f : {step, 1.0 / step}) {
          BubbleParams trial = best;
          double* target[] = {&trial.rc, &trial.eps, &trial.height, &trial.sigma};
          *target[c] *= f;
          if (trial.rc <= mesh.inner_radius() || trial.rc >= b) continue;
          const double r = contraction_ratio(model, trial, crit);
          ++est.samples;
          if (r > best_ratio) {
            best_ratio = r;
            best = trial;
            improved = true;
          }
        }
      if (!improved) step = std::sqrt(step);
    }
  }
  est.constant = 2.0 * std::max(best_ratio, 0.0);  // safety factor on a sampled supremum
  est.alpha = est.constant > 0.0 ? 0.5 * std::pow(est.constant, -1.0 / (crit - 2.0))
                                 : std::numeric_limits<double>::infinity();
  return est;
}

}  // namespace nodal

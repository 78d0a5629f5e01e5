#pragma once

#include "nodal/mesh.hpp"
#include "nodal/problem_model.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace nodal {

/// Nodal coefficients on one mesh. Value-semantic; the caches are filled on
/// first use by EnergyModel and never change afterwards.
struct DiscreteField {
  std::uint64_t mesh_id = 0;
  Vector values;

  mutable std::optional<double> cached_norm_squared;
  mutable std::optional<double> cached_primitive_integral;
  mutable std::optional<double> cached_energy;

  DiscreteField positive_part() const;
  DiscreteField negative_part() const;
  bool has_positive_part() const { return values.maxCoeff() > 0.0; }
  bool has_negative_part() const { return values.minCoeff() < 0.0; }
};

enum class Sign { plus, minus };

struct NehariScaling {
  double t = 1.0;
  DiscreteField scaled;
};

struct NehariDiagnostics {
  double psi_value = 0.0;
  double psi_plus = 0.0;   // uses the nodal split defined in EnergyModel::psi_part
  double psi_minus = 0.0;
  std::optional<double> t_u;
  double tolerance = 0.0;  // tol_N = 1e-8 ||u||_V^2
  bool member = false;
  bool nodal_member = false;
};

struct ConeDistance {
  double v_norm = 0.0;         // ||u^-||_V for P, ||u^+||_V for -P
  double critical_norm = 0.0;  // |u^-|_{2*} resp. |u^+|_{2*}
};

struct SignMasses {
  double plus = 0.0;  // int |u^+|^{2*}
  double minus = 0.0;
};

class EnergyModel {
 public:
  EnergyModel(std::shared_ptr<const WeightedMesh> mesh, std::shared_ptr<const VForm> form,
              Nonlinearity nonlinearity);

  /// Builds the mesh's V-form itself.
  static EnergyModel create(WeightedMesh mesh, const Potential& pot, Nonlinearity nonlinearity);

  const WeightedMesh& mesh() const { return *mesh_; }
  const VForm& form() const { return *form_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  std::shared_ptr<const WeightedMesh> mesh_ptr() const { return mesh_; }
  std::shared_ptr<const VForm> form_ptr() const { return form_; }

  /// Validates finiteness and zero Dirichlet values.
  DiscreteField field(Vector values) const;
  DiscreteField zero() const;

  double norm_squared(const DiscreteField& u) const;
  double norm(const DiscreteField& u) const;
  double inner(const DiscreteField& u, const DiscreteField& v) const;
  double primitive_integral(const DiscreteField& u) const;
  double energy(const DiscreteField& u) const;
  /// sigma_u(t) = I_V(t u).
  double ray_energy(const DiscreteField& u, double t) const;

  /// u - Q(u) with A Q(u) = W f(u).
  DiscreteField gradient(const DiscreteField& u, LinearSolveInfo* info = nullptr) const;
  DiscreteField auxiliary(const DiscreteField& u, LinearSolveInfo* info = nullptr) const;
  /// Newton correction d with I_V''(u) d = -I_V'(u), i.e.
  /// (A - W f'(u)) d = W f(u) - A u on free nodes. Throws SolverError when
  /// the Hessian is singular.
  DiscreteField newton_direction(const DiscreteField& u) const;
  /// I_V'(u) v.
  double derivative(const DiscreteField& u, const DiscreteField& v) const;

  /// Psi(u) = ||u||_V^2 - sum w f(u) u.
  double psi(const DiscreteField& u) const;
  /// Psi of the positive (negative) part, taken as I_V'(u) u^{+-}
  /// = <u, u^{+-}>_V - sum w f(u^{+-}) u^{+-}. In the continuum this is
  /// Psi(u^{+-}) because the parts have disjoint support; on the mesh it keeps
  /// Psi(u) = Psi(u^+) + Psi(u^-) exact and vanishes at critical points.
  double psi_part(const DiscreteField& u, Sign part) const;

  NehariScaling nehari_scale(const DiscreteField& u) const;
  /// t_+ u^+ + t_- u^- with both parts on the discrete Nehari set.
  DiscreteField nodal_project(const DiscreteField& u) const;
  NehariDiagnostics diagnostics(const DiscreteField& u) const;

  /// Distance surrogate from u to P (sign plus) or -P (sign minus).
  ConeDistance cone_distance(const DiscreteField& u, Sign cone) const;
  SignMasses sign_masses(const DiscreteField& u) const;
  /// 1e-6 (total weight)^{(2-2*)/2*}.
  double mass_floor() const;

  /// Positive lower bound on ||u||_V over discrete Nehari members:
  /// lambda^{1/(2*-2)} / sqrt(max_i (A^{-1})_ii), lambda the smallest Ritz value.
  double nehari_lower_bound() const;

 private:
  void check_mesh(const DiscreteField& u) const;
  Vector source(const Vector& u) const;  // W f(u), zero on Dirichlet nodes
  double ray_root(const Vector& part, double a, double shift) const;

  std::shared_ptr<const WeightedMesh> mesh_;
  std::shared_ptr<const VForm> form_;
  Nonlinearity nl_;
  double critical_ = 0.0;
};

/// Sampled constant C_h in dist(Q(u), P) <= C_h dist(u, P)^{2*-1} and the
/// radius alpha_h = 1/2 C_h^{-1/(2*-2)} derived from it.
struct AlphaEstimate {
  double constant = 0.0;
  double alpha = 0.0;
  int samples = 0;
};
AlphaEstimate estimate_alpha(const EnergyModel& model, std::uint64_t seed, int samples = 64);

/// Nonnegative smooth bump supported in the radial range [r0, r1], scaled
/// to the given peak.
DiscreteField radial_bump(const EnergyModel& model, double r0, double r1, double peak = 1.0);

}  // namespace nodal

#pragma once

#include "nodal/problem_model.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace nodal {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class MeshKind { radial_annulus, radial_exterior_truncated, radial_ball, sector3d };

std::string to_string(MeshKind kind);

struct Grading {
  enum class Type { uniform, geometric } type = Type::uniform;
  /// Ratio of adjacent cell widths for geometric grading; <= 0 picks the default.
  double ratio = 0.0;

  static Grading uniform() { return {}; }
  static Grading geometric(double ratio = 0.0) { return {Type::geometric, ratio}; }
};

/// Node positions on [a, b]. Geometric grading refines toward a; the default
/// ratio makes the last cell 50 times the first, capped at 1.05.
std::vector<double> radial_nodes(double a, double b, int n_nodes, Grading grading);

/// Symmetry-reduced mesh with lumped quadrature weights and the assembled
/// stiffness matrix of int |grad u|^2 on the reduced coordinates.
///
/// Radial meshes carry one node per radius. Sector meshes are tensor products
/// (s, phi, theta) where (rho, |y|) = s (cos phi, sin phi) and theta is the
/// argument of z in C x R^{N-2}; theta is periodic with period 2 pi / n_fold and
/// phi, theta are cell-centred so neither axis carries nodes.
class WeightedMesh {
 public:
  MeshKind kind() const { return kind_; }
  int dimension() const { return N_; }
  std::uint64_t id() const { return id_; }
  bool is_radial() const { return kind_ != MeshKind::sector3d; }

  int node_count() const { return static_cast<int>(weights_.size()); }
  const Vector& weights() const { return weights_; }
  double total_weight() const { return weights_.sum(); }
  const std::vector<char>& dirichlet() const { return dirichlet_; }
  bool is_dirichlet(int i) const { return dirichlet_[static_cast<std::size_t>(i)] != 0; }
  const std::vector<ReducedPoint>& points() const { return points_; }
  const SparseMatrix& stiffness() const { return stiffness_; }

  const std::vector<double>& radii() const { return radii_; }
  double inner_radius() const { return radii_.front(); }
  double outer_radius() const { return radii_.back(); }
  const Grading& grading() const { return grading_; }

  int n_fold() const { return n_fold_; }
  int n_phi() const { return n_phi_; }
  int n_theta() const { return n_theta_; }
  /// Radial index of node i.
  int radial_index(int i) const { return is_radial() ? i : i / (n_phi_ * n_theta_); }
  int node_index(int i_s, int j_phi, int k_theta) const {
    return (i_s * n_phi_ + j_phi) * n_theta_ + k_theta;
  }

  /// Analytic measure of the represented region.
  double exact_volume() const;

  friend WeightedMesh build_radial_from_nodes(MeshKind, int, std::vector<double>, Grading);
  friend WeightedMesh build_sector3d_from_nodes(int, int, std::vector<double>, int, int, Grading);

 private:
  MeshKind kind_ = MeshKind::radial_annulus;
  int N_ = 3;
  std::uint64_t id_ = 0;
  std::vector<double> radii_;
  Grading grading_;
  int n_fold_ = 1;
  int n_phi_ = 1;
  int n_theta_ = 1;
  Vector weights_;
  std::vector<char> dirichlet_;
  std::vector<ReducedPoint> points_;
  SparseMatrix stiffness_;
};

/// [a, b] = radii; for radial_ball a must be 0 and the inner end is natural.
WeightedMesh build_radial(MeshKind kind, int N, double a, double b, int n_nodes, Grading grading);
WeightedMesh build_radial_from_nodes(MeshKind kind, int N, std::vector<double> nodes,
                                     Grading grading = {});

struct SectorResolution {
  int n_s = 64;
  int n_phi = 8;
  int n_theta = 8;
};

/// Exterior of the ball B_{s_inner} truncated at s_outer, reduced by
/// Z_{n_fold} x O(N-2).
WeightedMesh build_sector3d(int N, int n_fold, double s_inner, double s_outer,
                            SectorResolution resolution, Grading grading);
WeightedMesh build_sector3d_from_nodes(int N, int n_fold, std::vector<double> s_nodes, int n_phi,
                                       int n_theta, Grading grading = {});

/// Sum of w_i v_i; throws DomainError on NaN input.
double integrate(const WeightedMesh& mesh, const Vector& values);

/// Samples a radial profile given at increasing radii onto the mesh nodes
/// (piecewise linear, zero outside the profile's support); Dirichlet nodes are zeroed.
Vector interpolate_radial(const WeightedMesh& mesh, const std::vector<double>& radii,
                          const Vector& values);

// ---------------------------------------------------------------------------

/// Preconditioned CG outcome.
struct LinearSolveInfo {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Discrete <u, v>_V = u^T A v with A = K + diag(w V) on free nodes and the
/// identity on Dirichlet rows, together with the solver used for Q(u).
class VForm {
 public:
  const SparseMatrix& matrix() const { return matrix_; }
  const Vector& potential_values() const { return potential_; }
  std::uint64_t mesh_id() const { return mesh_id_; }
  /// Smallest generalized eigenvalue of A against the lumped weights on free nodes.
  double smallest_ritz() const { return smallest_ritz_; }

  double inner(const Vector& u, const Vector& v) const { return u.dot(matrix_ * v); }
  double norm_squared(const Vector& u) const { return inner(u, u); }

  /// Solves A x = b by preconditioned CG to the given relative residual.
  Vector solve(const Vector& rhs, double tolerance = 1e-10, LinearSolveInfo* info = nullptr) const;

  friend VForm assemble_vform(const WeightedMesh& mesh, const Potential& pot);

 private:
  SparseMatrix matrix_;
  Vector potential_;
  std::uint64_t mesh_id_ = 0;
  double smallest_ritz_ = 0.0;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> factor_;
  std::vector<int> free_;
};

/// Throws DefinitenessError naming the smallest Ritz value if the discrete
/// form is not positive definite on Dirichlet-admissible coefficients.
VForm assemble_vform(const WeightedMesh& mesh, const Potential& pot);

/// Extreme generalized eigenvalues c1 <= c2 of <.,.>_V against the V = 0
/// stiffness on free nodes.
struct NormEquivalence {
  double lower = 0.0;
  double upper = 0.0;
};
NormEquivalence norm_equivalence(const WeightedMesh& mesh, const VForm& form);

}  // namespace nodal

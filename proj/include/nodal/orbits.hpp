#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace nodal {

enum class GroupKind { full_orthogonal, product_of_orthogonals, cyclic_diagonal_Zn, Zn_cross_ONminus2, finite_generated };

std::string to_string(GroupKind kind);

/// Symmetry group G acting orthogonally on R^N. Continuous factors are
/// described structurally; only finite_generated groups are enumerated.
class GroupSpec {
 public:
  static GroupSpec full_orthogonal(int N);
  /// O(n_1) x ... x O(n_m) acting blockwise, sum n_i = N.
  static GroupSpec product_of_orthogonals(std::vector<int> blocks);
  /// Z_n acting on C^{N/2} by z -> e^{2 pi i/n} z; needs N even.
  static GroupSpec cyclic_diagonal(int n, int N);
  /// Z_n rotating z in C x R^{N-2}, O(N-2) acting on y.
  static GroupSpec cyclic_cross_orthogonal(int n, int N);
  /// Group generated by orthogonal matrices (checked to 1e-12).
  static GroupSpec finite_generated(std::vector<Eigen::MatrixXd> generators);

  GroupKind kind() const { return kind_; }
  int dimension() const { return N_; }
  int n() const { return n_; }
  const std::vector<int>& blocks() const { return blocks_; }
  const std::vector<Eigen::MatrixXd>& generators() const { return generators_; }

 private:
  GroupSpec() = default;
  GroupKind kind_ = GroupKind::full_orthogonal;
  int N_ = 0;
  int n_ = 0;
  std::vector<int> blocks_;
  std::vector<Eigen::MatrixXd> generators_;
};

/// All elements of a finite_generated group, by closure under the generators
/// (duplicates within 1e-9). Throws DomainError past 10^6 elements.
std::vector<Eigen::MatrixXd> enumerate_group(const GroupSpec& g);

/// Orbit cardinalities; nullopt stands for an infinite orbit.
struct MinOrbit {
  std::optional<long> value;
  bool exact = true;  // false: sampled minimum over isotropy strata
  int samples = 0;
  std::string label() const { return exact ? "exact" : "sampled minimum"; }
};

MinOrbit min_orbit_cardinality(const GroupSpec& g, unsigned long long seed = 1);

struct IsotropyReport {
  std::optional<long> orbit;
  std::optional<long> isotropy_order;  // finite groups only
  std::optional<long> group_order;
  bool orbit_stabilizer_ok = true;  // #Gx |G_x| = |G|
  std::string description;
};

/// Throws DomainError at x = 0.
IsotropyReport isotropy_report(const GroupSpec& g, const Eigen::VectorXd& x);

/// Obstacle in C x R^{N-2}: the ball |x| < radius, or the petal set
/// |x| < radius (1 + amplitude cos(petals arg z)).
struct Obstacle {
  enum class Kind { ball, petal } kind = Kind::ball;
  double radius = 1.0;
  int petals = 0;
  double amplitude = 0.0;

  /// Negative inside, zero on the boundary.
  double level(const Eigen::VectorXd& x) const;
};

/// Whether G maps the obstacle into itself: structurally for the parametric
/// kinds, by sampling boundary points under every generator otherwise.
bool check_domain_invariance(const GroupSpec& g, const Obstacle& obstacle, unsigned long long seed = 1);

}  // namespace nodal

#include "nodal/orbits.hpp"

#include "nodal/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

namespace nodal {

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::full_orthogonal: return "full_orthogonal";
    case GroupKind::product_of_orthogonals: return "product_of_orthogonals";
    case GroupKind::cyclic_diagonal_Zn: return "cyclic_diagonal_Zn";
    case GroupKind::Zn_cross_ONminus2: return "Zn_cross_ONminus2";
    case GroupKind::finite_generated: return "finite_generated";
  }
  return "unknown";
}

GroupSpec GroupSpec::full_orthogonal(int N) {
  if (N < 1) throw DomainError("group dimension must be positive");
  GroupSpec g;
  g.kind_ = GroupKind::full_orthogonal;
  g.N_ = N;
  return g;
}

GroupSpec GroupSpec::product_of_orthogonals(std::vector<int> blocks) {
  if (blocks.empty() || std::any_of(blocks.begin(), blocks.end(), [](int b) { return b < 1; }))
    throw DomainError("orthogonal blocks must have positive sizes");
  GroupSpec g;
  g.kind_ = GroupKind::product_of_orthogonals;
  g.N_ = std::accumulate(blocks.begin(), blocks.end(), 0);
  g.blocks_ = std::move(blocks);
  return g;
}

GroupSpec GroupSpec::cyclic_diagonal(int n, int N) {
  if (n < 1) throw DomainError("Z_n needs n >= 1");
  if (N < 2 || N % 2 != 0) throw DomainError("the diagonal Z_n action needs an even dimension");
  GroupSpec g;
  g.kind_ = GroupKind::cyclic_diagonal_Zn;
  g.N_ = N;
  g.n_ = n;
  return g;
}

GroupSpec GroupSpec::cyclic_cross_orthogonal(int n, int N) {
  if (n < 1) throw DomainError("Z_n needs n >= 1");
  if (N < 3) throw DomainError("Z_n x O(N-2) needs N >= 3");
  GroupSpec g;
  g.kind_ = GroupKind::Zn_cross_ONminus2;
  g.N_ = N;
  g.n_ = n;
  return g;
}

GroupSpec GroupSpec::finite_generated(std::vector<Eigen::MatrixXd> generators) {
  if (generators.empty()) throw DomainError("finite group needs at least one generator");
  const auto N = generators.front().rows();
  for (const auto& m : generators) {
    if (m.rows() != N || m.cols() != N) throw DomainError("generators must be square of one size");
    if (!m.allFinite()) throw DomainError("generator has non-finite entries");
    const double err = (m.transpose() * m - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff();
    if (err > 1e-12) throw DomainError("generator is not orthogonal to 1e-12");
  }
  GroupSpec g;
  g.kind_ = GroupKind::finite_generated;
  g.N_ = static_cast<int>(N);
  g.generators_ = std::move(generators);
  return g;
}

namespace {

constexpr double kDedup = 1e-9;
constexpr std::size_t kCap = 1000000;

// Hash key on a 1e-6 lattice; candidates in a bucket are compared to kDedup.
std::vector<long long> lattice_key(const Eigen::MatrixXd& m) {
  std::vector<long long> key(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) key[static_cast<std::size_t>(i)] = std::llround(m.data()[i] * 1e6);
  return key;
}

std::optional<long> finite_orbit(const std::vector<Eigen::MatrixXd>& elements, const Eigen::VectorXd& x,
                                 long* isotropy) {
  long fix = 0;
  const double scale = x.norm();
  for (const auto& g : elements)
    if ((g * x - x).norm() <= kDedup * scale) ++fix;
  if (isotropy) *isotropy = fix;
  return static_cast<long>(elements.size()) / std::max(fix, 1L);
}

long count_distinct(const std::vector<Eigen::MatrixXd>& elements, const Eigen::VectorXd& x) {
  std::vector<Eigen::VectorXd> seen;
  const double scale = x.norm();
  for (const auto& g : elements) {
    const Eigen::VectorXd y = g * x;
    if (std::none_of(seen.begin(), seen.end(), [&](const Eigen::VectorXd& s) { return (s - y).norm() <= kDedup * scale; }))
      seen.push_back(y);
  }
  return static_cast<long>(seen.size());
}

}  // namespace

std::vector<Eigen::MatrixXd> enumerate_group(const GroupSpec& g) {
  if (g.kind() != GroupKind::finite_generated) throw DomainError("only generated groups are enumerated");
  const int N = g.dimension();
  std::map<std::vector<long long>, std::vector<std::size_t>> buckets;
  std::vector<Eigen::MatrixXd> elements;
  std::deque<std::size_t> queue;
  auto insert = [&](const Eigen::MatrixXd& m) {
    auto& bucket = buckets[lattice_key(m)];
    for (std::size_t k : bucket)
      if ((elements[k] - m).cwiseAbs().maxCoeff() <= kDedup) return;
    if (elements.size() >= kCap) throw DomainError("generator closure exceeds 10^6 elements; the group is not finite");
    bucket.push_back(elements.size());
    queue.push_back(elements.size());
    elements.push_back(m);
  };
  insert(Eigen::MatrixXd::Identity(N, N));
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    for (const auto& s : g.generators()) insert(Eigen::MatrixXd(s * elements[k]));
  }
  return elements;
}

MinOrbit min_orbit_cardinality(const GroupSpec& g, unsigned long long seed) {
  MinOrbit out;
  switch (g.kind()) {
    case GroupKind::full_orthogonal:
      if (g.dimension() == 1) out.value = 2;
      return out;
    case GroupKind::product_of_orthogonals:
      // A point inside a one-dimensional block has orbit {+-x}.
      if (std::any_of(g.blocks().begin(), g.blocks().end(), [](int b) { return b == 1; })) out.value = 2;
      return out;
    case GroupKind::cyclic_diagonal_Zn:
      out.value = g.n();  // free off the origin
      return out;
    case GroupKind::Zn_cross_ONminus2:
      // (z, 0) has orbit n; for N = 3 the factor O(1) gives (0, y) orbit 2.
      out.value = g.dimension() == 3 ? std::min(g.n(), 2) : g.n();
      return out;
    case GroupKind::finite_generated: break;
  }

  const auto elements = enumerate_group(g);
  const int N = g.dimension();
  std::vector<Eigen::VectorXd> points;
  for (int i = 0; i < N; ++i) points.push_back(Eigen::VectorXd::Unit(N, i));
  // Orbits are smallest where the isotropy is largest: on fixed subspaces.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t fixed_sources = std::min<std::size_t>(elements.size(), 2000);
  for (std::size_t e = 0; e < fixed_sources; ++e) {
    const Eigen::MatrixXd shifted = elements[e] - Eigen::MatrixXd::Identity(N, N);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd combo = Eigen::VectorXd::Zero(N);
    int dim = 0;
    for (int c = 0; c < N; ++c)
      if (sv[c] <= 1e-9) {
        points.push_back(svd.matrixV().col(c));
        combo += gauss(rng) * svd.matrixV().col(c);
        ++dim;
      }
    if (dim > 1 && combo.norm() > 0.0) points.push_back(combo.normalized());
  }
  for (int k = 0; k < 10000; ++k) {
    Eigen::VectorXd v(N);
    for (int i = 0; i < N; ++i) v[i] = gauss(rng);
    points.push_back(v.normalized());
  }
  long best = static_cast<long>(elements.size());
  for (const auto& x : points) best = std::min(best, *finite_orbit(elements, x, nullptr));
  out.value = best;
  out.exact = false;
  out.samples = static_cast<int>(points.size());
  return out;
}

IsotropyReport isotropy_report(const GroupSpec& g, const Eigen::VectorXd& x) {
  if (x.size() != g.dimension()) throw DomainError("point dimension does not match the group");
  if (!(x.norm() > 0.0)) throw DomainError("isotropy at the origin is degenerate");
  IsotropyReport r;
  const int N = g.dimension();
  const double tiny = 1e-12 * x.norm();
  switch (g.kind()) {
    case GroupKind::full_orthogonal:
      if (N == 1) r.orbit = 2;
      r.description = N == 1 ? "orbit {x, -x}" : "orbit is the sphere of radius |x|";
      return r;
    case GroupKind::product_of_orthogonals: {
      long finite = 1;
      bool infinite = false;
      int offset = 0;
      for (int b : g.blocks()) {
        if (x.segment(offset, b).norm() > tiny) {
          if (b >= 2) infinite = true;
          else finite *= 2;
        }
        offset += b;
      }
      if (!infinite) r.orbit = finite;
      r.description = infinite ? "orbit contains a sphere of positive dimension" : "orbit of sign flips";
      return r;
    }
    case GroupKind::cyclic_diagonal_Zn:
      r.orbit = g.n();
      r.description = "Z_n acts freely off the origin";
      return r;
    case GroupKind::Zn_cross_ONminus2: {
      const bool z = x.head(2).norm() > tiny;
      const bool y = x.tail(N - 2).norm() > tiny;
      if (y && N > 3) {
        r.description = "O(N-2) sweeps a sphere in y";
        return r;
      }
      r.orbit = (z ? g.n() : 1) * (y ? 2 : 1);
      r.description = y ? "Z_n on z, O(1) on y" : "Z_n rotates z, y = 0 fixed";
      return r;
    }
    case GroupKind::finite_generated: break;
  }
  const auto elements = enumerate_group(g);
  long fix = 0;
  finite_orbit(elements, x, &fix);
  const long distinct = count_distinct(elements, x);
  r.orbit = distinct;
  r.isotropy_order = fix;
  r.group_order = static_cast<long>(elements.size());
  r.orbit_stabilizer_ok = distinct * fix == *r.group_order;
  r.description = "enumerated group of order " + std::to_string(*r.group_order);
  return r;
}

double Obstacle::level(const Eigen::VectorXd& x) const {
  const double r = x.norm();
  if (kind == Kind::ball || x.size() < 2) return r - radius;
  const double theta = std::atan2(x[1], x[0]);
  return r - radius * (1.0 + amplitude * std::cos(petals * theta));
}

bool check_domain_invariance(const GroupSpec& g, const Obstacle& obstacle, unsigned long long seed) {
  if (obstacle.kind == Obstacle::Kind::ball || obstacle.amplitude == 0.0) return true;
  switch (g.kind()) {
    case GroupKind::full_orthogonal:
    case GroupKind::product_of_orthogonals:
      return false;  // generic rotations of the z-plane break the petals
    case GroupKind::cyclic_diagonal_Zn:
    case GroupKind::Zn_cross_ONminus2:
      // The sector must be periodic with period 2 pi / n.
      return obstacle.petals % g.n() == 0;
    case GroupKind::finite_generated: break;
  }
  // Boundary points r = radius (1 + amplitude cos(petals theta)) at random
  // directions, mapped by every generator; images must stay in the closure.
  const int N = g.dimension();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    Eigen::VectorXd d(N);
    for (int i = 0; i < N; ++i) d[i] = gauss(rng);
    d.normalize();
    const Eigen::VectorXd probe = d * (1.0 - obstacle.level(d));  // level is 1 - boundary radius on |d| = 1
    for (const auto& s : g.generators())
      if (obstacle.level(s * probe) > 1e-9) return false;
  }
  return true;
}

}  // namespace nodal

#include "nodal/mesh.hpp"

#include "nodal/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace nodal {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

using Triplet = Eigen::Triplet<double>;

// Exact for polynomials up to degree 19.
template <class F>
double gauss(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

struct RadialElementData {
  std::vector<double> hat_weight;     // int phi_i s^{N-1} ds
  std::vector<double> hat_weight_m2;  // int phi_i s^{N-3} ds
  std::vector<double> stiffness;      // int_e s^{N-1} ds / h_e^2
};

RadialElementData radial_elements(const std::vector<double>& x, int N) {
  const std::size_t n = x.size();
  RadialElementData d;
  d.hat_weight.assign(n, 0.0);
  d.hat_weight_m2.assign(n, 0.0);
  d.stiffness.assign(n - 1, 0.0);
  for (std::size_t e = 0; e + 1 < n; ++e) {
    const double x0 = x[e];
    const double x1 = x[e + 1];
    const double h = x1 - x0;
    auto left = [&](double s) { return (x1 - s) / h * std::pow(s, N - 1); };
    auto right = [&](double s) { return (s - x0) / h * std::pow(s, N - 1); };
    d.hat_weight[e] += gauss(left, x0, x1);
    d.hat_weight[e + 1] += gauss(right, x0, x1);
    auto left3 = [&](double s) { return (x1 - s) / h * std::pow(s, N - 3); };
    auto right3 = [&](double s) { return (s - x0) / h * std::pow(s, N - 3); };
    d.hat_weight_m2[e] += gauss(left3, x0, x1);
    d.hat_weight_m2[e + 1] += gauss(right3, x0, x1);
    d.stiffness[e] = gauss([&](double s) { return std::pow(s, N - 1); }, x0, x1) / (h * h);
  }
  return d;
}

void add_edge(std::vector<Triplet>& t, int a, int b, double c) {
  t.emplace_back(a, a, c);
  t.emplace_back(b, b, c);
  t.emplace_back(a, b, -c);
  t.emplace_back(b, a, -c);
}

}  // namespace

std::string to_string(MeshKind kind) {
  switch (kind) {
    case MeshKind::radial_annulus: return "radial_annulus";
    case MeshKind::radial_exterior_truncated: return "radial_exterior_truncated";
    case MeshKind::radial_ball: return "radial_ball";
    case MeshKind::sector3d: return "sector3d";
  }
  return "unknown";
}

std::vector<double> radial_nodes(double a, double b, int n_nodes, Grading grading) {
  if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
    throw GeometryError("degenerate radii: need a < b");
  if (n_nodes < 2) throw GeometryError("need at least two radial nodes");
  const int cells = n_nodes - 1;
  std::vector<double> x(static_cast<std::size_t>(n_nodes));
  double ratio = 1.0;
  if (grading.type == Grading::Type::geometric) {
    ratio = grading.ratio > 0.0 ? grading.ratio : std::min(1.05, std::pow(50.0, 1.0 / cells));
  }
  if (ratio == 1.0) {
    for (int i = 0; i < n_nodes; ++i) x[static_cast<std::size_t>(i)] = a + (b - a) * i / cells;
  } else {
    const double h0 = (b - a) * (ratio - 1.0) / (std::pow(ratio, cells) - 1.0);
    double pos = a;
    double h = h0;
    for (int i = 0; i < n_nodes; ++i) {
      x[static_cast<std::size_t>(i)] = pos;
      pos += h;
      h *= ratio;
    }
  }
  x.front() = a;
  x.back() = b;
  return x;
}

double WeightedMesh::exact_volume() const {
  const double a = inner_radius();
  const double b = outer_radius();
  return unit_sphere_area(N_) * (std::pow(b, N_) - std::pow(a, N_)) / N_;
}

WeightedMesh build_radial_from_nodes(MeshKind kind, int N, std::vector<double> nodes,
                                     Grading grading) {
  if (kind == MeshKind::sector3d) throw GeometryError("use build_sector3d for sector meshes");
  if (N < 3) throw DomainError("dimension must be at least 3");
  if (nodes.size() < 3) throw GeometryError("radial mesh needs at least three nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw GeometryError("radial nodes must increase");
  if (kind == MeshKind::radial_ball) {
    if (nodes.front() != 0.0) throw GeometryError("ball mesh must start at r = 0");
  } else if (!(nodes.front() > 0.0)) {
    throw GeometryError("annulus/exterior mesh needs a positive inner radius");
  }

  WeightedMesh m;
  m.kind_ = kind;
  m.N_ = N;
  m.id_ = next_mesh_id++;
  m.grading_ = grading;
  m.radii_ = std::move(nodes);
  const int n = static_cast<int>(m.radii_.size());
  const double area = unit_sphere_area(N);
  const auto el = radial_elements(m.radii_, N);

  m.weights_.resize(n);
  m.points_.resize(static_cast<std::size_t>(n));
  m.dirichlet_.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    m.weights_[i] = area * el.hat_weight[static_cast<std::size_t>(i)];
    auto& p = m.points_[static_cast<std::size_t>(i)];
    p.radius = m.radii_[static_cast<std::size_t>(i)];
    p.rho = p.radius;
  }
  m.dirichlet_.back() = 1;
  if (kind != MeshKind::radial_ball) m.dirichlet_.front() = 1;

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(4 * n));
  for (int e = 0; e + 1 < n; ++e) add_edge(t, e, e + 1, area * el.stiffness[static_cast<std::size_t>(e)]);
  m.stiffness_.resize(n, n);
  m.stiffness_.setFromTriplets(t.begin(), t.end());
  return m;
}

WeightedMesh build_radial(MeshKind kind, int N, double a, double b, int n_nodes, Grading grading) {
  if (n_nodes < 16) throw GeometryError("radial mesh needs at least 16 nodes");
  if (kind == MeshKind::radial_ball && a != 0.0) throw GeometryError("ball mesh needs a = 0");
  if (!(a < b)) throw GeometryError("degenerate radii: need a < b");
  return build_radial_from_nodes(kind, N, radial_nodes(a, b, n_nodes, grading), grading);
}

WeightedMesh build_sector3d_from_nodes(int N, int n_fold, std::vector<double> s_nodes, int n_phi,
                                       int n_theta, Grading grading) {
  if (N < 4) throw DomainError("sector mesh needs N >= 4 (the O(N-2) factor degenerates for N = 3)");
  if (n_fold < 1) throw GeometryError("n_fold must be positive");
  if (s_nodes.size() < 8 || n_phi < 8 || n_theta < 8)
    throw GeometryError("sector resolution too coarse: need at least 8 per axis");
  for (std::size_t i = 1; i < s_nodes.size(); ++i)
    if (!(s_nodes[i] > s_nodes[i - 1])) throw GeometryError("radial nodes must increase");
  if (!(s_nodes.front() > 0.0)) throw GeometryError("sector mesh needs a positive obstacle radius");

  WeightedMesh m;
  m.kind_ = MeshKind::sector3d;
  m.N_ = N;
  m.id_ = next_mesh_id++;
  m.grading_ = grading;
  m.radii_ = std::move(s_nodes);
  m.n_fold_ = n_fold;
  m.n_phi_ = n_phi;
  m.n_theta_ = n_theta;
  const int ns = static_cast<int>(m.radii_.size());
  const int n = ns * n_phi * n_theta;
  const auto el = radial_elements(m.radii_, N);

  const double dphi = 0.5 * std::numbers::pi / n_phi;
  const double dtheta = 2.0 * std::numbers::pi / n_fold / n_theta;
  const double factor = n_fold * unit_sphere_area(N - 2);
  const int e3 = N - 3;
  auto sin_pow = [e3](double phi) { return std::pow(std::sin(phi), e3); };

  std::vector<double> phi_c(static_cast<std::size_t>(n_phi));
  std::vector<double> phi_weight(static_cast<std::size_t>(n_phi));
  for (int j = 0; j < n_phi; ++j) {
    const double lo = j * dphi;
    const double hi = (j + 1) * dphi;
    phi_c[static_cast<std::size_t>(j)] = 0.5 * (lo + hi);
    phi_weight[static_cast<std::size_t>(j)] =
        (std::pow(std::sin(hi), N - 2) - std::pow(std::sin(lo), N - 2)) / (N - 2);
  }

  m.weights_.resize(n);
  m.points_.resize(static_cast<std::size_t>(n));
  m.dirichlet_.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < n_phi; ++j)
      for (int k = 0; k < n_theta; ++k) {
        const int idx = m.node_index(i, j, k);
        const double s = m.radii_[static_cast<std::size_t>(i)];
        const double phi = phi_c[static_cast<std::size_t>(j)];
        m.weights_[idx] = factor * el.hat_weight[static_cast<std::size_t>(i)] *
                          phi_weight[static_cast<std::size_t>(j)] * dtheta;
        auto& p = m.points_[static_cast<std::size_t>(idx)];
        p.radius = s;
        p.rho = s * std::cos(phi);
        p.y_norm = s * std::sin(phi);
        p.theta = (k + 0.5) * dtheta;
        if (i == 0 || i == ns - 1) m.dirichlet_[static_cast<std::size_t>(idx)] = 1;
      }

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(12 * n));
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < n_phi; ++j)
      for (int k = 0; k < n_theta; ++k) {
        const int idx = m.node_index(i, j, k);
        if (i + 1 < ns) {
          const double c = factor * el.stiffness[static_cast<std::size_t>(i)] *
                           phi_weight[static_cast<std::size_t>(j)] * dtheta;
          add_edge(t, idx, m.node_index(i + 1, j, k), c);
        }
        const double mi = el.hat_weight_m2[static_cast<std::size_t>(i)];
        if (j + 1 < n_phi) {
          const double face = (j + 1) * dphi;
          const double c = factor * mi * std::cos(face) * sin_pow(face) * dtheta / dphi;
          add_edge(t, idx, m.node_index(i, j + 1, k), c);
        }
        const double phi = phi_c[static_cast<std::size_t>(j)];
        const double c = factor * mi * sin_pow(phi) / std::cos(phi) * dphi / dtheta;
        add_edge(t, idx, m.node_index(i, j, (k + 1) % n_theta), c);
      }
  m.stiffness_.resize(n, n);
  m.stiffness_.setFromTriplets(t.begin(), t.end());
  return m;
}

WeightedMesh build_sector3d(int N, int n_fold, double s_inner, double s_outer,
                            SectorResolution resolution, Grading grading) {
  if (!(s_inner > 0.0) || !(s_outer > s_inner)) throw GeometryError("degenerate sector radii");
  if (resolution.n_s < 8) throw GeometryError("sector resolution too coarse: need at least 8 per axis");
  return build_sector3d_from_nodes(N, n_fold, radial_nodes(s_inner, s_outer, resolution.n_s, grading),
                                   resolution.n_phi, resolution.n_theta, grading);
}

double integrate(const WeightedMesh& mesh, const Vector& values) {
  if (values.size() != mesh.node_count()) throw DomainError("field size does not match mesh");
  if (values.hasNaN()) throw DomainError("integrand contains NaN");
  return mesh.weights().dot(values);
}

Vector interpolate_radial(const WeightedMesh& mesh, const std::vector<double>& radii,
                          const Vector& values) {
  if (radii.size() != static_cast<std::size_t>(values.size()) || radii.size() < 2)
    throw DomainError("profile radii and values must match");
  Vector out = Vector::Zero(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.is_dirichlet(i)) continue;
    const double r = mesh.points()[static_cast<std::size_t>(i)].radius;
    if (r < radii.front() || r > radii.back()) continue;
    auto it = std::upper_bound(radii.begin(), radii.end(), r);
    if (it == radii.end()) {
      out[i] = values[values.size() - 1];
      continue;
    }
    const auto k = static_cast<Eigen::Index>(it - radii.begin());
    const double t = (r - radii[static_cast<std::size_t>(k - 1)]) /
                     (radii[static_cast<std::size_t>(k)] - radii[static_cast<std::size_t>(k - 1)]);
    out[i] = (1.0 - t) * values[k - 1] + t * values[k];
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

SparseMatrix free_block(const SparseMatrix& a, const std::vector<int>& free_index) {
  std::vector<int> map(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t k = 0; k < free_index.size(); ++k) map[static_cast<std::size_t>(free_index[k])] = static_cast<int>(k);
  std::vector<Triplet> t;
  for (int col = 0; col < a.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const int r = map[static_cast<std::size_t>(it.row())];
      const int c = map[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
    }
  const auto n = static_cast<Eigen::Index>(free_index.size());
  SparseMatrix b(n, n);
  b.setFromTriplets(t.begin(), t.end());
  return b;
}

int negative_pivots(const Eigen::SimplicialLDLT<SparseMatrix>& f) {
  int count = 0;
  const Vector d = f.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d[i] <= 0.0) ++count;
  return count;
}

SparseMatrix diagonal(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  return m;
}

// Smallest eigenvalue of A x = lambda M x (M diagonal, positive) by inertia bisection.
double smallest_by_bisection(const SparseMatrix& a, const Vector& m) {
  double lo = std::numeric_limits<double>::infinity();
  for (int col = 0; col < a.outerSize(); ++col) {
    double diag = 0.0;
    double off = 0.0;
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      if (it.row() == col)
        diag += it.value();
      else
        off += std::abs(it.value());
    }
    lo = std::min(lo, (diag - off) / m[col]);
  }
  lo -= 1e-6 * std::abs(lo) + 1e-12;
  double hi = 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> f;
  f.analyzePattern(a);
  const SparseMatrix md = diagonal(m);
  for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    f.factorize(a - mid * md);
    (negative_pivots(f) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Vector VForm::solve(const Vector& rhs, double tolerance, LinearSolveInfo* info) const {
  // PCG on the free block, preconditioned by the exact factorisation.
  const auto nf = static_cast<Eigen::Index>(free_.size());
  Vector b(nf);
  for (Eigen::Index k = 0; k < nf; ++k) b[k] = rhs[free_[static_cast<std::size_t>(k)]];
  const SparseMatrix& a = matrix_;
  auto apply = [&](const Vector& xf) {
    Vector full = Vector::Zero(a.rows());
    for (Eigen::Index k = 0; k < nf; ++k) full[free_[static_cast<std::size_t>(k)]] = xf[k];
    const Vector y = a * full;
    Vector out(nf);
    for (Eigen::Index k = 0; k < nf; ++k) out[k] = y[free_[static_cast<std::size_t>(k)]];
    return out;
  };
  const double bnorm = b.norm();
  Vector x = Vector::Zero(nf);
  std::vector<double> history;
  int iterations = 0;
  double rel = 0.0;
  if (bnorm > 0.0) {
    Vector r = b;
    Vector z = factor_->solve(r);
    Vector p = z;
    double rz = r.dot(z);
    rel = 1.0;
    for (iterations = 0; iterations < 500; ++iterations) {
      const Vector ap = apply(p);
      const double alpha = rz / p.dot(ap);
      x += alpha * p;
      r -= alpha * ap;
      rel = r.norm() / bnorm;
      history.push_back(rel);
      if (rel <= tolerance) {
        ++iterations;
        break;
      }
      z = factor_->solve(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    if (!(rel <= tolerance)) throw SolverError("conjugate gradient did not converge", history);
  }
  if (info) *info = {iterations, rel};
  Vector out = Vector::Zero(rhs.size());
  for (Eigen::Index k = 0; k < nf; ++k) out[free_[static_cast<std::size_t>(k)]] = x[k];
  return out;
}

VForm assemble_vform(const WeightedMesh& mesh, const Potential& pot) {
  const int n = mesh.node_count();
  VForm form;
  form.mesh_id_ = mesh.id();
  form.potential_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = pot(mesh.points()[static_cast<std::size_t>(i)]);
    if (!std::isfinite(v)) throw DomainError("potential is not finite on the mesh");
    form.potential_[i] = v;
  }

  for (int i = 0; i < n; ++i)
    if (!mesh.is_dirichlet(i)) form.free_.push_back(i);

  std::vector<Triplet> t;
  const SparseMatrix& k = mesh.stiffness();
  for (int col = 0; col < k.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
      const auto r = static_cast<int>(it.row());
      if (mesh.is_dirichlet(r) || mesh.is_dirichlet(col)) continue;
      t.emplace_back(r, col, it.value());
    }
  for (int i = 0; i < n; ++i) {
    if (mesh.is_dirichlet(i))
      t.emplace_back(i, i, 1.0);
    else
      t.emplace_back(i, i, mesh.weights()[i] * form.potential_[i]);
  }
  form.matrix_.resize(n, n);
  form.matrix_.setFromTriplets(t.begin(), t.end());

  const SparseMatrix afree = free_block(form.matrix_, form.free_);
  Vector wfree(static_cast<Eigen::Index>(form.free_.size()));
  for (std::size_t q = 0; q < form.free_.size(); ++q)
    wfree[static_cast<Eigen::Index>(q)] = mesh.weights()[form.free_[q]];

  form.factor_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(afree);
  if (form.factor_->info() != Eigen::Success || negative_pivots(*form.factor_) > 0) {
    const double ritz = smallest_by_bisection(afree, wfree);
    std::ostringstream msg;
    msg << "discrete V-form is not positive definite: smallest Ritz value " << ritz;
    throw DefinitenessError(msg.str(), ritz);
  }

  // Inverse iteration for the smallest Ritz value of (A, W).
  Vector x = Vector::Ones(afree.rows());
  double lambda = 0.0;
  for (int it = 0; it < 300; ++it) {
    Vector y = form.factor_->solve(wfree.asDiagonal() * x);
    y /= std::sqrt(y.dot(wfree.asDiagonal() * y));
    const double next = y.dot(afree * y);
    x = y;
    if (it > 3 && std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  form.smallest_ritz_ = lambda;
  return form;
}

NormEquivalence norm_equivalence(const WeightedMesh& mesh, const VForm& form) {
  std::vector<int> free_index;
  for (int i = 0; i < mesh.node_count(); ++i)
    if (!mesh.is_dirichlet(i)) free_index.push_back(i);
  const SparseMatrix a = free_block(form.matrix(), free_index);
  const SparseMatrix k = free_block(mesh.stiffness(), free_index);
  Eigen::SimplicialLDLT<SparseMatrix> fa(a);
  Eigen::SimplicialLDLT<SparseMatrix> fk(k);
  // Power iterations for the largest eigenvalues of K^{-1} A and A^{-1} K.
  auto dominant = [](const auto& solver, const SparseMatrix& m, const SparseMatrix& gram) {
    Vector x = Vector::Ones(m.rows());
    double value = 0.0;
    for (int it = 0; it < 2000; ++it) {
      Vector y = solver.solve(m * x);
      y /= std::sqrt(y.dot(gram * y));
      const double next = y.dot(m * y);
      x = y;
      if (it > 3 && std::abs(next - value) <= 1e-13 * std::abs(next)) return next;
      value = next;
    }
    return value;
  };
  const double upper = dominant(fk, a, k);
  const double inv_lower = dominant(fa, k, a);
  return {1.0 / inv_lower, upper};
}

}  // namespace nodal

#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace oracle {

double primitive_by_quadrature(const nodal::Nonlinearity& nl, double s) {
  if (s == 0.0) return 0.0;
  const double a = std::abs(s);
  auto f = [&](double t) { return nl.value(t); };
  // Geometric panels keep the integrand well resolved over many decades.
  double total = 0.0;
  double lo = 0.0;
  double hi = std::min(a, 1e-3);
  while (lo < a) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 10, 1e-15);
    lo = hi;
    hi = std::min(a, 2.0 * hi);
  }
  return total;
}

namespace {

using State = std::array<double, 3>;  // u, u', accumulated energy density

struct Result {
  double end_value;
  double energy;
  double min_interior;
  double peak;
};

Result integrate(const nodal::Nonlinearity& nl, int N, double a, double b, double slope,
                 std::vector<double>* radii = nullptr, std::vector<double>* values = nullptr) {
  namespace odeint = boost::numeric::odeint;
  auto rhs = [&](const State& x, State& dx, double r) {
    dx[0] = x[1];
    dx[1] = -(N - 1.0) / r * x[1] - nl.value(x[0]);
    dx[2] = (0.5 * x[1] * x[1] - nl.primitive(x[0])) * std::pow(r, N - 1);
  };
  State x{0.0, slope, 0.0};
  Result res{0.0, 0.0, std::numeric_limits<double>::infinity(), 0.0};
  auto observe = [&](const State& s, double r) {
    if (r > a && r < b) res.min_interior = std::min(res.min_interior, s[0]);
    res.peak = std::max(res.peak, s[0]);
    if (radii) {
      radii->push_back(r);
      values->push_back(s[0]);
    }
  };
  auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_const(stepper, rhs, x, a, b, (b - a) / 4000.0, observe);
  res.end_value = x[0];
  res.energy = x[2] * nodal::unit_sphere_area(N);
  return res;
}

}  // namespace

ShootingSolution shoot_annulus(const nodal::Nonlinearity& nl, int N, double a, double b) {
  // Scan slopes upward until u(b) first changes sign; the first root is the
  // positive solution.
  double lo = 1e-3;
  double v_lo = integrate(nl, N, a, b, lo).end_value;
  if (!(v_lo > 0.0)) throw std::runtime_error("shooting: small slope does not stay positive");
  double hi = lo;
  double v_hi = v_lo;
  while (v_hi > 0.0) {
    lo = hi;
    v_lo = v_hi;
    hi *= 1.05;
    if (hi > 1e8) throw std::runtime_error("shooting: no sign change of u(b)");
    v_hi = integrate(nl, N, a, b, hi).end_value;
  }
  auto g = [&](double s) { return integrate(nl, N, a, b, s).end_value; };
  std::uintmax_t iters = 200;
  auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-15 * std::abs(x); };
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, v_lo, v_hi, tol, iters);
  ShootingSolution sol;
  sol.slope = 0.5 * (r.first + r.second);
  const Result fin = integrate(nl, N, a, b, sol.slope, &sol.radii, &sol.values);
  if (!(fin.min_interior > 0.0)) throw std::runtime_error("shooting: solution is not positive");
  sol.energy = fin.energy;
  sol.peak = fin.peak;
  return sol;
}

}  // namespace oracle

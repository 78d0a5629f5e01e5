#include "nodal/problem_model.hpp"

#include "nodal/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <cmath>
#include <numbers>

namespace nodal {

double critical_exponent(int N) {
  if (N < 3) throw DomainError("critical exponent undefined for N < 3");
  return 2.0 * N / (N - 2.0);
}

double unit_sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

namespace {

// int_0^z v^{c-1} / (1 + v) dv for c > 0 and 0 <= z <= 1, via the Pfaff
// transform of 2F1(1, c; c+1; -z); the resulting series has ratio <= 1/2.
template <class T>
T log_kernel_integral(T c, T z) {
  using std::pow;
  if (z <= 0) return 0;
  const T w = z / (1 + z);
  T term = 1;
  T sum = 1;
  for (int k = 0; k < 200; ++k) {
    term *= (k + T(1)) / (c + 1 + k) * w;
    sum += term;
    if (term < std::numeric_limits<T>::epsilon() / 16 * sum) break;
  }
  return pow(z, c) / c / (1 + z) * sum;
}

// F(s) for s >= 0 of the smooth double power, after the substitution u = t^{q-p}:
// F = (1/r) int_0^x u^{a-1}/(1+u) du with r = q-p, a = q/r, x = s^r.
template <class T>
T double_power_primitive(T s, T p, T q) {
  using std::abs, std::exp, std::expm1, std::floor, std::log;
  if (s == 0) return 0;
  const T r = q - p;
  const T a = q / r;
  const T log_x = r * log(s);
  if (log_x <= 0) return log_kernel_integral<T>(a, exp(log_x)) / r;

  // Split at u = 1 and map u -> 1/u on [1, x]; peel off enough terms of the
  // geometric series of 1/(1+v) that the remainder exponent is positive.
  const T b = 1 - a;
  const int terms = static_cast<int>(floor(-b)) + 1;
  const T log_y = -log_x;
  const T y = exp(log_y);
  T total = log_kernel_integral<T>(a, 1);
  T sign = 1;
  for (int j = 0; j < terms; ++j) {
    const T e = b + j;
    const T piece = abs(e) < T(1e-14) ? -log_y : -expm1(e * log_y) / e;
    total += sign * piece;
    sign = -sign;
  }
  const T c = b + terms;
  total += sign * (log_kernel_integral<T>(c, 1) - log_kernel_integral<T>(c, y));
  return total / r;
}

template <class T>
T double_power_value(T a, T p, T q) {
  using std::pow;
  const T x = pow(a, q - p);
  return x <= 1 ? pow(a, q - 1) / (1 + x) : pow(a, p - 1) / (1 + 1 / x);
}

}  // namespace

Nonlinearity::Nonlinearity(NonlinearityKind kind, double p, double q, double amplitude,
                           double theta)
    : kind_(kind), p_(p), q_(q), amplitude_(amplitude), theta_(theta) {
  if (!(p > 2.0) || !std::isfinite(p)) throw ConfigError("nonlinearity: p must exceed 2");
  if (kind == NonlinearityKind::double_power_smooth && !(q > p))
    throw ConfigError("nonlinearity: q must exceed p");
  if (!(amplitude > 0.0)) throw ConfigError("nonlinearity: A1 must be positive");
  if (!(theta > 2.0)) throw ConfigError("nonlinearity: theta must exceed 2");
}

Nonlinearity Nonlinearity::double_power(double p, double q, double amplitude, double theta) {
  return Nonlinearity(NonlinearityKind::double_power_smooth, p, q, amplitude, theta);
}

Nonlinearity Nonlinearity::pure_power(double p, double amplitude, double theta) {
  return Nonlinearity(NonlinearityKind::pure_power_test, p, p, amplitude, theta);
}

double Nonlinearity::primitive(double s) const {
  const double a = std::abs(s);
  if (kind_ == NonlinearityKind::pure_power_test) return std::pow(a, p_) / p_;
  return double_power_primitive<double>(a, p_, q_);
}

long double Nonlinearity::primitive_extended(long double s) const {
  const long double a = std::abs(s);
  const long double p = p_;
  if (kind_ == NonlinearityKind::pure_power_test) return std::pow(a, p) / p;
  return double_power_primitive<long double>(a, p, q_);
}

long double Nonlinearity::value_extended(long double s) const {
  const long double a = std::abs(s);
  if (a == 0) return 0;
  const long double p = p_;
  const long double v = kind_ == NonlinearityKind::pure_power_test ? std::pow(a, p - 1)
                                                                    : double_power_value<long double>(a, p, q_);
  return s < 0 ? -v : v;
}

double Nonlinearity::value(double s) const {
  const double a = std::abs(s);
  if (a == 0.0) return 0.0;
  double v;
  if (kind_ == NonlinearityKind::pure_power_test) {
    v = std::pow(a, p_ - 1.0);
  } else {
    v = double_power_value<double>(a, p_, q_);
  }
  return s < 0.0 ? -v : v;
}

double Nonlinearity::derivative(double s) const {
  const double a = std::abs(s);
  if (a == 0.0) return 0.0;
  if (kind_ == NonlinearityKind::pure_power_test) return (p_ - 1.0) * std::pow(a, p_ - 2.0);
  const double x = std::pow(a, q_ - p_);
  if (x <= 1.0) {
    const double d = 1.0 + x;
    return std::pow(a, q_ - 2.0) * ((q_ - 1.0) + (p_ - 1.0) * x) / (d * d);
  }
  const double xi = 1.0 / x;
  const double d = 1.0 + xi;
  return std::pow(a, p_ - 2.0) * ((q_ - 1.0) * xi + (p_ - 1.0)) / (d * d);
}

double Nonlinearity::eval(double s, int order) const {
  if (!std::isfinite(s)) throw DomainError("nonlinearity evaluated at a non-finite point");
  switch (order) {
    case -1: return primitive(s);
    case 0: return value(s);
    case 1: return derivative(s);
    default: throw DomainError("order must be -1, 0 or 1");
  }
}

// ---------------------------------------------------------------------------

ReducedPoint reduce(const Eigen::VectorXd& x) {
  ReducedPoint p;
  p.radius = x.norm();
  if (x.size() >= 2) {
    p.rho = std::hypot(x[0], x[1]);
    p.theta = std::atan2(x[1], x[0]);
    if (p.theta < 0.0) p.theta += 2.0 * std::numbers::pi;
    p.y_norm = x.size() > 2 ? x.tail(x.size() - 2).norm() : 0.0;
  }
  return p;
}

Potential Potential::zero() { return Potential{}; }

Potential Potential::gaussian(double depth, double width) {
  if (!(width > 0.0) || !std::isfinite(depth)) throw ConfigError("gaussian potential: bad parameters");
  Potential v;
  v.kind_ = PotentialKind::radial_gaussian;
  v.depth_ = depth;
  v.width_ = width;
  return v;
}

Potential Potential::table(std::vector<double> radii, std::vector<double> values,
                           double tail_exponent) {
  if (radii.size() < 2 || radii.size() != values.size())
    throw ConfigError("radial table needs matching radii/values with at least two entries");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ConfigError("radial table radii must increase");
  if (!(radii.front() >= 0.0)) throw ConfigError("radial table radii must be nonnegative");
  Potential v;
  v.kind_ = PotentialKind::radial_table;
  v.radii_ = std::move(radii);
  v.values_ = std::move(values);
  v.tail_exponent_ = tail_exponent;
  return v;
}

Potential Potential::grid(PotentialGrid grid) {
  if (grid.n_rho < 2 || grid.n_theta < 1 || grid.n_y < 2 || !(grid.rho_max > 0.0) ||
      !(grid.y_max > 0.0) || grid.period_fold < 1 ||
      grid.values.size() != static_cast<std::size_t>(grid.n_rho * grid.n_theta * grid.n_y))
    throw ConfigError("general grid potential: inconsistent dimensions");
  Potential v;
  v.kind_ = PotentialKind::general_grid;
  v.grid_ = std::move(grid);
  return v;
}

double Potential::radial(double r) const {
  switch (kind_) {
    case PotentialKind::zero: return 0.0;
    case PotentialKind::radial_gaussian: return -depth_ * std::exp(-(r * r) / (width_ * width_));
    case PotentialKind::radial_table: {
      if (r <= radii_.front()) return values_.front();
      if (r >= radii_.back())
        return values_.back() * std::pow(r / radii_.back(), -tail_exponent_);
      const auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
      const std::size_t i = static_cast<std::size_t>(it - radii_.begin());
      const double t = (r - radii_[i - 1]) / (radii_[i] - radii_[i - 1]);
      return (1.0 - t) * values_[i - 1] + t * values_[i];
    }
    case PotentialKind::general_grid:
      throw DomainError("general grid potential is not radial");
  }
  return 0.0;
}

double Potential::operator()(const ReducedPoint& x) const {
  if (kind_ != PotentialKind::general_grid) return radial(x.radius);
  const auto& g = grid_;
  if (x.rho > g.rho_max || x.y_norm > g.y_max) return 0.0;
  const double period = 2.0 * std::numbers::pi / g.period_fold;
  const double fr = x.rho / g.rho_max * (g.n_rho - 1);
  const double fy = x.y_norm / g.y_max * (g.n_y - 1);
  double th = std::fmod(x.theta, period);
  if (th < 0.0) th += period;
  const double ft = th / period * g.n_theta - 0.5;
  const int ir = std::min(static_cast<int>(fr), g.n_rho - 2);
  const int iy = std::min(static_cast<int>(fy), g.n_y - 2);
  const int it0 = static_cast<int>(std::floor(ft));
  const double ar = fr - ir;
  const double ay = fy - iy;
  const double at = ft - it0;
  auto at_index = [&](int i, int t, int j) {
    const int tt = ((t % g.n_theta) + g.n_theta) % g.n_theta;
    return g.values[static_cast<std::size_t>((i * g.n_theta + tt) * g.n_y + j)];
  };
  double v = 0.0;
  for (int di = 0; di < 2; ++di)
    for (int dt = 0; dt < 2; ++dt)
      for (int dj = 0; dj < 2; ++dj) {
        const double w = (di ? ar : 1.0 - ar) * (dt ? at : 1.0 - at) * (dj ? ay : 1.0 - ay);
        v += w * at_index(ir + di, it0 + dt, iy + dj);
      }
  return v;
}

// ---------------------------------------------------------------------------

std::vector<double> log_sample_grid(double smin, double smax, int per_sign) {
  std::vector<double> grid;
  grid.reserve(2 * per_sign);
  const double l0 = std::log(smin);
  const double l1 = std::log(smax);
  for (int i = 0; i < per_sign; ++i) {
    const double s = std::exp(l0 + (l1 - l0) * i / (per_sign - 1));
    grid.push_back(s);
    grid.push_back(-s);
  }
  return grid;
}

CheckResult check_growth_f1(const Nonlinearity& nl, int N, const std::vector<double>& grid) {
  CheckResult res;
  const double crit = critical_exponent(N);
  const double p = nl.p();
  const double q = nl.q();
  if (!(2.0 < p && p < crit && crit < q)) {
    res.config_error = true;
    res.margin = -std::numeric_limits<double>::infinity();
    res.message = "exponents must satisfy 2 < p < 2* < q";
    return res;
  }
  res.margin = std::numeric_limits<double>::infinity();
  for (double s : grid) {
    if (s == 0.0) continue;
    const double a = std::abs(s);
    const double base = a >= 1.0 ? p : q;
    for (int m = -1; m <= 1; ++m) {
      const double bound = nl.amplitude() * std::pow(a, base - (m + 1));
      const double value = std::abs(nl.eval(s, m));
      const double margin = (bound - value) / bound;
      if (margin < res.margin) {
        res.margin = margin;
        res.worst_sample = s;
      }
    }
  }
  res.ok = res.margin >= 0.0;
  if (!res.ok) res.message = "growth envelope violated";
  return res;
}

double minimal_growth_amplitude(const Nonlinearity& nl, const std::vector<double>& grid) {
  double worst = 0.0;
  for (double s : grid) {
    if (s == 0.0) continue;
    const double a = std::abs(s);
    const double base = a >= 1.0 ? nl.p() : nl.q();
    for (int m = -1; m <= 1; ++m)
      worst = std::max(worst, std::abs(nl.eval(s, m)) / std::pow(a, base - (m + 1)));
  }
  return worst;
}

CheckResult check_ar_f2(const Nonlinearity& nl, const std::vector<double>& grid) {
  // With theta = p the two sides of theta F <= f s agree to double precision
  // at large |s|; that comparison runs in extended precision.
  constexpr double rounding_slack = 8.0 * std::numeric_limits<long double>::epsilon();
  CheckResult res;
  res.margin = std::numeric_limits<double>::infinity();
  res.ok = true;
  for (double s : grid) {
    if (s == 0.0) continue;
    const long double F = nl.primitive_extended(s);
    const long double fs = nl.value_extended(s) * s;
    const double dfs2 = nl.derivative(s) * s * s;
    const double m_pos = F > 0.0 ? 1.0 : -1.0;
    const double m_ar = fs > 0 ? static_cast<double>((fs - nl.theta() * F) / fs) : -1.0;
    const double m_conv = dfs2 > 0.0 ? static_cast<double>((dfs2 - fs) / dfs2) : -1.0;
    const double m = std::min({m_pos, m_ar, m_conv});
    if (m < res.margin) {
      res.margin = m;
      res.worst_sample = s;
    }
    if (!(F > 0.0) || !(fs > 0.0) || m_ar < -rounding_slack || !(m_conv > 0.0)) res.ok = false;
  }
  if (!res.ok) res.message = "Ambrosetti-Rabinowitz sandwich violated";
  return res;
}

CheckResult check_odd_f3(const Nonlinearity& nl, const std::vector<double>& grid) {
  // margin = 1 - (worst relative asymmetry) / 1e-12
  constexpr double tolerance = 1e-12;
  CheckResult res;
  double worst = 0.0;
  for (double s : grid) {
    const double a = nl.value(s);
    const double b = nl.value(-s);
    const double scale = std::max(std::abs(a), std::numeric_limits<double>::min());
    const double err = std::abs(a + b) / scale;
    if (err > worst || res.worst_sample == 0.0) {
      worst = std::max(worst, err);
      res.worst_sample = s;
    }
  }
  res.margin = 1.0 - worst / tolerance;
  res.ok = worst <= tolerance;
  if (!res.ok) res.message = "f is not odd";
  return res;
}

// ---------------------------------------------------------------------------

namespace {

double composite_gauss(const std::function<double(double)>& g, double a, double b, int panels) {
  double sum = 0.0;
  const double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i)
    sum += boost::math::quadrature::gauss<double, 20>::integrate(g, a + i * h, a + (i + 1) * h);
  return sum;
}

// int_{R^N} h(r) dx over doubling shells; throws when the shell contributions
// refuse to decay.
double radial_integral(const std::function<double(double)>& h, int N, double scale, int panels,
                       const std::string& label) {
  const double area = unit_sphere_area(N);
  auto g = [&](double r) { return h(r) * area * std::pow(r, N - 1); };
  double total = composite_gauss(g, 0.0, scale, panels);
  std::vector<double> partial{total};
  double lo = scale;
  int growing = 0;
  double last_increment = total;
  for (int k = 0; k < 80; ++k) {
    const double inc = composite_gauss(g, lo, 2.0 * lo, panels);
    total += inc;
    partial.push_back(total);
    lo *= 2.0;
    if (std::abs(inc) <= 1e-15 * std::abs(total) || (total == 0.0 && inc == 0.0)) return total;
    if (k >= 3 && std::abs(inc) >= 0.5 * std::abs(last_increment)) {
      if (++growing >= 6)
        throw DivergenceError("integral of " + label + " does not converge at infinity", partial);
    } else {
      growing = 0;
    }
    last_increment = inc;
  }
  throw DivergenceError("integral of " + label + " did not settle within the shell budget",
                        partial);
}

double grid_integral(const Potential& pot, int N, const std::function<double(double)>& h,
                     int refine) {
  const auto& g = pot.grid_data();
  const int nr = (g.n_rho - 1) * refine;
  const int nt = g.n_theta * refine;
  const int ny = (g.n_y - 1) * refine;
  const double dr = g.rho_max / nr;
  const double dy = g.y_max / ny;
  const double period = 2.0 * std::numbers::pi / g.period_fold;
  const double dt = period / nt;
  const double ysphere = N > 3 ? unit_sphere_area(N - 2) : 2.0;
  double sum = 0.0;
  for (int i = 0; i < nr; ++i)
    for (int t = 0; t < nt; ++t)
      for (int j = 0; j < ny; ++j) {
        ReducedPoint x;
        x.rho = (i + 0.5) * dr;
        x.theta = (t + 0.5) * dt;
        x.y_norm = (j + 0.5) * dy;
        x.radius = std::hypot(x.rho, x.y_norm);
        sum += h(pot(x)) * x.rho * std::pow(x.y_norm, N - 3) * dr * dt * dy;
      }
  return sum * ysphere * g.period_fold;
}

}  // namespace

V1Result check_v1(const Potential& pot, int N, double r_exponent) {
  if (!(r_exponent > 0.5 * N)) throw ConfigError("V1 check needs r > N/2");
  V1Result res;
  const double half = 0.5 * N;
  const double S = sobolev_constant(N);
  res.sobolev_power = std::pow(S, half);

  auto vminus = [half](double v) { return std::pow(std::max(0.0, -v), half); };
  auto vhalf = [half](double v) { return std::pow(std::abs(v), half); };
  auto vr = [r_exponent](double v) { return std::pow(std::abs(v), r_exponent); };

  if (pot.kind() == PotentialKind::zero) {
    res.ok = res.converged = true;
    return res;
  }

  double change = 0.0;
  auto rel = [](double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
  };
  if (pot.kind() == PotentialKind::general_grid) {
    const double a1 = grid_integral(pot, N, vminus, 2);
    const double a2 = grid_integral(pot, N, vminus, 4);
    const double b1 = grid_integral(pot, N, vhalf, 2);
    const double b2 = grid_integral(pot, N, vhalf, 4);
    const double c1 = grid_integral(pot, N, vr, 2);
    const double c2 = grid_integral(pot, N, vr, 4);
    res.vminus_integral = a2;
    res.v_half_integral = b2;
    res.v_r_integral = c2;
    change = std::max({rel(a1, a2), rel(b1, b2), rel(c1, c2)});
  } else {
    double scale = 1.0;
    if (pot.kind() == PotentialKind::radial_gaussian) scale = pot.width();
    if (pot.kind() == PotentialKind::radial_table) scale = pot.table_radii().back();
    auto integral = [&](const std::function<double(double)>& h, const std::string& label,
                        int panels) {
      return radial_integral([&](double r) { return h(pot.radial(r)); }, N, scale, panels, label);
    };
    const double a1 = integral(vminus, "|V^-|^{N/2}", 8);
    const double a2 = integral(vminus, "|V^-|^{N/2}", 16);
    const double b1 = integral(vhalf, "|V|^{N/2}", 8);
    const double b2 = integral(vhalf, "|V|^{N/2}", 16);
    const double c1 = integral(vr, "|V|^r", 8);
    const double c2 = integral(vr, "|V|^r", 16);
    res.vminus_integral = a2;
    res.v_half_integral = b2;
    res.v_r_integral = c2;
    change = std::max({rel(a1, a2), rel(b1, b2), rel(c1, c2)});
  }
  res.refinement_change = change;
  res.converged = change < 1e-3;
  res.ok = res.converged && res.vminus_integral < res.sobolev_power;
  return res;
}

CriticalDepth critical_gaussian_depth(double width, int N, double r_exponent,
                                      double bracket_width) {
  auto passes = [&](double depth) {
    return check_v1(Potential::gaussian(depth, width), N, r_exponent).ok;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (passes(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw SolverError("no V1 crossing found for the Gaussian family");
  }
  while (hi - lo > bracket_width) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), lo, hi};
}

HypothesisReport check_hypotheses(const Nonlinearity& nl, const Potential& pot, int N,
                                  double r_exponent) {
  HypothesisReport rep;
  const auto grid = log_sample_grid();
  rep.S_value = sobolev_constant(N);
  rep.f1 = check_growth_f1(nl, N, grid);
  rep.f2 = check_ar_f2(nl, grid);
  rep.f3 = check_odd_f3(nl, grid);
  rep.f1_ok = rep.f1.ok;
  rep.f2_ok = rep.f2.ok;
  rep.f3_ok = rep.f3.ok;
  try {
    rep.v1 = check_v1(pot, N, r_exponent);
    rep.v1_ok = rep.v1.ok;
  } catch (const DivergenceError& e) {
    rep.v1_ok = false;
    rep.v1_error = e.what();
  }
  rep.vminus_integral = rep.v1.vminus_integral;

  auto consider = [&](const std::string& id, const CheckResult& c) {
    if (c.margin < rep.worst_violation.margin)
      rep.worst_violation = {id, c.worst_sample, c.margin};
  };
  consider("f1", rep.f1);
  consider("f2", rep.f2);
  consider("f3", rep.f3);
  if (rep.v1_error.empty() && rep.v1.sobolev_power > 0.0) {
    const double m = (rep.v1.sobolev_power - rep.v1.vminus_integral) / rep.v1.sobolev_power;
    if (m < rep.worst_violation.margin) rep.worst_violation = {"V1", 0.0, m};
  } else if (!rep.v1_error.empty()) {
    rep.worst_violation = {"V1", 0.0, -std::numeric_limits<double>::infinity()};
  }
  return rep;
}

// ---------------------------------------------------------------------------

double sobolev_constant(int N) {
  if (N < 3) throw DomainError("Sobolev constant needs N >= 3");
  return std::numbers::pi * N * (N - 2.0) *
         std::pow(std::tgamma(0.5 * N) / std::tgamma(static_cast<double>(N)), 2.0 / N);
}

double bubble_rayleigh_quotient(int N, double beta, int panels) {
  const double crit = critical_exponent(N);
  // r = t / (1 - t) maps [0, 1) onto [0, inf); the sphere area cancels in the
  // quotient only partially, so it is kept.
  auto grad = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double r = t / (1.0 - t);
    const double jac = 1.0 / ((1.0 - t) * (1.0 - t));
    const double du = -2.0 * beta * r * std::pow(1.0 + r * r, -beta - 1.0);
    return du * du * std::pow(r, N - 1) * jac;
  };
  auto mass = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double r = t / (1.0 - t);
    const double jac = 1.0 / ((1.0 - t) * (1.0 - t));
    return std::pow(1.0 + r * r, -beta * crit) * std::pow(r, N - 1) * jac;
  };
  const double area = unit_sphere_area(N);
  const double num = area * composite_gauss(grad, 0.0, 1.0, panels);
  const double den = area * composite_gauss(mass, 0.0, 1.0, panels);
  return num / std::pow(den, 2.0 / crit);
}

RayleighMinimum sobolev_constant_rayleigh(int N) {
  if (N < 3) throw DomainError("Sobolev constant needs N >= 3");
  const double center = 0.5 * (N - 2.0);
  auto objective = [N](double beta) { return bubble_rayleigh_quotient(N, beta); };
  const auto [beta, value] =
      boost::math::tools::brent_find_minima(objective, 0.75 * center, 1.5 * center, 40);
  return {value, beta};
}

}  // namespace nodal

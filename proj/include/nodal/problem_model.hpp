#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace nodal {

/// Critical Sobolev exponent 2N/(N-2).
double critical_exponent(int N);

/// Area of the unit sphere S^{d-1} in R^d.
double unit_sphere_area(int d);

// ---------------------------------------------------------------------------
// Nonlinearity

enum class NonlinearityKind { double_power_smooth, pure_power_test };

/// Odd reaction term f with primitive F and derivative f'.
///
/// The smooth double power is f(s) = |s|^{q-2} s / (1 + |s|^{q-p}): it behaves
/// like |s|^{q-2}s near zero and like |s|^{p-2}s at infinity. The pure power
/// |s|^{p-2}s exists for closed-form oracle tests only.
class Nonlinearity {
 public:
  static Nonlinearity double_power(double p, double q, double amplitude, double theta);
  static Nonlinearity pure_power(double p, double amplitude, double theta);

  NonlinearityKind kind() const { return kind_; }
  double p() const { return p_; }
  double q() const { return q_; }
  double amplitude() const { return amplitude_; }
  double theta() const { return theta_; }

  double primitive(double s) const;   // F
  double value(double s) const;       // f
  double derivative(double s) const;  // f'
  /// F and f in extended precision, for comparisons that cancel in double.
  long double primitive_extended(long double s) const;
  long double value_extended(long double s) const;

  /// order -1 -> F, 0 -> f, 1 -> f'. Throws DomainError on non-finite s.
  double eval(double s, int order) const;

 private:
  Nonlinearity(NonlinearityKind kind, double p, double q, double amplitude, double theta);

  NonlinearityKind kind_;
  double p_;
  double q_;
  double amplitude_;
  double theta_;
};

// ---------------------------------------------------------------------------
// Potential

enum class PotentialKind { zero, radial_gaussian, radial_table, general_grid };

/// Point of R^N in the coordinates the meshes use: |x|, and for the split
/// C x R^{N-2}, the modulus rho and argument theta of z and |y|.
struct ReducedPoint {
  double radius = 0.0;
  double rho = 0.0;
  double theta = 0.0;
  double y_norm = 0.0;
};

ReducedPoint reduce(const Eigen::VectorXd& x);

/// Tabulated values on a regular (rho, theta, |y|) grid, zero outside the box.
/// theta is periodic with period 2*pi/period_fold and sampled cell-centred.
struct PotentialGrid {
  int n_rho = 0;
  int n_theta = 0;
  int n_y = 0;
  double rho_max = 0.0;
  double y_max = 0.0;
  int period_fold = 1;
  std::vector<double> values;  // index (i_rho * n_theta + i_theta) * n_y + i_y
};

class Potential {
 public:
  static Potential zero();
  /// V(x) = -depth * exp(-|x|^2 / width^2).
  static Potential gaussian(double depth, double width);
  /// Piecewise linear in |x| through (radii[i], values[i]); constant below the
  /// first node and values.back() * (r / radii.back())^{-tail_exponent} beyond.
  static Potential table(std::vector<double> radii, std::vector<double> values,
                         double tail_exponent);
  static Potential grid(PotentialGrid grid);

  PotentialKind kind() const { return kind_; }
  bool is_radial() const { return kind_ != PotentialKind::general_grid; }

  double depth() const { return depth_; }
  double width() const { return width_; }
  const std::vector<double>& table_radii() const { return radii_; }
  const std::vector<double>& table_values() const { return values_; }
  double tail_exponent() const { return tail_exponent_; }
  const PotentialGrid& grid_data() const { return grid_; }

  double radial(double r) const;
  double operator()(const ReducedPoint& x) const;
  double operator()(const Eigen::VectorXd& x) const { return (*this)(reduce(x)); }

 private:
  PotentialKind kind_ = PotentialKind::zero;
  double depth_ = 0.0;
  double width_ = 1.0;
  std::vector<double> radii_;
  std::vector<double> values_;
  double tail_exponent_ = 0.0;
  PotentialGrid grid_;
};

// ---------------------------------------------------------------------------
// Hypothesis checkers

/// Samples +-s for s on a logarithmic grid.
std::vector<double> log_sample_grid(double smin = 1e-6, double smax = 1e6, int per_sign = 1201);

struct CheckResult {
  bool ok = false;
  double margin = 0.0;      // worst relative margin; negative means violated
  double worst_sample = 0.0;
  bool config_error = false;
  std::string message;
};

/// Growth envelope |f^{(m)}(s)| <= A1 |s|^{p-(m+1)} (|s|>=1), A1 |s|^{q-(m+1)} (|s|<=1).
CheckResult check_growth_f1(const Nonlinearity& nl, int N, const std::vector<double>& grid);
/// 0 < theta F(s) <= f(s)s < f'(s)s^2 for s != 0.
CheckResult check_ar_f2(const Nonlinearity& nl, const std::vector<double>& grid);
/// f(-s) = -f(s).
CheckResult check_odd_f3(const Nonlinearity& nl, const std::vector<double>& grid);

/// Smallest A1 for which the growth envelope holds on the grid.
double minimal_growth_amplitude(const Nonlinearity& nl, const std::vector<double>& grid);

struct V1Result {
  bool ok = false;
  bool converged = false;
  double vminus_integral = 0.0;  // int |V^-|^{N/2}
  double v_half_integral = 0.0;  // int |V|^{N/2}
  double v_r_integral = 0.0;     // int |V|^r
  double sobolev_power = 0.0;    // S^{N/2}
  double refinement_change = 0.0;
};

/// Throws DivergenceError when the tail of any integral does not decay.
V1Result check_v1(const Potential& pot, int N, double r_exponent);

/// Depth at which check_v1 flips for a Gaussian well of the given width,
/// located by bisection to the requested bracket width.
struct CriticalDepth {
  double depth = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};
CriticalDepth critical_gaussian_depth(double width, int N, double r_exponent,
                                      double bracket_width = 1e-5);

struct Violation {
  std::string hypothesis;
  double sample = 0.0;
  double margin = std::numeric_limits<double>::infinity();
};

struct HypothesisReport {
  bool f1_ok = false;
  bool f2_ok = false;
  bool f3_ok = false;
  bool v1_ok = false;
  CheckResult f1;
  CheckResult f2;
  CheckResult f3;
  V1Result v1;
  Violation worst_violation;
  double S_value = 0.0;
  double vminus_integral = 0.0;
  std::string v1_error;

  bool all_ok() const { return f1_ok && f2_ok && f3_ok && v1_ok; }
};

HypothesisReport check_hypotheses(const Nonlinearity& nl, const Potential& pot, int N,
                                  double r_exponent);

// ---------------------------------------------------------------------------
// Sobolev constant

/// Best constant S in S |u|_{2*}^2 <= |grad u|_2^2 on R^N (closed form).
double sobolev_constant(int N);

/// Rayleigh quotient of (1 + r^2)^{-beta} on a mapped radial quadrature mesh.
double bubble_rayleigh_quotient(int N, double beta, int panels = 400);

/// Minimises the Rayleigh quotient over beta; the minimum is S.
struct RayleighMinimum {
  double value = 0.0;
  double beta = 0.0;
};
RayleighMinimum sobolev_constant_rayleigh(int N);

}  // namespace nodal

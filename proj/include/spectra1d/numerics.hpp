#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "spectra1d/errors.hpp"

namespace spectra1d {

/// Accuracy contract shared by the ODE, quadrature and root-finding kernels.
struct Tolerance {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  std::size_t max_steps = 10'000'000;

  void validate() const;

  /// Tight variant used where downstream identities are checked at 1e-8/1e-9.
  static Tolerance tight() { return Tolerance{1e-12, 1e-12, 10'000'000}; }
};

/// Strictly increasing finite grid with at least two points.
class Grid {
 public:
  explicit Grid(std::vector<double> points);
  static Grid linspace(double a, double b, std::size_t n);
  static Grid logspace(double a, double b, std::size_t n);

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }

 private:
  std::vector<double> points_;
};

/// Right-hand side f(x, y, dy/dx) of a first-order system.
using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;

using RealFn = std::function<double(double)>;
using ComplexFn = std::function<std::complex<double>(double)>;

/// Dense Dormand-Prince 5(4) solution. Evaluable anywhere in the span;
/// evaluation at step endpoints reproduces the stepped values bit-for-bit.
class OdeSolution {
 public:
  double x_begin() const { return x_first_; }
  double x_end() const { return x_last_; }
  std::size_t dim() const { return dim_; }
  std::size_t step_count() const { return n_steps_; }
  std::size_t rhs_evals() const { return n_rhs_; }

  void eval(double x, std::span<double> out) const;
  double eval(double x, std::size_t comp) const;
  std::vector<double> eval(double x) const;
  const std::vector<double>& final_state() const { return y_final_; }

 private:
  friend OdeSolution integrate_ode(const OdeRhs&, double, double,
                                   std::vector<double>, const Tolerance&,
                                   std::vector<double>, double);
  std::size_t locate(double x) const;

  std::size_t dim_ = 0;
  std::size_t n_steps_ = 0;
  std::size_t n_rhs_ = 0;
  double x_first_ = 0.0, x_last_ = 0.0;
  double dir_ = 1.0;                // +1 forward, -1 backward
  std::vector<double> node_x_;      // step boundaries in integration order
  std::vector<double> node_y_;      // states at boundaries, (n_steps_+1)*dim
  std::vector<double> cont_;        // 3*dim dense coefficients per step
  std::vector<double> y_final_;
};

/// Integrates y' = rhs(x, y) from x0 to x1 (either direction). Steps restart
/// at each declared breakpoint so piecewise-smooth right-hand sides keep full
/// order. Throws InputError on non-finite rhs values and ConvergenceError
/// (with the last reached x) when tol.max_steps is exhausted.
OdeSolution integrate_ode(const OdeRhs& rhs, double x0, double x1,
                          std::vector<double> y0, const Tolerance& tol = {},
                          std::vector<double> breakpoints = {},
                          double max_step = 0.0);

/// Brent root finding on a bracketing interval [a, b] with f(a) f(b) <= 0.
double find_root(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol = {});

struct QuadOptions {
  std::vector<double> breakpoints;  // forced panel boundaries inside (a, b)
  std::size_t initial_panels = 1;   // uniform pre-split of every seed panel
  std::size_t max_panels = 1u << 20;
};

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t panels = 0;
  bool converged = true;
};

struct QuadResultC {
  std::complex<double> value;
  double error_estimate = 0.0;
  std::size_t panels = 0;
  bool converged = true;
};

/// Adaptive Gauss-Kronrod 7-15 quadrature of f over [a, b].
QuadResult quad_full(const std::function<double(double)>& f, double a, double b,
                     const Tolerance& tol = {}, const QuadOptions& opt = {});
QuadResultC quad_complex_full(const std::function<std::complex<double>(double)>& f,
                              double a, double b, const Tolerance& tol = {},
                              const QuadOptions& opt = {});

/// Value-only wrappers; throw ConvergenceError when the estimated error stays
/// above ten times the requested target.
double quad(const std::function<double(double)>& f, double a, double b,
            const Tolerance& tol = {}, const QuadOptions& opt = {});
std::complex<double> quad_complex(const std::function<std::complex<double>(double)>& f,
                                  double a, double b, const Tolerance& tol = {},
                                  const QuadOptions& opt = {});

}  // namespace spectra1d

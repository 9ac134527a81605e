#include "spectra1d/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace spectra1d {

void Tolerance::validate() const {
  if (!(abs_tol >= 0.0) || !(rel_tol >= 0.0) || !(abs_tol + rel_tol > 0.0))
    throw InputError("Tolerance: need abs_tol, rel_tol >= 0 with abs_tol + rel_tol > 0");
  if (max_steps < 1) throw InputError("Tolerance: max_steps must be >= 1");
}

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InputError("Grid: need at least two points");
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    if (!(points_[i] < points_[i + 1]))
      throw InputError("Grid: points must be strictly increasing");
  }
}

Grid Grid::linspace(double a, double b, std::size_t n) {
  if (n < 2) throw InputError("Grid::linspace: need n >= 2");
  if (!(a < b)) throw InputError("Grid::linspace: need a < b");
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  pts.back() = b;
  return Grid(std::move(pts));
}

Grid Grid::logspace(double a, double b, std::size_t n) {
  if (!(a > 0.0) || !(b > a)) throw InputError("Grid::logspace: need 0 < a < b");
  if (n < 2) throw InputError("Grid::logspace: need n >= 2");
  std::vector<double> pts(n);
  const double la = std::log(a), lb = std::log(b);
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
  pts.front() = a;
  pts.back() = b;
  return Grid(std::move(pts));
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with dense output (Hairer's DOPRI5 contd5 coefficients).
// ---------------------------------------------------------------------------

namespace {

constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;

constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0, kA74 = 125.0 / 192.0,
                 kA75 = -2187.0 / 6784.0, kA76 = 11.0 / 84.0;

constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

constexpr double kD1 = -12715105075.0 / 11282082432.0;
constexpr double kD3 = 87487479700.0 / 32700410799.0;
constexpr double kD4 = -10690763975.0 / 1880347072.0;
constexpr double kD5 = 701980252875.0 / 199316789632.0;
constexpr double kD6 = -1453857185.0 / 822651844.0;
constexpr double kD7 = 69997945.0 / 29380423.0;

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

std::size_t OdeSolution::locate(double x) const {
  // node_x_ is monotone in integration order; compare via dir_*x.
  const double key = dir_ * x;
  if (key < dir_ * x_first_ - 1e-12 * (1.0 + std::abs(x_first_)) ||
      key > dir_ * x_last_ + 1e-12 * (1.0 + std::abs(x_last_)))
    throw InputError("OdeSolution::eval: x outside integration span");
  std::size_t lo = 0, hi = n_steps_;  // step indices [lo, hi)
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (dir_ * node_x_[mid] <= key)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

void OdeSolution::eval(double x, std::span<double> out) const {
  const std::size_t i = locate(x);
  const double x0 = node_x_[i], x1 = node_x_[i + 1];
  const double* y0 = &node_y_[i * dim_];
  const double* y1 = &node_y_[(i + 1) * dim_];
  if (x == x0) {
    std::copy(y0, y0 + dim_, out.begin());
    return;
  }
  if (x == x1) {
    std::copy(y1, y1 + dim_, out.begin());
    return;
  }
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s1 = 1.0 - s;
  const double* c3 = &cont_[i * 3 * dim_];
  const double* c4 = c3 + dim_;
  const double* c5 = c4 + dim_;
  for (std::size_t k = 0; k < dim_; ++k) {
    const double d = y1[k] - y0[k];
    out[k] = y0[k] + s * (d + s1 * (c3[k] + s * (c4[k] + s1 * c5[k])));
  }
}

double OdeSolution::eval(double x, std::size_t comp) const {
  const std::size_t i = locate(x);
  const double x0 = node_x_[i], x1 = node_x_[i + 1];
  const double y0 = node_y_[i * dim_ + comp];
  const double y1 = node_y_[(i + 1) * dim_ + comp];
  if (x == x0) return y0;
  if (x == x1) return y1;
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s1 = 1.0 - s;
  const double* c = &cont_[i * 3 * dim_];
  const double d = y1 - y0;
  return y0 + s * (d + s1 * (c[comp] + s * (c[dim_ + comp] + s1 * c[2 * dim_ + comp])));
}

std::vector<double> OdeSolution::eval(double x) const {
  std::vector<double> out(dim_);
  eval(x, out);
  return out;
}

OdeSolution integrate_ode(const OdeRhs& rhs, double x0, double x1,
                          std::vector<double> y0, const Tolerance& tol,
                          std::vector<double> breakpoints, double max_step) {
  tol.validate();
  const std::size_t n = y0.size();
  if (n == 0) throw InputError("integrate_ode: empty state");
  if (!all_finite(y0)) throw InputError("integrate_ode: non-finite initial state");
  if (!std::isfinite(x0) || !std::isfinite(x1))
    throw InputError("integrate_ode: non-finite span");

  OdeSolution sol;
  sol.dim_ = n;
  sol.x_first_ = x0;
  sol.x_last_ = x1;
  const double dir = (x1 >= x0) ? 1.0 : -1.0;
  sol.dir_ = dir;
  sol.node_x_.push_back(x0);
  sol.node_y_.insert(sol.node_y_.end(), y0.begin(), y0.end());

  if (x1 == x0) {
    sol.y_final_ = y0;
    return sol;
  }

  // Segment boundaries: sorted breakpoints strictly inside the span.
  std::vector<double> seg{x0};
  const double lo = std::min(x0, x1), hi = std::max(x0, x1);
  std::sort(breakpoints.begin(), breakpoints.end());
  if (dir < 0) std::reverse(breakpoints.begin(), breakpoints.end());
  for (double b : breakpoints) {
    if (b > lo && b < hi && b != seg.back()) seg.push_back(b);
  }
  seg.push_back(x1);

  std::vector<double> y = std::move(y0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
  std::size_t steps_used = 0;
  const double atol = tol.abs_tol, rtol = tol.rel_tol;

  auto call_rhs = [&](double x, std::span<const double> yy, std::span<double> out) {
    rhs(x, yy, out);
    ++sol.n_rhs_;
    if (!all_finite(out))
      throw InputError("integrate_ode: non-finite rhs value at x = " + std::to_string(x));
  };

  for (std::size_t is = 0; is + 1 < seg.size(); ++is) {
    const double a = seg[is], b = seg[is + 1];
    double x = a;
    call_rhs(x, y, k1);  // fresh rhs at each segment start (piecewise rhs)

    // Initial step size guess for this segment.
    double h;
    {
      double d0 = 0.0, d1 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(y[i]);
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (k1[i] / sc) * (k1[i] / sc);
      }
      d0 = std::sqrt(d0 / n);
      d1 = std::sqrt(d1 / n);
      h = (d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6 * std::abs(b - a);
      h = std::max(h, 1e-10);
      h = std::min(h, std::abs(b - a));
      if (max_step > 0.0) h = std::min(h, max_step);
      h *= dir;
    }

    bool segment_done = false;
    while (!segment_done) {
      if (++steps_used > tol.max_steps) {
        throw ConvergenceError(
            "integrate_ode: max_steps exhausted, last x = " + std::to_string(x), x);
      }
      if (dir * (x + h - b) >= 0.0) {
        h = b - x;
        segment_done = true;
      }
      if (std::abs(h) < 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x) &&
          !segment_done) {
        throw ConvergenceError("integrate_ode: step size underflow at x = " +
                                   std::to_string(x),
                               x);
      }

      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * kA21 * k1[i];
      call_rhs(x + kC2 * h, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
      call_rhs(x + kC3 * h, ytmp, k3);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
      call_rhs(x + kC4 * h, ytmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
      call_rhs(x + kC5 * h, ytmp, k5);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] +
                              kA64 * k4[i] + kA65 * k5[i]);
      call_rhs(x + h, ytmp, k6);
      for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + h * (kA71 * k1[i] + kA73 * k3[i] + kA74 * k4[i] +
                              kA75 * k5[i] + kA76 * k6[i]);
      call_rhs(x + h, ynew, k7);

      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] +
                              kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
        err += (e / sc) * (e / sc);
      }
      err = std::sqrt(err / n);

      if (err <= 1.0) {
        // Accept: store dense coefficients.
        const std::size_t base = sol.cont_.size();
        sol.cont_.resize(base + 3 * n);
        double* c3c = &sol.cont_[base];
        double* c4c = c3c + n;
        double* c5c = c4c + n;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = ynew[i] - y[i];
          const double bspl = h * k1[i] - d;
          c3c[i] = bspl;
          c4c[i] = d - h * k7[i] - bspl;
          c5c[i] = h * (kD1 * k1[i] + kD3 * k3[i] + kD4 * k4[i] + kD5 * k5[i] +
                        kD6 * k6[i] + kD7 * k7[i]);
        }
        x = segment_done ? b : x + h;
        y = ynew;
        sol.node_x_.push_back(x);
        sol.node_y_.insert(sol.node_y_.end(), y.begin(), y.end());
        ++sol.n_steps_;
        std::swap(k1, k7);  // FSAL

        double fac = 0.9 * std::pow(std::max(err, 1e-16), -0.2);
        fac = std::clamp(fac, 0.2, 10.0);
        h *= fac;
        if (max_step > 0.0 && std::abs(h) > max_step) h = dir * max_step;
      } else {
        double fac = 0.9 * std::pow(err, -0.2);
        fac = std::clamp(fac, 0.1, 1.0);
        h *= fac;
        segment_done = false;
      }
    }
  }

  sol.y_final_ = y;
  return sol;
}

// ---------------------------------------------------------------------------
// Brent root finding.
// ---------------------------------------------------------------------------

double find_root(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol) {
  tol.validate();
  if (!(a < b)) throw InputError("find_root: need a < b");
  double fa = f(a), fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fb))
    throw InputError("find_root: non-finite function value at bracket");
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw InputError("find_root: interval does not bracket a root");

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (std::size_t it = 0; it < tol.max_steps; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 =
        2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) +
        0.5 * std::max(tol.abs_tol, tol.rel_tol * std::abs(b));
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    if (!std::isfinite(fb)) throw InputError("find_root: non-finite function value");
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
  }
  throw ConvergenceError("find_root: iteration budget exhausted");
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod 7-15 quadrature.
// ---------------------------------------------------------------------------

namespace {

constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {0.129484966168870, 0.279705391489277,
                           0.381830050505119, 0.417959183673469};

template <typename R>
struct Panel {
  double a, b;
  R value;
  double err;
};

template <typename R>
void gk15(const std::function<R(double)>& f, double a, double b, R& value,
          double& err) {
  const double c = 0.5 * (a + b);
  const double hl = 0.5 * (b - a);
  R resk{}, resg{};
  for (int j = 0; j < 8; ++j) {
    if (j == 7) {
      const R fc = f(c);
      resk += kWgk[7] * fc;
      resg += kWg[3] * fc;
      break;
    }
    const double dx = hl * kXgk[j];
    const R f1 = f(c - dx);
    const R f2 = f(c + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  value = resk * hl;
  err = std::abs((resk - resg) * hl);
  if (!std::isfinite(err) || !std::isfinite(std::abs(value)))
    throw InputError("quad: non-finite integrand value");
}

template <typename R>
struct GenericQuadResult {
  R value;
  double error_estimate;
  std::size_t panels;
  bool converged;
};

template <typename R>
GenericQuadResult<R> quad_impl(const std::function<R(double)>& f, double a, double b,
                               const Tolerance& tol, const QuadOptions& opt) {
  tol.validate();
  GenericQuadResult<R> res{R{}, 0.0, 0, true};
  if (a == b) return res;
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }

  // Seed panels: breakpoints first, then a uniform pre-split of each piece.
  std::vector<double> cuts{a};
  {
    std::vector<double> bp = opt.breakpoints;
    std::sort(bp.begin(), bp.end());
    for (double x : bp)
      if (x > a && x < b && x != cuts.back()) cuts.push_back(x);
    cuts.push_back(b);
  }
  const std::size_t pre = std::max<std::size_t>(1, opt.initial_panels);

  auto cmp = [](const Panel<R>& p, const Panel<R>& q) { return p.err < q.err; };
  std::priority_queue<Panel<R>, std::vector<Panel<R>>, decltype(cmp)> heap(cmp);

  R total{};
  double total_err = 0.0;
  std::size_t n_panels = 0;
  auto push_panel = [&](double pa, double pb) {
    Panel<R> p{pa, pb, R{}, 0.0};
    gk15(f, pa, pb, p.value, p.err);
    total += p.value;
    total_err += p.err;
    ++n_panels;
    heap.push(std::move(p));
  };

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double pa = cuts[i], pb = cuts[i + 1];
    // Distribute the pre-split proportionally to piece length.
    std::size_t m = static_cast<std::size_t>(
        std::ceil(static_cast<double>(pre) * (pb - pa) / (b - a)));
    m = std::max<std::size_t>(1, m);
    for (std::size_t j = 0; j < m; ++j) {
      const double qa = pa + (pb - pa) * static_cast<double>(j) / static_cast<double>(m);
      const double qb =
          (j + 1 == m) ? pb : pa + (pb - pa) * static_cast<double>(j + 1) / static_cast<double>(m);
      push_panel(qa, qb);
    }
  }

  const double min_width = 16.0 * std::numeric_limits<double>::epsilon() * (b - a);
  double dead_err = 0.0;  // error frozen in panels too narrow to split further
  auto target = [&]() {
    return std::max(tol.abs_tol, tol.rel_tol * std::abs(total));
  };

  while (total_err > target() && n_panels < opt.max_panels && !heap.empty()) {
    Panel<R> worst = heap.top();
    heap.pop();
    if (worst.b - worst.a <= min_width) {
      dead_err += worst.err;
      if (dead_err >= total_err - 1e-300) break;  // everything left is unsplittable
      continue;
    }
    total -= worst.value;
    total_err -= worst.err;
    --n_panels;
    const double mid = 0.5 * (worst.a + worst.b);
    push_panel(worst.a, mid);
    push_panel(mid, worst.b);
  }

  res.value = sign * total;
  res.error_estimate = total_err;
  res.panels = n_panels;
  res.converged = total_err <= std::max(target(), 10.0 * tol.abs_tol);
  return res;
}

}  // namespace

QuadResult quad_full(const std::function<double(double)>& f, double a, double b,
                     const Tolerance& tol, const QuadOptions& opt) {
  auto r = quad_impl<double>(f, a, b, tol, opt);
  return QuadResult{r.value, r.error_estimate, r.panels, r.converged};
}

QuadResultC quad_complex_full(const std::function<std::complex<double>(double)>& f,
                              double a, double b, const Tolerance& tol,
                              const QuadOptions& opt) {
  auto r = quad_impl<std::complex<double>>(f, a, b, tol, opt);
  return QuadResultC{r.value, r.error_estimate, r.panels, r.converged};
}

double quad(const std::function<double(double)>& f, double a, double b,
            const Tolerance& tol, const QuadOptions& opt) {
  auto r = quad_full(f, a, b, tol, opt);
  const double target = std::max(tol.abs_tol, tol.rel_tol * std::abs(r.value));
  if (!r.converged && r.error_estimate > 10.0 * target)
    throw ConvergenceError("quad: panel budget exhausted, error estimate " +
                           std::to_string(r.error_estimate));
  return r.value;
}

std::complex<double> quad_complex(const std::function<std::complex<double>(double)>& f,
                                  double a, double b, const Tolerance& tol,
                                  const QuadOptions& opt) {
  auto r = quad_complex_full(f, a, b, tol, opt);
  const double target = std::max(tol.abs_tol, tol.rel_tol * std::abs(r.value));
  if (!r.converged && r.error_estimate > 10.0 * target)
    throw ConvergenceError("quad_complex: panel budget exhausted, error estimate " +
                           std::to_string(r.error_estimate));
  return r.value;
}

}  // namespace spectra1d

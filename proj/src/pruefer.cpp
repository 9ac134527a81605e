#include "spectra1d/pruefer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spectra1d {

namespace {
constexpr double kPi = std::numbers::pi;
}

RhoDecomposition to_rho(const FloquetData& data, double u, double uprime, double x) {
  if (u == 0.0 && uprime == 0.0)
    throw InputError("to_rho: (u, u') = (0, 0) is not a solution frame");
  const std::complex<double> phib = std::conj(data.phi(x));
  const std::complex<double> dphib = std::conj(data.phi_prime(x));
  const std::complex<double> rho = (2.0 / data.omega()) * (uprime * phib - u * dphib);
  return RhoDecomposition{rho, u, uprime};
}

PrueferInit dirichlet_init(const FloquetData& data) {
  const RhoDecomposition rd = to_rho(data, 0.0, 1.0, 0.0);
  return PrueferInit{std::abs(rd.rho), data.gamma(0.0) + std::arg(rd.rho)};
}

PrueferTrajectory::PrueferTrajectory(FloquetData data, DecayingPotential v,
                                     OdeSolution dense, double length,
                                     double points_per_unit)
    : data_(std::move(data)), v_(std::move(v)), dense_(std::move(dense)),
      length_(length) {
  std::size_t n = static_cast<std::size_t>(std::ceil(length * points_per_unit));
  n = std::clamp<std::size_t>(n, 2, 1u << 20);
  grid_.resize(n + 1);
  ln_r_.resize(n + 1);
  theta_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = length * static_cast<double>(i) / static_cast<double>(n);
    grid_[i] = x;
    ln_r_[i] = dense_.eval(x, 0);
    theta_[i] = dense_.eval(x, 1);
  }
}

double PrueferTrajectory::theta_prime(double x) const {
  const double g = data_.gamma_prime(x);
  const double s = std::sin(theta(x));
  return g - v_(x) / g * s * s;
}

std::pair<double, double> PrueferTrajectory::reconstruct(double x) const {
  const double r = std::exp(ln_r(x));
  const std::complex<double> rho = std::polar(r, theta(x) - data_.gamma(x));
  const double u = std::imag(rho * data_.phi(x));
  const double up = std::imag(rho * data_.phi_prime(x));
  return {u, up};
}

PrueferTrajectory pruefer_flow(FloquetData data, const DecayingPotential& v,
                               double length, PrueferInit init, const Tolerance& tol,
                               double points_per_unit) {
  if (!(length > 0.0)) throw InputError("pruefer_flow: L must be positive");
  if (!(init.r0 > 0.0)) throw InputError("pruefer_flow: R0 must be positive");

  // [ln R]' = V/(2 gamma') sin 2theta; theta' = gamma' - (V/(2 gamma'))(1 - cos 2theta).
  // The theta equation is Im(rho'/rho) with 1 - cos 2theta = 2 sin^2 theta; the
  // direct-solve equivalence tests pin the coefficient.
  auto rhs = [&data, &v](double x, std::span<const double> y, std::span<double> dy) {
    const double g = data.gamma_prime(x);
    const double w = v(x) / (2.0 * g);
    const double s = std::sin(y[1]);
    dy[0] = w * 2.0 * s * std::cos(y[1]);  // w sin(2 theta)
    dy[1] = g - 2.0 * w * s * s;
  };

  std::vector<double> bp = v.breakpoints(length);
  {
    std::vector<double> pb = data.potential().breakpoints(length);
    bp.insert(bp.end(), pb.begin(), pb.end());
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  }

  OdeSolution dense = integrate_ode(rhs, 0.0, length, {std::log(init.r0), init.theta0},
                                    tol, std::move(bp), /*max_step=*/5.0);
  return PrueferTrajectory(std::move(data), v, std::move(dense), length,
                           points_per_unit);
}

PrueferTrajectory pruefer_flow(const PeriodicPotential& v0, const DecayingPotential& v,
                               double energy, double length, PrueferInit init,
                               const Tolerance& tol, double points_per_unit) {
  return pruefer_flow(FloquetData::build(v0, energy, tol), v, length, init, tol,
                      points_per_unit);
}

std::pair<double, double> reconstruct_solution(const PrueferTrajectory& traj, double x) {
  if (x < 0.0 || x > traj.length())
    throw InputError("reconstruct_solution: x outside trajectory span");
  return traj.reconstruct(x);
}

double osc_integral(double gamma_freq, const std::function<double(double)>& g_phase,
                    double length, const Tolerance& tol) {
  if (gamma_freq == 0.0)
    throw InputError("osc_integral: gamma must be nonzero");
  if (!(length > 0.0)) throw InputError("osc_integral: L must be positive");
  QuadOptions opt;
  const double panel = std::min(4.0, kPi / (2.0 * std::abs(gamma_freq)));
  opt.initial_panels = static_cast<std::size_t>(std::clamp(length / panel, 1.0, 4e5));
  opt.max_panels = 1u << 21;
  return quad([&](double x) { return std::sin(gamma_freq * x + g_phase(x)) / (1.0 + x); },
              0.0, length, tol, opt);
}

std::complex<double> fourier_mode_integral(int k, double gamma_freq,
                                           const std::function<double(double)>& g_phase,
                                           double length, const Tolerance& tol) {
  if (!(gamma_freq > 0.0 && gamma_freq < 2.0 * kPi))
    throw InputError("fourier_mode_integral: gamma must lie in (0, 2 pi)");
  if (!(length > 0.0)) throw InputError("fourier_mode_integral: L must be positive");
  QuadOptions opt;
  const double freq = 2.0 * kPi * std::abs(k) + gamma_freq;
  const double panel = std::min(4.0, kPi / (2.0 * freq));
  opt.initial_panels = static_cast<std::size_t>(std::clamp(length / panel, 1.0, 4e5));
  opt.max_panels = 1u << 21;
  return quad_complex(
      [&](double x) {
        return std::polar(1.0, 2.0 * kPi * k * x) *
               (std::sin(gamma_freq * x + g_phase(x)) / (1.0 + x));
      },
      0.0, length, tol, opt);
}

PeriodicWeight PeriodicWeight::parse(std::string_view name) {
  if (name == "one") return {Kind::one};
  if (name == "cos2pi") return {Kind::cos2pi};
  if (name == "invgamma2") return {Kind::inv_gamma_sq};
  if (name == "phi2") return {Kind::phi_sq};
  if (name == "zero") return {Kind::zero};
  throw InputError("periodic weight: unknown name '" + std::string(name) + "'");
}

const char* PeriodicWeight::name() const {
  switch (kind) {
    case Kind::one: return "one";
    case Kind::cos2pi: return "cos2pi";
    case Kind::inv_gamma_sq: return "invgamma2";
    case Kind::phi_sq: return "phi2";
    case Kind::zero: return "zero";
  }
  return "?";
}

double PeriodicWeight::operator()(const FloquetData& data, double x) const {
  switch (kind) {
    case Kind::one:
      return 1.0;
    case Kind::cos2pi:
      return std::cos(2.0 * kPi * x);
    case Kind::inv_gamma_sq: {
      const double g = data.gamma_prime(x);
      return 1.0 / (g * g);
    }
    case Kind::phi_sq:
      return std::norm(data.phi(x));
    case Kind::zero:
      return 0.0;
  }
  return 0.0;
}

OrthoIntegrals orthogonality_integrals(const PeriodicPotential& v0,
                                       const DecayingPotential& v, double e1,
                                       double e2, double length, PeriodicWeight f,
                                       const Tolerance& tol) {
  if (e1 == e2) throw InputError("orthogonality_integrals: E1 and E2 must differ");
  FloquetData d1f = FloquetData::build(v0, e1, tol);
  FloquetData d2f = FloquetData::build(v0, e2, tol);
  const double half = kPi / 2.0;
  if ((d1f.k() - half) * (d2f.k() - half) <= 0.0)
    throw DomainError(
        "orthogonality_integrals: energies straddle the half-band point k = pi/2");
  PrueferTrajectory t1 = pruefer_flow(d1f, v, length, dirichlet_init(d1f), tol);
  PrueferTrajectory t2 = pruefer_flow(d2f, v, length, dirichlet_init(d2f), tol);

  const FloquetData& d1 = t1.data();
  QuadOptions opt;
  opt.initial_panels = static_cast<std::size_t>(std::clamp(length * 2.0, 8.0, 4e5));
  opt.max_panels = 1u << 21;
  Tolerance qtol{std::max(tol.abs_tol, 1e-7), std::max(tol.rel_tol, 1e-9),
                 tol.max_steps};

  OrthoIntegrals out;
  out.i4 = quad(
      [&](double x) { return f(d1, x) * std::cos(4.0 * t1.theta(x)) / (1.0 + x); },
      0.0, length, qtol, opt);
  out.i22 = quad(
      [&](double x) {
        return f(d1, x) * std::sin(2.0 * t1.theta(x)) * std::sin(2.0 * t2.theta(x)) /
               (1.0 + x);
      },
      0.0, length, qtol, opt);
  return out;
}

double cos4_integral(const PeriodicPotential& v0, const DecayingPotential& v,
                     double energy, double length, PeriodicWeight f,
                     const Tolerance& tol) {
  FloquetData data = FloquetData::build(v0, energy, tol);
  PrueferTrajectory traj = pruefer_flow(data, v, length, dirichlet_init(data), tol);
  const FloquetData& d = traj.data();
  QuadOptions opt;
  opt.initial_panels = static_cast<std::size_t>(std::clamp(length * 2.0, 8.0, 4e5));
  opt.max_panels = 1u << 21;
  Tolerance qtol{std::max(tol.abs_tol, 1e-7), std::max(tol.rel_tol, 1e-9),
                 tol.max_steps};
  return quad(
      [&](double x) { return f(d, x) * std::cos(4.0 * traj.theta(x)) / (1.0 + x); },
      0.0, length, qtol, opt);
}

}  // namespace spectra1d

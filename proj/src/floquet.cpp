#include "spectra1d/floquet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace spectra1d {

namespace {

// 4-dim system for the two canonical solutions of -u'' + V0 u = E u.
OdeRhs canonical_rhs(const PeriodicPotential& v0, double energy) {
  return [&v0, energy](double x, std::span<const double> y, std::span<double> dy) {
    const double q = v0(x) - energy;
    dy[0] = y[1];
    dy[1] = q * y[0];
    dy[2] = y[3];
    dy[3] = q * y[2];
  };
}

OdeSolution solve_canonical(const PeriodicPotential& v0, double energy,
                            const Tolerance& tol) {
  std::vector<double> bp;
  for (double b : v0.period_breakpoints())
    if (b > 0.0 && b < 1.0) bp.push_back(b);
  return integrate_ode(canonical_rhs(v0, energy), 0.0, 1.0, {1.0, 0.0, 0.0, 1.0},
                       tol, std::move(bp));
}

}  // namespace

Monodromy monodromy(const PeriodicPotential& v0, double energy, const Tolerance& tol) {
  if (!std::isfinite(energy)) throw InputError("monodromy: non-finite energy");
  const OdeSolution sol = solve_canonical(v0, energy, tol);
  const std::vector<double>& f = sol.final_state();
  return Monodromy{energy, f[0], f[2], f[1], f[3]};
}

double discriminant(const PeriodicPotential& v0, double energy, const Tolerance& tol) {
  return monodromy(v0, energy, tol).trace();
}

bool BandStructure::contains(double e) const { return band_index(e) >= 0; }

int BandStructure::band_index(double e) const {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (e >= bands[i].first && e <= bands[i].second) return static_cast<int>(i);
  return -1;
}

BandStructure band_edges(const PeriodicPotential& v0, double e_min, double e_max,
                         const Tolerance& tol, std::size_t scan_points, Exec exec) {
  if (!(e_max > e_min)) throw InputError("band_edges: need e_min < e_max");
  scan_points = std::max<std::size_t>(scan_points, 16);

  const Grid grid = Grid::linspace(e_min, e_max, scan_points);
  const std::vector<double> disc = map_indexed<double>(
      grid.size(), [&](std::size_t i) { return discriminant(v0, grid[i], tol); }, exec);

  // Bracketed sign changes of Tr Q -+ 2, refined by Brent.
  std::vector<double> edges;
  for (double target : {2.0, -2.0}) {
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double fa = disc[i] - target, fb = disc[i + 1] - target;
      if (fa == 0.0) edges.push_back(grid[i]);
      if (fa * fb < 0.0) {
        edges.push_back(find_root(
            [&](double e) { return discriminant(v0, e, tol) - target; }, grid[i],
            grid[i + 1], tol));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [&](double a, double b) {
                            return std::abs(a - b) <=
                                   1e-12 * (1.0 + std::abs(a) + std::abs(b));
                          }),
              edges.end());

  std::vector<double> cuts{e_min};
  for (double e : edges)
    if (e > e_min && e < e_max) cuts.push_back(e);
  cuts.push_back(e_max);

  BandStructure bs;
  bs.e_min = e_min;
  bs.e_max = e_max;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (std::abs(discriminant(v0, mid, tol)) < 2.0) {
      if (!bs.bands.empty() && bs.bands.back().second == cuts[i]) {
        bs.bands.back().second = cuts[i + 1];  // merge across a touching point
      } else {
        bs.bands.emplace_back(cuts[i], cuts[i + 1]);
      }
    }
  }
  return bs;
}

FloquetData FloquetData::build(const PeriodicPotential& v0, double energy,
                               const Tolerance& tol, double edge_margin) {
  if (!std::isfinite(energy)) throw InputError("floquet_data: non-finite energy");
  if (!(edge_margin > 0.0)) throw InputError("floquet_data: edge_margin must be > 0");

  auto st = std::make_shared<State>(State{
      v0, energy, 0.0, 0.0, 0.0, 0.0, 0.0, {0.0, 0.0}, OdeSolution{}, OdeSolution{}});
  st->canon = solve_canonical(v0, energy, tol);
  const std::vector<double>& f = st->canon.final_state();
  const double q11 = f[0], q12 = f[2], q21 = f[1], q22 = f[3];
  const double disc = q11 + q22;
  st->disc = disc;
  if (!(std::abs(disc) < 2.0 - edge_margin)) {
    throw DomainError("floquet_data: E = " + std::to_string(energy) +
                      " is not inside a band interior (|Tr Q| = " +
                      std::to_string(std::abs(disc)) + ")");
  }

  const double k = std::acos(std::clamp(disc / 2.0, -1.0, 1.0));
  st->k = k;
  const std::complex<double> lambda{disc / 2.0, std::sin(k)};

  // Eigenvector of Q for lambda, from the better conditioned row.
  std::complex<double> a1, a2;
  {
    const std::complex<double> r1a = q12, r1b = lambda - q11;
    const std::complex<double> r2a = lambda - q22, r2b = q21;
    const double n1 = std::norm(r1a) + std::norm(r1b);
    const double n2 = std::norm(r2a) + std::norm(r2b);
    if (n1 >= n2) {
      a1 = r1a;
      a2 = r1b;
    } else {
      a1 = r2a;
      a2 = r2b;
    }
    if (n1 + n2 <= 0.0) throw PrecisionError("floquet_data: degenerate monodromy");
  }

  // Orientation: W(conj(phi), phi) = i omega with omega > 0 selects the
  // multiplier sign; then scale so phi(0) = 1.
  double w0 = 2.0 * std::imag(std::conj(a1) * a2);
  if (w0 == 0.0) throw PrecisionError("floquet_data: vanishing Wronskian");
  if (w0 < 0.0) {
    a1 = std::conj(a1);
    a2 = std::conj(a2);
    st->kappa = -k;
  } else {
    st->kappa = k;
  }
  if (std::abs(a1) == 0.0) throw PrecisionError("floquet_data: phi(0) = 0");
  st->dphi0 = a2 / a1;
  st->omega = 2.0 * std::imag(st->dphi0);
  if (!(st->omega > 0.0)) throw PrecisionError("floquet_data: omega <= 0");

  // Continuous phase over one period: gamma' = omega / (2 |phi|^2).
  {
    const OdeSolution& canon = st->canon;
    const std::complex<double> dphi0 = st->dphi0;
    const double omega = st->omega;
    auto rhs = [&canon, dphi0, omega](double x, std::span<const double>,
                                      std::span<double> dy) {
      std::array<double, 4> buf;
      canon.eval(x, buf);
      // phi = u1 + phi'(0) u2 with u1, u2 the real canonical solutions
      const double re = buf[0] + dphi0.real() * buf[2];
      const double im = dphi0.imag() * buf[2];
      dy[0] = omega / (2.0 * (re * re + im * im));
    };
    std::vector<double> bp;
    for (double b : v0.period_breakpoints())
      if (b > 0.0 && b < 1.0) bp.push_back(b);
    st->gamma01 = integrate_ode(rhs, 0.0, 1.0, {0.0}, tol, std::move(bp));
    st->dgamma = st->gamma01.final_state()[0];
  }

  return FloquetData(std::move(st));
}

std::complex<double> FloquetData::multiplier() const {
  return std::polar(1.0, s_->kappa);
}

namespace {
inline void split_period(double x, double& m, double& s) {
  m = std::floor(x);
  s = x - m;
}
}  // namespace

std::complex<double> FloquetData::phi(double x) const {
  double m, s;
  split_period(x, m, s);
  std::array<double, 4> y{};
  s_->canon.eval(s, y);
  const std::complex<double> base =
      std::complex<double>(y[0], 0.0) + s_->dphi0 * std::complex<double>(y[2], 0.0);
  return base * std::polar(1.0, s_->kappa * m);
}

std::complex<double> FloquetData::phi_prime(double x) const {
  double m, s;
  split_period(x, m, s);
  std::array<double, 4> y{};
  s_->canon.eval(s, y);
  const std::complex<double> base =
      std::complex<double>(y[1], 0.0) + s_->dphi0 * std::complex<double>(y[3], 0.0);
  return base * std::polar(1.0, s_->kappa * m);
}

double FloquetData::gamma(double x) const {
  double m, s;
  split_period(x, m, s);
  return s_->gamma01.eval(s, 0) + m * s_->dgamma;
}

double FloquetData::gamma_prime(double x) const {
  const std::complex<double> p = phi(x);
  return s_->omega / (2.0 * std::norm(p));
}

double capital_gamma(const FloquetData& d, const Tolerance& tol) {
  QuadOptions opt;
  opt.breakpoints = d.potential().period_breakpoints();
  opt.initial_panels = 8;
  return quad([&](double x) { const double g = d.gamma_prime(x); return 1.0 / (g * g); },
              0.0, 1.0, tol, opt);
}

}  // namespace spectra1d

#include "spectra1d/wkb.hpp"

#include <algorithm>
#include <cmath>

namespace spectra1d {

namespace {
using cplx = std::complex<double>;
}

OscKernel make_kernel(const PeriodicPotential& v0, const DecayingPotential& v,
                      double energy, double x_max, const Tolerance& tol) {
  return OscKernel(FloquetData::build(v0, energy, tol), v, x_max, tol);
}

PhaseMonotonicityReport phase_monotonicity_check(
    const PeriodicPotential& v0, const DecayingPotential& v, double e_lo, double e_hi,
    const std::vector<std::pair<double, double>>& x_pairs, const Tolerance& tol) {
  if (!(e_hi > e_lo)) throw InputError("phase_monotonicity_check: need e_lo < e_hi");
  if (x_pairs.empty()) throw InputError("phase_monotonicity_check: no pairs");

  double x_top = 0.0;
  for (auto [x, y] : x_pairs) x_top = std::max({x_top, x, y});

  PhaseMonotonicityReport rep;
  rep.e_center = 0.5 * (e_lo + e_hi);
  const double width = e_hi - e_lo;
  // Larger steps for higher derivatives: the h^{-i} roundoff amplification
  // would swamp a uniformly tiny stencil.
  rep.de_steps = {1e-5 * width, 3e-4 * width, 2e-3 * width};

  // h(x, E) at the stencil energies, one kernel per energy.
  auto h_at = [&](double e) {
    OscKernel k = make_kernel(v0, v, e, x_top + 1.0, tol);
    std::vector<double> vals;
    vals.reserve(2 * x_pairs.size());
    for (auto [x, y] : x_pairs) {
      vals.push_back(k.h(x));
      vals.push_back(k.h(y));
    }
    return vals;
  };

  rep.pairs.resize(x_pairs.size());
  for (std::size_t i = 0; i < x_pairs.size(); ++i) {
    rep.pairs[i].x = x_pairs[i].first;
    rep.pairs[i].y = x_pairs[i].second;
  }

  for (int order = 1; order <= 3; ++order) {
    const double de = rep.de_steps[static_cast<std::size_t>(order - 1)];
    std::array<std::vector<double>, 5> st;
    for (int j = -2; j <= 2; ++j)
      st[static_cast<std::size_t>(j + 2)] = h_at(rep.e_center + j * de);
    for (std::size_t i = 0; i < x_pairs.size(); ++i) {
      auto dh = [&](int j) {
        const auto& vals = st[static_cast<std::size_t>(j + 2)];
        return vals[2 * i] - vals[2 * i + 1];
      };
      double d = 0.0;
      switch (order) {
        case 1:
          d = (dh(-2) - 8.0 * dh(-1) + 8.0 * dh(1) - dh(2)) / (12.0 * de);
          rep.pairs[i].d1 = d;
          break;
        case 2:
          d = (-dh(-2) + 16.0 * dh(-1) - 30.0 * dh(0) + 16.0 * dh(1) - dh(2)) /
              (12.0 * de * de);
          rep.pairs[i].d2 = d;
          break;
        case 3:
          d = (-dh(-2) + 2.0 * dh(-1) - 2.0 * dh(1) + dh(2)) / (2.0 * de * de * de);
          rep.pairs[i].d3 = d;
          break;
      }
    }
  }

  rep.lower_c = std::numeric_limits<double>::infinity();
  rep.upper_c = 0.0;
  for (const PhasePair& p : rep.pairs) {
    const double sep = std::abs(p.x - p.y);
    rep.lower_c = std::min(rep.lower_c, std::abs(p.d1) / sep);
    rep.upper_c = std::max({rep.upper_c, std::abs(p.d1) / sep, std::abs(p.d2) / sep,
                            std::abs(p.d3) / sep});
  }

  {
    const double de = rep.de_steps[0];
    const double kp = FloquetData::build(v0, rep.e_center + de, tol).kappa();
    const double km = FloquetData::build(v0, rep.e_center - de, tol).kappa();
    rep.dk_de = (kp - km) / (2.0 * de);
  }
  return rep;
}

SeriesSolution series_solution(const OscKernel& kernel, double x, int n_max, double y0,
                               int max_rungs, const Tolerance& tol) {
  if (n_max < 1) throw InputError("series_solution: n_max must be >= 1");
  if (x < 0.0 || x >= kernel.x_max())
    throw InputError("series_solution: x outside the kernel domain");
  if (y0 <= 0.0) y0 = std::max(2.0 * std::max(x, 1.0), x + 16.0);
  // The cutoff ladder must stay inside the kernel's q-integral domain.
  while (y0 * std::pow(2.0, max_rungs - 1) > kernel.x_max() && max_rungs > 1)
    --max_rungs;
  if (y0 > kernel.x_max())
    throw InputError("series_solution: cutoff ladder exceeds the kernel domain");

  SeriesSolution out;
  out.energy = kernel.data().energy();
  out.n_max = n_max;
  ComplexFn f = [&kernel](double t) { return kernel.F(t); };
  const std::vector<double> bp = kernel.breakpoints(kernel.x_max());
  const std::vector<TailResult> tails =
      tail_chain(f, n_max, x, y0, max_rungs, tol, bp);

  out.y = {cplx{1.0, 0.0}, cplx{0.0, 0.0}};
  for (int n = 1; n <= n_max; ++n) {
    const TailResult& t = tails[static_cast<std::size_t>(n - 1)];
    out.terms.push_back(t.value);
    out.magnitudes.push_back(std::abs(t.value));
    out.term_converged.push_back(t.converged);
    out.max_spread = std::max(out.max_spread, t.spread);
    if (!t.converged) out.converged = false;
    if (n % 2 == 0) {
      out.y[0] += t.value;
    } else {
      out.y[1] += t.value;
    }
    out.partials.push_back(out.y);
  }
  return out;
}

std::array<std::complex<double>, 2> chain_state(
    const OscKernel& kernel, double x, const std::array<std::complex<double>, 2>& y) {
  const FloquetData& d = kernel.data();
  const cplx phi = d.phi(x);
  const cplx dphi = d.phi_prime(x);
  const cplx eip = std::polar(1.0, kernel.p_phase(x));
  const cplx a = y[0] * eip;
  const cplx b = y[1] * std::conj(eip);
  return {phi * a + std::conj(phi) * b, dphi * a + std::conj(dphi) * b};
}

WkbErrorCurve wkb_compare(const PeriodicPotential& v0, const DecayingPotential& v,
                          double energy, double x_max, std::size_t grid_n, int n_max,
                          const Tolerance& tol) {
  if (!(x_max > 0.0)) throw InputError("wkb_compare: x_max must be positive");
  grid_n = std::max<std::size_t>(grid_n, 8);

  // The matching data at x_max feeds an error curve judged on the 1e-2
  // scale, so the tail ladder may stop at 1e-5; slowly decaying kernels have
  // algebraic diagonal tails that never reach tighter targets.
  const int rungs = 5;
  OscKernel kernel =
      make_kernel(v0, v, energy, 2.0 * x_max * std::pow(2.0, rungs - 1) + 1.0, tol);
  WkbErrorCurve out;
  const Tolerance series_tol{std::max(tol.abs_tol, 1e-5), std::max(tol.rel_tol, 1e-7),
                             tol.max_steps};
  out.series = series_solution(kernel, x_max, n_max, 2.0 * x_max, rungs, series_tol);

  // Matching data at x_max from the substitution chain, then a backward solve
  // of the full equation -u'' + (V0 + V) u = E u as a 4-real system.
  const auto u_top = chain_state(kernel, x_max, out.series.y);
  auto rhs = [&v0, &v, energy](double x, std::span<const double> y, std::span<double> dy) {
    const double c = v0(x) + v(x) - energy;
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = c * y[0];
    dy[3] = c * y[1];
  };
  std::vector<double> bp = v.breakpoints(x_max);
  {
    auto pb = v0.breakpoints(x_max);
    bp.insert(bp.end(), pb.begin(), pb.end());
    std::sort(bp.begin(), bp.end());
  }
  const OdeSolution back = integrate_ode(
      rhs, x_max, 0.0,
      {u_top[0].real(), u_top[0].imag(), u_top[1].real(), u_top[1].imag()}, tol,
      std::move(bp));

  out.xs.resize(grid_n + 1);
  out.r.resize(grid_n + 1);
  out.u_num.resize(grid_n + 1);
  out.u_wkb.resize(grid_n + 1);
  const FloquetData& d = kernel.data();
  for (std::size_t i = 0; i <= grid_n; ++i) {
    const double x = x_max * static_cast<double>(i) / static_cast<double>(grid_n);
    const cplx u_num{back.eval(x, 0), back.eval(x, 1)};
    const cplx principal = d.phi(x) * std::polar(1.0, kernel.p_phase(x));
    out.xs[i] = x;
    out.u_num[i] = u_num;
    out.u_wkb[i] = principal;
    out.r[i] = std::abs(u_num - principal) / std::abs(d.phi(x));
  }
  return out;
}

}  // namespace spectra1d

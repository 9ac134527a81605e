#include "spectra1d/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spectra1d/floquet.hpp"

namespace spectra1d {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

}  // namespace

SpectralDensitySample density_prufer(const PeriodicPotential& v0,
                                     const DecayingPotential& v, double L, double energy,
                                     const Tolerance& tol) {
  if (!(L > 0.0)) throw InputError("density_prufer: L must be positive");
  FloquetData data = FloquetData::build(v0, energy, tol);
  PrueferTrajectory traj = pruefer_flow(data, v, L, dirichlet_init(data), tol);
  SpectralDensitySample out;
  out.energy = energy;
  out.method = DensityMethod::prufer_formula;
  out.truncation = L;
  out.density = 2.0 / (kPi * data.omega()) * std::exp(-2.0 * traj.ln_r(L));
  return out;
}

WeylM m_function(const PeriodicPotential& v0, const DecayingPotential& v, double L,
                 std::complex<double> z, const Tolerance& tol) {
  if (!(z.imag() > 0.0)) throw InputError("m_function: need Im z > 0");
  if (!(L > 0.0)) throw InputError("m_function: L must be positive");

  // Complex monodromy of H0 over one period: two canonical solutions as an
  // 8-dimensional real system.
  auto rhs0 = [&v0, z](double x, std::span<const double> y, std::span<double> dy) {
    const double c = v0(x);
    // u'' = (V0 - z) u, components (Re u1, Im u1, Re u1', Im u1', u2...)
    for (int s = 0; s < 2; ++s) {
      const cplx u{y[4 * s], y[4 * s + 1]};
      const cplx up{y[4 * s + 2], y[4 * s + 3]};
      const cplx upp = (c - z) * u;
      dy[4 * s] = up.real();
      dy[4 * s + 1] = up.imag();
      dy[4 * s + 2] = upp.real();
      dy[4 * s + 3] = upp.imag();
    }
  };
  std::vector<double> bp0;
  for (double b : v0.period_breakpoints())
    if (b > 0.0 && b < 1.0) bp0.push_back(b);
  const OdeSolution mono =
      integrate_ode(rhs0, 0.0, 1.0, {1, 0, 0, 0, 0, 0, 1, 0}, tol, bp0);
  const auto& f = mono.final_state();
  const cplx q11{f[0], f[1]}, q21{f[2], f[3]}, q12{f[4], f[5]}, q22{f[6], f[7]};

  // Floquet multipliers: roots of lambda^2 - (Tr Q) lambda + 1.
  const cplx tr = q11 + q22;
  const cplx disc = std::sqrt(tr * tr - 4.0);
  const cplx l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
  const double d1 = std::abs(std::abs(l1) - 1.0), d2 = std::abs(std::abs(l2) - 1.0);
  if (d1 < 1e-13 && d2 < 1e-13) {
    throw PrecisionError(
        "m_function: both Floquet multipliers numerically on the unit circle; "
        "increase Im z or tighten the tolerance");
  }
  const cplx lambda = (std::abs(l1) < std::abs(l2)) ? l1 : l2;

  // Eigenvector of Q for the decaying branch, better-conditioned row.
  cplx a1 = q12, a2 = lambda - q11;
  {
    const cplx b1 = lambda - q22, b2 = q21;
    if (std::norm(b1) + std::norm(b2) > std::norm(a1) + std::norm(a2)) {
      a1 = b1;
      a2 = b2;
    }
  }

  // Anchor the decaying solution at the first integer point past L, then
  // back-propagate through V0 + V_L to x = 0.
  const double x0 = std::ceil(L);
  auto rhs = [&v0, &v, L, z](double x, std::span<const double> y, std::span<double> dy) {
    const double c = v0(x) + ((x <= L) ? v(x) : 0.0);
    const cplx u{y[0], y[1]};
    const cplx up{y[2], y[3]};
    const cplx upp = (c - z) * u;
    dy[0] = up.real();
    dy[1] = up.imag();
    dy[2] = upp.real();
    dy[3] = upp.imag();
  };
  std::vector<double> bp = v.breakpoints(x0);
  {
    auto pb = v0.breakpoints(x0);
    bp.insert(bp.end(), pb.begin(), pb.end());
    if (L < x0) bp.push_back(L);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  }
  const OdeSolution back = integrate_ode(
      rhs, x0, 0.0, {a1.real(), a1.imag(), a2.real(), a2.imag()}, tol, std::move(bp));
  const auto& g = back.final_state();
  const cplx u0{g[0], g[1]}, up0{g[2], g[3]};
  if (std::abs(u0) == 0.0)
    throw PrecisionError("m_function: u(0) vanished (Dirichlet pole)");
  return WeylM{z, up0 / u0};
}

SpectralDensitySample density_weyl(const PeriodicPotential& v0,
                                   const DecayingPotential& v, double L, double energy,
                                   std::vector<double> eps_sequence, const Tolerance& tol) {
  if (eps_sequence.size() < 2)
    throw InputError("density_weyl: need at least two eps values");
  for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
    if (!(eps_sequence[i] > 0.0))
      throw InputError("density_weyl: eps values must be positive");
    if (i > 0 && !(eps_sequence[i] < eps_sequence[i - 1]))
      throw InputError("density_weyl: eps sequence must decrease");
  }

  std::vector<double> vals(eps_sequence.size());
  for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
    const WeylM wm = m_function(v0, v, L, {energy, eps_sequence[i]}, tol);
    vals[i] = wm.m.imag() / kPi;
  }
  const std::size_t n = vals.size();
  const double e1 = eps_sequence[n - 2], e2 = eps_sequence[n - 1];
  const double v1 = vals[n - 2], v2 = vals[n - 1];
  const double extrapolated = v2 + (v2 - v1) * e2 / (e1 - e2);

  SpectralDensitySample out;
  out.energy = energy;
  out.method = DensityMethod::weyl_m;
  out.truncation = L;
  out.eps = e2;
  out.density = extrapolated;
  out.uncertainty = std::abs(v2 - v1);
  // monotone approach to the extrapolated value, up to a small tolerance
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double di = std::abs(vals[i] - extrapolated);
    const double dj = std::abs(vals[i + 1] - extrapolated);
    if (dj > di * (1.0 + 0.01) + 1e-12) out.warning = true;
  }
  return out;
}

LeeReport lee_bound_check(const std::vector<std::vector<double>>& gram,
                          const std::vector<double>& projections, double g_norm_sq) {
  const std::size_t n = gram.size();
  if (n == 0 || projections.size() != n)
    throw InputError("lee_bound_check: inconsistent sizes");
  for (std::size_t i = 0; i < n; ++i) {
    if (gram[i].size() != n) throw InputError("lee_bound_check: gram not square");
    if (std::abs(gram[i][i] - 1.0) > 1e-8)
      throw InputError("lee_bound_check: e_" + std::to_string(i) + " is not unit");
  }
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) off = std::max(off, std::abs(gram[i][j]));
  LeeReport rep;
  rep.alpha = static_cast<double>(n) * off;
  if (!(rep.alpha < 1.0))
    throw DomainError("lee_bound_check: alpha = " + std::to_string(rep.alpha) +
                      " >= 1 violates the hypothesis");
  rep.projections = projections;
  for (double c : projections) rep.lhs += c * c;
  rep.rhs = (1.0 + rep.alpha) * g_norm_sq;
  rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-12);
  return rep;
}

LeeReport lee_bound_check(const std::vector<RealFn>& e_fns, const RealFn& g, double L,
                          const Tolerance& tol) {
  const std::size_t n = e_fns.size();
  if (n == 0) throw InputError("lee_bound_check: no vectors");
  QuadOptions opt;
  opt.initial_panels = static_cast<std::size_t>(std::clamp(L, 8.0, 2e5));
  Tolerance qtol{std::max(tol.abs_tol, 1e-9), std::max(tol.rel_tol, 1e-9), tol.max_steps};
  auto inner = [&](const RealFn& a, const RealFn& b) {
    return quad([&](double x) { return a(x) * b(x) * (1.0 + x); }, 0.0, L, qtol, opt);
  };
  std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      gram[i][j] = gram[j][i] = inner(e_fns[i], e_fns[j]);
    }
  }
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = inner(g, e_fns[i]);
  return lee_bound_check(gram, proj, inner(g, g));
}

std::vector<PrueferVector> pruefer_unit_vectors(const PeriodicPotential& v0,
                                                const DecayingPotential& v,
                                                const std::vector<double>& energies,
                                                double L, const Tolerance& tol,
                                                Exec exec) {
  if (!(L > 0.0)) throw InputError("pruefer_unit_vectors: L must be positive");
  struct Slot {
    std::shared_ptr<PrueferTrajectory> traj;
    double a_norm, cg, k;
  };
  auto slots = map_indexed<Slot>(
      energies.size(),
      [&](std::size_t i) {
        FloquetData data = FloquetData::build(v0, energies[i], tol);
        auto traj = std::make_shared<PrueferTrajectory>(
            pruefer_flow(data, v, L, dirichlet_init(data), tol));
        QuadOptions opt;
        opt.initial_panels = static_cast<std::size_t>(std::clamp(L * 2.0, 8.0, 4e5));
        Tolerance qtol{1e-9, 1e-9, tol.max_steps};
        const double a = quad(
            [&](double x) {
              const double s = std::sin(2.0 * traj->theta(x));
              const double gp = traj->data().gamma_prime(x);
              return s * s / (gp * gp * (1.0 + x));
            },
            0.0, L, qtol, opt);
        return Slot{traj, a, capital_gamma(traj->data(), tol), traj->data().k()};
      },
      exec);

  std::vector<PrueferVector> out(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    auto traj = slots[i].traj;
    const double root_a = std::sqrt(slots[i].a_norm);
    out[i].energy = energies[i];
    out[i].a_norm = slots[i].a_norm;
    out[i].capital_gamma = slots[i].cg;
    out[i].k = slots[i].k;
    out[i].fn = [traj, root_a, L](double x) {
      if (x < 0.0 || x > L) return 0.0;
      return std::sin(2.0 * traj->theta(x)) /
             (root_a * traj->data().gamma_prime(x) * (1.0 + x));
    };
  }
  return out;
}

SeparateSetReport separate_set_scan(const PeriodicPotential& v0,
                                    const DecayingPotential& v, double eps, double sigma,
                                    double beta, double c1, int n_cap, const Grid& e_grid,
                                    double max_length, const Tolerance& tol, Exec exec) {
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("separate_set_scan: eps in (0,1)");
  if (!(sigma >= 0.0)) throw InputError("separate_set_scan: sigma must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw InputError("separate_set_scan: beta in [0,1)");
  if (n_cap < 1) throw InputError("separate_set_scan: N must be >= 1");

  SeparateSetReport rep;
  rep.eps = eps;
  rep.n_cap = n_cap;
  rep.truncation = std::pow(eps, -1.0 - sigma);
  if (rep.truncation > max_length) {
    throw ResourceError("separate_set_scan: L = eps^{-1-sigma} = " +
                        std::to_string(rep.truncation) + " exceeds the cap " +
                        std::to_string(max_length));
  }
  rep.threshold = (1.0 - beta) * c1 * std::log(1.0 / eps);
  rep.k_gap = std::pow(eps, 1.0 / (static_cast<double>(n_cap) * n_cap));

  const double L = rep.truncation;
  struct Row {
    double e, k, res;
  };
  auto rows = map_indexed<Row>(
      e_grid.size(),
      [&](std::size_t i) {
        const double e = e_grid[i];
        FloquetData data = FloquetData::build(v0, e, tol);
        PrueferTrajectory traj = pruefer_flow(data, v, L, dirichlet_init(data), tol);
        QuadOptions opt;
        opt.breakpoints = v.breakpoints(L);
        opt.initial_panels = static_cast<std::size_t>(std::clamp(L * 2.0, 8.0, 4e5));
        Tolerance qtol{1e-8, 1e-8, tol.max_steps};
        const double res = quad(
            [&](double x) {
              return v(x) * std::sin(2.0 * traj.theta(x)) / traj.data().gamma_prime(x);
            },
            0.0, L, qtol, opt);
        return Row{e, data.k(), res};
      },
      exec);

  for (const Row& r : rows) {
    if (std::abs(r.res) >= rep.threshold) {
      rep.candidates.push_back(SeparateCandidate{r.e, r.k, r.res, false});
    }
  }
  // Greedy extraction, largest |resonance| first, pairwise k gaps enforced.
  std::vector<std::size_t> order(rep.candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(rep.candidates[a].resonance) > std::abs(rep.candidates[b].resonance);
  });
  std::vector<double> taken_k;
  for (std::size_t idx : order) {
    bool ok = true;
    for (double tk : taken_k) {
      if (std::abs(rep.candidates[idx].k - tk) < rep.k_gap) {
        ok = false;
        break;
      }
    }
    if (ok) {
      rep.candidates[idx].selected = true;
      taken_k.push_back(rep.candidates[idx].k);
    }
  }
  rep.selected_count = taken_k.size();
  rep.bound_holds = rep.selected_count <= static_cast<std::size_t>(n_cap);
  return rep;
}

}  // namespace spectra1d

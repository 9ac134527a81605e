// Acceptance suite: every quantitative contract of the library, one pass/fail
// line per criterion. Tolerances and thresholds are pinned here, not
// configurable. Exit code 0 iff every criterion passes.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spectra1d/ck_multilinear.hpp"
#include "spectra1d/floquet.hpp"
#include "spectra1d/parallel.hpp"
#include "spectra1d/pruefer.hpp"
#include "spectra1d/spectral.hpp"
#include "spectra1d/wkb.hpp"

namespace {

using namespace spectra1d;
using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Free-case spectral density: both methods equal sqrt(E)/pi to 1e-4
//    relative at E in {1, 4, 9}; under 10 s.
Outcome criterion1() {
  Outcome out;
  auto v0 = PeriodicPotential::zero();
  auto v = DecayingPotential::zero();
  for (double e : {1.0, 4.0, 9.0}) {
    const double exact = std::sqrt(e) / kPi;
    const double dp = density_prufer(v0, v, 1.0, e).density;
    const double dw = density_weyl(v0, v, 1.0, e, {1e-2, 1e-3, 1e-4}).density;
    out.require(std::abs(dp - exact) <= 1e-4 * exact,
                "prufer density at E=" + fmt(e) + ": " + fmt(dp) + " vs " + fmt(exact));
    out.require(std::abs(dw - exact) <= 1e-4 * exact,
                "weyl density at E=" + fmt(e) + ": " + fmt(dw) + " vs " + fmt(exact));
  }
  return out;
}

// --------------------------------------------------------------------------
// 2. Cross-method density consistency for V0 = mathieu:1.0, V = bump:5,0,1,
//    L = 2: within 2% relative on a 50-point mid-band grid; under 5 min.
Outcome criterion2() {
  Outcome out;
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("bump:5,0,1");
  const Grid grid = Grid::linspace(3.0, 7.0, 50);
  struct Row {
    double e, gap;
  };
  auto rows = map_indexed<Row>(grid.size(), [&](std::size_t i) {
    const double e = grid[i];
    const double dp = density_prufer(v0, v, 2.0, e).density;
    const double dw = density_weyl(v0, v, 2.0, e, {1e-2, 1e-3, 1e-4}).density;
    return Row{e, std::abs(dp - dw) / dp};
  });
  double worst = 0.0, worst_e = 0.0;
  for (const Row& r : rows) {
    if (r.gap > worst) {
      worst = r.gap;
      worst_e = r.e;
    }
  }
  out.note("max rel gap " + fmt(worst) + " at E=" + fmt(worst_e));
  out.require(worst <= 0.02, "2% cross-method agreement");
  return out;
}

// --------------------------------------------------------------------------
// 3. Pruefer-direct equivalence: reconstructed u within 1e-5 relative
//    sup-norm of the direct second-order solve on [0, 50], 20 scenarios.
Outcome criterion3() {
  Outcome out;
  std::mt19937 rng(20240917);
  std::uniform_real_distribution<double> ur(0.5, 2.0), uth(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> uc(-1.5, 1.5), ua(0.5, 1.2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    PeriodicPotential v0 = PeriodicPotential::zero();
    if (trial % 3 == 1) v0 = PeriodicPotential::parse("mathieu:1.0");
    if (trial % 3 == 2) v0 = PeriodicPotential::parse("square:1.0,0.5");
    char buf[96];
    if (trial % 2 == 0) {
      std::snprintf(buf, sizeof buf, "power:%.4f,%.4f", uc(rng), ua(rng));
    } else {
      std::snprintf(buf, sizeof buf, "wvn:%.4f,1.3,%.4f,0.2", uc(rng), ua(rng));
    }
    auto v = DecayingPotential::parse(buf);
    const double e = 4.0 + 2.0 * ur(rng);
    auto data = FloquetData::build(v0, e);
    auto traj = pruefer_flow(data, v, 50.0, PrueferInit{ur(rng), uth(rng)});
    auto [u0, up0] = traj.reconstruct(0.0);

    auto rhs = [&](double x, std::span<const double> y, std::span<double> dy) {
      dy[0] = y[1];
      dy[1] = (v0(x) + v(x) - e) * y[0];
    };
    std::vector<double> bp = v.breakpoints(50.0);
    auto pb = v0.breakpoints(50.0);
    bp.insert(bp.end(), pb.begin(), pb.end());
    std::sort(bp.begin(), bp.end());
    auto direct = integrate_ode(rhs, 0.0, 50.0, {u0, up0}, Tolerance::tight(), bp);

    double sup = 0.0, scale = 0.0;
    for (double x = 0.0; x <= 50.0; x += 0.2) {
      auto [u, up] = traj.reconstruct(x);
      (void)up;
      sup = std::max(sup, std::abs(u - direct.eval(x, 0)));
      scale = std::max(scale, std::abs(direct.eval(x, 0)));
    }
    worst = std::max(worst, sup / scale);
  }
  out.note("worst relative sup-norm " + fmt(worst));
  out.require(worst <= 1e-5, "1e-5 relative sup-norm over 20 scenarios");
  return out;
}

// --------------------------------------------------------------------------
// 4. Monodromy unimodularity: det Q = 1 within 1e-9 on 100 random (V0, E);
//    free discriminant equals 2 cos sqrt(E) within 1e-8 on [0.1, 50].
Outcome criterion4() {
  Outcome out;
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> ue(0.1, 50.0), ua(0.0, 3.0), uw(0.2, 0.8);
  std::uniform_int_distribution<int> kind(0, 2);
  double worst_det = 0.0;
  for (int i = 0; i < 100; ++i) {
    PeriodicPotential v0 = PeriodicPotential::zero();
    char buf[64];
    if (int k = kind(rng); k == 1) {
      std::snprintf(buf, sizeof buf, "mathieu:%.6f", ua(rng));
      v0 = PeriodicPotential::parse(buf);
    } else if (k == 2) {
      std::snprintf(buf, sizeof buf, "square:%.6f,%.6f", ua(rng), uw(rng));
      v0 = PeriodicPotential::parse(buf);
    }
    worst_det = std::max(worst_det, std::abs(monodromy(v0, ue(rng)).det() - 1.0));
  }
  out.note("max |det Q - 1| = " + fmt(worst_det));
  out.require(worst_det <= 1e-9, "unimodularity within 1e-9");

  auto free = PeriodicPotential::zero();
  const Grid grid = Grid::linspace(0.1, 50.0, 200);
  auto errs = map_indexed<double>(grid.size(), [&](std::size_t i) {
    return std::abs(discriminant(free, grid[i]) - 2.0 * std::cos(std::sqrt(grid[i])));
  });
  double worst_disc = 0.0;
  for (double d : errs) worst_disc = std::max(worst_disc, d);
  out.note("max free-discriminant error " + fmt(worst_disc));
  out.require(worst_disc <= 1e-8, "free discriminant within 1e-8");
  return out;
}

// --------------------------------------------------------------------------
// 5. Multilinear bound shape: for three kernels the normalized ratios
//    [M_n^* sqrt(n!)/||g||^n]^{1/n} vary by less than a factor 3 over
//    n = 1..6 and sit under one fitted constant; the simplex identity
//    M_n(1)(0, x') = x'^n/n! holds to 1e-10 for n <= 8.
Outcome criterion5() {
  Outcome out;

  struct Kernel {
    std::string name;
    ComplexFn g;
    std::vector<double> bp;
  };
  std::vector<Kernel> kernels;
  kernels.push_back(
      {"power", [](double x) { return cplx{std::pow(1.0 + x, -0.9), 0.0}; }, {}});
  kernels.push_back(
      {"modulated",
       [](double x) { return std::polar(std::pow(1.0 + x, -0.9), 2.0 * x); },
       {}});
  auto osc = std::make_shared<OscKernel>(
      make_kernel(PeriodicPotential::parse("mathieu:1.0"),
                  DecayingPotential::parse("power:1,0.9"), 5.0, 256.0));
  kernels.push_back({"wkb", [osc](double x) { return osc->F(x); }, {}});

  double fitted_c = 0.0;
  for (const Kernel& k : kernels) {
    RealFn absg = [&k](double x) { return std::abs(k.g(x)); };
    auto ms = MartingaleStructure::build(absg, 1.5, 8, 256.0);
    const double bn = b_norm(k.g, ms, 1.0).value;
    const auto stars = multi_M_star_all(k.g, 6, Grid::linspace(0.0, 256.0, 48));
    double lo = 1e300, hi = 0.0;
    double fact = 1.0;
    std::string ratios;
    for (int n = 1; n <= 6; ++n) {
      fact *= n;
      const double ratio = std::pow(stars[static_cast<std::size_t>(n - 1)].value *
                                        std::sqrt(fact) / std::pow(bn, n),
                                    1.0 / n);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      ratios += (n > 1 ? "," : "") + fmt(ratio);
    }
    fitted_c = std::max(fitted_c, hi);
    out.note(k.name + " ratios [" + ratios + "]");
    out.require(hi / lo < 3.0, k.name + ": factor-3 variation (got " + fmt(hi / lo) + ")");
  }
  out.note("fitted constant C = " + fmt(fitted_c));
  out.require(fitted_c < 10.0, "single fitted constant below 10");

  auto one = [](double) { return cplx{1.0, 0.0}; };
  double fact = 1.0;
  double worst = 0.0;
  for (int n = 1; n <= 8; ++n) {
    fact *= n;
    std::vector<ComplexFn> gs(static_cast<std::size_t>(n), one);
    for (double xp : {1.0, 1.5}) {
      const cplx got = multi_M(gs, 0.0, xp, Tolerance::tight());
      worst = std::max(worst, std::abs(got - cplx{std::pow(xp, n) / fact, 0.0}));
    }
  }
  out.note("max simplex identity error " + fmt(worst));
  out.require(worst <= 1e-10, "simplex identity to 1e-10 for n <= 8");
  return out;
}

// --------------------------------------------------------------------------
// 6. Martingale adaptedness at depth 8 for f = (1+x)^{-0.9}, p = 1.5,
//    within 1e-9 relative, by independent per-cell recomputation.
Outcome criterion6() {
  Outcome out;
  auto f = [](double x) { return std::pow(1.0 + x, -0.9); };
  auto ms = MartingaleStructure::build(f, 1.5, 8, 1024.0);
  const double worst = ms.adapted_max_ratio(f);
  out.note("max cell ratio " + fmt(worst));
  out.require(worst <= 1.0 + 1e-9, "2^{-m} budget within 1e-9 relative");
  return out;
}

// --------------------------------------------------------------------------
// 7. Tail-integral calculus: B_2(e^{-t}, e^{-t})(x) = e^{-2x}/2 within 1e-8;
//    finite-difference derivative equals -g_1 B_1 within 1e-4 at 20 points.
Outcome criterion7() {
  Outcome out;
  auto g = [](double t) { return cplx{std::exp(-t), 0.0}; };
  double worst_cf = 0.0;
  for (double x : {0.0, 0.5, 1.7, 3.0}) {
    const auto r = tail_B({g, g}, x, x + 8.0);
    if (!r.converged) out.require(false, "B2 ladder converged at x=" + fmt(x));
    worst_cf = std::max(worst_cf,
                        std::abs(r.value - cplx{0.5 * std::exp(-2.0 * x), 0.0}));
  }
  out.note("max closed-form error " + fmt(worst_cf));
  out.require(worst_cf <= 1e-8, "B2 closed form within 1e-8");

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> ux(0.1, 2.0);
  double worst_fd = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double x = ux(rng);
    const double h = 1e-4;
    const cplx fd =
        (tail_B({g, g}, x + h, x + 10.0).value - tail_B({g, g}, x - h, x + 10.0).value) /
        (2.0 * h);
    const cplx b1 = tail_B({g}, x, x + 10.0).value;
    worst_fd = std::max(worst_fd, std::abs(fd + g(x) * b1));
  }
  out.note("max derivative-identity error " + fmt(worst_fd));
  out.require(worst_fd <= 1e-4, "dB2/dx = -g1 B1 within 1e-4");
  return out;
}

// --------------------------------------------------------------------------
// 8. WKB: compact-support series matches the backward reduced solve within
//    1e-6 and the error curve vanishes beyond the support; the power-decay
//    case has max r over [x_max/2, x_max] <= 0.05 at x_max = 1000. Under
//    10 min.
Outcome criterion8() {
  Outcome out;
  auto v0 = PeriodicPotential::parse("mathieu:1.0");

  {
    auto v = DecayingPotential::parse("bump:1,0,5");
    auto kern = make_kernel(v0, v, 5.0, 64.0);
    double worst = 0.0;
    for (double x : {0.0, 1.0, 2.5, 4.0}) {
      auto s = series_solution(kern, x, 14);
      if (!s.converged) out.require(false, "series ladder converged at x=" + fmt(x));
      // oracle: backward solve of Y' = [[0,G],[conj G,0]] Y, G = -F, from the
      // support end where Y = (1, 0) exactly
      auto rhs = [&kern](double t, std::span<const double> y, std::span<double> dy) {
        const cplx gg = -kern.F(t);
        const cplx d1 = gg * cplx{y[2], y[3]};
        const cplx d2 = std::conj(gg) * cplx{y[0], y[1]};
        dy[0] = d1.real();
        dy[1] = d1.imag();
        dy[2] = d2.real();
        dy[3] = d2.imag();
      };
      auto sol = integrate_ode(rhs, 5.0, x, {1.0, 0.0, 0.0, 0.0}, Tolerance::tight(),
                               kern.breakpoints(5.0));
      const cplx y1{sol.final_state()[0], sol.final_state()[1]};
      const cplx y2{sol.final_state()[2], sol.final_state()[3]};
      worst = std::max({worst, std::abs(s.y[0] - y1), std::abs(s.y[1] - y2)});
    }
    out.note("bump series vs ODE max " + fmt(worst));
    out.require(worst <= 1e-6, "series vs backward integration within 1e-6");

    auto curve = wkb_compare(v0, v, 5.0, 40.0, 120, 14);
    double beyond = 0.0;
    for (std::size_t i = 0; i < curve.xs.size(); ++i) {
      if (curve.xs[i] > 5.0 + 1e-9) beyond = std::max(beyond, curve.r[i]);
    }
    out.note("bump r beyond support " + fmt(beyond));
    out.require(beyond <= 1e-6, "r = 0 beyond the support within tolerance");
  }

  {
    auto v = DecayingPotential::parse("power:1,0.9");
    auto curve = wkb_compare(v0, v, 5.0, 1000.0, 200, 8);
    double tail = 0.0;
    for (std::size_t i = 0; i < curve.xs.size(); ++i) {
      if (curve.xs[i] >= 500.0) tail = std::max(tail, curve.r[i]);
    }
    out.note("power-decay max r on [500, 1000] = " + fmt(tail));
    out.require(tail <= 0.05, "WKB error decay at x_max = 1000");
  }
  return out;
}

// --------------------------------------------------------------------------
// 9. Oscillatory bounds: the stalling-phase sweep fits a + b log(1/gamma)
//    with R^2 >= 0.95 and sits under a c/gamma + c' envelope; mode-k
//    integrals decay like 1/|k| (fit exponent in [0.8, 1.2]).
Outcome criterion9() {
  Outcome out;
  std::vector<double> gammas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> xs, ys;
  for (double g : gammas) {
    auto stall = [g](double x) { return kPi / 2.0 - g * std::min(x, 1.0 / g); };
    const double L = std::min(10.0 / g, 1e6);
    ys.push_back(std::abs(osc_integral(g, stall, L, Tolerance{1e-8, 1e-8, 1000})));
    xs.push_back(std::log(1.0 / g));
  }
  const auto fit = oracles::fit_affine(xs, ys);
  out.note("log fit a=" + fmt(fit.a) + " b=" + fmt(fit.b) + " R2=" + fmt(fit.r2));
  out.require(fit.r2 >= 0.95, "affine-in-log fit with R^2 >= 0.95");

  // c/gamma + c' envelope with fitted constants
  const double c_prime = *std::min_element(ys.begin(), ys.end());
  double c = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i)
    c = std::max(c, gammas[i] * (ys[i] - c_prime));
  out.note("envelope c=" + fmt(c) + " c'=" + fmt(c_prime));
  bool env = true;
  for (std::size_t i = 0; i < gammas.size(); ++i)
    env = env && ys[i] <= c / gammas[i] + c_prime + 1e-9;
  out.require(env && c <= 10.0, "c/gamma + c' envelope with small c");

  std::vector<double> lks, lvs;
  const double gamma = 1.0;
  auto stall = [gamma](double x) { return kPi / 2.0 - gamma * std::min(x, 1.0 / gamma); };
  for (int k : {2, 3, 4, 6, 8, 11, 16, 23, 32}) {
    const cplx v =
        fourier_mode_integral(k, gamma, stall, 200.0, Tolerance{1e-10, 1e-10, 1000});
    lks.push_back(std::log(static_cast<double>(k)));
    lvs.push_back(std::log(std::abs(v)));
  }
  const auto mfit = oracles::fit_affine(lks, lvs);
  out.note("mode decay exponent " + fmt(-mfit.b));
  out.require(-mfit.b >= 0.8 && -mfit.b <= 1.2, "1/|k| decay exponent in [0.8, 1.2]");
  return out;
}

// --------------------------------------------------------------------------
// 10. Almost-orthogonality growth: |I22| vs log(1/|E1-E2|) over five decades
//     admits an affine upper envelope (no superlinear growth); |I4| is stable
//     across L in {1e2, 1e3, 1e4}.
Outcome criterion10() {
  Outcome out;
  auto v0 = PeriodicPotential::zero();
  auto vz = DecayingPotential::zero();
  std::vector<double> gaps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  auto ys = map_indexed<double>(gaps.size(), [&](std::size_t i) {
    const double gap = gaps[i];
    const double L = std::min(10.0 / gap, 1e6);
    const auto oi = orthogonality_integrals(v0, vz, 1.0, 1.0 + gap, L,
                                            PeriodicWeight{PeriodicWeight::Kind::one});
    return std::abs(oi.i22);
  });
  std::string seq;
  for (double y : ys) seq += fmt(y) + " ";
  out.note("|I22| per decade: " + seq);
  out.require(ys.back() > ys.front(), "log-divergence visible across the sweep");
  // superlinear growth in log(1/gap) would show as systematically positive
  // second differences comparable to the first increments
  const double d1_first = ys[1] - ys[0];
  double worst_d2 = -1e300;
  for (std::size_t d = 0; d + 2 < ys.size(); ++d)
    worst_d2 = std::max(worst_d2, ys[d + 2] - 2.0 * ys[d + 1] + ys[d]);
  out.note("max second difference " + fmt(worst_d2));
  out.require(worst_d2 <= std::max(0.5, 0.5 * d1_first),
              "affine upper envelope (no superlinear growth)");

  auto v0m = PeriodicPotential::parse("mathieu:1.0");
  auto vp = DecayingPotential::parse("power:1,1");
  std::vector<double> ls{1e2, 1e3, 1e4};
  auto i4s = map_indexed<double>(ls.size(), [&](std::size_t i) {
    return cos4_integral(v0m, vp, 5.0, ls[i],
                         PeriodicWeight{PeriodicWeight::Kind::one});
  });
  out.note("I4(L) = " + fmt(i4s[0]) + ", " + fmt(i4s[1]) + ", " + fmt(i4s[2]));
  const double inc1 = std::abs(i4s[1] - i4s[0]);
  const double inc2 = std::abs(i4s[2] - i4s[1]);
  out.require(std::max(inc1, inc2) <= 0.5, "I4 stable in L (increments <= 0.5)");
  return out;
}

// --------------------------------------------------------------------------
// 11. Near-orthogonality inequality on 100 random families with alpha < 1 and
//     on Pruefer-built vectors at 5 separated energies; A_i tracks
//     (1/2) Gamma(E) log L within an additive O(1) band over three decades.
Outcome criterion11() {
  Outcome out;
  std::mt19937 rng(777);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> un(2, 8);
  int done = 0, draws = 0;
  while (done < 100 && draws < 400) {
    ++draws;
    const int n = un(rng);
    const int dim = 40;
    std::vector<std::vector<double>> vecs(static_cast<std::size_t>(n),
                                          std::vector<double>(dim));
    std::vector<double> tilt(dim);
    for (auto& t : tilt) t = gauss(rng);
    for (auto& v : vecs) {
      for (int d = 0; d < dim; ++d)
        v[static_cast<std::size_t>(d)] = gauss(rng) + 0.05 * tilt[static_cast<std::size_t>(d)];
      double nn = 0.0;
      for (double c : v) nn += c * c;
      for (double& c : v) c /= std::sqrt(nn);
    }
    std::vector<std::vector<double>> gram(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(n)));
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d)
          s += vecs[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] *
               vecs[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
        gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
        if (i != j) off = std::max(off, std::abs(s));
      }
    if (n * off >= 1.0) continue;
    std::vector<double> g(dim);
    double gsq = 0.0;
    for (auto& c : g) {
      c = gauss(rng);
      gsq += c * c;
    }
    std::vector<double> proj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int d = 0; d < dim; ++d)
        s += g[static_cast<std::size_t>(d)] *
             vecs[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
      proj[static_cast<std::size_t>(i)] = s;
    }
    const auto rep = lee_bound_check(gram, proj, gsq);
    if (!rep.holds) out.require(false, "random family " + std::to_string(done));
    ++done;
  }
  out.note(std::to_string(done) + " random families checked");
  out.require(done == 100, "collected 100 admissible random families");

  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("power:1,1");
  const std::vector<double> energies{4.0, 4.75, 5.5, 6.25, 7.0};
  std::vector<double> ls{1e2, 1e3, 1e4};
  bool lee_ok = true;
  double worst_dev = 0.0, worst_spread = 0.0;
  std::vector<std::vector<double>> devs(energies.size());
  for (double L : ls) {
    const auto vecs = pruefer_unit_vectors(v0, v, energies, L);
    if (L == 1e3) {
      std::vector<RealFn> fns;
      for (const auto& pv : vecs) fns.push_back(pv.fn);
      const auto rep = lee_bound_check(fns, [&v](double x) { return v(x); }, L);
      out.note("pruefer frame alpha " + fmt(rep.alpha));
      lee_ok = rep.alpha < 1.0 && rep.holds;
    }
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      const double predicted = 0.5 * vecs[i].capital_gamma * std::log(L);
      devs[i].push_back(vecs[i].a_norm - predicted);
    }
  }
  out.require(lee_ok, "Pruefer frame satisfies the inequality with alpha < 1");
  for (auto& dv : devs) {
    for (double d : dv) worst_dev = std::max(worst_dev, std::abs(d));
    const auto [mn, mx] = std::minmax_element(dv.begin(), dv.end());
    worst_spread = std::max(worst_spread, *mx - *mn);
  }
  out.note("A_i deviation max " + fmt(worst_dev) + ", spread " + fmt(worst_spread));
  out.require(worst_dev <= 2.0, "A_i = (1/2) Gamma log L + O(1), |O(1)| <= 2");
  out.require(worst_spread <= 1.0, "O(1) band stable across three decades of L");
  return out;
}

// --------------------------------------------------------------------------
// 12. Appendix identities: the kernel identity pointwise to 1e-8 at 100
//     points; the discrete convolution bound with one fixed constant on 100
//     random sequences.
Outcome criterion12() {
  Outcome out;
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("power:1,1");
  auto kern = make_kernel(v0, v, 5.0, 128.0);
  const FloquetData& d = kern.data();
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> ux(0.0, 120.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng);
    const cplx phi = d.phi(x);
    const double im = std::imag(phi * std::conj(d.phi_prime(x)));
    const cplx lhs = cplx{0.0, 1.0} * v(x) * std::conj(phi) * std::conj(phi) *
                     std::polar(1.0, -2.0 * kern.p_phase(x)) / (2.0 * im);
    const cplx rhs =
        cplx{0.0, -1.0} * v(x) / (2.0 * d.gamma_prime(x)) * std::polar(1.0, -kern.h(x));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  out.note("max kernel-identity residual " + fmt(worst));
  out.require(worst <= 1e-8, "kernel identity residual within 1e-8");

  const double young = kPi / std::tanh(kPi);  // sum_d 1/(1+d^2)
  std::mt19937 rng2(41);
  std::uniform_real_distribution<double> uf(0.0, 1.0);
  bool conv_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + static_cast<int>(uf(rng2) * 60);
    std::vector<double> f(static_cast<std::size_t>(n));
    double ss = 0.0;
    for (auto& w : f) {
      w = uf(rng2);
      ss += w * w;
    }
    double lhs = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        lhs += f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(j)] /
               (1.0 + (i - j) * (i - j));
    conv_ok = conv_ok && lhs <= young * ss * (1.0 + 1e-12);
  }
  out.note("fixed constant C = pi coth(pi) = " + fmt(young));
  out.require(conv_ok, "discrete convolution bound on 100 sequences");
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double time_cap_s;  // 0: none stated
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria{
      {1, "free-case spectral density (both methods, sqrt(E)/pi, 1e-4)", 10.0,
       criterion1},
      {2, "cross-method density consistency (mathieu + bump, 2%)", 300.0, criterion2},
      {3, "Pruefer-direct equivalence (1e-5 rel sup-norm, 20 scenarios)", 0.0,
       criterion3},
      {4, "monodromy unimodularity and free discriminant", 0.0, criterion4},
      {5, "multilinear bound shape and simplex identity", 0.0, criterion5},
      {6, "martingale adaptedness at depth 8 (1e-9 relative)", 0.0, criterion6},
      {7, "tail-integral calculus (closed form and derivative identity)", 0.0,
       criterion7},
      {8, "WKB series, compact-support oracle and error decay", 600.0, criterion8},
      {9, "oscillatory bounds (log fit, 1/gamma envelope, mode decay)", 0.0,
       criterion9},
      {10, "almost-orthogonality growth and I4 stability", 0.0, criterion10},
      {11, "near-orthogonality inequality and A_i normalization", 0.0, criterion11},
      {12, "appendix identities (kernel identity, convolution bound)", 0.0,
       criterion12},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_cap_s > 0.0 && elapsed > c.time_cap_s) {
      out.pass = false;
      out.detail += "; runtime " + fmt(elapsed) + " s exceeds " + fmt(c.time_cap_s) + " s";
    }
    std::printf("[%s] criterion %2d: %s (%.1f s)%s%s\n", out.pass ? "PASS" : "FAIL",
                c.id, c.title, elapsed, out.detail.empty() ? "" : " -- ",
                out.detail.c_str());
    if (!out.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("acceptance: %d of %zu criteria FAILED\n", failures, criteria.size());
  }
  return failures == 0 ? 0 : 1;
}

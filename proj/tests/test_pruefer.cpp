#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spectra1d/pruefer.hpp"

using namespace spectra1d;
using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

namespace {

// Direct second-order solve of -u'' + (V0 + V - E) u = 0, the oracle the
// Pruefer route is checked against.
OdeSolution direct_solve(const PeriodicPotential& v0, const DecayingPotential& v,
                         double e, double length, double u0, double up0) {
  auto rhs = [&](double x, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = (v0(x) + v(x) - e) * y[0];
  };
  std::vector<double> bp = v.breakpoints(length);
  auto pb = v0.breakpoints(length);
  bp.insert(bp.end(), pb.begin(), pb.end());
  std::sort(bp.begin(), bp.end());
  return integrate_ode(rhs, 0.0, length, {u0, up0}, Tolerance::tight(), bp);
}

}  // namespace

TEST_CASE("free flow: theta(x) = x, lnR stays zero") {
  auto traj = pruefer_flow(PeriodicPotential::zero(), DecayingPotential::zero(), 1.0,
                           20.0, {1.0, 0.0});
  for (double x : {0.5, 3.0, 11.0, 20.0}) {
    CHECK(std::abs(traj.theta(x) - x) < 1e-9);
    CHECK(std::abs(traj.ln_r(x)) < 1e-15);  // rhs vanishes identically
  }
}

TEST_CASE("V = 0 with a nontrivial V0 keeps lnR frozen") {
  auto traj = pruefer_flow(PeriodicPotential::parse("mathieu:1.0"),
                           DecayingPotential::zero(), 5.0, 30.0, {2.0, 0.7});
  for (double x : {1.0, 7.7, 30.0}) {
    CHECK(std::abs(traj.ln_r(x) - std::log(2.0)) < 1e-14);
  }
}

TEST_CASE("to_rho: free plane-wave values") {
  auto d = FloquetData::build(PeriodicPotential::zero(), 1.0);
  {
    auto rd = to_rho(d, 0.0, 1.0, 0.0);  // (sin x, cos x) at x = 0
    CHECK(std::abs(rd.rho - cplx{1.0, 0.0}) < 1e-9);
  }
  {
    auto rd = to_rho(d, 1.0, 0.0, 0.0);  // (cos x, -sin x) at x = 0
    CHECK(std::abs(rd.rho) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::arg(rd.rho) == doctest::Approx(kPi / 2.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(to_rho(d, 0.0, 0.0, 0.0), InputError);
}

TEST_CASE("to_rho: reconstruction identity at random states (mathieu)") {
  auto d = FloquetData::build(PeriodicPotential::parse("mathieu:1.0"), 5.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uu(-2.0, 2.0), ux(0.0, 10.0);
  for (int i = 0; i < 50; ++i) {
    const double u = uu(rng), up = uu(rng), x = ux(rng);
    if (u == 0.0 && up == 0.0) continue;
    auto rd = to_rho(d, u, up, x);
    // (u, u')^T = (1/2i)[rho (phi, phi') - conj(rho) (conj phi, conj phi')]
    const double u_back = std::imag(rd.rho * d.phi(x));
    const double up_back = std::imag(rd.rho * d.phi_prime(x));
    CHECK(std::abs(u_back - u) < 1e-10 * (1.0 + std::abs(u)));
    CHECK(std::abs(up_back - up) < 1e-10 * (1.0 + std::abs(up)));
  }
}

TEST_CASE("reconstruct: free flow gives sin x") {
  auto d = FloquetData::build(PeriodicPotential::zero(), 1.0);
  auto init = dirichlet_init(d);  // (u, u')(0) = (0, 1): u = sin x
  auto traj = pruefer_flow(d, DecayingPotential::zero(), 15.0, init);
  for (double x = 0.0; x <= 15.0; x += 0.37) {
    auto [u, up] = traj.reconstruct(x);
    CHECK(std::abs(u - std::sin(x)) < 1e-8);
    CHECK(std::abs(up - std::cos(x)) < 1e-8);
  }
}

TEST_CASE("reconstruct: V = 0 periodic case solves the periodic equation") {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto traj = pruefer_flow(v0, DecayingPotential::zero(), 5.0, 20.0, {1.0, 0.4});
  // residual of -u'' + V0 u = E u via second differences
  const double h = 1e-3;
  double unorm = 0.0, res = 0.0;
  for (double x = 1.0; x <= 19.0; x += 0.5) {
    auto [um, d1] = traj.reconstruct(x - h);
    auto [uc, d2] = traj.reconstruct(x);
    auto [up, d3] = traj.reconstruct(x + h);
    (void)d1; (void)d2; (void)d3;
    const double upp = (up - 2.0 * uc + um) / (h * h);
    res = std::max(res, std::abs(-upp + (v0(x) - 5.0) * uc));
    unorm = std::max(unorm, std::abs(uc));
  }
  CHECK(res <= 1e-4 * unorm);
}

TEST_CASE("roundtrip: to_rho after reconstruct is the identity") {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("power:1,1");
  auto traj = pruefer_flow(v0, v, 5.0, 12.0, {1.3, 0.9});
  for (double x : {0.0, 2.5, 7.9, 12.0}) {
    auto [u, up] = traj.reconstruct(x);
    auto rd = to_rho(traj.data(), u, up, x);
    const double r = std::exp(traj.ln_r(x));
    CHECK(std::abs(std::abs(rd.rho) - r) < 1e-9 * (1.0 + r));
    // theta and gamma + arg rho agree modulo 2 pi
    const double th = traj.theta(x) - traj.data().gamma(x);
    const double dth = std::remainder(th - std::arg(rd.rho), 2.0 * kPi);
    CHECK(std::abs(dth) < 1e-9);
  }
}

TEST_CASE("pruefer vs direct solve: mid-band scenario to x = 100") {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("power:1,1");
  const double e = 5.0;
  auto d = FloquetData::build(v0, e);
  auto init = dirichlet_init(d);
  auto traj = pruefer_flow(d, v, 100.0, init);
  auto direct = direct_solve(v0, v, e, 100.0, 0.0, 1.0);
  double sup = 0.0, scale = 0.0;
  for (double x = 0.0; x <= 100.0; x += 0.25) {
    auto [u, up] = traj.reconstruct(x);
    (void)up;
    sup = std::max(sup, std::abs(u - direct.eval(x, 0)));
    scale = std::max(scale, std::abs(direct.eval(x, 0)));
  }
  CHECK(sup <= 1e-6 * scale);
}

TEST_CASE("pruefer vs direct solve: randomized scenarios on [0, 50]") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> ur(0.5, 2.0), uth(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> uc(-1.5, 1.5), ua(0.5, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    const int pk = trial % 3;
    PeriodicPotential v0 = PeriodicPotential::zero();
    if (pk == 1) v0 = PeriodicPotential::parse("mathieu:1.0");
    if (pk == 2) v0 = PeriodicPotential::parse("square:1.0,0.5");
    char buf[96];
    if (trial % 2 == 0) {
      std::snprintf(buf, sizeof buf, "power:%.4f,%.4f", uc(rng), ua(rng));
    } else {
      std::snprintf(buf, sizeof buf, "wvn:%.4f,1.3,%.4f,0.2", uc(rng), ua(rng));
    }
    auto v = DecayingPotential::parse(buf);
    const double e = 4.0 + 2.0 * ur(rng);  // interior of the first band for all three
    auto d = FloquetData::build(v0, e);
    const PrueferInit init{ur(rng), uth(rng)};
    auto traj = pruefer_flow(d, v, 50.0, init);
    auto [u0, up0] = traj.reconstruct(0.0);
    auto direct = direct_solve(v0, v, e, 50.0, u0, up0);
    double sup = 0.0, scale = 0.0;
    for (double x = 0.0; x <= 50.0; x += 0.2) {
      auto [u, up] = traj.reconstruct(x);
      (void)up;
      sup = std::max(sup, std::abs(u - direct.eval(x, 0)));
      scale = std::max(scale, std::abs(direct.eval(x, 0)));
    }
    CHECK(sup <= 1e-5 * scale);
  }
}

TEST_CASE("pruefer vs direct solve: second-band energy (multiplier sign flip)") {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("wvn:1,1.1,1,0.3");
  const double e = 25.0;  // interior of the second band, kappa < 0
  auto d = FloquetData::build(v0, e);
  CHECK(d.kappa() < 0.0);
  auto traj = pruefer_flow(d, v, 50.0, dirichlet_init(d));
  auto direct = direct_solve(v0, v, e, 50.0, 0.0, 1.0);
  double sup = 0.0, scale = 0.0;
  for (double x = 0.0; x <= 50.0; x += 0.2) {
    auto [u, up] = traj.reconstruct(x);
    (void)up;
    sup = std::max(sup, std::abs(u - direct.eval(x, 0)));
    scale = std::max(scale, std::abs(direct.eval(x, 0)));
  }
  CHECK(sup <= 1e-5 * scale);
}

TEST_CASE("scaling of initial data shifts lnR and fixes theta") {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("power:1.2,1");
  auto t1 = pruefer_flow(v0, v, 5.0, 25.0, {1.0, 0.8});
  auto t2 = pruefer_flow(v0, v, 5.0, 25.0, {3.0, 0.8});
  for (double x : {0.0, 5.5, 17.2, 25.0}) {
    CHECK(std::abs((t2.ln_r(x) - t1.ln_r(x)) - std::log(3.0)) < 1e-9);
    CHECK(std::abs(t2.theta(x) - t1.theta(x)) < 1e-9);
  }
}

TEST_CASE("theta monotone beyond a reported X0") {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("power:30,1");
  auto d = FloquetData::build(v0, 5.0);
  auto traj = pruefer_flow(d, v, 200.0, dirichlet_init(d));
  // analytic sufficient bound: theta' > 0 once |V| < gamma'^2
  double gmin = 1e300;
  for (int i = 0; i <= 64; ++i)
    gmin = std::min(gmin, traj.data().gamma_prime(i / 64.0));
  const double x0_analytic = std::max(0.0, 30.0 / (gmin * gmin) - 1.0);
  double x0 = 0.0;
  for (std::size_t i = 0; i < traj.grid().size(); ++i) {
    if (traj.theta_prime(traj.grid()[i]) <= 0.0) x0 = traj.grid()[i];
  }
  MESSAGE("last non-monotone grid point X0 = ", x0, ", analytic bound ", x0_analytic);
  CHECK(x0 <= x0_analytic + 1.0);
  for (double x = x0_analytic + 1.0; x < 200.0; x += 0.9) {
    CHECK(traj.theta_prime(x) > 0.0);
  }
}

TEST_CASE("theta continuity: no sampled jump beyond pi/2 at default resolution") {
  auto v0 = PeriodicPotential::parse("mathieu:1.0");
  auto v = DecayingPotential::parse("wvn:2,1.2,1,0");
  auto traj = pruefer_flow(v0, v, 5.5, 64.0, {1.0, 0.3});
  const auto& th = traj.theta_samples();
  for (std::size_t i = 0; i + 1 < th.size(); ++i) {
    CHECK(std::abs(th[i + 1] - th[i]) < kPi / 2.0);
    CHECK(std::isfinite(traj.ln_r_samples()[i]));
  }
}

TEST_CASE("osc_integral: fixed-frequency value against Simpson oracle") {
  auto zero = [](double) { return 0.0; };
  const double got = osc_integral(1.0, zero, 100.0);
  const double expected =
      oracles::simpson([](double x) { return std::sin(x) / (1.0 + x); }, 0.0, 100.0,
                       2'000'000);
  CHECK(std::abs(got - expected) < 1e-8);
  CHECK_THROWS_AS(osc_integral(0.0, zero, 10.0), InputError);
}

TEST_CASE("osc_integral: admissible phase families stay within fitted envelopes") {
  // Worst-case stalling phase G(x) = pi/2 - gamma * min(x, 1/gamma) realizes
  // the log(1/gamma) growth; values must obey both bound shapes.
  std::vector<double> gammas{1e-1, 1e-2, 1e-3};
  std::vector<double> vals;
  for (double g : gammas) {
    auto stall = [g](double x) { return kPi / 2.0 - g * std::min(x, 1.0 / g); };
    const double L = 10.0 / g;
    vals.push_back(std::abs(osc_integral(g, stall, L, Tolerance{1e-8, 1e-8, 1000})));
  }
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    CHECK(vals[i] <= 2.0 * std::log(1.0 / gammas[i]) + 3.0);
    CHECK(vals[i] >= 0.5 * std::log(1.0 / gammas[i]) - 3.0);  // growth is real
    CHECK(vals[i] <= 1.0 / gammas[i] + 3.0);                  // 1/gamma envelope
  }
  // G with |G'| (1+x) <= 1 (log phase) stays bounded by the same envelopes
  auto logphase = [](double x) { return std::log(1.0 + x); };
  const double v = std::abs(osc_integral(0.5, logphase, 2000.0));
  CHECK(v <= 1.0 / 0.5 + 3.0);
  // G == 0 at small gamma stays under the log envelope too
  auto zero = [](double) { return 0.0; };
  const double vz = std::abs(osc_integral(0.01, zero, 1000.0, Tolerance{1e-8, 1e-8, 1000}));
  CHECK(vz <= 2.0 * std::log(1.0 / 0.01) + 3.0);
}

TEST_CASE("fourier_mode_integral: k = 0 reduces to osc_integral") {
  auto g = [](double x) { return 0.1 * std::log(1.0 + x); };
  const cplx m0 = fourier_mode_integral(0, 0.8, g, 50.0);
  const double base = osc_integral(0.8, g, 50.0);
  CHECK(std::abs(m0.real() - base) < 1e-9);
  CHECK(std::abs(m0.imag()) < 1e-9);
  CHECK_THROWS_AS(fourier_mode_integral(1, 0.0, g, 10.0), InputError);
  CHECK_THROWS_AS(fourier_mode_integral(1, 6.30, g, 10.0), InputError);
}

TEST_CASE("fourier_mode_integral: 1/k decay for |k| >= 2") {
  // G(0) = pi/2 turns on the x = 0 boundary term, which carries the 1/k law.
  const double g = 1.0;
  auto stall = [g](double x) { return kPi / 2.0 - g * std::min(x, 1.0 / g); };
  std::vector<double> ks, vs;
  for (int k : {2, 3, 4, 6, 8, 11, 16, 23, 32}) {
    const cplx v = fourier_mode_integral(k, g, stall, 200.0, Tolerance{1e-10, 1e-10, 1000});
    ks.push_back(std::log(static_cast<double>(k)));
    vs.push_back(std::log(std::abs(v)));
  }
  auto fit = oracles::fit_affine(ks, vs);
  MESSAGE("mode decay exponent ", -fit.b, " r2 ", fit.r2);
  CHECK(-fit.b > 0.8);
  CHECK(-fit.b < 1.2);
  // spec example scale: k = 5 bounded by a c/|k| envelope
  const cplx v5 = fourier_mode_integral(5, 1.0, stall, 200.0);
  CHECK(std::abs(v5) <= 2.0 / 5.0 + 0.05);
}

TEST_CASE("orthogonality_integrals: free-case values against Simpson oracles") {
  auto v0 = PeriodicPotential::zero();
  auto out = orthogonality_integrals(v0, DecayingPotential::zero(), 1.0, 1.21, 100.0,
                                     PeriodicWeight{PeriodicWeight::Kind::one});
  // free case: theta_i(x) = sqrt(E_i) x; I4 = int cos(4x)/(1+x)
  const double i4_oracle = oracles::simpson(
      [](double x) { return std::cos(4.0 * x) / (1.0 + x); }, 0.0, 100.0, 400'000);
  CHECK(out.i4 == doctest::Approx(i4_oracle).epsilon(1e-6));
  const double i22_oracle = oracles::simpson(
      [](double x) {
        return std::sin(2.0 * x) * std::sin(2.2 * x) / (1.0 + x);
      },
      0.0, 100.0, 400'000);
  CHECK(out.i22 == doctest::Approx(i22_oracle).epsilon(1e-6));
}

TEST_CASE("orthogonality_integrals: zero weight annihilates both integrals") {
  auto out = orthogonality_integrals(PeriodicPotential::zero(), DecayingPotential::zero(),
                                     1.0, 1.2, 50.0,
                                     PeriodicWeight::parse("zero"));
  CHECK(out.i4 == 0.0);
  CHECK(out.i22 == 0.0);
}

TEST_CASE("fourier_mode_integral: double-log envelope for k in {-1, 0, 1}") {
  // near both frequency endpoints the low modes obey
  // |value| <= c (log(1/gamma) + log(1/(2 pi - gamma))) + c'
  auto stall_for = [](double g) {
    return [g](double x) { return kPi / 2.0 - g * std::min(x, 1.0 / g); };
  };
  for (int k : {-1, 0, 1}) {
    for (double g : {1e-1, 1e-2, 1e-3}) {
      const double L = std::min(10.0 / g, 1e5);
      const double val = std::abs(fourier_mode_integral(k, g, stall_for(g), L,
                                                        Tolerance{1e-8, 1e-8, 1000}));
      const double envelope =
          2.0 * (std::log(1.0 / g) + std::log(1.0 / (2.0 * kPi - g))) + 3.0;
      CHECK(val <= envelope);
    }
    // near gamma = 2 pi the reflected endpoint drives the growth
    for (double d : {1e-1, 1e-2}) {
      const double g = 2.0 * kPi - d;
      const double val = std::abs(fourier_mode_integral(
          k, g, [](double) { return 0.0; }, 2000.0, Tolerance{1e-8, 1e-8, 1000}));
      const double envelope =
          2.0 * (std::log(1.0 / g) + std::log(1.0 / d)) + 3.0;
      CHECK(val <= envelope);
    }
  }
}

TEST_CASE("orthogonality_integrals: domain checks") {
  auto v0 = PeriodicPotential::zero();
  auto v = DecayingPotential::zero();
  // k(2.0) = 1.414 < pi/2 < k(3.0) = 1.732: straddles the half-band point
  CHECK_THROWS_AS(
      orthogonality_integrals(v0, v, 2.0, 3.0, 50.0, PeriodicWeight{}), DomainError);
  CHECK_THROWS_AS(
      orthogonality_integrals(v0, v, 2.0, 2.0, 50.0, PeriodicWeight{}), InputError);
}

TEST_CASE("orthogonality_integrals: log growth of I22 as energies merge (free)") {
  auto v0 = PeriodicPotential::zero();
  auto v = DecayingPotential::zero();
  const double e1 = 1.0;
  std::vector<double> xs, ys;
  for (double gap : {1e-1, 1e-2, 1e-3}) {
    const double L = std::min(10.0 / gap, 1e5);
    auto out = orthogonality_integrals(v0, v, e1, e1 + gap, L, PeriodicWeight{});
    xs.push_back(std::log(1.0 / gap));
    ys.push_back(std::abs(out.i22));
  }
  // affine in log(1/gap): slope must be positive and the growth at most linear
  auto fit = oracles::fit_affine(xs, ys);
  CHECK(fit.b > 0.1);
  const double second_diff = (ys[2] - ys[1]) - (ys[1] - ys[0]);
  CHECK(std::abs(second_diff) < 0.5 * std::max(1.0, ys[2] - ys[1]));
}

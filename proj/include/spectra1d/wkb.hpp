#pragma once

#include <array>
#include <complex>
#include <vector>

#include "spectra1d/ck_multilinear.hpp"

namespace spectra1d {

/// Builds the oscillatory kernel bundle at a band-interior energy.
OscKernel make_kernel(const PeriodicPotential& v0, const DecayingPotential& v,
                      double energy, double x_max,
                      const Tolerance& tol = Tolerance::tight());

/// Slowly varying phase correction p(x, E) = (2 Im(phi conj(phi)'))^{-1}
/// int_0^x V |phi|^2; equals -(1/2) int_0^x V/gamma'.
class WKBPhase {
 public:
  explicit WKBPhase(const OscKernel& kernel) : kernel_(&kernel) {}
  double operator()(double x) const { return kernel_->p_phase(x); }
  double energy() const { return kernel_->data().energy(); }

 private:
  const OscKernel* kernel_;
};

struct PhasePair {
  double x = 0.0, y = 0.0;
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;  // d^i/dE^i of h(x,E) - h(y,E)
};

struct PhaseMonotonicityReport {
  std::vector<PhasePair> pairs;
  double lower_c = 0.0;  // min |d1| / |x-y|
  double upper_c = 0.0;  // max over i of max |d_i| / |x-y|
  double dk_de = 0.0;    // quasimomentum slope at the interval center
  double e_center = 0.0;
  std::array<double, 3> de_steps{};  // finite-difference steps per order
};

/// Finite-difference check of the phase-derivative hypotheses: lower bound on
/// |dE [h(x,E) - h(y,E)]| and upper bounds on the first three E-derivatives,
/// per |x - y|. The stencil step grows with the derivative order to keep
/// roundoff below truncation.
PhaseMonotonicityReport phase_monotonicity_check(
    const PeriodicPotential& v0, const DecayingPotential& v, double e_lo, double e_hi,
    const std::vector<std::pair<double, double>>& x_pairs,
    const Tolerance& tol = Tolerance::tight());

/// Partial sums of the iterated-kernel series for the reduced system. The
/// reduced equation is Y' = [[0, G],[conj G, 0]] Y with G = -w e^{-ih} V, so
/// Y1 = 1 + sum T_{2m}(F) and Y2 = + sum T_{2m+1}(F) where T_n is the
/// alternating simplex tail of F = w e^{-ih} V.
struct SeriesSolution {
  double energy = 0.0;
  int n_max = 0;
  std::vector<std::complex<double>> terms;       // T_n, index n-1
  std::vector<double> magnitudes;                // |T_n|
  std::vector<bool> term_converged;
  std::vector<std::array<std::complex<double>, 2>> partials;  // Y after order n
  std::array<std::complex<double>, 2> y{};       // final partial sum
  bool converged = true;
  double max_spread = 0.0;  // worst last-rung ladder movement over the orders
};

SeriesSolution series_solution(const OscKernel& kernel, double x, int n_max = 8,
                               double y0 = 0.0 /* 0: automatic */, int max_rungs = 6,
                               const Tolerance& tol = Tolerance{1e-9, 1e-9, 10'000'000});

/// Substitution chain evaluated at x: (u, u') = [phi, conj phi; phi', conj phi']
/// diag(e^{ip}, e^{-ip}) Y.
std::array<std::complex<double>, 2> chain_state(const OscKernel& kernel, double x,
                                                const std::array<std::complex<double>, 2>& y);

/// WKB comparison curve: r(x) = |u_num(x) - phi e^{ip}| / |phi| where u_num
/// solves the full equation with data matched to the substitution chain at
/// x_max (backward anchoring).
struct WkbErrorCurve {
  std::vector<double> xs;
  std::vector<double> r;
  std::vector<std::complex<double>> u_num;
  std::vector<std::complex<double>> u_wkb;
  SeriesSolution series;  // the series used for the matching data
};

WkbErrorCurve wkb_compare(const PeriodicPotential& v0, const DecayingPotential& v,
                          double energy, double x_max, std::size_t grid_n = 256,
                          int n_max = 8,
                          const Tolerance& tol = Tolerance::tight());

}  // namespace spectra1d

#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "spectra1d/parallel.hpp"
#include "spectra1d/pruefer.hpp"

namespace spectra1d {

enum class DensityMethod { prufer_formula, weyl_m };

struct SpectralDensitySample {
  double energy = 0.0;
  double density = 0.0;
  DensityMethod method = DensityMethod::prufer_formula;
  double truncation = 0.0;     // L
  double eps = 0.0;            // weyl_m only: last imaginary offset
  double uncertainty = 0.0;    // weyl_m only: last-two-rung spread
  bool warning = false;        // weyl_m only: non-monotone eps convergence
};

/// Spectral density of the truncated operator via the explicit amplitude
/// formula d mu_L / dE = 2 / (pi omega) R(L, E)^{-2} with Dirichlet data.
SpectralDensitySample density_prufer(const PeriodicPotential& v0,
                                     const DecayingPotential& v, double L, double energy,
                                     const Tolerance& tol = Tolerance::tight());

struct WeylM {
  std::complex<double> z;
  std::complex<double> m;
};

/// Weyl m-function of H0 + V_L at Im z > 0: the decaying Floquet branch
/// beyond the truncation, back-propagated to 0; m = u'(0)/u(0).
WeylM m_function(const PeriodicPotential& v0, const DecayingPotential& v, double L,
                 std::complex<double> z, const Tolerance& tol = Tolerance::tight());

/// (1/pi) Im m(E + i eps) along a decreasing eps ladder with linear
/// extrapolation to eps -> 0.
SpectralDensitySample density_weyl(const PeriodicPotential& v0,
                                   const DecayingPotential& v, double L, double energy,
                                   std::vector<double> eps_sequence,
                                   const Tolerance& tol = Tolerance::tight());

/// Near-orthogonality bound for almost-orthonormal frames: unit vectors e_i
/// with alpha = N sup_{i != j} |<e_i, e_j>| < 1 satisfy
/// sum_i |<g, e_i>|^2 <= (1 + alpha) ||g||^2.
struct LeeReport {
  double alpha = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::vector<double> projections;
};

/// Gram-level check: gram must have unit diagonal (within 1e-8).
LeeReport lee_bound_check(const std::vector<std::vector<double>>& gram,
                          const std::vector<double>& projections, double g_norm_sq);

/// Weighted-space check in H = L^2((0, L), (1+x) dx).
LeeReport lee_bound_check(const std::vector<RealFn>& e_fns, const RealFn& g, double L,
                          const Tolerance& tol = Tolerance::tight());

/// Pruefer-built unit vectors e_i = sin(2 theta(x, E_i)) /
/// (sqrt(A_i) gamma'(x, E_i) (1+x)) on [0, L], together with their
/// normalizations A_i and Gamma(E_i).
struct PrueferVector {
  double energy = 0.0;
  double a_norm = 0.0;       // A_i
  double capital_gamma = 0.0;
  double k = 0.0;
  RealFn fn;                 // e_i(x)
};

std::vector<PrueferVector> pruefer_unit_vectors(const PeriodicPotential& v0,
                                                const DecayingPotential& v,
                                                const std::vector<double>& energies,
                                                double L,
                                                const Tolerance& tol = Tolerance::tight(),
                                                Exec exec = Exec::parallel);

/// (eps, N)-separate-set scan over an energy grid: resonance integrals
/// int_0^L V sin(2 theta)/gamma' with L = eps^{-1-sigma}, candidates above
/// (1-beta) C1 log(1/eps), greedy extraction under the quasimomentum gap
/// eps^{1/N^2}.
struct SeparateCandidate {
  double energy = 0.0;
  double k = 0.0;
  double resonance = 0.0;
  bool selected = false;
};

struct SeparateSetReport {
  double eps = 0.0;
  int n_cap = 0;
  double truncation = 0.0;  // L = eps^{-1-sigma}
  double threshold = 0.0;
  double k_gap = 0.0;       // eps^{1/N^2}
  std::vector<SeparateCandidate> candidates;  // those above threshold
  std::size_t selected_count = 0;
  bool bound_holds = false;  // selected_count <= N
};

SeparateSetReport separate_set_scan(const PeriodicPotential& v0,
                                    const DecayingPotential& v, double eps, double sigma,
                                    double beta, double c1, int n_cap,
                                    const Grid& e_grid, double max_length = 1e6,
                                    const Tolerance& tol = Tolerance::tight(),
                                    Exec exec = Exec::parallel);

}  // namespace spectra1d

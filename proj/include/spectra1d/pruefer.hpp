#pragma once

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "spectra1d/floquet.hpp"
#include "spectra1d/numerics.hpp"
#include "spectra1d/potentials.hpp"

namespace spectra1d {

/// rho coordinates of a real solution relative to the Floquet frame:
/// (u, u')^T = (1/2i) [ rho (phi, phi')^T - conj(rho) (conj phi, conj phi')^T ],
/// equivalently u = Im(rho phi), u' = Im(rho phi').
struct RhoDecomposition {
  std::complex<double> rho;
  double u = 0.0;
  double uprime = 0.0;
};

RhoDecomposition to_rho(const FloquetData& data, double u, double uprime, double x);

struct PrueferInit {
  double r0 = 1.0;
  double theta0 = 0.0;
};

/// Initial (R, theta) induced by Dirichlet data u(0) = 0, u'(0) = 1.
PrueferInit dirichlet_init(const FloquetData& data);

/// Generalized Pruefer trajectory: solves
///   [ln R]' = V/(2 gamma') sin(2 theta),
///   theta'  = gamma' - V/(2 gamma') sin^2(theta)
/// on [0, L] and keeps the dense solution plus a resampled grid.
class PrueferTrajectory {
 public:
  double energy() const { return data_.energy(); }
  double length() const { return length_; }
  const FloquetData& data() const { return data_; }

  double ln_r(double x) const { return dense_.eval(x, 0); }
  double theta(double x) const { return dense_.eval(x, 1); }
  double theta_prime(double x) const;
  std::pair<double, double> reconstruct(double x) const;

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& ln_r_samples() const { return ln_r_; }
  const std::vector<double>& theta_samples() const { return theta_; }

 private:
  friend PrueferTrajectory pruefer_flow(FloquetData, const DecayingPotential&, double,
                                        PrueferInit, const Tolerance&, double);
  PrueferTrajectory(FloquetData data, DecayingPotential v, OdeSolution dense,
                    double length, double points_per_unit);

  FloquetData data_;
  DecayingPotential v_;
  OdeSolution dense_;
  double length_;
  std::vector<double> grid_, ln_r_, theta_;
};

PrueferTrajectory pruefer_flow(const PeriodicPotential& v0, const DecayingPotential& v,
                               double energy, double length, PrueferInit init,
                               const Tolerance& tol = Tolerance::tight(),
                               double points_per_unit = 32.0);

/// Variant reusing an already built FloquetData.
PrueferTrajectory pruefer_flow(FloquetData data, const DecayingPotential& v,
                               double length, PrueferInit init,
                               const Tolerance& tol = Tolerance::tight(),
                               double points_per_unit = 32.0);

/// (u, u')(x) rebuilt from the trajectory via rho = R e^{i(theta - gamma)}.
std::pair<double, double> reconstruct_solution(const PrueferTrajectory& traj, double x);

/// Integral of sin(gamma_freq x + G(x)) / (1 + x) over [0, L].
double osc_integral(double gamma_freq, const std::function<double(double)>& g_phase,
                    double length, const Tolerance& tol = {});

/// Integral of e^{2 pi i k x} sin(gamma_freq x + G(x)) / (1 + x) over [0, L],
/// 0 < gamma_freq < 2 pi.
std::complex<double> fourier_mode_integral(int k, double gamma_freq,
                                           const std::function<double(double)>& g_phase,
                                           double length, const Tolerance& tol = {});

/// 1-periodic weights admissible in the almost-orthogonality estimates.
struct PeriodicWeight {
  enum class Kind { one, cos2pi, inv_gamma_sq, phi_sq, zero } kind = Kind::one;

  static PeriodicWeight parse(std::string_view name);
  double operator()(const FloquetData& data, double x) const;
  const char* name() const;
};

struct OrthoIntegrals {
  double i4 = 0.0;   // integral of f cos(4 theta_1) / (1+x)
  double i22 = 0.0;  // integral of f sin(2 theta_1) sin(2 theta_2) / (1+x)
};

/// Both trajectories use Dirichlet initial data; E1 and E2 must lie on the
/// same side of the half-band point k = pi/2.
OrthoIntegrals orthogonality_integrals(const PeriodicPotential& v0,
                                       const DecayingPotential& v, double e1,
                                       double e2, double length, PeriodicWeight f,
                                       const Tolerance& tol = Tolerance::tight());

/// The single-energy integral of f cos(4 theta(x, E)) / (1+x) over [0, L]
/// (Dirichlet data), used by the truncation-stability sweeps.
double cos4_integral(const PeriodicPotential& v0, const DecayingPotential& v,
                     double energy, double length, PeriodicWeight f,
                     const Tolerance& tol = Tolerance::tight());

}  // namespace spectra1d

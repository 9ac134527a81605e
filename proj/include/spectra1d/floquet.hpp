#pragma once

#include <complex>
#include <memory>
#include <utility>
#include <vector>

#include "spectra1d/numerics.hpp"
#include "spectra1d/parallel.hpp"
#include "spectra1d/potentials.hpp"

namespace spectra1d {

/// Transfer matrix of -u'' + V0 u = E u over one period, columns are
/// (u, u')(1) for the canonical initial conditions (1,0) and (0,1).
struct Monodromy {
  double energy = 0.0;
  double q11 = 0.0, q12 = 0.0, q21 = 0.0, q22 = 0.0;

  double trace() const { return q11 + q22; }
  double det() const { return q11 * q22 - q12 * q21; }
};

inline Tolerance floquet_default_tol() { return Tolerance::tight(); }

Monodromy monodromy(const PeriodicPotential& v0, double energy,
                    const Tolerance& tol = floquet_default_tol());

/// Tr Q(E).
double discriminant(const PeriodicPotential& v0, double energy,
                    const Tolerance& tol = floquet_default_tol());

/// Ordered disjoint band intervals found inside a search window.
struct BandStructure {
  std::vector<std::pair<double, double>> bands;
  double e_min = 0.0, e_max = 0.0;

  bool contains(double e) const;
  /// Index of the band containing e, or -1.
  int band_index(double e) const;
};

BandStructure band_edges(const PeriodicPotential& v0, double e_min, double e_max,
                         const Tolerance& tol = floquet_default_tol(),
                         std::size_t scan_points = 4000,
                         Exec exec = Exec::parallel);

/// Floquet data at a band-interior energy: quasimomentum, the Floquet
/// solution phi normalized by phi(0) = 1 and W(conj(phi), phi) = i omega with
/// omega > 0, and its continuous phase gamma with gamma(0) = 0.
///
/// The multiplier is e^{i kappa} with kappa = +-k(E); the sign is forced by
/// omega > 0 and alternates between consecutive bands.
class FloquetData {
 public:
  static FloquetData build(const PeriodicPotential& v0, double energy,
                           const Tolerance& tol = floquet_default_tol(),
                           double edge_margin = 4e-6);

  double energy() const { return s_->energy; }
  double k() const { return s_->k; }           // principal arccos branch, (0, pi)
  double kappa() const { return s_->kappa; }   // signed multiplier phase
  std::complex<double> multiplier() const;     // e^{i kappa}
  double omega() const { return s_->omega; }
  double discriminant() const { return s_->disc; }
  double gamma_increment() const { return s_->dgamma; }  // gamma(x+1) - gamma(x)

  std::complex<double> phi(double x) const;
  std::complex<double> phi_prime(double x) const;
  std::complex<double> phi0() const { return {1.0, 0.0}; }
  double gamma(double x) const;
  double gamma_prime(double x) const;

  const PeriodicPotential& potential() const { return s_->v0; }

 private:
  struct State {
    PeriodicPotential v0;
    double energy, k, kappa, omega, disc, dgamma;
    std::complex<double> dphi0;  // phi'(0)
    OdeSolution canon;           // (u1, u1', u2, u2') on [0, 1]
    OdeSolution gamma01;         // gamma on [0, 1]
  };
  std::shared_ptr<const State> s_;
  explicit FloquetData(std::shared_ptr<const State> s) : s_(std::move(s)) {}
};

inline double gamma_prime(const FloquetData& d, double x) { return d.gamma_prime(x); }

/// Gamma(E) = integral over one period of gamma'(x, E)^{-2}.
double capital_gamma(const FloquetData& d, const Tolerance& tol = floquet_default_tol());

}  // namespace spectra1d

#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "spectra1d/floquet.hpp"
#include "spectra1d/numerics.hpp"
#include "spectra1d/potentials.hpp"

namespace spectra1d {

/// l^p(L^1) norm of f truncated to [0, x_max]: (sum_k mass_k^p)^{1/p} with
/// mass_k the L^1 mass on [k, k+1] and k+1 <= x_max.
struct LpL1Norm {
  double p = 1.0;
  double value = 0.0;
  std::vector<double> masses;
};

LpL1Norm lp_l1_norm(const RealFn& f, double p, double x_max,
                    const Tolerance& tol = Tolerance::tight(),
                    const std::vector<double>& breakpoints = {});

/// Nested dyadic partitions of [0, x_max] adapted to f in l^p(L^1): every
/// level-m cell carries at most 2^{-m} of the total p-th-power mass. Cells
/// split where the cumulative mass reaches half (zero-mass cells split at
/// their midpoint).
class MartingaleStructure {
 public:
  static MartingaleStructure build(const RealFn& f, double p, int depth,
                                   double x_max,
                                   const Tolerance& tol = Tolerance::tight(),
                                   const std::vector<double>& breakpoints = {});

  int depth() const { return depth_; }
  double x_max() const { return x_max_; }
  double p() const { return p_; }
  double total_mass() const { return total_mass_; }  // nu of the root

  /// Cell E_j^m = [lo, hi), 1-based j in [1, 2^m].
  std::pair<double, double> cell(int m, int j) const;
  /// Boundaries at level m: 2^m + 1 values starting at 0 and ending at x_max.
  const std::vector<double>& level(int m) const;

  /// Independent recomputation of max over all cells of
  /// ||f chi_j^m||^p / (2^{-m} ||f||^p), straight from the definition.
  double adapted_max_ratio(const RealFn& f, const Tolerance& tol = Tolerance::tight(),
                           const std::vector<double>& breakpoints = {}) const;

 private:
  int depth_ = 0;
  double x_max_ = 0.0;
  double p_ = 1.0;
  double total_mass_ = 0.0;
  std::vector<std::vector<double>> levels_;  // levels_[m], m = 0..depth
};

/// Pick x_max so the discarded l^p(L^1)^p tail mass of an envelope
/// B/(1+x)^alpha is at most frac of the total; capped at x_cap.
struct TruncationSuggestion {
  double x_max = 0.0;
  double discarded_fraction = 0.0;  // achieved (upper bound)
  bool cap_hit = false;
};
TruncationSuggestion suggest_truncation(double envelope_b, double alpha, double p,
                                        double frac = 1e-6, double x_cap = 1e6);

/// Variation-type norm over a martingale structure:
/// sum_{m=1..M} m^s (sum_j |int_{E_j^m} g|^2)^{1/2}.
struct BNorm {
  double s = 1.0;
  double value = 0.0;
  int depth = 0;
  double last_level = 0.0;             // the m = M summand, truncation diagnostic
  std::vector<double> level_values;    // summand per level, index m-1
};

BNorm b_norm(const ComplexFn& g, const MartingaleStructure& ms, double s = 1.0,
             const Tolerance& tol = Tolerance::tight(),
             const std::vector<double>& breakpoints = {});

/// Simplex integral M_n(g_1,...,g_n)(x, x') over x <= t_1 <= ... <= t_n <= x',
/// computed by the iterated cumulative scheme I_k' = g_k I_{k-1}.
std::complex<double> multi_M(const std::vector<ComplexFn>& gs, double x, double xprime,
                             const Tolerance& tol = Tolerance::tight(),
                             const std::vector<double>& breakpoints = {});

/// Dense profile of all partial orders I_1..I_n from base point x; component
/// 2(k-1), 2(k-1)+1 of the solution holds Re I_k, Im I_k.
OdeSolution multi_M_profile(const std::vector<ComplexFn>& gs, double x, double x_end,
                            const Tolerance& tol = Tolerance::tight(),
                            const std::vector<double>& breakpoints = {});

/// Conjugation pattern of the reduced system's iterated integrals: the factor
/// at the largest time is conj(g) and the pattern alternates downward.
std::vector<ComplexFn> alternating_conjugate_pattern(const ComplexFn& g, int n);

struct SupResult {
  double value = 0.0;
  double x = 0.0, xprime = 0.0;
};

/// sup over grid pairs x <= x' of |M_n|, with one local refinement pass
/// around the grid argmax.
SupResult multi_M_star(const std::vector<ComplexFn>& gs, const Grid& xs,
                       const Tolerance& tol = Tolerance::tight());

/// M_n^*(g) for n = 1..n_max with the alternating conjugate pattern, sharing
/// one cumulative chain for even n and one for odd n.
std::vector<SupResult> multi_M_star_all(const ComplexFn& g, int n_max, const Grid& xs,
                                        const Tolerance& tol = Tolerance::tight());

/// Iterated tail integral B_n(g_1,...,g_n)(x) as a multi-cutoff limit along a
/// geometric ladder. Non-convergence is reported, not thrown.
struct TailResult {
  std::complex<double> value;
  double spread = 0.0;        // |last - previous rung|
  double mixed_spread = 0.0;  // |last - mixed-cutoff probe|
  bool converged = false;
  int rungs_used = 0;
  std::vector<std::complex<double>> ladder_values;
  double b_tail = std::numeric_limits<double>::quiet_NaN();  // ||g chi_[y,inf)||_B
};

TailResult tail_B(const std::vector<ComplexFn>& gs, double x, double y0,
                  int max_rungs = 8, const Tolerance& tol = Tolerance{1e-9, 1e-9, 10'000'000},
                  const MartingaleStructure* diag_structure = nullptr,
                  const ComplexFn* diag_g = nullptr,
                  const std::vector<double>& breakpoints = {});

/// Alternating-pattern tails T_n(g)(x, infinity) for n = 1..n_max.
std::vector<TailResult> tail_chain(const ComplexFn& g, int n_max, double x, double y0,
                                   int max_rungs = 8,
                                   const Tolerance& tol = Tolerance{1e-9, 1e-9, 10'000'000},
                                   const std::vector<double>& breakpoints = {});

/// Oscillatory kernel bundle: w = i/(2 gamma'), h = 2 gamma - int_0^x V/gamma',
/// F = w e^{-ih} V, p = -(1/2) int_0^x V/gamma'. Built once per (V0, V, E) up
/// to a fixed x_max.
class OscKernel {
 public:
  OscKernel(FloquetData data, DecayingPotential v, double x_max,
            const Tolerance& tol = Tolerance::tight());

  std::complex<double> w(double x) const;
  double h(double x) const;
  std::complex<double> s_weight(double x) const;  // w e^{-ih}
  std::complex<double> F(double x) const;         // w e^{-ih} V
  double p_phase(double x) const;                 // -(1/2) int V/gamma'
  double vq(double x) const { return q_.eval(x, 0); }  // int_0^x V/gamma'

  double x_max() const { return x_max_; }
  const FloquetData& data() const { return data_; }
  const DecayingPotential& potential() const { return v_; }
  std::vector<double> breakpoints(double upto) const { return v_.breakpoints(upto); }

 private:
  FloquetData data_;
  DecayingPotential v_;
  double x_max_;
  OdeSolution q_;  // cumulative int_0^x V / gamma'
};

struct SOperatorResult {
  std::complex<double> value;
  double spread = 0.0;
  bool converged = false;
};

/// S(f)(E) = int_0^inf w e^{-ih} f dx with a Cauchy cutoff ladder; a finite
/// support_end skips the ladder.
SOperatorResult s_operator(const OscKernel& kernel, const RealFn& f,
                           const Tolerance& tol = Tolerance{1e-9, 1e-9, 10'000'000},
                           std::optional<double> support_end = std::nullopt);

struct SStarResult {
  double value = 0.0;
  double arg_y = 0.0;
};

/// S*(f)(E) = max over y of |int_y^{x_max} w e^{-ih} f| evaluated on y_grid
/// plus a dense pass over the cumulative tail.
SStarResult s_star(const OscKernel& kernel, const RealFn& f, const Grid& y_grid,
                   const Tolerance& tol = Tolerance::tight());

enum class CkOperator { s_int, s_star };

/// G^{(s)}_{P(f)(E)} = sum_m m^s (sum_j |P(f chi_j^m)(E)|^2)^{1/2}.
struct GNormResult {
  double s = 1.0;
  double value = 0.0;
  std::vector<double> level_values;
};

GNormResult g_norm(const OscKernel& kernel, const RealFn& f,
                   const MartingaleStructure& ms, double s, CkOperator which,
                   const Tolerance& tol = Tolerance::tight());

}  // namespace spectra1d

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spectra1d/errors.hpp"

namespace spectra1d {

/// 1-periodic potential V0 in L^1[0,1]. Evaluation reduces x mod 1 exactly,
/// so V0(x + 1) == V0(x) bit-for-bit.
///
/// Descriptors: "zero" | "mathieu:A" (A cos(2 pi x)) | "square:A,w"
/// (A on [0,w), 0 on [w,1)) | "samples:path" (two-column file, piecewise
/// linear, periodic wrap between the last row and the first).
class PeriodicPotential {
 public:
  static PeriodicPotential parse(std::string_view descriptor);
  static PeriodicPotential zero() { return parse("zero"); }

  double operator()(double x) const;

  /// Discontinuity / kink locations within one period, in [0, 1).
  const std::vector<double>& period_breakpoints() const { return breakpoints_; }

  /// All breakpoints in [0, x_max], replicated over periods.
  std::vector<double> breakpoints(double x_max) const;

  bool is_zero() const { return kind_ == Kind::zero; }
  const std::string& descriptor() const { return descriptor_; }

 private:
  enum class Kind { zero, mathieu, square, samples };
  Kind kind_ = Kind::zero;
  double a_ = 0.0, w_ = 0.0;
  std::vector<double> xs_, vs_;  // samples
  std::vector<double> breakpoints_;
  std::string descriptor_ = "zero";
};

/// Decaying perturbation V on the half line, stored as a sum of primitive
/// terms with an analytic envelope |V(x)| <= B / (1+x)^alpha.
///
/// Descriptors (joined with '+'): "zero" | "power:c,alpha" (c/(1+x)^alpha) |
/// "wvn:c,omega,alpha,phi" (c sin(2 omega x + phi)/(1+x)^alpha) |
/// "bump:c,a,b" (c on [a,b]).
class DecayingPotential {
 public:
  static DecayingPotential parse(std::string_view descriptor);
  static DecayingPotential zero() { return parse("zero"); }

  double operator()(double x) const;

  double envelope_amplitude() const { return envelope_b_; }  // B
  double decay_exponent() const { return envelope_alpha_; }  // alpha

  std::optional<double> lp_tag() const { return lp_tag_; }
  DecayingPotential with_lp_tag(double p) const;

  /// Discontinuity locations within [0, x_max].
  std::vector<double> breakpoints(double x_max) const;

  bool is_zero() const;
  const std::string& descriptor() const { return descriptor_; }

 private:
  struct Term {
    enum class Kind { power, wvn, bump } kind;
    double c = 0.0, omega = 0.0, alpha = 0.0, phi = 0.0, a = 0.0, b = 0.0;
  };
  std::vector<Term> terms_;  // empty means identically zero
  double envelope_b_ = 0.0;
  double envelope_alpha_ = 0.0;
  std::optional<double> lp_tag_;
  std::string descriptor_ = "zero";
};

/// V_L: equals the base potential for x <= L and vanishes for x > L
/// (the cut is closed on the left side, V_L(L) = V(L)).
class TruncatedPotential {
 public:
  TruncatedPotential(DecayingPotential base, double L);

  double operator()(double x) const {
    return x <= L_ ? base_(x) : 0.0;
  }
  double truncation() const { return L_; }
  const DecayingPotential& base() const { return base_; }
  std::vector<double> breakpoints(double x_max) const;

 private:
  DecayingPotential base_;
  double L_;
};

inline TruncatedPotential truncate(DecayingPotential v, double L) {
  return TruncatedPotential(std::move(v), L);
}

}  // namespace spectra1d

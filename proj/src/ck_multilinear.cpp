#include "spectra1d/ck_multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spectra1d {

namespace {

using cplx = std::complex<double>;

std::vector<double> clip_breakpoints(const std::vector<double>& bp, double lo, double hi) {
  std::vector<double> out;
  for (double b : bp)
    if (b > lo && b < hi) out.push_back(b);
  return out;
}

double abs_mass(const RealFn& f, double a, double b, const Tolerance& tol,
                const std::vector<double>& bp) {
  if (!(b > a)) return 0.0;
  QuadOptions opt;
  opt.breakpoints = clip_breakpoints(bp, a, b);
  return quad([&](double x) { return std::abs(f(x)); }, a, b, tol, opt);
}

}  // namespace

LpL1Norm lp_l1_norm(const RealFn& f, double p, double x_max, const Tolerance& tol,
                    const std::vector<double>& breakpoints) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw InputError("lp_l1_norm: p must lie in [1, infinity)");
  if (!(x_max > 0.0)) throw InputError("lp_l1_norm: x_max must be positive");
  LpL1Norm out;
  out.p = p;
  const std::size_t n = static_cast<std::size_t>(std::floor(x_max));
  out.masses.reserve(n);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = abs_mass(f, static_cast<double>(k), static_cast<double>(k) + 1.0,
                              tol, breakpoints);
    out.masses.push_back(m);
    sum += std::pow(m, p);
  }
  out.value = std::pow(sum, 1.0 / p);
  return out;
}

// ---------------------------------------------------------------------------
// Martingale structures
// ---------------------------------------------------------------------------

namespace {

// nu([a, t]) = sum_k (int over [a,t] cap [k,k+1] |f|)^p, with the interior
// full intervals taken from a prefix table.
class NuMeasure {
 public:
  NuMeasure(const RealFn& f, double x_max, double p, const Tolerance& tol,
            const std::vector<double>& bp)
      : f_(f), p_(p), tol_(tol), bp_(bp) {
    const std::size_t n = static_cast<std::size_t>(std::ceil(x_max));
    prefix_.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double hi = std::min(static_cast<double>(k) + 1.0, x_max);
      const double m = abs_mass(f_, static_cast<double>(k), hi, tol_, bp_);
      prefix_[k + 1] = prefix_[k] + std::pow(m, p_);
    }
  }

  double operator()(double a, double t) const {
    if (!(t > a)) return 0.0;
    const std::size_t ka = static_cast<std::size_t>(std::floor(a));
    const std::size_t kt_raw = static_cast<std::size_t>(std::floor(t));
    const std::size_t last = prefix_.size() - 2;
    const std::size_t kt = std::min(kt_raw, last);
    if (ka == kt) return std::pow(abs_mass(f_, a, t, tol_, bp_), p_);
    double nu = std::pow(abs_mass(f_, a, static_cast<double>(ka) + 1.0, tol_, bp_), p_);
    nu += prefix_[kt] - prefix_[ka + 1];
    nu += std::pow(abs_mass(f_, static_cast<double>(kt), t, tol_, bp_), p_);
    return nu;
  }

 private:
  const RealFn& f_;
  double p_;
  Tolerance tol_;
  const std::vector<double>& bp_;
  std::vector<double> prefix_;
};

}  // namespace

MartingaleStructure MartingaleStructure::build(const RealFn& f, double p, int depth,
                                               double x_max, const Tolerance& tol,
                                               const std::vector<double>& breakpoints) {
  if (!(p >= 1.0)) throw InputError("build_martingale: p must be >= 1");
  if (depth < 1) throw InputError("build_martingale: depth must be >= 1");
  if (!(x_max > 0.0)) throw InputError("build_martingale: x_max must be positive");

  NuMeasure nu(f, x_max, p, tol, breakpoints);
  const double total = nu(0.0, x_max);
  if (!(total > 0.0))
    throw InputError("build_martingale: f vanishes on [0, x_max]");

  MartingaleStructure ms;
  ms.depth_ = depth;
  ms.x_max_ = x_max;
  ms.p_ = p;
  ms.total_mass_ = total;
  ms.levels_.resize(static_cast<std::size_t>(depth) + 1);
  ms.levels_[0] = {0.0, x_max};

  const double zero_mass = 1e-14 * total;
  for (int m = 1; m <= depth; ++m) {
    const auto& parent = ms.levels_[static_cast<std::size_t>(m - 1)];
    auto& cur = ms.levels_[static_cast<std::size_t>(m)];
    cur.clear();
    cur.reserve(parent.size() * 2 - 1);
    for (std::size_t j = 0; j + 1 < parent.size(); ++j) {
      const double a = parent[j], b = parent[j + 1];
      cur.push_back(a);
      const double cell_mass = nu(a, b);
      if (cell_mass <= zero_mass) {
        cur.push_back(0.5 * (a + b));
        continue;
      }
      // Cumulative-mass bisection for nu([a, t]) = cell_mass / 2.
      const double target = 0.5 * cell_mass;
      double lo = a, hi = b;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = nu(a, mid);
        if (std::abs(v - target) <= 1e-13 * total) {
          lo = hi = mid;
          break;
        }
        if (v < target)
          lo = mid;
        else
          hi = mid;
        if (hi - lo <= 1e-13 * std::max(1.0, x_max)) break;
      }
      cur.push_back(0.5 * (lo + hi));
    }
    cur.push_back(x_max);
  }
  return ms;
}

std::pair<double, double> MartingaleStructure::cell(int m, int j) const {
  if (m < 0 || m > depth_) throw InputError("MartingaleStructure::cell: bad level");
  const auto& lv = levels_[static_cast<std::size_t>(m)];
  if (j < 1 || static_cast<std::size_t>(j) >= lv.size())
    throw InputError("MartingaleStructure::cell: bad index");
  return {lv[static_cast<std::size_t>(j - 1)], lv[static_cast<std::size_t>(j)]};
}

const std::vector<double>& MartingaleStructure::level(int m) const {
  if (m < 0 || m > depth_) throw InputError("MartingaleStructure::level: bad level");
  return levels_[static_cast<std::size_t>(m)];
}

double MartingaleStructure::adapted_max_ratio(const RealFn& f, const Tolerance& tol,
                                              const std::vector<double>& breakpoints) const {
  // Straight from the definition: per-cell l^p(L^1)^p mass via fresh
  // quadratures of |f| against the global integer grid.
  auto cell_mass = [&](double a, double b) {
    double nu = 0.0;
    double k0 = std::floor(a);
    for (double k = k0; k < b; k += 1.0) {
      const double lo = std::max(a, k);
      const double hi = std::min(b, k + 1.0);
      if (hi > lo) nu += std::pow(abs_mass(f, lo, hi, tol, breakpoints), p_);
    }
    return nu;
  };
  const double total = cell_mass(0.0, x_max_);
  double worst = 0.0;
  for (int m = 1; m <= depth_; ++m) {
    const auto& lv = levels_[static_cast<std::size_t>(m)];
    const double budget = std::ldexp(total, -m);  // 2^{-m} total
    for (std::size_t j = 0; j + 1 < lv.size(); ++j) {
      const double nu = cell_mass(lv[j], lv[j + 1]);
      worst = std::max(worst, nu / budget);
    }
  }
  return worst;
}

TruncationSuggestion suggest_truncation(double envelope_b, double alpha, double p,
                                        double frac, double x_cap) {
  if (!(p >= 1.0)) throw InputError("suggest_truncation: p must be >= 1");
  TruncationSuggestion out;
  if (envelope_b == 0.0) {
    out.x_max = 1.0;
    return out;
  }
  const double ap = alpha * p;
  if (ap <= 1.0) {
    // Tail never becomes negligible; everything rides on the cap.
    out.x_max = x_cap;
    out.discarded_fraction = 1.0;
    out.cap_hit = true;
    return out;
  }
  // total >= first-interval mass; tail(X) <= B^p (1+X)^{1-ap}/(ap-1) with
  // mass_k <= B (1+k)^{-alpha}.
  const double total_lb = std::pow(envelope_b * (1.0 - std::pow(2.0, -alpha)) /
                                       std::max(alpha, 1e-12),
                                   p);
  auto tail = [&](double x) {
    return std::pow(envelope_b, p) * std::pow(1.0 + x, 1.0 - ap) / (ap - 1.0);
  };
  double x = 2.0;
  while (x < x_cap && tail(x) > frac * total_lb) x *= 2.0;
  out.x_max = std::min(x, x_cap);
  out.discarded_fraction = tail(out.x_max) / total_lb;
  out.cap_hit = out.x_max >= x_cap;
  return out;
}

// ---------------------------------------------------------------------------
// B-norms
// ---------------------------------------------------------------------------

BNorm b_norm(const ComplexFn& g, const MartingaleStructure& ms, double s,
             const Tolerance& tol, const std::vector<double>& breakpoints) {
  const int depth = ms.depth();
  BNorm out;
  out.s = s;
  out.depth = depth;

  // Deepest-level integrals; parents by summation.
  const auto& deepest = ms.level(depth);
  std::vector<cplx> cur(deepest.size() - 1);
  for (std::size_t j = 0; j + 1 < deepest.size(); ++j) {
    QuadOptions opt;
    opt.breakpoints = clip_breakpoints(breakpoints, deepest[j], deepest[j + 1]);
    cur[j] = quad_complex(g, deepest[j], deepest[j + 1], tol, opt);
  }

  out.level_values.assign(static_cast<std::size_t>(depth), 0.0);
  for (int m = depth; m >= 1; --m) {
    double sq = 0.0;
    for (const cplx& a : cur) sq += std::norm(a);
    const double lv = std::pow(static_cast<double>(m), s) * std::sqrt(sq);
    out.level_values[static_cast<std::size_t>(m - 1)] = lv;
    out.value += lv;
    if (m == depth) out.last_level = lv;
    if (m > 1) {
      std::vector<cplx> up(cur.size() / 2);
      for (std::size_t j = 0; j < up.size(); ++j) up[j] = cur[2 * j] + cur[2 * j + 1];
      cur = std::move(up);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simplex integrals M_n
// ---------------------------------------------------------------------------

namespace {

// State layout: (Re I_1, Im I_1, ..., Re I_n, Im I_n), I_0 == 1.
OdeRhs chain_rhs(const std::vector<ComplexFn>& gs) {
  return [&gs](double t, std::span<const double> y, std::span<double> dy) {
    cplx prev{1.0, 0.0};
    for (std::size_t k = 0; k < gs.size(); ++k) {
      const cplx gk = gs[k](t);
      const cplx d = gk * prev;
      dy[2 * k] = d.real();
      dy[2 * k + 1] = d.imag();
      prev = cplx{y[2 * k], y[2 * k + 1]};
    }
  };
}

}  // namespace

OdeSolution multi_M_profile(const std::vector<ComplexFn>& gs, double x, double x_end,
                            const Tolerance& tol, const std::vector<double>& breakpoints) {
  if (gs.empty()) throw InputError("multi_M: need at least one function");
  if (!(x_end >= x)) throw InputError("multi_M: need x <= x'");
  std::vector<double> y0(2 * gs.size(), 0.0);
  return integrate_ode(chain_rhs(gs), x, x_end, std::move(y0), tol,
                       clip_breakpoints(breakpoints, x, x_end), /*max_step=*/4.0);
}

std::complex<double> multi_M(const std::vector<ComplexFn>& gs, double x, double xprime,
                             const Tolerance& tol, const std::vector<double>& breakpoints) {
  if (!(xprime >= x)) throw InputError("multi_M: need x <= x'");
  if (gs.empty()) throw InputError("multi_M: need at least one function");
  if (xprime == x) return {0.0, 0.0};
  const OdeSolution sol = multi_M_profile(gs, x, xprime, tol, breakpoints);
  const auto& f = sol.final_state();
  const std::size_t n = gs.size();
  return {f[2 * (n - 1)], f[2 * (n - 1) + 1]};
}

std::vector<ComplexFn> alternating_conjugate_pattern(const ComplexFn& g, int n) {
  if (n < 1) throw InputError("alternating_conjugate_pattern: n must be >= 1");
  std::vector<ComplexFn> gs;
  gs.reserve(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const bool conj = ((n - j) % 2 == 0);  // top factor conjugated
    if (conj) {
      gs.push_back([g](double t) { return std::conj(g(t)); });
    } else {
      gs.push_back(g);
    }
  }
  return gs;
}

namespace {

// Scans |I_n| over grid points (and midpoints) at or beyond the profile base.
void scan_profile(const OdeSolution& prof, std::size_t comp, double x_base,
                  const Grid& xs, SupResult& best) {
  auto consider = [&](double xp) {
    if (xp < x_base) return;
    const cplx v{prof.eval(xp, comp), prof.eval(xp, comp + 1)};
    const double a = std::abs(v);
    if (a > best.value) {
      best.value = a;
      best.x = x_base;
      best.xprime = xp;
    }
  };
  for (std::size_t j = 0; j < xs.size(); ++j) {
    consider(xs[j]);
    if (j + 1 < xs.size()) {
      const double mid = 0.5 * (xs[j] + xs[j + 1]);
      if (mid >= x_base) consider(mid);
    }
  }
}

SupResult sup_over_grid(const std::vector<ComplexFn>& gs, const Grid& xs,
                        const Tolerance& tol) {
  const std::size_t n = gs.size();
  SupResult best;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] >= xs.back()) break;
    const OdeSolution prof = multi_M_profile(gs, xs[i], xs.back(), tol);
    scan_profile(prof, 2 * (n - 1), xs[i], xs, best);
  }
  return best;
}

}  // namespace

SupResult multi_M_star(const std::vector<ComplexFn>& gs, const Grid& xs,
                       const Tolerance& tol) {
  SupResult best = sup_over_grid(gs, xs, tol);

  // One local refinement pass around the argmax.
  const auto& pts = xs.points();
  auto neighbors = [&](double v) -> std::pair<double, double> {
    auto it = std::lower_bound(pts.begin(), pts.end(), v);
    const double lo = (it == pts.begin()) ? pts.front() : *(it - 1);
    const double hi = (it == pts.end() || it + 1 == pts.end()) ? pts.back() : *(it + 1);
    return {lo, hi};
  };
  auto [xl, xh] = neighbors(best.x);
  auto [pl, ph] = neighbors(best.xprime);
  const std::size_t refine = 9;
  for (std::size_t i = 0; i < refine; ++i) {
    const double x = xl + (xh - xl) * static_cast<double>(i) / (refine - 1.0);
    const OdeSolution prof = multi_M_profile(gs, x, std::max(ph, x), tol);
    for (std::size_t j = 0; j < refine; ++j) {
      const double xp = pl + (ph - pl) * static_cast<double>(j) / (refine - 1.0);
      if (xp < x) continue;
      const std::size_t comp = 2 * (gs.size() - 1);
      const cplx v{prof.eval(xp, comp), prof.eval(xp, comp + 1)};
      if (std::abs(v) > best.value) {
        best.value = std::abs(v);
        best.x = x;
        best.xprime = xp;
      }
    }
  }
  return best;
}

std::vector<SupResult> multi_M_star_all(const ComplexFn& g, int n_max, const Grid& xs,
                                        const Tolerance& tol) {
  if (n_max < 1) throw InputError("multi_M_star_all: n_max must be >= 1");
  std::vector<SupResult> best(static_cast<std::size_t>(n_max));

  // Patterns with a conjugated top factor share prefixes within one parity:
  // even n use (g, conj g, g, ...), odd n use (conj g, g, conj g, ...).
  for (int parity = 0; parity < 2; ++parity) {
    std::vector<ComplexFn> chain;
    const int top = std::min(n_max, n_max - ((n_max % 2 == parity) ? 0 : 1));
    if (top < 1) continue;
    chain = alternating_conjugate_pattern(g, top);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] >= xs.back()) break;
      const OdeSolution prof = multi_M_profile(chain, xs[i], xs.back(), tol);
      for (int n = 1; n <= top; ++n) {
        // order n of this chain is valid only when (top - n) is even
        if ((top - n) % 2 != 0) continue;
        SupResult& b = best[static_cast<std::size_t>(n - 1)];
        scan_profile(prof, 2 * static_cast<std::size_t>(n - 1), xs[i], xs, b);
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Tail integrals B_n
// ---------------------------------------------------------------------------

namespace {

// Backward chain F_k(t) = int_t^{y_k} g_k F_{k+1}, F_{n+1} = 1; integrated
// from y_max down to x with per-coordinate cutoff indicators.
// Ladder decisions need values computed well below the decision threshold;
// the accumulated solve noise over a few hundred steps eats two orders of
// magnitude of the per-step tolerance.
Tolerance chain_ode_tol(const Tolerance& tol) {
  return Tolerance{std::max(tol.abs_tol / 256.0, 1e-14),
                   std::max(tol.rel_tol / 256.0, 1e-14), tol.max_steps};
}

cplx tail_value(const std::vector<ComplexFn>& gs, double x,
                const std::vector<double>& cutoffs, const Tolerance& tol,
                const std::vector<double>& extra_bp) {
  const std::size_t n = gs.size();
  const double y_max = *std::max_element(cutoffs.begin(), cutoffs.end());
  auto rhs = [&gs, &cutoffs, n](double t, std::span<const double> y,
                                std::span<double> dy) {
    for (std::size_t k = 0; k < n; ++k) {
      if (t >= cutoffs[k]) {
        dy[2 * k] = 0.0;
        dy[2 * k + 1] = 0.0;
        continue;
      }
      const cplx next = (k + 1 < n) ? cplx{y[2 * (k + 1)], y[2 * (k + 1) + 1]}
                                    : cplx{1.0, 0.0};
      const cplx d = -gs[k](t) * next;  // backward: dF_k/dt = -g_k F_{k+1}
      dy[2 * k] = d.real();
      dy[2 * k + 1] = d.imag();
    }
  };
  std::vector<double> y0(2 * n, 0.0);
  std::vector<double> bp(cutoffs.begin(), cutoffs.end());
  bp.insert(bp.end(), extra_bp.begin(), extra_bp.end());
  const OdeSolution sol = integrate_ode(rhs, y_max, x, std::move(y0),
                                        chain_ode_tol(tol), std::move(bp),
                                        /*max_step=*/4.0);
  return {sol.final_state()[0], sol.final_state()[1]};
}

}  // namespace

TailResult tail_B(const std::vector<ComplexFn>& gs, double x, double y0, int max_rungs,
                  const Tolerance& tol, const MartingaleStructure* diag_structure,
                  const ComplexFn* diag_g, const std::vector<double>& breakpoints) {
  if (gs.empty()) throw InputError("tail_B: need at least one function");
  if (!(y0 > x)) throw InputError("tail_B: initial cutoff must exceed x");
  TailResult out;
  const std::size_t n = gs.size();

  // n = 1 is additive in the cutoff: extend the running integral per rung.
  std::optional<cplx> running;
  double running_upto = x;

  double y = y0;
  cplx prev{0.0, 0.0};
  for (int r = 0; r < max_rungs; ++r, y *= 2.0) {
    cplx val;
    if (n == 1) {
      QuadOptions opt;
      opt.breakpoints = clip_breakpoints(breakpoints, running_upto, y);
      opt.initial_panels =
          static_cast<std::size_t>(std::clamp((y - running_upto) * 0.5, 1.0, 4e5));
      const cplx inc = quad_complex(gs[0], running_upto, y, tol, opt);
      running = running.value_or(cplx{0.0, 0.0}) + inc;
      running_upto = y;
      val = *running;
    } else {
      std::vector<double> cuts(n, y);
      val = tail_value(gs, x, cuts, tol, breakpoints);
    }
    out.ladder_values.push_back(val);
    out.rungs_used = r + 1;
    if (r > 0) {
      out.spread = std::abs(val - prev);
      const double target = std::max(tol.abs_tol, tol.rel_tol * std::abs(val));
      if (out.spread <= target) {
        if (n == 1) {
          out.value = val;
          out.converged = true;
          break;
        }
        // Mixed-cutoff probe: the limit must be stable under independent
        // coordinate cutoffs, not only along the diagonal.
        std::vector<double> mixed(n);
        for (std::size_t k = 0; k < n; ++k) mixed[k] = (k % 2 == 0) ? y : 0.5 * y;
        const cplx probe = tail_value(gs, x, mixed, tol, breakpoints);
        out.mixed_spread = std::abs(probe - val);
        if (out.mixed_spread <= 4.0 * target) {
          out.value = val;
          out.converged = true;
          break;
        }
      }
    }
    prev = val;
    out.value = val;
  }

  if (diag_structure && diag_g) {
    const double y_last = y0 * std::pow(2.0, out.rungs_used - 1);
    auto masked = [diag_g, y_last](double t) {
      return (t >= y_last) ? (*diag_g)(t) : cplx{0.0, 0.0};
    };
    if (y_last < diag_structure->x_max())
      out.b_tail = b_norm(masked, *diag_structure).value;
    else
      out.b_tail = 0.0;
  }
  return out;
}

namespace {

// Shared backward chain for every alternating-pattern order at once: the
// pattern's suffix recursion gives dB_m/dt = -(m odd ? conj g : g) B_{m-1}
// with B_0 = 1, so one solve carries B_1..B_{n_max}. Each coordinate gets its
// own cutoff indicator.
std::vector<cplx> tail_chain_value(const ComplexFn& g, int n_max, double x,
                                   const std::vector<double>& cutoffs,
                                   const Tolerance& tol,
                                   const std::vector<double>& extra_bp) {
  const std::size_t n = static_cast<std::size_t>(n_max);
  const double y_max = *std::max_element(cutoffs.begin(), cutoffs.end());
  auto rhs = [&g, &cutoffs, n](double t, std::span<const double> y,
                               std::span<double> dy) {
    const cplx gv = g(t);
    for (std::size_t m = 1; m <= n; ++m) {
      if (t >= cutoffs[m - 1]) {
        dy[2 * (m - 1)] = 0.0;
        dy[2 * (m - 1) + 1] = 0.0;
        continue;
      }
      const cplx below = (m == 1) ? cplx{1.0, 0.0}
                                  : cplx{y[2 * (m - 2)], y[2 * (m - 2) + 1]};
      const cplx d = -((m % 2 == 1) ? std::conj(gv) : gv) * below;
      dy[2 * (m - 1)] = d.real();
      dy[2 * (m - 1) + 1] = d.imag();
    }
  };
  std::vector<double> y0(2 * n, 0.0);
  std::vector<double> bp(cutoffs.begin(), cutoffs.end());
  bp.insert(bp.end(), extra_bp.begin(), extra_bp.end());
  const OdeSolution sol = integrate_ode(rhs, y_max, x, std::move(y0),
                                        chain_ode_tol(tol), std::move(bp),
                                        /*max_step=*/4.0);
  std::vector<cplx> out(n);
  for (std::size_t m = 0; m < n; ++m)
    out[m] = cplx{sol.final_state()[2 * m], sol.final_state()[2 * m + 1]};
  return out;
}

}  // namespace

std::vector<TailResult> tail_chain(const ComplexFn& g, int n_max, double x, double y0,
                                   int max_rungs, const Tolerance& tol,
                                   const std::vector<double>& breakpoints) {
  if (n_max < 1) throw InputError("tail_chain: n_max must be >= 1");
  if (!(y0 > x)) throw InputError("tail_chain: initial cutoff must exceed x");
  const std::size_t n = static_cast<std::size_t>(n_max);
  std::vector<TailResult> out(n);

  double y = y0;
  std::vector<cplx> prev(n, cplx{0.0, 0.0});
  for (int r = 0; r < max_rungs; ++r, y *= 2.0) {
    const std::vector<double> cuts(n, y);
    const auto vals = tail_chain_value(g, n_max, x, cuts, tol, breakpoints);
    // Cauchy in the sup norm over orders: the superexponentially small high
    // orders ride on the leading magnitude rather than their own.
    double vec_norm = 0.0, vec_spread = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      out[m].ladder_values.push_back(vals[m]);
      out[m].rungs_used = r + 1;
      out[m].value = vals[m];
      vec_norm = std::max(vec_norm, std::abs(vals[m]));
      if (r > 0) {
        out[m].spread = std::abs(vals[m] - prev[m]);
        vec_spread = std::max(vec_spread, out[m].spread);
      }
    }
    const double target = std::max(tol.abs_tol, tol.rel_tol * vec_norm);
    if (r > 0 && vec_spread <= target) {
      // Mixed-cutoff probe across all orders at once.
      std::vector<double> mixed(n);
      for (std::size_t m = 0; m < n; ++m) mixed[m] = (m % 2 == 0) ? y : 0.5 * y;
      const auto probe = tail_chain_value(g, n_max, x, mixed, tol, breakpoints);
      double probe_spread = 0.0;
      for (std::size_t m = 0; m < n; ++m) {
        out[m].mixed_spread = std::abs(probe[m] - vals[m]);
        probe_spread = std::max(probe_spread, out[m].mixed_spread);
      }
      if (probe_spread <= 4.0 * target) {
        for (std::size_t m = 0; m < n; ++m) out[m].converged = true;
        break;
      }
    }
    prev = vals;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oscillatory kernel and the S / S* operators
// ---------------------------------------------------------------------------

OscKernel::OscKernel(FloquetData data, DecayingPotential v, double x_max,
                     const Tolerance& tol)
    : data_(std::move(data)), v_(std::move(v)), x_max_(x_max) {
  if (!(x_max > 0.0)) throw InputError("OscKernel: x_max must be positive");
  auto rhs = [this](double x, std::span<const double>, std::span<double> dy) {
    dy[0] = v_(x) / data_.gamma_prime(x);
  };
  std::vector<double> bp = v_.breakpoints(x_max);
  {
    auto pb = data_.potential().breakpoints(x_max);
    bp.insert(bp.end(), pb.begin(), pb.end());
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  }
  q_ = integrate_ode(rhs, 0.0, x_max, {0.0}, tol, std::move(bp), /*max_step=*/4.0);
}

std::complex<double> OscKernel::w(double x) const {
  return cplx{0.0, 1.0} / (2.0 * data_.gamma_prime(x));
}

double OscKernel::h(double x) const { return 2.0 * data_.gamma(x) - q_.eval(x, 0); }

std::complex<double> OscKernel::s_weight(double x) const {
  return w(x) * std::polar(1.0, -h(x));
}

std::complex<double> OscKernel::F(double x) const { return s_weight(x) * v_(x); }

double OscKernel::p_phase(double x) const { return -0.5 * q_.eval(x, 0); }

SOperatorResult s_operator(const OscKernel& kernel, const RealFn& f,
                           const Tolerance& tol, std::optional<double> support_end) {
  SOperatorResult out;
  auto integrand = [&](double x) { return kernel.s_weight(x) * f(x); };
  QuadOptions opt;
  Tolerance qtol{std::max(tol.abs_tol, 1e-12), std::max(tol.rel_tol, 1e-12),
                 tol.max_steps};

  if (support_end) {
    const double end = std::min(*support_end, kernel.x_max());
    opt.breakpoints = kernel.breakpoints(end);
    opt.initial_panels = static_cast<std::size_t>(std::clamp(end * 2.0, 1.0, 2e5));
    out.value = quad_complex(integrand, 0.0, end, qtol, opt);
    out.converged = true;
    return out;
  }

  double y = std::min(16.0, kernel.x_max());
  opt.breakpoints = kernel.breakpoints(y);
  opt.initial_panels = static_cast<std::size_t>(std::clamp(y * 2.0, 1.0, 2e5));
  cplx val = quad_complex(integrand, 0.0, y, qtol, opt);
  while (y < kernel.x_max()) {
    const double y_next = std::min(2.0 * y, kernel.x_max());
    QuadOptions opt2;
    opt2.breakpoints = clip_breakpoints(kernel.breakpoints(y_next), y, y_next);
    opt2.initial_panels =
        static_cast<std::size_t>(std::clamp((y_next - y) * 2.0, 1.0, 2e5));
    const cplx inc = quad_complex(integrand, y, y_next, qtol, opt2);
    val += inc;
    out.spread = std::abs(inc);
    y = y_next;
    if (out.spread <= std::max(tol.abs_tol, tol.rel_tol * std::abs(val))) {
      out.converged = true;
      break;
    }
  }
  out.value = val;
  return out;
}

SStarResult s_star(const OscKernel& kernel, const RealFn& f, const Grid& y_grid,
                   const Tolerance& tol) {
  if (!(y_grid.back() <= kernel.x_max()))
    throw InputError("s_star: y grid exceeds the kernel domain");
  // Backward cumulative tail T(y) = int_y^{x_max} w e^{-ih} f.
  auto rhs = [&](double x, std::span<const double>, std::span<double> dy) {
    const cplx d = -kernel.s_weight(x) * f(x);
    dy[0] = d.real();
    dy[1] = d.imag();
  };
  const OdeSolution sol =
      integrate_ode(rhs, kernel.x_max(), 0.0, {0.0, 0.0}, tol,
                    kernel.breakpoints(kernel.x_max()), /*max_step=*/2.0);
  SStarResult out;
  auto consider = [&](double x) {
    const double a = std::abs(cplx{sol.eval(x, 0), sol.eval(x, 1)});
    if (a > out.value) {
      out.value = a;
      out.arg_y = x;
    }
  };
  for (std::size_t i = 0; i < y_grid.size(); ++i) {
    consider(y_grid[i]);
    if (i + 1 < y_grid.size()) {
      // oversample between grid nodes
      const double a = y_grid[i], b = y_grid[i + 1];
      for (int j = 1; j < 8; ++j) consider(a + (b - a) * j / 8.0);
    }
  }
  return out;
}

GNormResult g_norm(const OscKernel& kernel, const RealFn& f,
                   const MartingaleStructure& ms, double s, CkOperator which,
                   const Tolerance& tol) {
  GNormResult out;
  out.s = s;
  const int depth = ms.depth();
  out.level_values.assign(static_cast<std::size_t>(depth), 0.0);

  if (which == CkOperator::s_int) {
    auto g = [&](double x) { return kernel.s_weight(x) * f(x); };
    BNorm bn = b_norm(g, ms, s, tol, kernel.breakpoints(ms.x_max()));
    out.value = bn.value;
    out.level_values = bn.level_values;
    return out;
  }

  // S*: per cell, sup over y of |int_y^{hi} w e^{-ih} f chi_cell|. Computed
  // bottom-up from sampled cumulative tails of the deepest cells.
  struct CellTail {
    std::vector<double> ys;
    std::vector<cplx> tails;  // tail from y to the cell end
    cplx total;
    double sup;
  };
  const auto& deepest = ms.level(depth);
  std::vector<CellTail> cur(deepest.size() - 1);
  for (std::size_t j = 0; j + 1 < deepest.size(); ++j) {
    const double lo = deepest[j], hi = deepest[j + 1];
    auto rhs = [&](double x, std::span<const double>, std::span<double> dy) {
      const cplx d = -kernel.s_weight(x) * f(x);
      dy[0] = d.real();
      dy[1] = d.imag();
    };
    const OdeSolution sol = integrate_ode(rhs, hi, lo, {0.0, 0.0}, tol,
                                          clip_breakpoints(kernel.breakpoints(hi), lo, hi),
                                          /*max_step=*/2.0);
    CellTail ct;
    const int samples = std::max(17, static_cast<int>((hi - lo) * 8.0));
    ct.ys.resize(static_cast<std::size_t>(samples) + 1);
    ct.tails.resize(ct.ys.size());
    ct.sup = 0.0;
    for (std::size_t i = 0; i < ct.ys.size(); ++i) {
      const double y = lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(ct.ys.size() - 1);
      ct.ys[i] = y;
      ct.tails[i] = cplx{sol.eval(y, 0), sol.eval(y, 1)};
      ct.sup = std::max(ct.sup, std::abs(ct.tails[i]));
    }
    ct.total = ct.tails.front();
    cur[j] = std::move(ct);
  }

  for (int m = depth; m >= 1; --m) {
    double sq = 0.0;
    for (const CellTail& c : cur) sq += c.sup * c.sup;
    out.level_values[static_cast<std::size_t>(m - 1)] =
        std::pow(static_cast<double>(m), s) * std::sqrt(sq);
    out.value += out.level_values[static_cast<std::size_t>(m - 1)];
    if (m > 1) {
      std::vector<CellTail> up(cur.size() / 2);
      for (std::size_t j = 0; j < up.size(); ++j) {
        CellTail& l = cur[2 * j];
        CellTail& r = cur[2 * j + 1];
        CellTail merged;
        merged.total = l.total + r.total;
        merged.sup = r.sup;  // tails inside the right child are unchanged
        for (std::size_t i = 0; i < l.tails.size(); ++i) {
          merged.sup = std::max(merged.sup, std::abs(l.tails[i] + r.total));
        }
        // keep the sampled tails for the next merge: left tails shift by
        // the right child's total
        merged.ys = std::move(l.ys);
        merged.tails = std::move(l.tails);
        for (cplx& t : merged.tails) t += r.total;
        merged.ys.insert(merged.ys.end(), r.ys.begin(), r.ys.end());
        merged.tails.insert(merged.tails.end(), r.tails.begin(), r.tails.end());
        up[j] = std::move(merged);
      }
      cur = std::move(up);
    }
  }
  return out;
}

}  // namespace spectra1d

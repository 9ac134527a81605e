#include "spectra1d/potentials.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace spectra1d {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw InputError("");
    if (!std::isfinite(v)) throw InputError("");
    return v;
  } catch (...) {
    throw InputError("potential descriptor: bad number '" + s + "' in " + ctx);
  }
}

std::vector<double> parse_args(const std::string& args, std::size_t expected,
                               const std::string& ctx) {
  std::vector<double> out;
  std::stringstream ss(args);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_number(trim(tok), ctx));
  if (out.size() != expected)
    throw InputError("potential descriptor: " + ctx + " expects " +
                     std::to_string(expected) + " parameters, got " +
                     std::to_string(out.size()));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Splits a sum descriptor on '+' except when the '+' belongs to an exponent
// ("1e+3").
std::vector<std::string> split_sum(std::string_view s) {
  std::vector<std::string> parts;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '+' && !cur.empty() &&
        (cur.back() == 'e' || cur.back() == 'E') && cur.size() >= 2 &&
        (std::isdigit(static_cast<unsigned char>(cur[cur.size() - 2])) ||
         cur[cur.size() - 2] == '.')) {
      cur.push_back(c);
      continue;
    }
    if (c == '+') {
      parts.push_back(cur);
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  parts.push_back(cur);
  return parts;
}

double reduce_mod1(double x) { return x - std::floor(x); }

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicPotential
// ---------------------------------------------------------------------------

PeriodicPotential PeriodicPotential::parse(std::string_view descriptor) {
  const std::string spec = trim(descriptor);
  PeriodicPotential p;
  if (spec.empty()) throw InputError("periodic potential: empty descriptor");
  if (spec.find('+') != std::string::npos)
    throw InputError("periodic potential: sums are not supported: '" + spec + "'");

  const std::size_t colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (name == "zero") {
    if (!args.empty()) throw InputError("periodic potential: zero takes no parameters");
    p.kind_ = Kind::zero;
    p.descriptor_ = "zero";
    return p;
  }
  if (name == "mathieu") {
    auto a = parse_args(args, 1, "mathieu");
    p.kind_ = Kind::mathieu;
    p.a_ = a[0];
    p.descriptor_ = "mathieu:" + fmt(a[0]);
    return p;
  }
  if (name == "square") {
    auto a = parse_args(args, 2, "square");
    if (!(a[1] > 0.0 && a[1] < 1.0))
      throw InputError("periodic potential: square width must lie in (0,1)");
    p.kind_ = Kind::square;
    p.a_ = a[0];
    p.w_ = a[1];
    p.breakpoints_ = {0.0, a[1]};
    p.descriptor_ = "square:" + fmt(a[0]) + "," + fmt(a[1]);
    return p;
  }
  if (name == "samples") {
    if (args.empty()) throw InputError("periodic potential: samples needs a path");
    std::ifstream in(args);
    if (!in) throw InputError("periodic potential: cannot open '" + args + "'");
    double x, v;
    while (in >> x >> v) {
      if (!(x >= 0.0 && x < 1.0))
        throw InputError("periodic potential: sample x outside [0,1)");
      if (!p.xs_.empty() && !(x > p.xs_.back()))
        throw InputError("periodic potential: sample x not strictly increasing");
      p.xs_.push_back(x);
      p.vs_.push_back(v);
    }
    if (!in.eof()) throw InputError("periodic potential: malformed sample file");
    if (p.xs_.size() < 2)
      throw InputError("periodic potential: need at least two sample rows");
    p.kind_ = Kind::samples;
    p.breakpoints_ = p.xs_;
    p.descriptor_ = "samples:" + args;
    return p;
  }
  throw InputError("periodic potential: unknown form '" + name + "'");
}

double PeriodicPotential::operator()(double x) const {
  const double t = reduce_mod1(x);
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::mathieu:
      return a_ * std::cos(2.0 * std::numbers::pi * t);
    case Kind::square:
      return t < w_ ? a_ : 0.0;
    case Kind::samples: {
      // Piecewise linear through the rows, wrapping to the first row at x=1.
      auto it = std::upper_bound(xs_.begin(), xs_.end(), t);
      if (it == xs_.begin()) {
        // t < xs_[0]: segment from (last-1, last) wrapped across 0.
        const double x0 = xs_.back() - 1.0, v0 = vs_.back();
        const double x1 = xs_.front(), v1 = vs_.front();
        return v0 + (v1 - v0) * (t - x0) / (x1 - x0);
      }
      const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
      if (i + 1 == xs_.size()) {
        const double x0 = xs_.back(), v0 = vs_.back();
        const double x1 = xs_.front() + 1.0, v1 = vs_.front();
        return v0 + (v1 - v0) * (t - x0) / (x1 - x0);
      }
      const double x0 = xs_[i], v0 = vs_[i];
      const double x1 = xs_[i + 1], v1 = vs_[i + 1];
      return v0 + (v1 - v0) * (t - x0) / (x1 - x0);
    }
  }
  return 0.0;
}

std::vector<double> PeriodicPotential::breakpoints(double x_max) const {
  std::vector<double> out;
  if (breakpoints_.empty() || !(x_max > 0.0)) return out;
  for (double base = 0.0; base <= x_max; base += 1.0) {
    for (double b : breakpoints_) {
      const double x = base + b;
      if (x > 0.0 && x < x_max) out.push_back(x);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// DecayingPotential
// ---------------------------------------------------------------------------

DecayingPotential DecayingPotential::parse(std::string_view descriptor) {
  const std::string spec = trim(descriptor);
  if (spec.empty()) throw InputError("decaying potential: empty descriptor");
  DecayingPotential p;
  double b_sum = 0.0;
  double alpha_min = std::numeric_limits<double>::infinity();
  std::vector<std::string> canon;

  for (const std::string& raw : split_sum(spec)) {
    const std::string part = trim(raw);
    if (part.empty()) throw InputError("decaying potential: empty summand");
    const std::size_t colon = part.find(':');
    const std::string name = part.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : part.substr(colon + 1);

    if (name == "zero") {
      if (!args.empty()) throw InputError("decaying potential: zero takes no parameters");
      continue;
    }
    Term t{};
    if (name == "power") {
      auto a = parse_args(args, 2, "power");
      if (a[1] < 0.0) throw InputError("decaying potential: power decay exponent < 0");
      t.kind = Term::Kind::power;
      t.c = a[0];
      t.alpha = a[1];
      canon.push_back("power:" + fmt(t.c) + "," + fmt(t.alpha));
    } else if (name == "wvn") {
      auto a = parse_args(args, 4, "wvn");
      if (a[2] < 0.0) throw InputError("decaying potential: wvn decay exponent < 0");
      t.kind = Term::Kind::wvn;
      t.c = a[0];
      t.omega = a[1];
      t.alpha = a[2];
      t.phi = a[3];
      canon.push_back("wvn:" + fmt(t.c) + "," + fmt(t.omega) + "," + fmt(t.alpha) +
                      "," + fmt(t.phi));
    } else if (name == "bump") {
      auto a = parse_args(args, 3, "bump");
      if (!(a[1] >= 0.0 && a[2] > a[1]))
        throw InputError("decaying potential: bump needs 0 <= a < b");
      t.kind = Term::Kind::bump;
      t.c = a[0];
      t.a = a[1];
      t.b = a[2];
      t.alpha = 0.0;
      canon.push_back("bump:" + fmt(t.c) + "," + fmt(t.a) + "," + fmt(t.b));
    } else {
      throw InputError("decaying potential: unknown form '" + name + "'");
    }
    if (t.c != 0.0) {
      b_sum += std::abs(t.c);
      alpha_min = std::min(alpha_min, t.alpha);
    }
    p.terms_.push_back(t);
  }

  p.envelope_b_ = b_sum;
  p.envelope_alpha_ = (b_sum > 0.0) ? alpha_min : 0.0;
  p.descriptor_ = canon.empty() ? "zero" : [&] {
    std::string s = canon[0];
    for (std::size_t i = 1; i < canon.size(); ++i) s += "+" + canon[i];
    return s;
  }();
  return p;
}

double DecayingPotential::operator()(double x) const {
  double v = 0.0;
  for (const Term& t : terms_) {
    switch (t.kind) {
      case Term::Kind::power:
        v += t.c / std::pow(1.0 + x, t.alpha);
        break;
      case Term::Kind::wvn:
        v += t.c * std::sin(2.0 * t.omega * x + t.phi) / std::pow(1.0 + x, t.alpha);
        break;
      case Term::Kind::bump:
        if (x >= t.a && x <= t.b) v += t.c;
        break;
    }
  }
  return v;
}

bool DecayingPotential::is_zero() const {
  for (const Term& t : terms_)
    if (t.c != 0.0) return false;
  return true;
}

DecayingPotential DecayingPotential::with_lp_tag(double p) const {
  if (!(p >= 1.0)) throw InputError("decaying potential: lp tag must be >= 1");
  DecayingPotential out = *this;
  out.lp_tag_ = p;
  return out;
}

std::vector<double> DecayingPotential::breakpoints(double x_max) const {
  std::vector<double> out;
  for (const Term& t : terms_) {
    if (t.kind == Term::Kind::bump) {
      if (t.a > 0.0 && t.a < x_max) out.push_back(t.a);
      if (t.b > 0.0 && t.b < x_max) out.push_back(t.b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// TruncatedPotential
// ---------------------------------------------------------------------------

TruncatedPotential::TruncatedPotential(DecayingPotential base, double L)
    : base_(std::move(base)), L_(L) {
  if (!(L > 0.0)) throw InputError("truncate: L must be positive");
}

std::vector<double> TruncatedPotential::breakpoints(double x_max) const {
  std::vector<double> out = base_.breakpoints(std::min(L_, x_max));
  if (L_ > 0.0 && L_ < x_max) out.push_back(L_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace spectra1d

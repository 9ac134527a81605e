// Command-line driver: every experiment is a reproducible batch run that
// echoes its canonical configuration and emits CSV or JSON.
#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectra1d/ck_multilinear.hpp"
#include "spectra1d/floquet.hpp"
#include "spectra1d/parallel.hpp"
#include "spectra1d/pruefer.hpp"
#include "spectra1d/spectral.hpp"
#include "spectra1d/version.hpp"
#include "spectra1d/wkb.hpp"

namespace {

using namespace spectra1d;
using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::initializer_list<double> row) { rows.emplace_back(row); }
};

struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;  // sorted: canonical order

  void set(const std::string& key, const std::string& v) { values[key] = v; }
  void set(const std::string& key, double v) { values[key] = fmt(v); }
  void set(const std::string& key, int v) { values[key] = std::to_string(v); }

  std::string canonical() const {
    std::string out = subcommand;
    for (const auto& [k, v] : values) out += " " + k + "=" + v;
    return out;
  }
};

void write_output(const RunConfig& cfg, const Table& table, const std::string& path,
                  const std::string& format) {
  std::ostringstream body;
  if (format == "csv") {
    body << "# " << kToolName << " " << kVersion << "\n";
    body << "# config: " << cfg.canonical() << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      body << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
    }
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        body << fmt(row[c]) << (c + 1 < row.size() ? "," : "\n");
      }
    }
  } else {
    json j;
    j["tool"] = kToolName;
    j["version"] = kVersion;
    j["config"] = json::object();
    j["config"]["subcommand"] = cfg.subcommand;
    for (const auto& [k, v] : cfg.values) j["config"][k] = v;
    j["canonical"] = cfg.canonical();
    j["columns"] = table.columns;
    j["rows"] = json::array();
    for (const auto& row : table.rows) j["rows"].push_back(row);
    body << j.dump(2) << "\n";
  }
  if (path.empty() || path == "-") {
    std::cout << body.str();
  } else {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot open output file '" + path + "'");
    out << body.str();
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw InputError("empty list '" + s + "'");
  return out;
}

RealFn make_phase_g(const std::string& name, double gamma_freq) {
  if (name == "zero") return [](double) { return 0.0; };
  if (name == "log") return [](double x) { return std::log(1.0 + x); };
  if (name == "stall") {
    // phase stall of length 1/gamma: |G'| (1+x) <= 1 + gamma
    return [gamma_freq](double x) {
      return kPi / 2.0 - gamma_freq * std::min(x, 1.0 / gamma_freq);
    };
  }
  throw InputError("unknown phase function '" + name + "' (zero|log|stall)");
}

// Shared per-subcommand options.
struct Common {
  std::string out = "-";
  std::string format = "csv";
  long seed = 12345;
  int threads = 0;
  bool serial = false;
  double tol_abs = 1e-10;
  double tol_rel = 1e-10;

  void attach(CLI::App* app) {
    app->add_option("--out", out, "output path ('-' = stdout)");
    app->add_option("--format", format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--seed", seed, "seed for randomized sweeps");
    app->add_option("--threads", threads, "thread cap (0 = auto)");
    app->add_flag("--serial", serial, "use the serial reference kernels");
    app->add_option("--tol-abs", tol_abs, "absolute tolerance");
    app->add_option("--tol-rel", tol_rel, "relative tolerance");
  }

  Exec exec() const { return serial ? Exec::serial : Exec::parallel; }
  Tolerance tol() const { return Tolerance{tol_abs, tol_rel, 10'000'000}; }

  void echo(RunConfig& cfg) const {
    cfg.set("format", format);
    cfg.set("out", out);
    cfg.set("seed", static_cast<int>(seed));
    cfg.set("serial", serial ? "1" : "0");
    cfg.set("threads", threads);
    cfg.set("tol-abs", tol_abs);
    cfg.set("tol-rel", tol_rel);
  }

  void apply_threads() const {
    if (threads > 0) set_thread_cap(static_cast<std::size_t>(threads));
  }
};

int run(int argc, char** argv) {
  CLI::App app{std::string(kToolName) +
               " - band structure, Pruefer flows and spectral densities of "
               "perturbed periodic Schrodinger operators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  // config-file defaults are injected before explicit flags; the last value wins
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // ---- bands ----------------------------------------------------------
  auto* bands = app.add_subcommand("bands", "band edges of -u'' + V0 u = E u");
  Common bands_c;
  std::string bands_v0 = "zero";
  double bands_emin = 0.0, bands_emax = 10.0;
  std::size_t bands_scan = 4000;
  bands->add_option("--v0", bands_v0, "periodic potential descriptor");
  bands->add_option("--emin", bands_emin);
  bands->add_option("--emax", bands_emax);
  bands->add_option("--scan-points", bands_scan);
  bands_c.attach(bands);

  // ---- density --------------------------------------------------------
  auto* density = app.add_subcommand("density", "spectral density of H0 + V_L");
  Common density_c;
  std::string density_v0 = "zero", density_v = "zero", density_method = "both";
  std::string density_eps = "1e-2,1e-3,1e-4";
  double density_L = 1.0, density_emin = 1.0, density_emax = 9.0;
  std::size_t density_steps = 9;
  density->add_option("--v0", density_v0);
  density->add_option("--v", density_v);
  density->add_option("--L", density_L, "truncation point");
  density->add_option("--emin", density_emin);
  density->add_option("--emax", density_emax);
  density->add_option("--esteps", density_steps);
  density->add_option("--method", density_method)
      ->check(CLI::IsMember({"prufer", "weyl", "both"}));
  density->add_option("--eps-seq", density_eps, "decreasing Im z ladder");
  density_c.attach(density);

  // ---- prufer ---------------------------------------------------------
  auto* prufer = app.add_subcommand("prufer", "generalized Pruefer trajectory");
  Common prufer_c;
  std::string prufer_mode = "trajectory";
  std::string prufer_v0 = "zero", prufer_v = "zero", prufer_init = "dirichlet";
  double prufer_e = 1.0, prufer_L = 50.0, prufer_r0 = 1.0, prufer_th0 = 0.0;
  double prufer_ppu = 32.0;
  std::size_t prufer_trials = 20;
  prufer->add_option("--mode", prufer_mode)
      ->check(CLI::IsMember({"trajectory", "direct-check"}));
  prufer->add_option("--v0", prufer_v0);
  prufer->add_option("--v", prufer_v);
  prufer->add_option("--E", prufer_e);
  prufer->add_option("--L", prufer_L);
  prufer->add_option("--init", prufer_init)->check(CLI::IsMember({"dirichlet", "custom"}));
  prufer->add_option("--r0", prufer_r0);
  prufer->add_option("--theta0", prufer_th0);
  prufer->add_option("--points-per-unit", prufer_ppu);
  prufer->add_option("--trials", prufer_trials, "direct-check: randomized scenarios");
  prufer_c.attach(prufer);

  // ---- wkb-error ------------------------------------------------------
  auto* wkb = app.add_subcommand("wkb-error", "WKB principal-term error curve");
  Common wkb_c;
  std::string wkb_v0 = "mathieu:1.0", wkb_v = "power:1,0.9";
  double wkb_e = 5.0, wkb_xmax = 1000.0;
  int wkb_nmax = 8;
  std::size_t wkb_grid = 256;
  wkb->add_option("--v0", wkb_v0);
  wkb->add_option("--v", wkb_v);
  wkb->add_option("--E", wkb_e);
  wkb->add_option("--xmax", wkb_xmax);
  wkb->add_option("--nmax", wkb_nmax);
  wkb->add_option("--grid", wkb_grid);
  wkb_c.attach(wkb);

  // ---- mlinear --------------------------------------------------------
  auto* mlinear = app.add_subcommand("mlinear", "multilinear bound-shape table");
  Common ml_c;
  std::string ml_g = "power:1,0.9";
  double ml_mod = 0.0, ml_p = 1.5, ml_xmax = 256.0;
  int ml_depth = 8, ml_nmax = 6;
  std::size_t ml_grid = 48;
  bool ml_suite = false;
  mlinear->add_option("--g", ml_g, "decaying descriptor for the test function");
  mlinear->add_option("--modulate", ml_mod, "multiply by e^{i omega x}");
  mlinear->add_option("--p", ml_p);
  mlinear->add_option("--depth", ml_depth);
  mlinear->add_option("--xmax", ml_xmax);
  mlinear->add_option("--nmax", ml_nmax);
  mlinear->add_option("--grid", ml_grid);
  mlinear->add_flag("--suite", ml_suite,
                    "run the three pinned kernels plus the simplex identity");
  ml_c.attach(mlinear);

  // ---- ortho ----------------------------------------------------------
  auto* ortho = app.add_subcommand("ortho", "oscillatory and orthogonality sweeps");
  Common ortho_c;
  std::string ortho_mode = "pair", ortho_v0 = "zero", ortho_v = "zero";
  std::string ortho_f = "one", ortho_g = "stall";
  std::string ortho_gaps = "1e-1,1e-2,1e-3,1e-4,1e-5";
  std::string ortho_gammas = "1e-1,1e-2,1e-3,1e-4,1e-5";
  std::string ortho_lrule = "scaled";
  std::string ortho_llist = "100,1000,10000";
  std::string ortho_klist = "2,3,4,6,8,11,16,23,32";
  double ortho_e1 = 1.0, ortho_e2 = 1.21, ortho_L = 1e4, ortho_gamma = 1.0;
  double ortho_lcap = 1e6;
  ortho->add_option("--mode", ortho_mode)
      ->check(CLI::IsMember({"pair", "sweep", "i4", "osc", "modes", "bounds", "growth"}));
  ortho->add_option("--v0", ortho_v0);
  ortho->add_option("--v", ortho_v);
  ortho->add_option("--e1", ortho_e1);
  ortho->add_option("--e2", ortho_e2);
  ortho->add_option("--L", ortho_L);
  ortho->add_option("--l-cap", ortho_lcap);
  ortho->add_option("--f", ortho_f, "1-periodic weight: one|cos2pi|invgamma2|phi2");
  ortho->add_option("--gaps", ortho_gaps, "|E1-E2| sweep values");
  ortho->add_option("--l-rule", ortho_lrule)->check(CLI::IsMember({"scaled", "fixed"}));
  ortho->add_option("--l-list", ortho_llist, "L values for the i4 sweep");
  ortho->add_option("--gammas", ortho_gammas, "frequency sweep");
  ortho->add_option("--gamma", ortho_gamma, "frequency for mode sweep");
  ortho->add_option("--G", ortho_g, "phase function: zero|log|stall");
  ortho->add_option("--k-list", ortho_klist);
  ortho_c.attach(ortho);

  // ---- martingale -----------------------------------------------------
  auto* mart = app.add_subcommand("martingale", "adapted martingale structures");
  Common mart_c;
  std::string mart_f = "power:1,0.9", mart_action = "cells";
  double mart_p = 1.5, mart_xmax = 1024.0, mart_mod = 1.0, mart_s = 1.0;
  int mart_depth = 8;
  mart->add_option("--f", mart_f, "decaying descriptor");
  mart->add_option("--p", mart_p);
  mart->add_option("--depth", mart_depth);
  mart->add_option("--xmax", mart_xmax);
  mart->add_option("--action", mart_action)
      ->check(CLI::IsMember({"cells", "adapted", "bnorm"}));
  mart->add_option("--modulate", mart_mod, "bnorm: g = e^{i omega x} f");
  mart->add_option("--s", mart_s, "bnorm weight exponent");
  mart_c.attach(mart);

  // ---- mcheck ---------------------------------------------------------
  auto* mcheck = app.add_subcommand("mcheck", "m-function and separate-set checks");
  Common mc_c;
  std::string mc_mode = "density", mc_v0 = "mathieu:1.0", mc_v = "bump:5,0,1";
  std::string mc_eps = "1e-2,1e-3,1e-4";
  std::string mc_energies = "4.0,4.75,5.5,6.25,7.0";
  double mc_L = 2.0, mc_emin = 3.0, mc_emax = 7.0;
  double mc_sep_eps = 1e-2, mc_sigma = 0.5, mc_beta = 0.0, mc_c1 = 0.5;
  double mc_imin = 0.8, mc_imax = 1.25, mc_lcap = 1e6, mc_lee_L = 1000.0;
  int mc_N = 10;
  std::size_t mc_esteps = 50, mc_count = 100, mc_egrid = 91;
  std::string mc_llist = "100,1000,10000";
  mcheck->add_option("--mode", mc_mode)
      ->check(CLI::IsMember({"density", "free", "herglotz", "lee", "separate",
                             "monodromy", "tails", "identities"}));
  mcheck->add_option("--l-list", mc_llist, "lee: truncation sweep");
  mcheck->add_option("--v0", mc_v0);
  mcheck->add_option("--v", mc_v);
  mcheck->add_option("--L", mc_L);
  mcheck->add_option("--emin", mc_emin);
  mcheck->add_option("--emax", mc_emax);
  mcheck->add_option("--esteps", mc_esteps);
  mcheck->add_option("--eps-seq", mc_eps);
  mcheck->add_option("--count", mc_count, "herglotz samples");
  mcheck->add_option("--energies", mc_energies, "lee: Pruefer vector energies");
  mcheck->add_option("--lee-L", mc_lee_L);
  mcheck->add_option("--sep-eps", mc_sep_eps);
  mcheck->add_option("--sigma", mc_sigma);
  mcheck->add_option("--beta", mc_beta);
  mcheck->add_option("--c1", mc_c1, "threshold constant C1 (calibrated, not pinned)");
  mcheck->add_option("--N", mc_N);
  mcheck->add_option("--imin", mc_imin);
  mcheck->add_option("--imax", mc_imax);
  mcheck->add_option("--egrid", mc_egrid);
  mcheck->add_option("--l-cap", mc_lcap);
  mc_c.attach(mcheck);

  // ---- config file: key=value lines become defaults -------------------
  // handled before parsing in main()

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 2;      // input error contract: exit 2
  }

  if (bands->parsed()) {
    bands_c.apply_threads();
    RunConfig cfg{"bands", {}};
    auto v0 = PeriodicPotential::parse(bands_v0);
    cfg.set("v0", v0.descriptor());
    cfg.set("emin", bands_emin);
    cfg.set("emax", bands_emax);
    cfg.set("scan-points", static_cast<int>(bands_scan));
    bands_c.echo(cfg);
    const auto bs =
        band_edges(v0, bands_emin, bands_emax, bands_c.tol(), bands_scan, bands_c.exec());
    Table t;
    t.columns = {"band", "a", "b"};
    for (std::size_t i = 0; i < bs.bands.size(); ++i) {
      t.add({static_cast<double>(i), bs.bands[i].first, bs.bands[i].second});
    }
    write_output(cfg, t, bands_c.out, bands_c.format);
    return 0;
  }

  if (density->parsed()) {
    density_c.apply_threads();
    RunConfig cfg{"density", {}};
    auto v0 = PeriodicPotential::parse(density_v0);
    auto v = DecayingPotential::parse(density_v);
    const auto eps = parse_list(density_eps);
    cfg.set("v0", v0.descriptor());
    cfg.set("v", v.descriptor());
    cfg.set("L", density_L);
    cfg.set("emin", density_emin);
    cfg.set("emax", density_emax);
    cfg.set("esteps", static_cast<int>(density_steps));
    cfg.set("method", density_method);
    cfg.set("eps-seq", density_eps);
    density_c.echo(cfg);

    const Grid grid = density_steps == 1
                          ? Grid({density_emin, density_emax})
                          : Grid::linspace(density_emin, density_emax, density_steps);
    const bool do_p = density_method != "weyl";
    const bool do_w = density_method != "prufer";
    struct Row {
      double e, dp, dw, gap, unc, warn;
    };
    const std::size_t n = (density_steps == 1) ? 1 : grid.size();
    auto rows = map_indexed<Row>(
        n,
        [&](std::size_t i) {
          const double e = grid[i];
          Row r{e, 0, 0, 0, 0, 0};
          if (do_p) r.dp = density_prufer(v0, v, density_L, e, density_c.tol()).density;
          if (do_w) {
            const auto s = density_weyl(v0, v, density_L, e, eps, density_c.tol());
            r.dw = s.density;
            r.unc = s.uncertainty;
            r.warn = s.warning ? 1.0 : 0.0;
          }
          if (do_p && do_w) r.gap = std::abs(r.dp - r.dw) / std::max(r.dp, 1e-300);
          return r;
        },
        density_c.exec());
    Table t;
    t.columns = {"E", "density_prufer", "density_weyl", "rel_gap", "weyl_uncertainty",
                 "weyl_warning"};
    for (const Row& r : rows) t.add({r.e, r.dp, r.dw, r.gap, r.unc, r.warn});
    write_output(cfg, t, density_c.out, density_c.format);
    return 0;
  }

  if (prufer->parsed()) {
    prufer_c.apply_threads();
    RunConfig cfg{"prufer", {}};
    cfg.set("mode", prufer_mode);
    prufer_c.echo(cfg);
    Table t;

    if (prufer_mode == "trajectory") {
      auto v0 = PeriodicPotential::parse(prufer_v0);
      auto v = DecayingPotential::parse(prufer_v);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      cfg.set("E", prufer_e);
      cfg.set("L", prufer_L);
      cfg.set("init", prufer_init);
      cfg.set("r0", prufer_r0);
      cfg.set("theta0", prufer_th0);
      cfg.set("points-per-unit", prufer_ppu);

      FloquetData data = FloquetData::build(v0, prufer_e, prufer_c.tol());
      const PrueferInit init = (prufer_init == "dirichlet")
                                   ? dirichlet_init(data)
                                   : PrueferInit{prufer_r0, prufer_th0};
      auto traj = pruefer_flow(data, v, prufer_L, init, prufer_c.tol(), prufer_ppu);
      t.columns = {"x", "lnR", "theta"};
      for (std::size_t i = 0; i < traj.grid().size(); ++i) {
        t.add({traj.grid()[i], traj.ln_r_samples()[i], traj.theta_samples()[i]});
      }
    } else {
      // Randomized Pruefer-vs-direct-solve battery on [0, L].
      cfg.set("L", prufer_L);
      cfg.set("trials", static_cast<int>(prufer_trials));
      std::mt19937 rng(static_cast<unsigned>(prufer_c.seed));
      std::uniform_real_distribution<double> ur(0.5, 2.0), uth(0.0, 2.0 * kPi);
      std::uniform_real_distribution<double> uc(-1.5, 1.5), ua(0.5, 1.2);
      t.columns = {"trial", "E", "sup_rel"};
      for (std::size_t trial = 0; trial < prufer_trials; ++trial) {
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
        auto data = FloquetData::build(v0, e, prufer_c.tol());
        auto traj = pruefer_flow(data, v, prufer_L, PrueferInit{ur(rng), uth(rng)},
                                 prufer_c.tol());
        auto [u0, up0] = traj.reconstruct(0.0);
        auto rhs = [&](double x, std::span<const double> y, std::span<double> dy) {
          dy[0] = y[1];
          dy[1] = (v0(x) + v(x) - e) * y[0];
        };
        std::vector<double> bp = v.breakpoints(prufer_L);
        auto pb = v0.breakpoints(prufer_L);
        bp.insert(bp.end(), pb.begin(), pb.end());
        std::sort(bp.begin(), bp.end());
        auto direct = integrate_ode(rhs, 0.0, prufer_L, {u0, up0}, prufer_c.tol(), bp);
        double sup = 0.0, scale = 0.0;
        for (double x = 0.0; x <= prufer_L; x += 0.2) {
          auto [u, up] = traj.reconstruct(x);
          (void)up;
          sup = std::max(sup, std::abs(u - direct.eval(x, 0)));
          scale = std::max(scale, std::abs(direct.eval(x, 0)));
        }
        t.add({static_cast<double>(trial), e, sup / scale});
      }
    }
    write_output(cfg, t, prufer_c.out, prufer_c.format);
    return 0;
  }

  if (wkb->parsed()) {
    wkb_c.apply_threads();
    RunConfig cfg{"wkb-error", {}};
    auto v0 = PeriodicPotential::parse(wkb_v0);
    auto v = DecayingPotential::parse(wkb_v);
    cfg.set("v0", v0.descriptor());
    cfg.set("v", v.descriptor());
    cfg.set("E", wkb_e);
    cfg.set("xmax", wkb_xmax);
    cfg.set("nmax", wkb_nmax);
    cfg.set("grid", static_cast<int>(wkb_grid));
    wkb_c.echo(cfg);

    const auto curve = wkb_compare(v0, v, wkb_e, wkb_xmax, wkb_grid, wkb_nmax,
                                   wkb_c.tol());
    // The curve is judged on the 1e-2 scale; a small unconverged ladder
    // spread in the matching data is reported, a large one is fatal.
    if (!curve.series.converged) {
      if (curve.series.max_spread > 1e-3) {
        throw ConvergenceError("wkb-error: series tails did not converge (spread " +
                               fmt(curve.series.max_spread) + ")");
      }
      std::cerr << "note: series ladder stopped with spread "
                << fmt(curve.series.max_spread) << "; curve unaffected at this scale\n";
    }
    Table t;
    t.columns = {"x", "r", "abs_u_num", "abs_u_wkb"};
    for (std::size_t i = 0; i < curve.xs.size(); ++i) {
      t.add({curve.xs[i], curve.r[i], std::abs(curve.u_num[i]),
             std::abs(curve.u_wkb[i])});
    }
    write_output(cfg, t, wkb_c.out, wkb_c.format);
    return 0;
  }

  if (mlinear->parsed()) {
    ml_c.apply_threads();
    RunConfig cfg{"mlinear", {}};
    cfg.set("p", ml_p);
    cfg.set("depth", ml_depth);
    cfg.set("xmax", ml_xmax);
    cfg.set("nmax", ml_nmax);
    cfg.set("grid", static_cast<int>(ml_grid));
    cfg.set("suite", ml_suite ? "1" : "0");
    ml_c.echo(cfg);
    Table t;

    auto ratio_rows = [&](const ComplexFn& g, const std::vector<double>& bp,
                          double kernel_id, Table& table) {
      RealFn absf = [&g](double x) { return std::abs(g(x)); };
      auto ms = MartingaleStructure::build(absf, ml_p, ml_depth, ml_xmax, ml_c.tol(), bp);
      const double bnorm = b_norm(g, ms, 1.0, ml_c.tol(), bp).value;
      const auto stars =
          multi_M_star_all(g, ml_nmax, Grid::linspace(0.0, ml_xmax, ml_grid), ml_c.tol());
      double fact = 1.0;
      for (int n = 1; n <= ml_nmax; ++n) {
        fact *= n;
        const double ratio = stars[static_cast<std::size_t>(n - 1)].value *
                             std::sqrt(fact) / std::pow(bnorm, n);
        table.add({kernel_id, static_cast<double>(n),
                   stars[static_cast<std::size_t>(n - 1)].value, bnorm, ratio,
                   std::pow(ratio, 1.0 / n)});
      }
    };

    if (!ml_suite) {
      auto gpot = DecayingPotential::parse(ml_g);
      cfg.set("g", gpot.descriptor());
      cfg.set("modulate", ml_mod);
      const double mod = ml_mod;
      ComplexFn g = [gpot, mod](double x) { return std::polar(1.0, mod * x) * gpot(x); };
      t.columns = {"kernel", "n", "mstar", "bnorm", "ratio", "ratio_root"};
      ratio_rows(g, gpot.breakpoints(ml_xmax), 0.0, t);
    } else {
      t.columns = {"kernel", "n", "mstar", "bnorm", "ratio", "ratio_root"};
      ComplexFn g0 = [](double x) {
        return std::complex<double>{std::pow(1.0 + x, -0.9), 0.0};
      };
      ComplexFn g1 = [](double x) {
        return std::polar(std::pow(1.0 + x, -0.9), 2.0 * x);
      };
      auto osc = std::make_shared<OscKernel>(
          make_kernel(PeriodicPotential::parse("mathieu:1.0"),
                      DecayingPotential::parse("power:1,0.9"), 5.0, ml_xmax));
      ComplexFn g2 = [osc](double x) { return osc->F(x); };
      ratio_rows(g0, {}, 0.0, t);
      ratio_rows(g1, {}, 1.0, t);
      ratio_rows(g2, {}, 2.0, t);
      // simplex identity rows: kernel id 9, columns reused as (n, got, exact, err)
      auto one = [](double) { return std::complex<double>{1.0, 0.0}; };
      double fact = 1.0;
      for (int n = 1; n <= 8; ++n) {
        fact *= n;
        std::vector<ComplexFn> gs(static_cast<std::size_t>(n), one);
        const auto got = multi_M(gs, 0.0, 1.0, Tolerance::tight());
        t.add({9.0, static_cast<double>(n), got.real(), 1.0 / fact,
               std::abs(got - std::complex<double>{1.0 / fact, 0.0}), 0.0});
      }
    }
    write_output(cfg, t, ml_c.out, ml_c.format);
    return 0;
  }

  if (ortho->parsed()) {
    ortho_c.apply_threads();
    RunConfig cfg{"ortho", {}};
    cfg.set("mode", ortho_mode);
    ortho_c.echo(cfg);
    Table t;

    if (ortho_mode == "pair" || ortho_mode == "sweep" || ortho_mode == "i4") {
      auto v0 = PeriodicPotential::parse(ortho_v0);
      auto v = DecayingPotential::parse(ortho_v);
      auto f = PeriodicWeight::parse(ortho_f);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      cfg.set("f", ortho_f);
      cfg.set("e1", ortho_e1);
      if (ortho_mode == "pair") {
        cfg.set("e2", ortho_e2);
        cfg.set("L", ortho_L);
        const auto oi = orthogonality_integrals(v0, v, ortho_e1, ortho_e2, ortho_L, f,
                                                ortho_c.tol());
        t.columns = {"gap", "i4", "i22"};
        t.add({std::abs(ortho_e1 - ortho_e2), oi.i4, oi.i22});
      } else if (ortho_mode == "sweep") {
        cfg.set("gaps", ortho_gaps);
        cfg.set("l-rule", ortho_lrule);
        cfg.set("L", ortho_L);
        cfg.set("l-cap", ortho_lcap);
        const auto gaps = parse_list(ortho_gaps);
        t.columns = {"gap", "log_inv_gap", "abs_i22", "i22", "L"};
        struct Row {
          double gap, li, ai, i, L;
        };
        auto rows = map_indexed<Row>(
            gaps.size(),
            [&](std::size_t i) {
              const double gap = gaps[i];
              const double L = (ortho_lrule == "scaled")
                                   ? std::min(10.0 / gap, ortho_lcap)
                                   : ortho_L;
              const auto oi = orthogonality_integrals(v0, v, ortho_e1, ortho_e1 + gap,
                                                      L, f, ortho_c.tol());
              return Row{gap, std::log(1.0 / gap), std::abs(oi.i22), oi.i22, L};
            },
            ortho_c.exec());
        for (const Row& r : rows) t.add({r.gap, r.li, r.ai, r.i, r.L});
      } else {  // i4
        cfg.set("l-list", ortho_llist);
        const auto ls = parse_list(ortho_llist);
        t.columns = {"L", "i4"};
        struct Row {
          double L, i4;
        };
        auto rows = map_indexed<Row>(
            ls.size(),
            [&](std::size_t i) {
              return Row{ls[i],
                         cos4_integral(v0, v, ortho_e1, ls[i], f, ortho_c.tol())};
            },
            ortho_c.exec());
        for (const Row& r : rows) t.add({r.L, r.i4});
      }
    } else if (ortho_mode == "osc") {
      cfg.set("G", ortho_g);
      cfg.set("gammas", ortho_gammas);
      cfg.set("l-rule", ortho_lrule);
      cfg.set("L", ortho_L);
      cfg.set("l-cap", ortho_lcap);
      const auto gammas = parse_list(ortho_gammas);
      t.columns = {"gamma", "log_inv_gamma", "value", "abs", "L"};
      for (double g : gammas) {
        const double L =
            (ortho_lrule == "scaled") ? std::min(10.0 / g, ortho_lcap) : ortho_L;
        const double val =
            osc_integral(g, make_phase_g(ortho_g, g), L,
                         Tolerance{1e-8, 1e-8, 10'000'000});
        t.add({g, std::log(1.0 / g), val, std::abs(val), L});
      }
    } else if (ortho_mode == "modes") {
      cfg.set("G", ortho_g);
      cfg.set("gamma", ortho_gamma);
      cfg.set("k-list", ortho_klist);
      cfg.set("L", ortho_L);
      const auto ks = parse_list(ortho_klist);
      t.columns = {"k", "re", "im", "abs"};
      for (double kd : ks) {
        const int k = static_cast<int>(kd);
        const auto val = fourier_mode_integral(k, ortho_gamma,
                                               make_phase_g(ortho_g, ortho_gamma),
                                               ortho_L, Tolerance{1e-10, 1e-10, 10'000'000});
        t.add({static_cast<double>(k), val.real(), val.imag(), std::abs(val)});
      }
    } else if (ortho_mode == "bounds") {
      // part 0: stalling-phase gamma sweep; part 1: mode-k decay at gamma = 1
      cfg.set("gammas", ortho_gammas);
      cfg.set("k-list", ortho_klist);
      cfg.set("l-cap", ortho_lcap);
      t.columns = {"part", "x", "abs", "aux"};
      for (double g : parse_list(ortho_gammas)) {
        const double L = std::min(10.0 / g, ortho_lcap);
        const double val = osc_integral(g, make_phase_g("stall", g), L,
                                        Tolerance{1e-8, 1e-8, 10'000'000});
        t.add({0.0, g, std::abs(val), std::log(1.0 / g)});
      }
      for (double kd : parse_list(ortho_klist)) {
        const int k = static_cast<int>(kd);
        const auto val = fourier_mode_integral(k, 1.0, make_phase_g("stall", 1.0),
                                               200.0, Tolerance{1e-10, 1e-10, 10'000'000});
        t.add({1.0, kd, std::abs(val), std::log(static_cast<double>(k))});
      }
    } else {  // growth
      // part 0: free-case |I22| over the gap decades; part 1: I4 across L
      auto v0 = PeriodicPotential::parse(ortho_v0);
      auto v = DecayingPotential::parse(ortho_v);
      auto f = PeriodicWeight::parse(ortho_f);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      cfg.set("f", ortho_f);
      cfg.set("e1", ortho_e1);
      cfg.set("gaps", ortho_gaps);
      cfg.set("l-list", ortho_llist);
      cfg.set("l-cap", ortho_lcap);
      t.columns = {"part", "x", "value", "aux"};
      const auto gaps = parse_list(ortho_gaps);
      struct Row {
        double gap, i22, L;
      };
      auto rows = map_indexed<Row>(
          gaps.size(),
          [&](std::size_t i) {
            const double gap = gaps[i];
            const double L = std::min(10.0 / gap, ortho_lcap);
            const auto oi =
                orthogonality_integrals(v0, v, ortho_e1, ortho_e1 + gap, L, f,
                                        ortho_c.tol());
            return Row{gap, std::abs(oi.i22), L};
          },
          ortho_c.exec());
      for (const Row& r : rows) t.add({0.0, r.gap, r.i22, r.L});
      for (double L : parse_list(ortho_llist)) {
        t.add({1.0, L, cos4_integral(v0, v, ortho_e1, L, f, ortho_c.tol()), 0.0});
      }
    }
    write_output(cfg, t, ortho_c.out, ortho_c.format);
    return 0;
  }

  if (mart->parsed()) {
    mart_c.apply_threads();
    RunConfig cfg{"martingale", {}};
    auto fpot = DecayingPotential::parse(mart_f);
    cfg.set("f", fpot.descriptor());
    cfg.set("p", mart_p);
    cfg.set("depth", mart_depth);
    cfg.set("xmax", mart_xmax);
    cfg.set("action", mart_action);
    mart_c.echo(cfg);
    RealFn absf = [fpot](double x) { return std::abs(fpot(x)); };
    auto ms = MartingaleStructure::build(absf, mart_p, mart_depth, mart_xmax,
                                         mart_c.tol(), fpot.breakpoints(mart_xmax));
    Table t;
    if (mart_action == "cells") {
      t.columns = {"m", "j", "lo", "hi"};
      for (int m = 1; m <= ms.depth(); ++m) {
        const auto& lv = ms.level(m);
        for (std::size_t j = 0; j + 1 < lv.size(); ++j) {
          t.add({static_cast<double>(m), static_cast<double>(j + 1), lv[j], lv[j + 1]});
        }
      }
    } else if (mart_action == "adapted") {
      t.columns = {"max_ratio", "total_mass", "holds"};
      const double worst = ms.adapted_max_ratio(absf, mart_c.tol(),
                                                fpot.breakpoints(mart_xmax));
      t.add({worst, ms.total_mass(), worst <= 1.0 + 1e-9 ? 1.0 : 0.0});
    } else {  // bnorm
      cfg.set("modulate", mart_mod);
      cfg.set("s", mart_s);
      const double mod = mart_mod;
      ComplexFn g = [fpot, mod](double x) { return std::polar(1.0, mod * x) * fpot(x); };
      const BNorm bn = b_norm(g, ms, mart_s, mart_c.tol(), fpot.breakpoints(mart_xmax));
      t.columns = {"m", "level_value", "total"};
      for (std::size_t m = 0; m < bn.level_values.size(); ++m) {
        t.add({static_cast<double>(m + 1), bn.level_values[m], bn.value});
      }
    }
    write_output(cfg, t, mart_c.out, mart_c.format);
    return 0;
  }

  if (mcheck->parsed()) {
    mc_c.apply_threads();
    RunConfig cfg{"mcheck", {}};
    cfg.set("mode", mc_mode);
    mc_c.echo(cfg);
    Table t;

    if (mc_mode == "density" || mc_mode == "free") {
      auto v0 = (mc_mode == "free") ? PeriodicPotential::zero()
                                    : PeriodicPotential::parse(mc_v0);
      auto v = (mc_mode == "free") ? DecayingPotential::zero()
                                   : DecayingPotential::parse(mc_v);
      const double L = (mc_mode == "free") ? 1.0 : mc_L;
      const auto eps = parse_list(mc_eps);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      cfg.set("L", L);
      cfg.set("eps-seq", mc_eps);
      const Grid grid = (mc_mode == "free")
                            ? Grid({1.0, 4.0, 9.0})
                            : Grid::linspace(mc_emin, mc_emax, mc_esteps);
      if (mc_mode == "density") {
        cfg.set("emin", mc_emin);
        cfg.set("emax", mc_emax);
        cfg.set("esteps", static_cast<int>(mc_esteps));
      }
      struct Row {
        double e, dp, dw, gap, cf;
      };
      auto rows = map_indexed<Row>(
          grid.size(),
          [&](std::size_t i) {
            const double e = grid[i];
            Row r{e, 0, 0, 0, 0};
            r.dp = density_prufer(v0, v, L, e, mc_c.tol()).density;
            r.dw = density_weyl(v0, v, L, e, eps, mc_c.tol()).density;
            r.gap = std::abs(r.dp - r.dw) / r.dp;
            r.cf = (mc_mode == "free") ? std::sqrt(e) / kPi : 0.0;
            return r;
          },
          mc_c.exec());
      t.columns = {"E", "density_prufer", "density_weyl", "rel_gap", "closed_form"};
      for (const Row& r : rows) t.add({r.e, r.dp, r.dw, r.gap, r.cf});
    } else if (mc_mode == "herglotz") {
      auto v0 = PeriodicPotential::parse(mc_v0);
      auto v = DecayingPotential::parse(mc_v);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      cfg.set("L", mc_L);
      cfg.set("count", static_cast<int>(mc_count));
      std::mt19937 rng(static_cast<unsigned>(mc_c.seed));
      std::uniform_real_distribution<double> ur(-2.0, 40.0), ui(1e-3, 3.0);
      t.columns = {"re_z", "im_z", "re_m", "im_m", "herglotz"};
      for (std::size_t i = 0; i < mc_count; ++i) {
        const std::complex<double> z{ur(rng), ui(rng)};
        const auto wm = m_function(v0, v, mc_L, z, mc_c.tol());
        t.add({z.real(), z.imag(), wm.m.real(), wm.m.imag(),
               wm.m.imag() > 0.0 ? 1.0 : 0.0});
      }
    } else if (mc_mode == "lee") {
      auto v0 = PeriodicPotential::parse(mc_v0);
      auto v = DecayingPotential::parse(mc_v);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      cfg.set("energies", mc_energies);
      cfg.set("lee-L", mc_lee_L);
      cfg.set("l-list", mc_llist);
      const auto energies = parse_list(mc_energies);
      t.columns = {"L", "i", "E", "k", "A", "half_gamma_logL", "alpha", "lhs", "rhs",
                   "holds"};
      // A_i growth across the truncation sweep; the inequality at lee-L
      for (double L : parse_list(mc_llist)) {
        const auto vecs = pruefer_unit_vectors(v0, v, energies, L, mc_c.tol(),
                                               mc_c.exec());
        double alpha = 0.0, lhs = 0.0, rhs = 0.0, holds = 0.0;
        if (L == mc_lee_L || std::abs(L - mc_lee_L) < 1e-12) {
          std::vector<RealFn> fns;
          for (const auto& pv : vecs) fns.push_back(pv.fn);
          const auto rep =
              lee_bound_check(fns, [&v](double x) { return v(x); }, L, mc_c.tol());
          alpha = rep.alpha;
          lhs = rep.lhs;
          rhs = rep.rhs;
          holds = rep.holds ? 1.0 : 0.0;
        }
        for (std::size_t i = 0; i < vecs.size(); ++i) {
          t.add({L, static_cast<double>(i), vecs[i].energy, vecs[i].k, vecs[i].a_norm,
                 0.5 * vecs[i].capital_gamma * std::log(L), alpha, lhs, rhs, holds});
        }
      }
    } else if (mc_mode == "monodromy") {
      cfg.set("count", static_cast<int>(mc_count));
      std::mt19937 rng(static_cast<unsigned>(mc_c.seed));
      std::uniform_real_distribution<double> ue(0.1, 50.0), ua(0.0, 3.0), uw(0.2, 0.8);
      std::uniform_int_distribution<int> kind(0, 2);
      t.columns = {"part", "x", "value", "err"};
      for (std::size_t i = 0; i < mc_count; ++i) {
        PeriodicPotential v0 = PeriodicPotential::zero();
        char buf[64];
        if (int k = kind(rng); k == 1) {
          std::snprintf(buf, sizeof buf, "mathieu:%.6f", ua(rng));
          v0 = PeriodicPotential::parse(buf);
        } else if (k == 2) {
          std::snprintf(buf, sizeof buf, "square:%.6f,%.6f", ua(rng), uw(rng));
          v0 = PeriodicPotential::parse(buf);
        }
        const double e = ue(rng);
        const double det = monodromy(v0, e, mc_c.tol()).det();
        t.add({0.0, e, det, std::abs(det - 1.0)});
      }
      auto free = PeriodicPotential::zero();
      const Grid grid = Grid::linspace(0.1, 50.0, 200);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = discriminant(free, grid[i], mc_c.tol());
        t.add({1.0, grid[i], d, std::abs(d - 2.0 * std::cos(std::sqrt(grid[i])))});
      }
    } else if (mc_mode == "tails") {
      t.columns = {"part", "x", "value", "err"};
      auto g = [](double s) { return std::complex<double>{std::exp(-s), 0.0}; };
      for (double x : {0.0, 0.5, 1.0, 1.7, 2.5, 3.0}) {
        const auto r = tail_B({g, g}, x, x + 8.0);
        t.add({0.0, x, r.value.real(),
               std::abs(r.value - std::complex<double>{0.5 * std::exp(-2.0 * x), 0.0})});
      }
      std::mt19937 rng(static_cast<unsigned>(mc_c.seed));
      std::uniform_real_distribution<double> ux(0.1, 2.0);
      for (int i = 0; i < 20; ++i) {
        const double x = ux(rng);
        const double h = 1e-4;
        const auto fd = (tail_B({g, g}, x + h, x + 10.0).value -
                         tail_B({g, g}, x - h, x + 10.0).value) /
                        (2.0 * h);
        const auto b1 = tail_B({g}, x, x + 10.0).value;
        t.add({1.0, x, fd.real(), std::abs(fd + g(x) * b1)});
      }
    } else if (mc_mode == "identities") {
      auto v0 = PeriodicPotential::parse(mc_v0);
      auto v = DecayingPotential::parse(mc_v);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      auto kern = make_kernel(v0, v, 0.5 * (mc_emin + mc_emax), 128.0, mc_c.tol());
      const FloquetData& d = kern.data();
      std::mt19937 rng(static_cast<unsigned>(mc_c.seed));
      std::uniform_real_distribution<double> ux(0.0, 120.0);
      t.columns = {"part", "x", "value", "err"};
      for (int i = 0; i < 100; ++i) {
        const double x = ux(rng);
        const std::complex<double> phi = d.phi(x);
        const double im = std::imag(phi * std::conj(d.phi_prime(x)));
        const std::complex<double> lhs = std::complex<double>{0.0, 1.0} * v(x) *
                                         std::conj(phi) * std::conj(phi) *
                                         std::polar(1.0, -2.0 * kern.p_phase(x)) /
                                         (2.0 * im);
        const std::complex<double> rhs = std::complex<double>{0.0, -1.0} * v(x) /
                                         (2.0 * d.gamma_prime(x)) *
                                         std::polar(1.0, -kern.h(x));
        t.add({0.0, x, std::abs(lhs),
               std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs))});
      }
      const double young = kPi / std::tanh(kPi);
      std::uniform_real_distribution<double> uf(0.0, 1.0);
      for (int trial = 0; trial < 100; ++trial) {
        const int n = 5 + static_cast<int>(uf(rng) * 60);
        std::vector<double> f(static_cast<std::size_t>(n));
        double ss = 0.0;
        for (auto& w : f) {
          w = uf(rng);
          ss += w * w;
        }
        double lhs = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            lhs += f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(j)] /
                   (1.0 + (i - j) * (i - j));
        t.add({1.0, static_cast<double>(trial), lhs / ss,
               lhs <= young * ss * (1.0 + 1e-12) ? 0.0 : 1.0});
      }
    } else {  // separate
      auto v0 = PeriodicPotential::parse(mc_v0);
      auto v = DecayingPotential::parse(mc_v);
      cfg.set("v0", v0.descriptor());
      cfg.set("v", v.descriptor());
      cfg.set("sep-eps", mc_sep_eps);
      cfg.set("sigma", mc_sigma);
      cfg.set("beta", mc_beta);
      cfg.set("c1", mc_c1);
      cfg.set("N", mc_N);
      cfg.set("imin", mc_imin);
      cfg.set("imax", mc_imax);
      cfg.set("egrid", static_cast<int>(mc_egrid));
      cfg.set("l-cap", mc_lcap);
      const auto rep = separate_set_scan(v0, v, mc_sep_eps, mc_sigma, mc_beta, mc_c1,
                                         mc_N, Grid::linspace(mc_imin, mc_imax, mc_egrid),
                                         mc_lcap, mc_c.tol(), mc_c.exec());
      t.columns = {"E", "k", "resonance", "selected", "threshold", "L", "k_gap",
                   "selected_count", "bound_holds"};
      for (const auto& c : rep.candidates) {
        t.add({c.energy, c.k, c.resonance, c.selected ? 1.0 : 0.0, rep.threshold,
               rep.truncation, rep.k_gap, static_cast<double>(rep.selected_count),
               rep.bound_holds ? 1.0 : 0.0});
      }
      if (rep.candidates.empty()) {
        t.add({0.0, 0.0, 0.0, 0.0, rep.threshold, rep.truncation, rep.k_gap, 0.0,
               rep.bound_holds ? 1.0 : 0.0});
      }
    }
    write_output(cfg, t, mc_c.out, mc_c.format);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // --config FILE: key=value lines injected as defaults right after the
  // subcommand token, so explicit flags override the file.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) throw InputError("--config needs a path");
        const std::string path = args[i + 1];
        args.erase(args.begin() + static_cast<long>(i),
                   args.begin() + static_cast<long>(i) + 2);
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config file '" + path + "'");
        std::vector<std::string> injected;
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty() || line[0] == '#') continue;
          const auto eq = line.find('=');
          if (eq == std::string::npos)
            throw InputError("config file: expected key=value, got '" + line + "'");
          injected.push_back("--" + line.substr(0, eq));
          injected.push_back(line.substr(eq + 1));
        }
        if (args.empty()) throw InputError("--config requires a subcommand");
        args.insert(args.begin() + 1, injected.begin(), injected.end());
        break;
      }
    }

    std::vector<char*> cargv;
    cargv.push_back(argv[0]);
    for (auto& a : args) cargv.push_back(a.data());
    return run(static_cast<int>(cargv.size()), cargv.data());
  } catch (const ConvergenceError& e) {
    std::cerr << "error (non-convergence): " << e.what() << "\n";
    return 3;
  } catch (const PrecisionError& e) {
    std::cerr << "error (precision): " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

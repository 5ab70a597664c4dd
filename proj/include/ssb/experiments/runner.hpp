#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssb/eigensolve.hpp"
#include "ssb/eigensolve/sectors.hpp"
#include "ssb/experiments/config.hpp"
#include "ssb/experiments/output.hpp"
#include "ssb/experiments/pool.hpp"
#include "ssb/hamiltonian.hpp"
#include "ssb/semiclassics.hpp"
#include "ssb/spin.hpp"

namespace ssb::experiments {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3 };

struct TaskRecord {
  std::string name;
  std::string status;  // "ok" or "failed"
  double wall_seconds = 0.0;
  std::string error;
};

struct RunManifest {
  json config;
  std::vector<TaskRecord> tasks;
  std::uint64_t seed = 0x5EED;
  std::size_t jobs = 1;
  std::string started, finished;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
  std::string status;
  int exit_code = exit_ok;

  json to_json() const {
    json j;
    j["tool"] = tool_name;
    j["version"] = tool_version;
    j["config"] = config;
    std::ostringstream hex;
    hex << "0x" << std::hex << std::uppercase << seed;
    j["seed"] = {{"value", seed}, {"hex", hex.str()}, {"source", std::getenv("SSB_LAB_SEED") ? "SSB_LAB_SEED" : "default"}};
    j["jobs"] = jobs;
    j["started"] = started;
    j["finished"] = finished;
    j["wall_seconds"] = wall_seconds;
    j["status"] = status;
    j["exit_code"] = exit_code;
    json t = json::array();
    for (const auto& r : tasks) {
      json e{{"name", r.name}, {"status", r.status}, {"wall_seconds", r.wall_seconds}};
      if (!r.error.empty()) e["error"] = r.error;
      t.push_back(e);
    }
    j["tasks"] = t;
    j["outputs"] = outputs;
    return j;
  }
};

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<bool> emit_svg;
  std::size_t jobs = 0;  // 0: one per logical core
  std::optional<std::uint64_t> seed;
};

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

class Context {
 public:
  Context(fs::path out, bool svg, std::uint64_t seed, std::size_t jobs, RunManifest& manifest)
      : out_(std::move(out)), svg_(svg), seed_(seed), jobs_(jobs), manifest_(manifest) {}

  std::uint64_t seed() const { return seed_; }
  json& summary() { return summary_; }
  bool failed() const { return failed_; }

  SolverOptions solver(double weight, double tol = 1e-8, std::size_t max_restarts = SolverOptions{}.max_restarts) const {
    SolverOptions o;
    o.max_restarts = max_restarts;
    o.seed = seed_;
    o.weight = weight;
    o.tol = tol;
    return o;
  }

  void csv(const std::string& name, const CsvTable& table) {
    table.write(out_ / name);
    manifest_.outputs.push_back(name);
  }

  template <class Chart>
  void svg(const std::string& name, const Chart& chart) {
    if (!svg_) return;
    write_text(out_ / name, render_svg(chart));
    manifest_.outputs.push_back(name);
  }

  /// Runs fn(i) for every task on the worker pool; failed tasks yield nullopt.
  template <class R>
  std::vector<std::optional<R>> sweep(const std::vector<std::string>& names, const std::function<R(std::size_t)>& fn) {
    std::vector<std::optional<R>> out(names.size());
    std::vector<TaskRecord> records(names.size());
    parallel_for(names.size(), jobs_, [&](std::size_t i) {
      const auto t0 = std::chrono::steady_clock::now();
      records[i].name = names[i];
      try {
        out[i] = fn(i);
        records[i].status = "ok";
      } catch (const std::exception& e) {
        records[i].status = "failed";
        records[i].error = e.what();
      }
      records[i].wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    for (auto& r : records) {
      if (r.status != "ok") failed_ = true;
      manifest_.tasks.push_back(std::move(r));
    }
    return out;
  }

 private:
  fs::path out_;
  bool svg_;
  std::uint64_t seed_;
  std::size_t jobs_;
  RunManifest& manifest_;
  json summary_ = json::object();
  bool failed_ = false;
};

inline std::string hbar_label(double h) {
  std::ostringstream o;
  o << "hbar=" << h;
  return o.str();
}

inline std::vector<std::string> task_names(const std::string& prefix, const std::vector<double>& hbars) {
  std::vector<std::string> out;
  for (double h : hbars) out.push_back(prefix + " " + hbar_label(h));
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

namespace run_detail {

inline Grid1D grid_1d(const json& p) { return experiments::detail::grid_from(p.at("grid")); }

inline bool degenerate(const Spectrum& s) { return !s.degenerate.empty() && s.degenerate[0]; }

inline Heatmap husimi_heatmap(const HusimiField& f, const std::string& title) {
  // density index iq * np + ip; heatmap rows run over p (y), columns over q (x)
  const auto& pg = f.phase_grid;
  Heatmap h{title, "q", "p", pg.q[0].min, pg.q[0].max, pg.p[0].min, pg.p[0].max, pg.q[0].n, pg.p[0].n, {}};
  h.values.resize(pg.q[0].n * pg.p[0].n);
  for (std::size_t iq = 0; iq < pg.q[0].n; ++iq)
    for (std::size_t ip = 0; ip < pg.p[0].n; ++ip) h.values[ip * pg.q[0].n + iq] = f.density[iq * pg.p[0].n + ip];
  return h;
}

struct DwPoint {
  Spectrum spectrum;
  HusimiField husimi;
  double mass_right = 0.0;
  std::vector<double> argmax;
  std::vector<double> suite_values;
};

inline int dw_flea(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto hbars = p["hbar"].get<std::vector<double>>();
  const Grid1D grid = grid_1d(p);
  const AnyGrid ag(grid);
  const Bump1D bump{p["flea"]["b"].get<double>(), p["flea"]["c"].get<double>(), p["flea"]["d"].get<double>()};
  const double predicted_q = (bump.d < 0.0 ? 1.0 : -1.0) * (bump.b >= 0.0 ? 1.0 : -1.0);
  const auto suite = default_test_suite();
  const auto target = DiscreteMeasure::dirac({predicted_q, 0.0});

  const auto points = ctx.sweep<DwPoint>(task_names("doublewell_flea", hbars), [&](std::size_t i) {
    const double hb = hbars[i];
    DwPoint r;
    r.spectrum = lowest_k(assemble_hamiltonian(ag, hb, DoubleWell{}, FleaSpec{bump}), 2, ctx.solver(grid.weight()));
    r.husimi = husimi(r.spectrum.eigenvectors[0], hb, default_phase_grid(ag, hb), ag);
    r.mass_right = half_space_mass(r.husimi, 0);
    r.argmax = husimi_argmax(r.husimi);
    for (const auto& t : suite) r.suite_values.push_back(r.husimi.integrate(t.f));
    return r;
  });

  CsvTable pot({"x", "b", "c", "d", "V", "flea", "V_total"});
  for (std::size_t k = 0; k < grid.dof(); ++k) {
    const double x = grid.coordinate(k), v = eval_potential(DoubleWell{}, x), f = eval_flea(bump, x);
    pot.add({x, bump.b, bump.c, bump.d, v, f, v + f});
  }
  ctx.csv("potential.csv", pot);

  CsvTable loc({"hbar", "x_min", "x_max", "n", "b", "c", "d", "E0", "E1", "gap", "degenerate", "husimi_mass", "low_mass",
                "mass_right", "half_space_mass", "localized_side", "predicted_q", "argmax_q", "argmax_p", "suite_deviation"});
  CsvTable dens({"hbar", "b", "c", "d", "x", "psi", "density"});
  CsvTable hus({"hbar", "b", "c", "d", "q", "p", "husimi"});
  CsvTable trace({"hbar", "b", "c", "d", "function", "value", "target"});
  LineChart dchart{"Ground-state density", "x", "|psi|^2", false, false, {}};
  LineChart lchart{"Localization", "hbar", "Husimi mass on localized side", true, false, {{"mass", {}, {}}}};
  json rows = json::array();
  const auto& g = p["grid"];
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!points[i]) continue;
    const auto& r = *points[i];
    const double hb = hbars[i];
    const double localized = std::max(r.mass_right, 1.0 - r.mass_right);
    double dev = 0.0;
    for (std::size_t t = 0; t < suite.size(); ++t) {
      const double tv = target.expect(suite[t].f);
      dev = std::max(dev, std::abs(r.suite_values[t] - tv));
      trace.add({hb, bump.b, bump.c, bump.d, suite[t].name, r.suite_values[t], tv});
    }
    loc.add({hb, g["x_min"].get<double>(), g["x_max"].get<double>(), g["n"].get<std::int64_t>(), bump.b, bump.c, bump.d,
             r.spectrum.eigenvalues[0], r.spectrum.eigenvalues[1], r.spectrum.gap, degenerate(r.spectrum),
             r.husimi.mass, r.husimi.low_mass, r.mass_right, localized, std::string(r.mass_right >= 0.5 ? "right" : "left"),
             predicted_q, r.argmax[0], r.argmax[1], dev});
    Series s{hbar_label(hb), {}, {}};
    for (std::size_t k = 0; k < grid.dof(); ++k) {
      const double v = r.spectrum.eigenvectors[0][k];
      dens.add({hb, bump.b, bump.c, bump.d, grid.coordinate(k), v, v * v});
      s.x.push_back(grid.coordinate(k));
      s.y.push_back(v * v);
    }
    dchart.series.push_back(std::move(s));
    if (p["husimi_csv"].get<bool>())
      for (std::size_t k = 0; k < r.husimi.density.size(); ++k) {
        const auto z = r.husimi.phase_grid.point(k);
        hus.add({hb, bump.b, bump.c, bump.d, z[0], z[1], r.husimi.density[k]});
      }
    lchart.series[0].x.push_back(hb);
    lchart.series[0].y.push_back(localized);
    rows.push_back({{"hbar", hb}, {"mass_right", r.mass_right}, {"half_space_mass", localized},
                    {"degenerate", degenerate(r.spectrum)}, {"gap", r.spectrum.gap},
                    {"husimi_mass", r.husimi.mass}, {"suite_deviation", dev}});
  }
  ctx.csv("localization.csv", loc);
  ctx.csv("density.csv", dens);
  ctx.csv("trace.csv", trace);
  if (p["husimi_csv"].get<bool>()) ctx.csv("husimi.csv", hus);
  ctx.summary()["rows"] = rows;
  ctx.summary()["predicted_q"] = predicted_q;

  LineChart pchart{"Double well with flea", "x", "V", false, false, {{"V", {}, {}}, {"V + flea", {}, {}}}};
  for (std::size_t k = 0; k < grid.dof(); ++k) {
    const double x = grid.coordinate(k), v = eval_potential(DoubleWell{}, x);
    pchart.series[0].x.push_back(x), pchart.series[0].y.push_back(v);
    pchart.series[1].x.push_back(x), pchart.series[1].y.push_back(v + eval_flea(bump, x));
  }
  ctx.svg("potential.svg", pchart);
  ctx.svg("density.svg", dchart);
  ctx.svg("localization.svg", lchart);
  for (std::size_t i = hbars.size(); i-- > 0;)
    if (points[i]) {
      ctx.svg("husimi.svg", husimi_heatmap(points[i]->husimi, "Husimi density, " + hbar_label(hbars[i])));
      break;
    }
  return ctx.failed() ? exit_solver : exit_ok;
}

inline int gap_scaling_run(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto hbars = p["hbar"].get<std::vector<double>>();
  const Grid1D grid = grid_1d(p);
  const AnyGrid ag(grid);
  const bool with_flea = p["flea"]["enabled"].get<bool>();
  const Bump1D bump{p["flea"]["b"].get<double>(), p["flea"]["c"].get<double>(), p["flea"]["d"].get<double>()};
  const auto pts = ctx.sweep<GapRow>(task_names("gap_scaling", hbars), [&](std::size_t i) {
    const double hb = hbars[i];
    SolverOptions opt = ctx.solver(grid.weight());
    opt.vectors = false;
    Spectrum s;
    if (with_flea) {
      s = lowest_k(assemble_hamiltonian(ag, hb, DoubleWell{}, FleaSpec{bump}), 2, opt);
    } else {
      const auto h = assemble_hamiltonian(ag, hb, DoubleWell{});
      opt.vectors = true;
      s = parity_pair(h, Reflection::mirror(h.dim()), opt);
    }
    return GapRow{hb, s.eigenvalues[1] - s.eigenvalues[0], s.eigenvalues[0], s.eigenvalues[1]};
  });
  GapScaling table;
  for (const auto& r : pts)
    if (r) table.rows.push_back(*r);
  fit_gap_table(table, p["accept_r2"].get<double>());

  CsvTable gaps({"hbar", "inv_hbar", "flea", "b", "c", "d", "n", "E0", "E1", "gap", "ln_gap"});
  LineChart chart{"Tunnelling gap", "1/hbar", "gap", false, true, {{"gap", {}, {}}}};
  for (const auto& r : table.rows) {
    gaps.add({r.hbar, 1.0 / r.hbar, with_flea, bump.b, bump.c, bump.d, p["grid"]["n"].get<std::int64_t>(), r.e0, r.e1, r.gap,
              r.gap > 0.0 ? std::log(r.gap) : -INFINITY});
    chart.series[0].x.push_back(1.0 / r.hbar);
    chart.series[0].y.push_back(r.gap);
  }
  ctx.csv("gaps.csv", gaps);
  CsvTable fit({"law", "regressor", "slope", "intercept", "r2", "accept_r2", "accepted"});
  const double acc = p["accept_r2"].get<double>();
  if (table.exponential) fit.add({std::string("exponential"), std::string("1/hbar"), table.exponential->slope, table.exponential->intercept, table.exponential->r2, acc, table.exponential_accepted});
  if (table.power) fit.add({std::string("power"), std::string("ln hbar"), table.power->slope, table.power->intercept, table.power->r2, acc, false});
  ctx.csv("fit.csv", fit);
  ctx.svg("gaps.svg", chart);
  ctx.summary()["exponential_accepted"] = table.exponential_accepted;
  if (table.exponential) ctx.summary()["exponential"] = {{"slope", table.exponential->slope}, {"intercept", table.exponential->intercept}, {"r2", table.exponential->r2}};
  if (table.power) ctx.summary()["power"] = {{"slope", table.power->slope}, {"intercept", table.power->intercept}, {"r2", table.power->r2}};
  return ctx.failed() ? exit_solver : exit_ok;
}

struct AndersonPoint {
  double e0, e1;
  double energy_plus, energy_minus;
  double mass_plus, mass_minus;
  double husimi_plus, husimi_minus;
  std::vector<double> plus, minus;
};

inline int anderson_run(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto hbars = p["hbar"].get<std::vector<double>>();
  const Grid1D grid = grid_1d(p);
  const AnyGrid ag(grid);
  const auto pts = ctx.sweep<AndersonPoint>(task_names("anderson_pair", hbars), [&](std::size_t i) {
    const double hb = hbars[i];
    const auto h = assemble_hamiltonian(ag, hb, DoubleWell{});
    const auto s = parity_pair(h, Reflection::mirror(h.dim()), ctx.solver(grid.weight()));
    const auto pair = anderson_pair(s.eigenvectors[0], s.eigenvectors[1], grid.weight());
    auto energy = [&](const std::vector<double>& v) {
      const auto hv = h.apply(v);
      double e = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) e += v[k] * hv[k];
      return e * grid.weight();
    };
    const auto pg = default_phase_grid(ag, hb);
    const auto fp = husimi(pair.plus, hb, pg, ag);
    const auto fm = husimi(pair.minus, hb, pg, ag);
    return AndersonPoint{s.eigenvalues[0], s.eigenvalues[1], energy(pair.plus), energy(pair.minus),
                         half_space_mass(fp, 0), half_space_mass(fm, 0), fp.mass, fm.mass, pair.plus, pair.minus};
  });
  CsvTable t({"hbar", "state", "n", "E0", "E1", "energy", "target_energy", "energy_error", "husimi_mass", "mass_right", "mass_localized"});
  CsvTable dens({"hbar", "state", "x", "psi"});
  LineChart chart{"Anderson pair", "x", "psi", false, false, {}};
  json rows = json::array();
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!pts[i]) continue;
    const auto& r = *pts[i];
    const double target = 0.5 * (r.e0 + r.e1);
    for (int s = 0; s < 2; ++s) {
      const std::string name = s == 0 ? "plus" : "minus";
      const double e = s == 0 ? r.energy_plus : r.energy_minus, m = s == 0 ? r.mass_plus : r.mass_minus;
      const double hm = s == 0 ? r.husimi_plus : r.husimi_minus;
      t.add({hbars[i], name, p["grid"]["n"].get<std::int64_t>(), r.e0, r.e1, e, target, std::abs(e - target), hm, m, std::max(m, 1.0 - m)});
      const auto& v = s == 0 ? r.plus : r.minus;
      Series ser{name + " " + hbar_label(hbars[i]), {}, {}};
      for (std::size_t k = 0; k < grid.dof(); ++k) {
        dens.add({hbars[i], name, grid.coordinate(k), v[k]});
        ser.x.push_back(grid.coordinate(k));
        ser.y.push_back(v[k]);
      }
      chart.series.push_back(std::move(ser));
      rows.push_back({{"hbar", hbars[i]}, {"state", name}, {"energy_error", std::abs(e - target)}, {"mass_localized", std::max(m, 1.0 - m)}});
    }
  }
  ctx.csv("anderson.csv", t);
  ctx.csv("states.csv", dens);
  ctx.svg("anderson.svg", chart);
  ctx.summary()["rows"] = rows;
  return ctx.failed() ? exit_solver : exit_ok;
}

struct TowerPoint {
  std::vector<RadialState> sectors;
  std::vector<PolarField> towers;
};

struct MexicanFleaPoint {
  Spectrum spectrum;
  double mass_x = 0.0, mass_y = 0.0;
};

inline int mexican_run(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto hbars = p["hbar"].get<std::vector<double>>();
  const auto Ns = p["N"].get<std::vector<int>>();
  const double theta = p["theta"].get<double>();
  const auto nphi = static_cast<std::size_t>(p["n_phi"].get<std::int64_t>());
  const RadialGrid rg(p["r_max"].get<double>(), static_cast<std::size_t>(p["radial_nodes"].get<std::int64_t>()));
  const int nmax = Ns.back();

  const auto towers = ctx.sweep<TowerPoint>(task_names("mexican_tower", hbars), [&](std::size_t i) {
    TowerPoint t;
    t.sectors = mexican_sector_states(hbars[i], nmax, rg);
    for (int N : Ns) {
      const std::vector<RadialState> sub(t.sectors.begin() + (nmax - N), t.sectors.begin() + (nmax + N + 1));
      t.towers.push_back(mexican_tower(sub, theta, rg, nphi));
    }
    return t;
  });

  CsvTable sec({"hbar", "n", "r_max", "radial_nodes", "energy"});
  CsvTable tow({"hbar", "N", "theta", "n_phi", "norm", "peak_bin", "peak_phi", "angular_variance", "half_plane_mass"});
  CsvTable ang({"hbar", "N", "theta", "phi", "density"});
  LineChart chart{"Tower angular density", "phi", "density", false, false, {}};
  json rows = json::array();
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!towers[i]) continue;
    for (const auto& s : towers[i]->sectors) sec.add({hbars[i], static_cast<std::int64_t>(s.n), rg.r_max(), static_cast<std::int64_t>(rg.dof()), s.energy});
    for (std::size_t k = 0; k < Ns.size(); ++k) {
      const auto& f = towers[i]->towers[k];
      const auto a = f.angular_density();
      const auto peak = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
      double mean = 0.0, var = 0.0, half = 0.0, total = 0.0;
      for (double v : a) mean += v / static_cast<double>(a.size());
      for (std::size_t j = 0; j < a.size(); ++j) {
        var += (a[j] - mean) * (a[j] - mean) / static_cast<double>(a.size());
        total += a[j];
        if (std::cos(f.phi(j) - theta) > 0.0) half += a[j];
      }
      tow.add({hbars[i], static_cast<std::int64_t>(Ns[k]), theta, static_cast<std::int64_t>(nphi), f.norm2(),
               static_cast<std::int64_t>(peak), f.phi(peak), var, half / total});
      Series s{"N=" + std::to_string(Ns[k]) + " " + hbar_label(hbars[i]), {}, {}};
      for (std::size_t j = 0; j < a.size(); ++j) {
        ang.add({hbars[i], static_cast<std::int64_t>(Ns[k]), theta, f.phi(j), a[j]});
        s.x.push_back(f.phi(j));
        s.y.push_back(a[j]);
      }
      chart.series.push_back(std::move(s));
      rows.push_back({{"hbar", hbars[i]}, {"N", Ns[k]}, {"peak_phi", f.phi(peak)}, {"angular_variance", var}});
    }
  }
  ctx.csv("sectors.csv", sec);
  ctx.csv("tower.csv", tow);
  ctx.csv("angular_density.csv", ang);
  ctx.svg("angular_density.svg", chart);
  ctx.summary()["towers"] = rows;

  const auto& fl = p["flea"];
  if (fl["enabled"].get<bool>()) {
    const auto fh = fl["hbar"].get<std::vector<double>>();
    const auto n = static_cast<std::size_t>(fl["n"].get<std::int64_t>());
    const Grid2D g(-2, 2, n, -2, 2, n, Boundary::Dirichlet);
    const Bump2D bump{fl["bx"].get<double>(), fl["by"].get<double>(), fl["c"].get<double>(), fl["d"].get<double>()};
    const auto pts = ctx.sweep<MexicanFleaPoint>(task_names("mexican_flea", fh), [&](std::size_t i) {
      MexicanFleaPoint r;
      r.spectrum = lowest_k(assemble_hamiltonian(AnyGrid(g), fh[i], MexicanHat{}, FleaSpec{bump}), 2, ctx.solver(g.weight()));
      r.mass_x = half_plane_mass(r.spectrum.eigenvectors[0], g, 0);
      r.mass_y = half_plane_mass(r.spectrum.eigenvectors[0], g, 1);
      return r;
    });
    CsvTable t({"hbar", "n", "bx", "by", "c", "d", "E0", "E1", "gap", "half_plane_mass_x", "half_plane_mass_y"});
    json frows = json::array();
    for (std::size_t i = 0; i < fh.size(); ++i) {
      if (!pts[i]) continue;
      const auto& r = *pts[i];
      t.add({fh[i], static_cast<std::int64_t>(n), bump.bx, bump.by, bump.c, bump.d, r.spectrum.eigenvalues[0], r.spectrum.eigenvalues[1],
             r.spectrum.gap, r.mass_x, r.mass_y});
      frows.push_back({{"hbar", fh[i]}, {"half_plane_mass_x", r.mass_x}});
      if (i + 1 == fh.size()) {
        Heatmap h{"Mexican hat with flea, " + hbar_label(fh[i]), "x", "y", -2, 2, -2, 2, g.x().dof(), g.y().dof(), {}};
        h.values.resize(g.dof());
        for (std::size_t kx = 0; kx < g.x().dof(); ++kx)
          for (std::size_t ky = 0; ky < g.y().dof(); ++ky) {
            const double v = r.spectrum.eigenvectors[0][g.index(kx, ky)];
            h.values[ky * g.x().dof() + kx] = v * v;
          }
        ctx.svg("mexican_flea.svg", h);
      }
    }
    ctx.csv("mexican_flea.csv", t);
    ctx.summary()["flea"] = frows;
  }
  return ctx.failed() ? exit_solver : exit_ok;
}

struct MetalPoint {
  Spectrum spectrum;
  std::vector<double> cell_mass;
};

inline int metal_run(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto hbars = p["hbar"].get<std::vector<double>>();
  GaussianLattice lat;
  lat.V0 = p["V0"].get<double>();
  lat.alpha_x = p["alpha_x"].get<double>();
  lat.alpha_y = p["alpha_y"].get<double>();
  lat.a = p["a"].get<double>();
  lat.cells = static_cast<int>(p["cells"].get<std::int64_t>());
  lat.lattice_const = p["lattice_const"].get<double>();
  const auto npc = static_cast<std::size_t>(p["nodes_per_cell"].get<std::int64_t>());
  const Grid2D g = lattice_grid(lat, npc);
  const auto fleas = lattice_fleas(lat, g, p["delta"].get<double>(), static_cast<std::size_t>(p["flea_offset"].get<std::int64_t>()));
  const auto cells = static_cast<std::size_t>(lat.cells);
  const std::size_t center = cells / 2;
  const auto vpot = sample_potential(AnyGrid(g), lat);
  const auto vtot = sample_potential(AnyGrid(g), lat, FleaSpec{fleas});

  CsvTable pot({"x", "y", "cells", "lattice_const", "V0", "delta", "V", "V_total"});
  Heatmap ph{"Lattice potential with fleas", "x", "y", g.x().min(), g.x().max(), g.y().min(), g.y().max(), g.x().dof(), g.y().dof(), {}};
  ph.values.resize(g.dof());
  for (std::size_t kx = 0; kx < g.x().dof(); ++kx)
    for (std::size_t ky = 0; ky < g.y().dof(); ++ky) {
      const auto k = g.index(kx, ky);
      const auto xy = g.coordinate(k);
      pot.add({xy[0], xy[1], static_cast<std::int64_t>(cells), lat.lattice_const, lat.V0, p["delta"].get<double>(), vpot[k], vtot[k]});
      ph.values[ky * g.x().dof() + kx] = vtot[k];
    }
  ctx.csv("potential.csv", pot);
  ctx.svg("potential.svg", ph);
  CsvTable fl({"x", "y", "delta"});
  for (const auto& pt : fleas.points) {
    const auto xy = g.coordinate(g.index(pt[0], pt[1]));
    fl.add({xy[0], xy[1], fleas.delta});
  }
  ctx.csv("fleas.csv", fl);
  if (!p["solve"].get<bool>()) return exit_ok;

  const double tol = p["tol"].get<double>();
  const auto restarts = static_cast<std::size_t>(p["max_restarts"].get<std::int64_t>());
  const auto pts = ctx.sweep<MetalPoint>(task_names("metal2d_flea", hbars), [&](std::size_t i) {
    MetalPoint r;
    r.spectrum = lowest_k(assemble_hamiltonian(AnyGrid(g), hbars[i], lat, FleaSpec{fleas}), 2, ctx.solver(g.weight(), tol, restarts));
    r.cell_mass.assign(cells * cells, 0.0);
    const auto& v = r.spectrum.eigenvectors[0];
    for (std::size_t kx = 0; kx < g.x().dof(); ++kx)
      for (std::size_t ky = 0; ky < g.y().dof(); ++ky) {
        const double a = v[g.index(kx, ky)];
        r.cell_mass[(kx / npc) * cells + ky / npc] += a * a * g.weight();
      }
    return r;
  });
  CsvTable t({"hbar", "cells", "lattice_const", "V0", "nodes_per_cell", "delta", "E0", "E1", "gap", "degenerate", "center_mass",
              "max_cell_mass", "max_cell_i", "max_cell_j"});
  CsvTable cm({"hbar", "i", "j", "mass"});
  json rows = json::array();
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!pts[i]) continue;
    const auto& r = *pts[i];
    const auto best = static_cast<std::size_t>(std::max_element(r.cell_mass.begin(), r.cell_mass.end()) - r.cell_mass.begin());
    const double cmass = r.cell_mass[center * cells + center];
    t.add({hbars[i], static_cast<std::int64_t>(cells), lat.lattice_const, lat.V0, static_cast<std::int64_t>(npc), fleas.delta,
           r.spectrum.eigenvalues[0], r.spectrum.eigenvalues[1], r.spectrum.gap, degenerate(r.spectrum), cmass,
           r.cell_mass[best], static_cast<std::int64_t>(best / cells), static_cast<std::int64_t>(best % cells)});
    for (std::size_t c = 0; c < r.cell_mass.size(); ++c)
      cm.add({hbars[i], static_cast<std::int64_t>(c / cells), static_cast<std::int64_t>(c % cells), r.cell_mass[c]});
    rows.push_back({{"hbar", hbars[i]}, {"center_mass", cmass}, {"max_cell_mass", r.cell_mass[best]},
                    {"degenerate", degenerate(r.spectrum)}, {"gap", r.spectrum.gap}});
    Heatmap h{"Ground-state density, " + hbar_label(hbars[i]), "x", "y", g.x().min(), g.x().max(), g.y().min(), g.y().max(), g.x().dof(), g.y().dof(), {}};
    h.values.resize(g.dof());
    for (std::size_t kx = 0; kx < g.x().dof(); ++kx)
      for (std::size_t ky = 0; ky < g.y().dof(); ++ky) {
        const double a = r.spectrum.eigenvectors[0][g.index(kx, ky)];
        h.values[ky * g.x().dof() + kx] = a * a;
      }
    std::ostringstream name;
    name << "density_" << i << ".svg";
    ctx.svg(name.str(), h);
  }
  ctx.csv("metal.csv", t);
  ctx.csv("cell_mass.csv", cm);
  ctx.summary()["rows"] = rows;
  return ctx.failed() ? exit_solver : exit_ok;
}

inline int cw_run(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto Ns = p["N"].get<std::vector<std::size_t>>();
  const double J = p["J"].get<double>(), B = p["B"].get<double>();
  const auto& f = p["flea"];
  std::optional<SpinFlea> flea;
  if (f["enabled"].get<bool>()) flea = SpinFlea{f["b"].get<double>(), f["c"].get<double>(), f["d"].get<double>(), f["odd"].get<bool>()};
  if (flea && !validate_spin_flea(*flea, J, B).valid()) throw semantic("invalid spin flea: " + validate_spin_flea(*flea, J, B).message);
  std::vector<std::string> names;
  for (auto n : Ns) names.push_back("cw_scan N=" + std::to_string(n));
  const auto pts = ctx.sweep<CwGround>(names, [&](std::size_t i) { return cw_ground(Ns[i], J, B, flea, ctx.solver(1.0)); });
  const auto minima = cw_classical_minima(J, B);
  CsvTable t({"N", "J", "B", "flea", "b", "c", "d", "odd", "energy", "x", "y", "z", "z2", "gap", "degenerate", "classical_x", "classical_z2",
              "error_x", "error_z2"});
  LineChart chart{"Curie-Weiss magnetization", "N", "value", true, false, {{"x", {}, {}}, {"z2", {}, {}}, {"z", {}, {}}}};
  json rows = json::array();
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (!pts[i]) continue;
    const auto& m = pts[i]->magnetization;
    const double ex = std::abs(m.x - minima[0].x), ez = std::abs(m.z2 - minima[0].z2);
    t.add({static_cast<std::int64_t>(Ns[i]), J, B, flea.has_value(), f["b"].get<double>(), f["c"].get<double>(), f["d"].get<double>(),
           f["odd"].get<bool>(), pts[i]->energy, m.x, m.y, m.z, m.z2, pts[i]->gap, pts[i]->degenerate, minima[0].x, minima[0].z2, ex, ez});
    chart.series[0].x.push_back(static_cast<double>(Ns[i])), chart.series[0].y.push_back(m.x);
    chart.series[1].x.push_back(static_cast<double>(Ns[i])), chart.series[1].y.push_back(m.z2);
    chart.series[2].x.push_back(static_cast<double>(Ns[i])), chart.series[2].y.push_back(m.z);
    rows.push_back({{"N", Ns[i]}, {"x", m.x}, {"z", m.z}, {"z2", m.z2}, {"error_x", ex}, {"error_z2", ez}});
  }
  ctx.csv("cw.csv", t);
  ctx.svg("cw.svg", chart);
  ctx.summary()["rows"] = rows;
  return ctx.failed() ? exit_solver : exit_ok;
}

inline int ising_run(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto Ns = p["N"].get<std::vector<std::size_t>>();
  const auto eps = p["epsilon"].get<std::vector<double>>();
  const double J = p["J"].get<double>(), B = p["B"].get<double>();
  const auto bc = p["bc"].get<std::string>() == "open" ? ChainBoundary::Open : ChainBoundary::Periodic;
  std::vector<std::string> names;
  for (auto n : Ns) names.push_back("ising_limits N=" + std::to_string(n));
  const auto pts = ctx.sweep<OrderOfLimits>(names, [&](std::size_t i) { return order_of_limits_scan({Ns[i]}, eps, J, B, bc); });
  CsvTable t({"N", "epsilon", "J", "B", "bc", "m", "m_negative_epsilon"});
  LineChart chart{"Ising magnetization", "epsilon", "|m|", true, true, {}};
  json rows = json::array();
  bool rows_vanish = true, sign_ok = true;
  double odd = 0.0;
  std::vector<std::vector<double>> table;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (!pts[i]) continue;
    const auto& s = *pts[i];
    Series ser{"N=" + std::to_string(Ns[i]), {}, {}};
    for (std::size_t j = 0; j < eps.size(); ++j) {
      t.add({static_cast<std::int64_t>(Ns[i]), eps[j], J, B, to_string(bc), s.m[0][j], s.m_mirror[0][j]});
      ser.x.push_back(std::abs(eps[j]));
      ser.y.push_back(std::abs(s.m[0][j]));
    }
    chart.series.push_back(std::move(ser));
    rows_vanish = rows_vanish && s.row_vanishes[0];
    sign_ok = sign_ok && s.sign_opposes_field;
    odd = std::max(odd, s.odd_defect);
    table.push_back(s.m[0]);
  }
  std::vector<bool> cols(eps.size(), true);
  for (std::size_t j = 0; j < eps.size(); ++j)
    for (std::size_t i = 1; i < table.size(); ++i)
      if (std::abs(table[i][j]) < std::abs(table[i - 1][j])) cols[j] = false;
  ctx.csv("ising.csv", t);
  ctx.svg("ising.svg", chart);
  ctx.summary()["rows_vanish"] = rows_vanish;
  ctx.summary()["columns_nondecreasing"] = cols;
  ctx.summary()["odd_defect"] = odd;
  ctx.summary()["sign_opposes_field"] = sign_ok;
  return ctx.failed() ? exit_solver : exit_ok;
}

/// Husimi density of the Gaussian exp(-x^2/2s2) against width-hbar coherent states.
inline double squeezed_husimi(double q, double p, double s2, double hbar) {
  const double sum = s2 + hbar;
  return 2.0 * std::sqrt(s2 * hbar) / sum * std::exp(-q * q / sum - p * p * s2 / (hbar * sum));
}

struct HarmonicPoint {
  double e0 = 0.0;
  HusimiField husimi;
};

inline int harmonic_run(const ExperimentConfig& cfg, Context& ctx) {
  const auto& p = cfg.parameters;
  const auto hbars = p["hbar"].get<std::vector<double>>();
  const double omega = p["omega"].get<double>();
  const Grid1D grid = grid_1d(p);
  const AnyGrid ag(grid);
  const auto pts = ctx.sweep<HarmonicPoint>(task_names("harmonic_oracle", hbars), [&](std::size_t i) {
    const auto s = lowest_k(assemble_hamiltonian(ag, hbars[i], Harmonic{omega}), 1, ctx.solver(grid.weight()));
    return HarmonicPoint{s.eigenvalues[0], husimi(s.eigenvectors[0], hbars[i], default_phase_grid(ag, hbars[i]), ag)};
  });
  CsvTable t({"hbar", "omega", "n", "E0", "E0_exact", "relative_error", "husimi_mass", "max_dev_coherent", "max_dev_exact"});
  json rows = json::array();
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!pts[i]) continue;
    const double hb = hbars[i], exact = hb * omega / std::sqrt(2.0), s2 = hb * std::sqrt(2.0) / omega;
    double dc = 0.0, de = 0.0;
    const auto& f = pts[i]->husimi;
    for (std::size_t k = 0; k < f.density.size(); ++k) {
      const auto z = f.phase_grid.point(k);
      dc = std::max(dc, std::abs(f.density[k] - std::exp(-(z[0] * z[0] + z[1] * z[1]) / (2.0 * hb))));
      de = std::max(de, std::abs(f.density[k] - squeezed_husimi(z[0], z[1], s2, hb)));
    }
    const double rel = std::abs(pts[i]->e0 - exact) / exact;
    t.add({hb, omega, p["grid"]["n"].get<std::int64_t>(), pts[i]->e0, exact, rel, f.mass, dc, de});
    rows.push_back({{"hbar", hb}, {"relative_error", rel}, {"max_dev_coherent", dc}, {"max_dev_exact", de}});
    if (i + 1 == hbars.size()) ctx.svg("husimi.svg", husimi_heatmap(f, "Harmonic ground state Husimi, " + hbar_label(hb)));
  }
  ctx.csv("harmonic.csv", t);
  ctx.summary()["rows"] = rows;
  return ctx.failed() ? exit_solver : exit_ok;
}

}  // namespace run_detail

/// Runs a validated config: writes CSV/SVG outputs, summary.json and manifest.json
/// into the output directory. Returns the process exit code (0, 2 or 3).
inline int run(const ExperimentConfig& config, const RunOptions& opt, RunManifest& manifest, std::string& diagnostic) {
  ExperimentConfig cfg = config;
  if (opt.out_dir) cfg.output_dir = *opt.out_dir;
  if (opt.emit_svg) cfg.emit_svg = *opt.emit_svg;
  manifest.config = cfg.echo();
  manifest.jobs = opt.jobs ? opt.jobs : default_jobs();
  manifest.started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    manifest.seed = opt.seed ? *opt.seed : seed_from_env();
  } catch (const ConfigError& e) {
    diagnostic = e.what();
    manifest.status = "config_error";
    manifest.exit_code = exit_config;
    return exit_config;
  }
  const fs::path out(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    diagnostic = "config error: cannot create output directory '" + cfg.output_dir + "'";
    manifest.status = "config_error";
    manifest.exit_code = exit_config;
    return exit_config;
  }
  Context ctx(out, cfg.emit_svg, manifest.seed, manifest.jobs, manifest);
  int code = exit_ok;
  try {
    switch (cfg.kind) {
      case ExperimentKind::DoublewellFlea: code = run_detail::dw_flea(cfg, ctx); break;
      case ExperimentKind::GapScaling: code = run_detail::gap_scaling_run(cfg, ctx); break;
      case ExperimentKind::AndersonPair: code = run_detail::anderson_run(cfg, ctx); break;
      case ExperimentKind::MexicanTower: code = run_detail::mexican_run(cfg, ctx); break;
      case ExperimentKind::Metal2dFlea: code = run_detail::metal_run(cfg, ctx); break;
      case ExperimentKind::CwScan: code = run_detail::cw_run(cfg, ctx); break;
      case ExperimentKind::IsingLimits: code = run_detail::ising_run(cfg, ctx); break;
      case ExperimentKind::HarmonicOracle: code = run_detail::harmonic_run(cfg, ctx); break;
    }
  } catch (const ConfigError& e) {
    diagnostic = e.what();
    code = exit_config;
  } catch (const std::exception& e) {
    diagnostic = std::string("solver failure: ") + e.what();
    code = exit_solver;
  }
  if (code == exit_solver && diagnostic.empty()) {
    for (const auto& t : manifest.tasks)
      if (t.status != "ok") {
        diagnostic = "solver failure in task '" + t.name + "': " + t.error;
        break;
      }
  }
  manifest.exit_code = code;
  manifest.status = code == exit_ok ? "success" : code == exit_config ? "config_error" : "solver_failure";
  manifest.finished = utc_now();
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    json summary{{"experiment", to_string(cfg.kind)}, {"status", manifest.status}, {"results", ctx.summary()}};
    write_text(out / "summary.json", summary.dump(2) + "\n");
    manifest.outputs.push_back("summary.json");
    manifest.outputs.push_back("manifest.json");
    write_text(out / "manifest.json", manifest.to_json().dump(2) + "\n");
  } catch (const std::exception& e) {
    if (diagnostic.empty()) diagnostic = e.what();
    if (code == exit_ok) code = exit_solver;
  }
  return code;
}

}  // namespace ssb::experiments

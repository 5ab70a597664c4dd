#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <json.hpp>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssb/hamiltonian.hpp"
#include "ssb/potentials.hpp"

namespace ssb::experiments {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_name = "ssb-lab";
inline constexpr const char* tool_version = "1.0.0";

enum class ExperimentKind {
  DoublewellFlea,
  GapScaling,
  AndersonPair,
  MexicanTower,
  Metal2dFlea,
  CwScan,
  IsingLimits,
  HarmonicOracle,
};

inline const std::vector<std::pair<ExperimentKind, std::string>>& experiment_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::DoublewellFlea, "doublewell_flea"}, {ExperimentKind::GapScaling, "gap_scaling"},
      {ExperimentKind::AndersonPair, "anderson_pair"},     {ExperimentKind::MexicanTower, "mexican_tower"},
      {ExperimentKind::Metal2dFlea, "metal2d_flea"},       {ExperimentKind::CwScan, "cw_scan"},
      {ExperimentKind::IsingLimits, "ising_limits"},       {ExperimentKind::HarmonicOracle, "harmonic_oracle"},
  };
  return names;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : experiment_names())
    if (kind == k) return name;
  return "unknown";
}

inline std::optional<ExperimentKind> parse_kind(const std::string& s) {
  for (const auto& [kind, name] : experiment_names())
    if (name == s) return kind;
  return std::nullopt;
}

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Parse, Semantic };
  ConfigError(Kind kind, const std::string& what)
      : std::runtime_error((kind == Kind::Parse ? "parse error: " : "config error: ") + what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline ConfigError semantic(const std::string& what) { return ConfigError(ConfigError::Kind::Semantic, what); }

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::DoublewellFlea;
  json parameters;  // fully defaulted
  std::string output_dir;
  bool emit_svg = true;

  json echo() const {
    json j;
    j["experiment"] = to_string(kind);
    j["parameters"] = parameters;
    j["output_dir"] = output_dir;
    j["emit_svg"] = emit_svg;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Defaults

inline json grid_1d_defaults() { return json{{"x_min", -2.0}, {"x_max", 2.0}, {"n", 2001}}; }

inline json experiment_defaults(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::DoublewellFlea:
      return json{{"hbar", {0.5, 0.1, 0.05, 0.01}},
                  {"grid", grid_1d_defaults()},
                  {"flea", {{"b", 0.65}, {"c", 0.2}, {"d", -0.1}}},
                  {"husimi_csv", true}};
    case ExperimentKind::GapScaling: {
      json hb = json::array();
      for (int i = 0; i < 8; ++i) hb.push_back(0.3 - 0.25 * i / 7.0);
      return json{{"hbar", hb},
                  {"grid", grid_1d_defaults()},
                  {"flea", {{"enabled", false}, {"b", 0.65}, {"c", 0.2}, {"d", -0.1}}},
                  {"accept_r2", 0.99}};
    }
    case ExperimentKind::AndersonPair:
      return json{{"hbar", {0.05}}, {"grid", grid_1d_defaults()}};
    case ExperimentKind::MexicanTower:
      return json{{"hbar", {0.1}},
                  {"N", {0, 1, 2, 3, 4}},
                  {"theta", 0.0},
                  {"r_max", 2.0},
                  {"radial_nodes", 400},
                  {"n_phi", 64},
                  {"flea",
                   {{"enabled", true},
                    {"hbar", {0.1, 0.05}},
                    {"n", 161},
                    {"bx", 0.65},
                    {"by", 0.0},
                    {"c", 0.2},
                    {"d", -0.1}}}};
    case ExperimentKind::Metal2dFlea:
      return json{{"hbar", {0.1, 0.05, 0.025}},
                  {"cells", 7},
                  {"lattice_const", 1.5},
                  {"V0", -5.0},
                  {"alpha_x", 1.0},
                  {"alpha_y", 1.0},
                  {"a", 1.0},
                  {"nodes_per_cell", 40},
                  {"delta", 0.1},
                  {"flea_offset", 3},
                  {"solve", true},
                  {"tol", 1e-8},
                  {"max_restarts", 10000}};
    case ExperimentKind::CwScan:
      return json{{"N", {10, 25, 50, 100, 200}},
                  {"J", 1.0},
                  {"B", 0.5},
                  {"flea", {{"enabled", false}, {"b", 0.65}, {"c", 0.2}, {"d", 1e-4}, {"odd", true}}}};
    case ExperimentKind::IsingLimits:
      return json{{"N", {4, 5, 6, 7, 8, 9, 10, 11, 12}},
                  {"epsilon", {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}},
                  {"J", 1.0},
                  {"B", 0.5},
                  {"bc", "periodic"}};
    case ExperimentKind::HarmonicOracle:
      return json{{"hbar", {0.1}}, {"omega", 1.0}, {"grid", grid_1d_defaults()}};
  }
  return json::object();
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

inline bool is_number_array(const json& j) {
  if (!j.is_array()) return false;
  return std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); });
}

// Recursively overlays `user` on `defaults`, rejecting unknown keys and type changes.
inline void overlay(json& out, const json& user, const std::string& path) {
  if (!user.is_object()) throw semantic("field '" + path + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = join_path(path, it.key());
    if (!out.contains(it.key())) throw semantic("unknown key '" + key + "'");
    json& slot = out[it.key()];
    const json& v = it.value();
    if (slot.is_object()) {
      overlay(slot, v, key);
    } else if (slot.is_array()) {
      if (!is_number_array(v)) throw semantic("field '" + key + "' must be an array of numbers");
      slot = v;
    } else if (slot.is_boolean()) {
      if (!v.is_boolean()) throw semantic("field '" + key + "' must be a boolean");
      slot = v;
    } else if (slot.is_number()) {
      if (!v.is_number()) throw semantic("field '" + key + "' must be a number");
      if (slot.is_number_integer() && !(v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()))))
        throw semantic("field '" + key + "' must be an integer");
      slot = slot.is_number_integer() ? json(static_cast<std::int64_t>(v.get<double>())) : json(v.get<double>());
    } else if (slot.is_string()) {
      if (!v.is_string()) throw semantic("field '" + key + "' must be a string");
      slot = v;
    }
  }
}

inline double number(const json& p, const std::string& key, const std::string& path) {
  const double v = p.at(key).get<double>();
  if (!std::isfinite(v)) throw semantic("field '" + join_path(path, key) + "' must be finite");
  return v;
}

inline double positive(const json& p, const std::string& key, const std::string& path) {
  const double v = number(p, key, path);
  if (!(v > 0.0)) throw semantic("field '" + join_path(path, key) + "' must be positive");
  return v;
}

inline std::int64_t integer_at_least(const json& p, const std::string& key, std::int64_t lo, const std::string& path) {
  const auto v = p.at(key).get<std::int64_t>();
  if (v < lo) throw semantic("field '" + join_path(path, key) + "' must be at least " + std::to_string(lo));
  return v;
}

/// Positive, distinct hbar values; returned sorted descending.
inline std::vector<double> hbar_list(json& p, const std::string& key, const std::string& path) {
  const std::string name = join_path(path, key);
  auto v = p.at(key).get<std::vector<double>>();
  if (v.empty()) throw semantic("field '" + name + "' must be a nonempty list");
  for (double h : v)
    if (!(h > 0.0) || !std::isfinite(h)) throw semantic("field '" + name + "' must contain positive hbar values (got " + std::to_string(h) + ")");
  std::sort(v.begin(), v.end(), std::greater<>());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) throw semantic("field '" + name + "' contains duplicate values");
  p[key] = v;
  return v;
}

inline std::vector<std::int64_t> int_list(json& p, const std::string& key, std::int64_t lo, std::int64_t hi,
                                          const std::string& path) {
  const std::string name = join_path(path, key);
  std::vector<std::int64_t> out;
  for (const auto& x : p.at(key)) {
    const double d = x.get<double>();
    if (d != std::floor(d) || d < static_cast<double>(lo) || d > static_cast<double>(hi))
      throw semantic("field '" + name + "' must contain integers in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out.push_back(static_cast<std::int64_t>(d));
  }
  if (out.empty()) throw semantic("field '" + name + "' must be a nonempty list");
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw semantic("field '" + name + "' contains duplicate values");
  p[key] = out;
  return out;
}

inline void check_flea_width(const json& f, const std::string& path) {
  if (!(f.at("c").get<double>() > 0.0))
    throw semantic("field '" + join_path(path, "c") +
                   "' violates the flea property: the bump half-width c must be positive so the support is compact");
  if (!std::isfinite(f.at("b").get<double>()) || !std::isfinite(f.at("d").get<double>()))
    throw semantic("flea parameters in '" + path + "' must be finite");
}

inline Grid1D grid_from(const json& g) {
  const double lo = g.at("x_min").get<double>(), hi = g.at("x_max").get<double>();
  const auto n = g.at("n").get<std::int64_t>();
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw semantic("field 'grid' needs x_min < x_max");
  if (n < 3) throw semantic("field 'grid.n' must be at least 3");
  return Grid1D(lo, hi, static_cast<std::size_t>(n));
}

inline void check_resolution(const Grid1D& g, const std::vector<double>& hbars) {
  for (double h : hbars)
    if (std::sqrt(h) / g.spacing() < 8.0)
      throw semantic("grid too coarse for hbar=" + std::to_string(h) + ": need at least 8 nodes per sqrt(hbar)");
}

inline void check_flea_against_grid(const json& f, const Grid1D& g) {
  const Bump1D bump{f.at("b").get<double>(), f.at("c").get<double>(), f.at("d").get<double>()};
  const auto report = validate_flea(DoubleWell{}, bump, AnyGrid(g));
  if (!report.valid()) throw semantic("invalid flea: " + report.message);
}

inline void check_semantics(ExperimentKind kind, json& p) {
  switch (kind) {
    case ExperimentKind::DoublewellFlea: {
      const auto hb = hbar_list(p, "hbar", "parameters");
      const auto g = grid_from(p["grid"]);
      check_resolution(g, hb);
      check_flea_width(p["flea"], "parameters.flea");
      check_flea_against_grid(p["flea"], g);
      break;
    }
    case ExperimentKind::GapScaling: {
      const auto hb = hbar_list(p, "hbar", "parameters");
      const auto g = grid_from(p["grid"]);
      check_resolution(g, hb);
      if (p["flea"]["enabled"].get<bool>()) {
        check_flea_width(p["flea"], "parameters.flea");
        check_flea_against_grid(p["flea"], g);
      }
      const double r2 = number(p, "accept_r2", "parameters");
      if (!(r2 > 0.0 && r2 <= 1.0)) throw semantic("field 'parameters.accept_r2' must lie in (0, 1]");
      break;
    }
    case ExperimentKind::AndersonPair: {
      const auto hb = hbar_list(p, "hbar", "parameters");
      check_resolution(grid_from(p["grid"]), hb);
      break;
    }
    case ExperimentKind::MexicanTower: {
      hbar_list(p, "hbar", "parameters");
      int_list(p, "N", 0, 64, "parameters");
      number(p, "theta", "parameters");
      positive(p, "r_max", "parameters");
      integer_at_least(p, "radial_nodes", 10, "parameters");
      const auto nphi = integer_at_least(p, "n_phi", 4, "parameters");
      const auto nmax = p["N"].back().get<std::int64_t>();
      if (nphi <= 2 * nmax) throw semantic("field 'parameters.n_phi' must exceed 2 * max(N)");
      auto& f = p["flea"];
      if (f["enabled"].get<bool>()) {
        const auto fh = hbar_list(f, "hbar", "parameters.flea");
        const auto n = integer_at_least(f, "n", 5, "parameters.flea");
        const double h = 4.0 / static_cast<double>(n - 1);
        for (double x : fh)
          if (std::sqrt(x) / h < 2.0) throw semantic("field 'parameters.flea.n' too small for hbar=" + std::to_string(x));
        check_flea_width(json{{"b", f["bx"]}, {"c", f["c"]}, {"d", f["d"]}}, "parameters.flea");
        const Grid2D g(-2, 2, static_cast<std::size_t>(n), -2, 2, static_cast<std::size_t>(n), Boundary::Dirichlet);
        const Bump2D bump{f["bx"].get<double>(), f["by"].get<double>(), f["c"].get<double>(), f["d"].get<double>()};
        const auto report = validate_flea(MexicanHat{}, bump, AnyGrid(g));
        if (!report.valid()) throw semantic("invalid flea: " + report.message);
      }
      break;
    }
    case ExperimentKind::Metal2dFlea: {
      hbar_list(p, "hbar", "parameters");
      const auto cells = integer_at_least(p, "cells", 3, "parameters");
      if (cells % 2 == 0) throw semantic("field 'parameters.cells' must be odd so one cell sits at the origin");
      positive(p, "lattice_const", "parameters");
      if (!(number(p, "V0", "parameters") < 0.0)) throw semantic("field 'parameters.V0' must be negative (attractive wells)");
      positive(p, "alpha_x", "parameters");
      positive(p, "alpha_y", "parameters");
      positive(p, "a", "parameters");
      integer_at_least(p, "nodes_per_cell", 4, "parameters");
      if (!(number(p, "delta", "parameters") > 0.0)) throw semantic("field 'parameters.delta' must be positive");
      integer_at_least(p, "flea_offset", 1, "parameters");
      positive(p, "tol", "parameters");
      integer_at_least(p, "max_restarts", 1, "parameters");
      GaussianLattice lat{p["V0"].get<double>(), p["alpha_x"].get<double>(), p["alpha_y"].get<double>(), p["a"].get<double>(),
                          static_cast<int>(cells), p["lattice_const"].get<double>()};
      const Grid2D g = lattice_grid(lat, static_cast<std::size_t>(p["nodes_per_cell"].get<std::int64_t>()));
      try {
        const auto fleas = lattice_fleas(lat, g, p["delta"].get<double>(), static_cast<std::size_t>(p["flea_offset"].get<std::int64_t>()));
        const auto report = validate_flea(lat, fleas, AnyGrid(g));
        if (!report.valid()) throw semantic("invalid flea: " + report.message);
      } catch (const std::invalid_argument& e) {
        throw semantic(std::string("invalid flea placement: ") + e.what());
      }
      break;
    }
    case ExperimentKind::CwScan: {
      int_list(p, "N", 1, 100000, "parameters");
      positive(p, "J", "parameters");
      if (!(number(p, "B", "parameters") >= 0.0)) throw semantic("field 'parameters.B' must be nonnegative");
      if (p["flea"]["enabled"].get<bool>()) check_flea_width(p["flea"], "parameters.flea");
      break;
    }
    case ExperimentKind::IsingLimits: {
      int_list(p, "N", 2, 14, "parameters");
      if (p["epsilon"].empty()) throw semantic("field 'parameters.epsilon' must be a nonempty list");
      for (const auto& e : p["epsilon"])
        if (!std::isfinite(e.get<double>())) throw semantic("field 'parameters.epsilon' must be finite");
      number(p, "J", "parameters");
      if (!(number(p, "B", "parameters") > 0.0)) throw semantic("field 'parameters.B' must be positive");
      const auto bc = p["bc"].get<std::string>();
      if (bc != "periodic" && bc != "open") throw semantic("field 'parameters.bc' must be 'periodic' or 'open'");
      break;
    }
    case ExperimentKind::HarmonicOracle: {
      const auto hb = hbar_list(p, "hbar", "parameters");
      positive(p, "omega", "parameters");
      check_resolution(grid_from(p["grid"]), hb);
      break;
    }
  }
}

}  // namespace detail

inline ExperimentConfig validate_config(const json& doc) {
  if (!doc.is_object()) throw semantic("top level must be a JSON object");
  static const std::set<std::string> top{"experiment", "parameters", "output_dir", "emit_svg"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!top.count(it.key())) throw semantic("unknown key '" + it.key() + "'");
  std::string names;
  for (const auto& [k, n] : experiment_names()) names += (names.empty() ? "" : ", ") + n;
  if (!doc.contains("experiment") || !doc["experiment"].is_string() || doc["experiment"].get<std::string>().empty())
    throw semantic("field 'experiment' is required and must be one of: " + names);
  const auto kind = parse_kind(doc["experiment"].get<std::string>());
  if (!kind) throw semantic("field 'experiment' has unknown value '" + doc["experiment"].get<std::string>() + "'; expected one of: " + names);
  ExperimentConfig cfg;
  cfg.kind = *kind;
  cfg.parameters = experiment_defaults(*kind);
  if (doc.contains("parameters")) detail::overlay(cfg.parameters, doc["parameters"], "parameters");
  detail::check_semantics(*kind, cfg.parameters);
  cfg.output_dir = "ssb-out/" + to_string(*kind);
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty())
      throw semantic("field 'output_dir' must be a nonempty string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("emit_svg")) {
    if (!doc["emit_svg"].is_boolean()) throw semantic("field 'emit_svg' must be a boolean");
    cfg.emit_svg = doc["emit_svg"].get<bool>();
  }
  return cfg;
}

inline ExperimentConfig validate_config(const std::string& raw) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigError::Kind::Parse, e.what());
  }
  return validate_config(doc);
}

// ---------------------------------------------------------------------------
// Presets

inline json preset(const std::string& name) {
  if (name == "fig1" || name == "fig2")
    return json{{"experiment", "doublewell_flea"}, {"parameters", {{"hbar", {0.5, 0.1, 0.05, 0.01}}}}};
  if (name == "fig3" || name == "fig4")
    return json{{"experiment", "metal2d_flea"}, {"parameters", {{"hbar", {0.1}}, {"solve", false}}}};
  if (name == "fig5") return json{{"experiment", "metal2d_flea"}, {"parameters", {{"hbar", {0.1, 0.025}}}}};
  throw semantic("unknown preset '" + name + "'; expected fig1, fig2, fig3, fig4 or fig5");
}

inline std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3", "fig4", "fig5"}; }

/// Solver seed from SSB_LAB_SEED (decimal or 0x-prefixed hex), default 0x5EED.
inline std::uint64_t seed_from_env() {
  const char* s = std::getenv("SSB_LAB_SEED");
  if (!s || !*s) return 0x5EED;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 0);
    if (used != std::string(s).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw semantic(std::string("SSB_LAB_SEED must be an unsigned integer (got '") + s + "')");
  }
}

}  // namespace ssb::experiments

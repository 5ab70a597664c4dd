#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ssb/lattice.hpp"

namespace ssb {

struct DoubleWell {
  static constexpr int dimension = 1;
};

struct MexicanHat {
  static constexpr int dimension = 2;
};

struct Harmonic {
  static constexpr int dimension = 1;
  double omega = 1.0;
};

/// Square lattice of Gaussian wells V0*exp(-(alpha_x x^2 + alpha_y y^2)/a^2),
/// one per cell, cell centers at lattice_const * (i - cells/2).
struct GaussianLattice {
  static constexpr int dimension = 2;
  double V0 = -5.0;
  double alpha_x = 1.0;
  double alpha_y = 1.0;
  double a = 1.0;
  int cells = 7;
  double lattice_const = 1.5;

  double supercell() const { return cells * lattice_const; }
  double center(int i) const { return lattice_const * (i - cells / 2); }
};

using PotentialSpec = std::variant<DoubleWell, MexicanHat, Harmonic, GaussianLattice>;

inline int dimension(const PotentialSpec& spec) {
  return std::visit([](const auto& s) { return s.dimension; }, spec);
}

inline const char* potential_name(const PotentialSpec& spec) {
  struct {
    const char* operator()(const DoubleWell&) const { return "double_well"; }
    const char* operator()(const MexicanHat&) const { return "mexican_hat"; }
    const char* operator()(const Harmonic&) const { return "harmonic"; }
    const char* operator()(const GaussianLattice&) const { return "gaussian_lattice"; }
  } v;
  return std::visit(v, spec);
}

inline void check_potential(const PotentialSpec& spec) {
  if (auto* h = std::get_if<Harmonic>(&spec); h && !(h->omega > 0.0))
    throw std::invalid_argument("harmonic omega must be positive");
  if (auto* g = std::get_if<GaussianLattice>(&spec)) {
    if (!(g->V0 < 0.0)) throw std::invalid_argument("gaussian lattice depth V0 must be negative");
    if (!(g->alpha_x > 0.0 && g->alpha_y > 0.0 && g->a > 0.0))
      throw std::invalid_argument("gaussian lattice alpha_x, alpha_y and a must be positive");
    if (g->cells < 1) throw std::invalid_argument("gaussian lattice needs at least one cell");
    if (!(g->lattice_const > 0.0)) throw std::invalid_argument("lattice constant must be positive");
  }
}

namespace detail {

// Periodic image sum  sum_k exp(-alpha (u - s k)^2 / a^2)  over the infinite lattice;
// terms are dropped once they fall below 1e-300 relative.
inline double gaussian_comb(double u, double alpha, double a, double s) {
  const double w = alpha / (a * a);
  const double k0 = std::round(u / s);
  double total = 0.0;
  const int reach = 1 + static_cast<int>(std::ceil(std::sqrt(700.0 / w) / s));
  for (int k = -reach; k <= reach; ++k) {
    const double du = u - s * (k0 + k);
    total += std::exp(-w * du * du);
  }
  return total;
}

inline double lattice_raw(const GaussianLattice& g, double x, double y) {
  return g.V0 * gaussian_comb(x, g.alpha_x, g.a, g.lattice_const) *
         gaussian_comb(y, g.alpha_y, g.a, g.lattice_const);
}

}  // namespace detail

/// Constant added to the Gaussian lattice so that its minimum (the cell centers) is zero.
inline double lattice_offset(const GaussianLattice& g) { return -detail::lattice_raw(g, 0.0, 0.0); }

inline double eval_potential(const PotentialSpec& spec, std::span<const double> point) {
  if (static_cast<int>(point.size()) != dimension(spec)) {
    std::ostringstream msg;
    msg << potential_name(spec) << " expects a " << dimension(spec) << "D point, got " << point.size() << "D";
    throw std::invalid_argument(msg.str());
  }
  struct {
    std::span<const double> p;
    double operator()(const DoubleWell&) const {
      const double u = p[0] * p[0] - 1.0;
      return u * u;
    }
    double operator()(const MexicanHat&) const {
      const double u = p[0] * p[0] + p[1] * p[1] - 1.0;
      return u * u;
    }
    double operator()(const Harmonic& h) const { return 0.5 * h.omega * h.omega * p[0] * p[0]; }
    double operator()(const GaussianLattice& g) const {
      return detail::lattice_raw(g, p[0], p[1]) + lattice_offset(g);
    }
  } v{point};
  return std::visit(v, spec);
}

inline double eval_potential(const PotentialSpec& spec, double x) {
  const double p[1] = {x};
  return eval_potential(spec, p);
}

inline double eval_potential(const PotentialSpec& spec, double x, double y) {
  const double p[2] = {x, y};
  return eval_potential(spec, p);
}

// ---------------------------------------------------------------------------
// Fleas

/// d * exp(1/c^2 - 1/(c^2 - (x-b)^2)) on (b-c, b+c), zero elsewhere.
struct Bump1D {
  double b = 0.65;
  double c = 0.2;
  double d = -0.1;
};

/// Height delta on individual grid nodes, addressed by (ix, iy) node index.
struct GridPoints2D {
  std::vector<std::array<std::size_t, 2>> points;
  double delta = 0.1;
};

/// Radial bump d * exp(1/c^2 - 1/(c^2 - |q - center|^2)) in the plane.
struct Bump2D {
  double bx = 0.65;
  double by = 0.0;
  double c = 0.2;
  double d = -0.1;
};

using FleaSpec = std::variant<Bump1D, GridPoints2D, Bump2D>;

inline double bump_profile(double r, double c, double d) {
  if (!(c > 0.0)) throw std::invalid_argument("flea half-width c must be positive");
  const double r2 = r * r, c2 = c * c;
  if (r2 >= c2) return 0.0;
  return d * std::exp(1.0 / c2 - 1.0 / (c2 - r2));
}

inline double eval_flea(const Bump1D& flea, double x) { return bump_profile(x - flea.b, flea.c, flea.d); }

inline double eval_flea(const Bump2D& flea, double x, double y) {
  return bump_profile(std::hypot(x - flea.bx, y - flea.by), flea.c, flea.d);
}

// ---------------------------------------------------------------------------
// Classical minima of h0(q, p) = p^2 + V(q)

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
};

struct ClassicalMinima {
  enum class Kind { FinitePoints, Circle };
  Kind kind = Kind::FinitePoints;
  std::vector<PhasePoint> points;
  double radius = 0.0;
  double value = 0.0;  // global minimum of h0

  /// Smallest distance between two distinct minima (in q); +inf for a single point.
  double min_separation() const {
    if (kind == Kind::Circle) return 2.0 * radius;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < points[i].q.size(); ++k) {
          const double dq = points[i].q[k] - points[j].q[k];
          s += dq * dq;
        }
        best = std::min(best, std::sqrt(s));
      }
    return best;
  }
};

inline ClassicalMinima classical_minima(const PotentialSpec& spec) {
  check_potential(spec);
  ClassicalMinima m;
  if (std::holds_alternative<DoubleWell>(spec)) {
    m.points = {{{-1.0}, {0.0}}, {{1.0}, {0.0}}};
  } else if (std::holds_alternative<Harmonic>(spec)) {
    m.points = {{{0.0}, {0.0}}};
  } else if (std::holds_alternative<MexicanHat>(spec)) {
    m.kind = ClassicalMinima::Kind::Circle;
    m.radius = 1.0;
  } else {
    const auto& g = std::get<GaussianLattice>(spec);
    for (int i = 0; i < g.cells; ++i)
      for (int j = 0; j < g.cells; ++j) m.points.push_back({{g.center(i), g.center(j)}, {0.0, 0.0}});
  }
  return m;
}

// ---------------------------------------------------------------------------
// Flea validity

struct ValidityReport {
  bool support_clear = false;    // support avoids an epsilon-neighbourhood of every minimum
  bool distance_ok = false;      // 0 < distance to nearest minimum <= minimal inter-minima distance
  double distance = 0.0;         // distance from the support to the nearest minimum
  double max_distance = 0.0;     // minimal inter-minima distance
  double epsilon = 0.0;          // neighbourhood radius used for the clearance test
  std::string message;

  bool valid() const { return support_clear && distance_ok; }
};

class FleaError : public std::invalid_argument {
 public:
  explicit FleaError(const std::string& what) : std::invalid_argument(what) {}
};

namespace detail {

inline double min_spacing(const AnyGrid& grid) {
  if (auto* g1 = std::get_if<Grid1D>(&grid)) return g1->spacing();
  const auto& g2 = std::get<Grid2D>(grid);
  return std::min(g2.x().spacing(), g2.y().spacing());
}

inline void finish(ValidityReport& r) {
  std::ostringstream msg;
  if (r.valid()) {
    msg << "flea valid: distance " << r.distance << " to nearest minimum";
  } else {
    msg << "flea violates the flea property:";
    if (!r.support_clear)
      msg << " support meets the " << r.epsilon << "-neighbourhood of a classical minimum"
          << " (distance " << r.distance << ");";
    if (!r.distance_ok)
      msg << " distance " << r.distance << " to nearest minimum must be positive and at most "
          << r.max_distance << ";";
  }
  r.message = msg.str();
}

inline void judge(ValidityReport& r, double clearance) {
  r.support_clear = r.distance > clearance;
  r.distance_ok = r.distance > 0.0 && r.distance <= r.max_distance;
  finish(r);
}

// Minimal-image displacement on a periodic axis of length L.
inline double wrap(double u, double L) { return u - L * std::round(u / L); }

}  // namespace detail

inline ValidityReport validate_flea(const PotentialSpec& spec, const FleaSpec& flea, const AnyGrid& grid) {
  const ClassicalMinima minima = classical_minima(spec);
  ValidityReport r;
  r.max_distance = minima.min_separation();
  r.epsilon = 1e-6 + detail::min_spacing(grid);

  if (const auto* f = std::get_if<Bump1D>(&flea)) {
    if (!(f->c > 0.0)) throw FleaError("flea half-width c must be positive (the flea needs a nonempty open support)");
    if (minima.kind == ClassicalMinima::Kind::Circle || dimension(spec) != 1)
      throw std::invalid_argument("Bump1D flea requires a one-dimensional potential with isolated minima");
    r.distance = std::numeric_limits<double>::infinity();
    for (const auto& m : minima.points) r.distance = std::min(r.distance, std::max(0.0, std::abs(m.q[0] - f->b) - f->c));
    detail::judge(r, r.epsilon);
    return r;
  }

  if (const auto* f = std::get_if<Bump2D>(&flea)) {
    if (!(f->c > 0.0)) throw FleaError("flea half-width c must be positive (the flea needs a nonempty open support)");
    if (dimension(spec) != 2) throw std::invalid_argument("Bump2D flea requires a two-dimensional potential");
    if (minima.kind == ClassicalMinima::Kind::Circle) {
      r.distance = std::max(0.0, std::abs(std::hypot(f->bx, f->by) - minima.radius) - f->c);
    } else {
      r.distance = std::numeric_limits<double>::infinity();
      for (const auto& m : minima.points)
        r.distance = std::min(r.distance, std::max(0.0, std::hypot(m.q[0] - f->bx, m.q[1] - f->by) - f->c));
    }
    detail::judge(r, r.epsilon);
    return r;
  }

  const auto& f = std::get<GridPoints2D>(flea);
  if (f.points.empty()) throw FleaError("grid-point flea needs at least one node");
  if (!std::isfinite(f.delta)) throw FleaError("grid-point flea height must be finite");
  const auto* g2 = std::get_if<Grid2D>(&grid);
  if (!g2 || minima.kind == ClassicalMinima::Kind::Circle)
    throw std::invalid_argument("grid-point fleas require a 2D grid and a potential with isolated minima");
  const bool periodic = g2->bc() == Boundary::Periodic;
  const double Lx = g2->x().max() - g2->x().min(), Ly = g2->y().max() - g2->y().min();
  r.distance = std::numeric_limits<double>::infinity();
  for (const auto& pt : f.points) {
    if (pt[0] >= g2->x().nodes() || pt[1] >= g2->y().nodes()) throw FleaError("grid-point flea node outside the grid");
    const double x = g2->x().node(pt[0]), y = g2->y().node(pt[1]);
    for (const auto& m : minima.points) {
      double dx = x - m.q[0], dy = y - m.q[1];
      if (periodic) dx = detail::wrap(dx, Lx), dy = detail::wrap(dy, Ly);
      r.distance = std::min(r.distance, std::hypot(dx, dy));
    }
  }
  r.epsilon = 3.0 * detail::min_spacing(grid);
  detail::judge(r, r.epsilon * (1.0 - 1e-9));
  return r;
}

/// One grid-point flea per cell except the central one, `offset` nodes along +x
/// from each cell center. The grid must place cell centers on nodes.
inline GridPoints2D lattice_fleas(const GaussianLattice& lattice, const Grid2D& grid, double delta,
                                  std::size_t offset = 3) {
  GridPoints2D f;
  f.delta = delta;
  const int mid = lattice.cells / 2;
  auto node_of = [](const Axis& ax, double x) {
    const double t = (x - ax.min()) / ax.spacing();
    const double i = std::round(t);
    if (std::abs(t - i) > 1e-9) throw std::invalid_argument("lattice cell centers do not fall on grid nodes");
    const auto n = static_cast<long long>(ax.nodes());
    return static_cast<std::size_t>(((static_cast<long long>(i) % n) + n) % n);
  };
  for (int i = 0; i < lattice.cells; ++i)
    for (int j = 0; j < lattice.cells; ++j) {
      if (i == mid && j == mid) continue;
      const std::size_t ix = (node_of(grid.x(), lattice.center(i)) + offset) % grid.x().nodes();
      const std::size_t iy = node_of(grid.y(), lattice.center(j));
      f.points.push_back({ix, iy});
    }
  return f;
}

/// Periodic supercell grid for a Gaussian lattice with `nodes_per_cell` nodes per cell and axis.
inline Grid2D lattice_grid(const GaussianLattice& lattice, std::size_t nodes_per_cell) {
  const double L = lattice.supercell();
  const std::size_t n = nodes_per_cell * static_cast<std::size_t>(lattice.cells);
  return Grid2D(-0.5 * L, 0.5 * L, n, -0.5 * L, 0.5 * L, n, Boundary::Periodic);
}

}  // namespace ssb

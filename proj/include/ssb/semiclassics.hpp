#pragma once

// Coherent states, Husimi densities, Berezin quantization and classical-limit
// diagnostics on uniform grids.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ssb/eigensolve.hpp"
#include "ssb/lattice.hpp"
#include "ssb/potentials.hpp"

namespace ssb {

using cplx = std::complex<double>;

inline constexpr double min_nodes_per_width = 8.0;

namespace detail {

inline double coherent_prefactor(double hbar) { return std::pow(std::numbers::pi * hbar, -0.25); }

// Uniform axes of the unknowns of a grid, one per dimension.
inline std::vector<Axis> unknown_axes(const AnyGrid& grid) {
  if (const auto* g = std::get_if<Grid1D>(&grid)) return {g->axis()};
  const auto& g2 = std::get<Grid2D>(grid);
  return {g2.x(), g2.y()};
}

inline void check_resolution(const AnyGrid& grid, double hbar) {
  check_hbar(hbar);
  for (const auto& ax : unknown_axes(grid))
    if (std::sqrt(hbar) / ax.spacing() < min_nodes_per_width)
      throw std::invalid_argument("grid under-resolves the coherent-state width sqrt(hbar): need at least 8 nodes per width");
}

// Exact one-dimensional coherent-state factor e^{ipx/hbar} e^{-(x-q)^2/2hbar} (pi hbar)^{-1/4},
// without the global phase e^{-ipq/2hbar}.
inline cplx coherent_factor(double x, double q, double p, double hbar) {
  const double dx = x - q;
  return std::polar(coherent_prefactor(hbar) * std::exp(-dx * dx / (2.0 * hbar)), p * x / hbar);
}

}  // namespace detail

struct CoherentState {
  std::vector<double> q, p;
  double hbar = 0.0;
  double weight = 1.0;
  std::vector<cplx> samples;  // renormalized on the grid
  double norm_defect = 0.0;   // discrete norm of the exact samples minus one
};

inline CoherentState coherent_state(std::span<const double> q, std::span<const double> p, double hbar,
                                    const AnyGrid& grid) {
  detail::check_resolution(grid, hbar);
  const auto axes = detail::unknown_axes(grid);
  if (q.size() != axes.size() || p.size() != axes.size())
    throw std::invalid_argument("phase-space point dimension does not match the grid");
  CoherentState cs;
  cs.q.assign(q.begin(), q.end());
  cs.p.assign(p.begin(), p.end());
  cs.hbar = hbar;
  cs.weight = grid_weight(grid);
  double pq = 0.0;
  for (std::size_t d = 0; d < q.size(); ++d) pq += p[d] * q[d];
  const cplx global = std::polar(1.0, -pq / (2.0 * hbar));
  std::vector<std::vector<cplx>> factors(axes.size());
  for (std::size_t d = 0; d < axes.size(); ++d)
    for (std::size_t k = 0; k < axes[d].dof(); ++k)
      factors[d].push_back(detail::coherent_factor(axes[d].dof_coordinate(k), q[d], p[d], hbar));
  if (axes.size() == 1) {
    for (const auto& f : factors[0]) cs.samples.push_back(global * f);
  } else {
    for (const auto& fx : factors[0])
      for (const auto& fy : factors[1]) cs.samples.push_back(global * fx * fy);
  }
  double norm2 = 0.0;
  for (const auto& s : cs.samples) norm2 += std::norm(s);
  norm2 *= cs.weight;
  cs.norm_defect = std::sqrt(norm2) - 1.0;
  const double scale = 1.0 / std::sqrt(norm2);
  for (auto& s : cs.samples) s *= scale;
  return cs;
}

inline CoherentState coherent_state(double q, double p, double hbar, const Grid1D& grid) {
  const double qq[1] = {q}, pp[1] = {p};
  return coherent_state(qq, pp, hbar, AnyGrid(grid));
}

// ---------------------------------------------------------------------------
// Phase grids

struct PhaseAxis {
  double min = -2.0;
  double max = 2.0;
  std::size_t n = 201;

  double spacing() const { return (max - min) / static_cast<double>(n - 1); }
  double node(std::size_t i) const { return min + static_cast<double>(i) * spacing(); }
};

/// Tensor grid on phase space. Points are ordered (q_1..q_d, p_1..p_d); the flat
/// index runs over (q_1, p_1, ..., q_d, p_d) with the last axis fastest.
struct PhaseGrid {
  std::vector<PhaseAxis> q;
  std::vector<PhaseAxis> p;

  std::size_t dimension() const { return q.size(); }
  std::size_t size() const {
    std::size_t s = 1;
    for (std::size_t d = 0; d < q.size(); ++d) s *= q[d].n * p[d].n;
    return s;
  }
  double cell() const {
    double c = 1.0;
    for (std::size_t d = 0; d < q.size(); ++d) c *= q[d].spacing() * p[d].spacing();
    return c;
  }
  std::vector<double> point(std::size_t idx) const {
    const std::size_t dim = q.size();
    std::vector<double> out(2 * dim);
    for (std::size_t d = dim; d-- > 0;) {
      const std::size_t ip = idx % p[d].n;
      idx /= p[d].n;
      const std::size_t iq = idx % q[d].n;
      idx /= q[d].n;
      out[d] = q[d].node(iq);
      out[dim + d] = p[d].node(ip);
    }
    return out;
  }

  void validate() const {
    if (q.empty() || q.size() != p.size() || q.size() > 2) throw std::invalid_argument("phase grid needs 1 or 2 q/p axis pairs");
    for (const auto* axes : {&q, &p})
      for (const auto& a : *axes)
        if (!(a.min < a.max) || a.n < 2) throw std::invalid_argument("phase axis needs min < max and n >= 2");
  }

  /// True when every classical minimum sits at least `margin` inside the grid.
  bool covers(const ClassicalMinima& minima, double margin) const {
    auto inside = [margin](const PhaseAxis& a, double v) { return v - margin >= a.min && v + margin <= a.max; };
    if (minima.kind == ClassicalMinima::Kind::Circle) {
      if (q.size() != 2) return false;
      for (const auto& a : q)
        if (!inside(a, minima.radius) || !inside(a, -minima.radius)) return false;
      for (const auto& a : p)
        if (!inside(a, 0.0)) return false;
      return true;
    }
    for (const auto& m : minima.points) {
      if (m.q.size() != q.size()) return false;
      for (std::size_t d = 0; d < q.size(); ++d)
        if (!inside(q[d], m.q[d]) || !inside(p[d], m.p[d])) return false;
    }
    return true;
  }
};

/// Default phase grid: q over the spatial domain and p over [-2, 2], both widened by
/// 4 sqrt(hbar), with at least `min_nodes` nodes and spacing no coarser than sqrt(hbar)/4.
inline PhaseGrid default_phase_grid(const AnyGrid& grid, double hbar, std::size_t min_nodes = 0) {
  detail::check_hbar(hbar);
  const auto axes = detail::unknown_axes(grid);
  if (min_nodes == 0) min_nodes = axes.size() == 1 ? 201 : 41;
  const double margin = 4.0 * std::sqrt(hbar);
  const double fine = std::sqrt(hbar) / (axes.size() == 1 ? 4.0 : 2.0);
  auto make = [&](double lo, double hi) {
    PhaseAxis a{lo, hi, min_nodes};
    a.n = std::max(min_nodes, static_cast<std::size_t>(std::ceil((hi - lo) / fine)) + 1);
    return a;
  };
  PhaseGrid pg;
  for (const auto& ax : axes) {
    pg.q.push_back(make(std::min(-2.0, ax.min()) - margin, std::max(2.0, ax.max()) + margin));
    pg.p.push_back(make(-2.0 - margin, 2.0 + margin));
  }
  return pg;
}

// ---------------------------------------------------------------------------
// Husimi densities

struct HusimiField {
  PhaseGrid phase_grid;
  std::vector<double> density;  // B(q, p) per flat phase index
  double weight = 0.0;          // phase cell / (2 pi hbar)^d
  double hbar = 0.0;
  double mass = 0.0;
  bool low_mass = false;        // mass below 0.99: the phase grid does not capture the state

  double integrate(const std::function<double(std::span<const double>)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
      const auto pt = phase_grid.point(i);
      s += f(pt) * density[i];
    }
    return s * weight;
  }
};

namespace detail {

template <class T>
double weighted_norm2(const std::vector<T>& psi, double w) {
  double s = 0.0;
  for (const auto& v : psi) s += std::norm(cplx(v));
  return s * w;
}

// Rows: (q, p) phase nodes of one axis; columns: unknowns. Entry conj(phi_{qp}(x)) * spacing.
inline Eigen::MatrixXcd analysis_matrix(const Axis& ax, const PhaseAxis& qa, const PhaseAxis& pa, double hbar) {
  const auto n = static_cast<Eigen::Index>(ax.dof());
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(qa.n * pa.n), n);
  const double h = ax.spacing();
  for (std::size_t iq = 0; iq < qa.n; ++iq)
    for (std::size_t ip = 0; ip < pa.n; ++ip) {
      const auto row = static_cast<Eigen::Index>(iq * pa.n + ip);
      for (Eigen::Index k = 0; k < n; ++k)
        m(row, k) = std::conj(coherent_factor(ax.dof_coordinate(static_cast<std::size_t>(k)), qa.node(iq), pa.node(ip), hbar)) * h;
    }
  return m;
}

}  // namespace detail

/// Husimi density of a unit-normalized grid function (real or complex).
template <class T>
HusimiField husimi(const std::vector<T>& psi, double hbar, const PhaseGrid& pg, const AnyGrid& grid) {
  detail::check_resolution(grid, hbar);
  pg.validate();
  const auto axes = detail::unknown_axes(grid);
  if (pg.dimension() != axes.size()) throw std::invalid_argument("phase grid dimension does not match the grid");
  if (psi.size() != grid_dof(grid)) throw std::invalid_argument("grid function size does not match the grid");
  const double n2 = detail::weighted_norm2(psi, grid_weight(grid));
  if (std::abs(n2 - 1.0) > 1e-6) throw std::invalid_argument("husimi expects a unit-normalized state");

  HusimiField f;
  f.phase_grid = pg;
  f.hbar = hbar;
  f.weight = pg.cell() / std::pow(2.0 * std::numbers::pi * hbar, static_cast<double>(axes.size()));
  f.density.assign(pg.size(), 0.0);

  if (axes.size() == 1) {
    const Axis& ax = axes[0];
    const double h = ax.spacing();
    const double reach = 8.5 * std::sqrt(hbar);
    const double c2 = std::pow(detail::coherent_prefactor(hbar), 2);
    std::vector<cplx> g;
    std::vector<double> xs;
    for (std::size_t iq = 0; iq < pg.q[0].n; ++iq) {
      const double q = pg.q[0].node(iq);
      g.clear();
      xs.clear();
      for (std::size_t k = 0; k < ax.dof(); ++k) {
        const double x = ax.dof_coordinate(k);
        if (std::abs(x - q) > reach) continue;
        g.push_back(cplx(psi[k]) * (std::exp(-(x - q) * (x - q) / (2.0 * hbar)) * h));
        xs.push_back(x);
      }
      for (std::size_t ip = 0; ip < pg.p[0].n; ++ip) {
        const double p = pg.p[0].node(ip);
        cplx s = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) s += g[j] * std::polar(1.0, -p * xs[j] / hbar);
        f.density[iq * pg.p[0].n + ip] = c2 * std::norm(s);
      }
    }
  } else {
    const auto nx = static_cast<Eigen::Index>(axes[0].dof()), ny = static_cast<Eigen::Index>(axes[1].dof());
    Eigen::MatrixXcd field(nx, ny);
    for (Eigen::Index i = 0; i < nx; ++i)
      for (Eigen::Index j = 0; j < ny; ++j) field(i, j) = cplx(psi[static_cast<std::size_t>(i * ny + j)]);
    const Eigen::MatrixXcd ax = detail::analysis_matrix(axes[0], pg.q[0], pg.p[0], hbar);
    const Eigen::MatrixXcd ay = detail::analysis_matrix(axes[1], pg.q[1], pg.p[1], hbar);
    const Eigen::MatrixXcd amp = ax * field * ay.transpose();
    for (Eigen::Index a = 0; a < amp.rows(); ++a)
      for (Eigen::Index b = 0; b < amp.cols(); ++b)
        f.density[static_cast<std::size_t>(a * amp.cols() + b)] = std::norm(amp(a, b));
  }
  f.mass = std::accumulate(f.density.begin(), f.density.end(), 0.0) * f.weight;
  f.low_mass = f.mass < 0.99;
  return f;
}

/// Fraction of Husimi mass with point[axis] > threshold. Axis indexes (q..., p...).
inline double half_space_mass(const HusimiField& field, std::size_t axis, double threshold = 0.0) {
  if (axis >= 2 * field.phase_grid.dimension()) throw std::invalid_argument("phase axis out of range");
  double above = 0.0, total = 0.0;
  for (std::size_t i = 0; i < field.density.size(); ++i) {
    total += field.density[i];
    if (field.phase_grid.point(i)[axis] > threshold) above += field.density[i];
  }
  if (!(total > 0.0)) throw std::domain_error("Husimi field carries no mass");
  return above / total;
}

/// Phase-space node of maximal Husimi density.
inline std::vector<double> husimi_argmax(const HusimiField& field) {
  const auto it = std::max_element(field.density.begin(), field.density.end());
  return field.phase_grid.point(static_cast<std::size_t>(it - field.density.begin()));
}

// ---------------------------------------------------------------------------
// Berezin quantization

/// Q(f) = sum_{q,p} f(q,p) |Psi_{q,p}><Psi_{q,p}| * phase weight, as a dense matrix on
/// the grid values of a 1D grid. For real f the result is Hermitian entry by entry and
/// <psi, Q(f) psi> (weighted) equals the Husimi integral of f.
inline Eigen::MatrixXcd berezin_quantize(std::span<const double> f, double hbar, const PhaseGrid& pg,
                                         const Grid1D& grid, std::size_t max_dim = 1000) {
  detail::check_resolution(AnyGrid(grid), hbar);
  pg.validate();
  if (pg.dimension() != 1) throw std::invalid_argument("berezin quantization supports one-dimensional grids");
  if (f.size() != pg.size()) throw std::invalid_argument("function samples do not match the phase grid");
  for (double v : f)
    if (!std::isfinite(v)) throw std::invalid_argument("function samples must be finite reals");
  const std::size_t n = grid.dof();
  if (n > max_dim) throw std::invalid_argument("grid too large for dense Berezin quantization");

  const PhaseAxis& qa = pg.q[0];
  const PhaseAxis& pa = pg.p[0];
  const double h = grid.spacing();
  const double w = pg.cell() / (2.0 * std::numbers::pi * hbar);
  const double c2 = std::pow(detail::coherent_prefactor(hbar), 2);

  // Q(x_a, x_b) = h * c^2 sum_q g_q(x_a) g_q(x_b) F_q(x_a - x_b),  F_q(D) = w sum_p f(q,p) e^{ipD/hbar}
  Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<cplx> F(n);
  std::vector<double> g(n);
  for (std::size_t iq = 0; iq < qa.n; ++iq) {
    const double q = qa.node(iq);
    for (std::size_t k = 0; k < n; ++k) {
      const double dx = grid.coordinate(k) - q;
      g[k] = std::exp(-dx * dx / (2.0 * hbar));
    }
    for (std::size_t d = 0; d < n; ++d) {
      const double D = static_cast<double>(d) * h;
      cplx s = 0.0;
      for (std::size_t ip = 0; ip < pa.n; ++ip) s += f[iq * pa.n + ip] * std::polar(1.0, pa.node(ip) * D / hbar);
      F[d] = s * w;
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (g[a] == 0.0) continue;
      for (std::size_t b = 0; b <= a; ++b) Q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += g[a] * g[b] * F[a - b];
    }
  }
  Q *= h * c2;
  for (Eigen::Index a = 0; a < Q.rows(); ++a) {
    Q(a, a) = Q(a, a).real();
    for (Eigen::Index b = 0; b < a; ++b) Q(b, a) = std::conj(Q(a, b));
  }
  return Q;
}

inline Eigen::MatrixXcd berezin_quantize(std::span<const cplx> f, double hbar, const PhaseGrid& pg, const Grid1D& grid,
                                         std::size_t max_dim = 1000) {
  std::vector<double> re;
  re.reserve(f.size());
  for (const auto& v : f) {
    if (v.imag() != 0.0) throw std::invalid_argument("berezin quantization requires a real-valued function");
    re.push_back(v.real());
  }
  return berezin_quantize(std::span<const double>(re), hbar, pg, grid, max_dim);
}

/// Samples f on every node of a phase grid.
inline std::vector<double> sample_phase_function(const std::function<double(std::span<const double>)>& f,
                                                 const PhaseGrid& pg) {
  std::vector<double> out(pg.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(pg.point(i));
  return out;
}

// ---------------------------------------------------------------------------
// Classical measures and limits

struct DiscreteMeasure {
  std::vector<std::vector<double>> points;  // (q..., p...)
  std::vector<double> weights;

  void validate() const {
    if (points.empty() || points.size() != weights.size()) throw std::invalid_argument("measure needs one weight per point");
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("measure weights must be nonnegative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("measure weights must sum to one");
  }

  double expect(const std::function<double(std::span<const double>)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * f(points[i]);
    return s;
  }

  static DiscreteMeasure dirac(std::vector<double> point) { return {{std::move(point)}, {1.0}}; }

  /// Uniform mixture over the classical minima; a circle is sampled at `circle_points` angles.
  static DiscreteMeasure uniform(const ClassicalMinima& m, std::size_t circle_points = 256) {
    DiscreteMeasure out;
    if (m.kind == ClassicalMinima::Kind::Circle) {
      for (std::size_t k = 0; k < circle_points; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(circle_points);
        out.points.push_back({m.radius * std::cos(a), m.radius * std::sin(a), 0.0, 0.0});
      }
    } else {
      for (const auto& pt : m.points) {
        std::vector<double> v = pt.q;
        v.insert(v.end(), pt.p.begin(), pt.p.end());
        out.points.push_back(std::move(v));
      }
    }
    out.weights.assign(out.points.size(), 1.0 / static_cast<double>(out.points.size()));
    return out;
  }
};

struct TestFunction {
  std::string name;
  std::function<double(std::span<const double>)> f;
};

/// Twelve unit-width Gaussian bumps exp(-|z - c|^2 / 2) centered at q in
/// {+-0.5, +-1, +-1.5} (all q axes) and p in {0, 0.5}, plus the coordinate
/// functions clipped to [-2, 2].
inline std::vector<TestFunction> default_test_suite(std::size_t dimension = 1) {
  std::vector<TestFunction> suite;
  for (double cq : {-1.5, -1.0, -0.5, 0.5, 1.0, 1.5})
    for (double cp : {0.0, 0.5}) {
      suite.push_back({"bump(q=" + std::to_string(cq).substr(0, 4) + ",p=" + std::to_string(cp).substr(0, 3) + ")",
                       [cq, cp, dimension](std::span<const double> z) {
                         double r2 = 0.0;
                         for (std::size_t d = 0; d < dimension; ++d) {
                           r2 += (z[d] - cq) * (z[d] - cq);
                           r2 += (z[dimension + d] - cp) * (z[dimension + d] - cp);
                         }
                         return std::exp(-0.5 * r2);
                       }});
    }
  for (std::size_t axis = 0; axis < 2 * dimension; ++axis) {
    const std::string name = (axis < dimension ? "q" : "p") + std::to_string(axis % dimension + 1);
    suite.push_back({name + "_clipped", [axis](std::span<const double> z) { return std::clamp(z[axis], -2.0, 2.0); }});
  }
  return suite;
}

struct LimitRow {
  double hbar = 0.0;
  std::vector<double> values;   // Husimi integral of each test function
  std::vector<double> targets;  // target measure applied to each test function
  double deviation = 0.0;       // sup over the suite of |value - target|
  double mass = 0.0;
  bool low_mass = false;
};

struct LimitTrace {
  std::vector<std::string> names;
  std::vector<LimitRow> rows;
  bool monotone = false;  // deviation nonincreasing as hbar decreases
};

struct HbarState {
  double hbar;
  std::vector<double> psi;
};

inline LimitTrace classical_limit_trace(const std::vector<HbarState>& states, const std::vector<TestFunction>& suite,
                                        const DiscreteMeasure& target, const AnyGrid& grid,
                                        const std::function<PhaseGrid(double)>& phase_grid_for = {}) {
  target.validate();
  for (std::size_t i = 1; i < states.size(); ++i)
    if (!(states[i].hbar < states[i - 1].hbar)) throw std::invalid_argument("hbar values must be descending");
  LimitTrace out;
  for (const auto& t : suite) out.names.push_back(t.name);
  for (const auto& s : states) {
    const PhaseGrid pg = phase_grid_for ? phase_grid_for(s.hbar) : default_phase_grid(grid, s.hbar);
    const HusimiField field = husimi(s.psi, s.hbar, pg, grid);
    LimitRow row;
    row.hbar = s.hbar;
    row.mass = field.mass;
    row.low_mass = field.low_mass;
    for (const auto& t : suite) {
      row.values.push_back(field.integrate(t.f));
      row.targets.push_back(target.expect(t.f));
      row.deviation = std::max(row.deviation, std::abs(row.values.back() - row.targets.back()));
    }
    out.rows.push_back(std::move(row));
  }
  out.monotone = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].deviation > out.rows[i - 1].deviation) out.monotone = false;
  return out;
}

// ---------------------------------------------------------------------------
// Anderson pairs and Mexican-hat towers

struct AndersonPair {
  std::vector<double> plus;
  std::vector<double> minus;
};

/// (psi0 +- psi1)/sqrt(2) for weighted-orthonormal inputs.
inline AndersonPair anderson_pair(const std::vector<double>& psi0, const std::vector<double>& psi1, double weight) {
  if (psi0.size() != psi1.size()) throw std::invalid_argument("anderson pair inputs differ in size");
  double n0 = 0.0, n1 = 0.0, c = 0.0;
  for (std::size_t i = 0; i < psi0.size(); ++i) {
    n0 += psi0[i] * psi0[i];
    n1 += psi1[i] * psi1[i];
    c += psi0[i] * psi1[i];
  }
  if (std::abs(n0 * weight - 1.0) > 1e-8 || std::abs(n1 * weight - 1.0) > 1e-8 || std::abs(c * weight) > 1e-8)
    throw std::invalid_argument("anderson pair inputs must be orthonormal within 1e-8");
  AndersonPair out{std::vector<double>(psi0.size()), std::vector<double>(psi0.size())};
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < psi0.size(); ++i) {
    out.plus[i] = s * (psi0[i] + psi1[i]);
    out.minus[i] = s * (psi0[i] - psi1[i]);
  }
  return out;
}

/// Reduced radial state u_n(r) = sqrt(r) f_n(r) of angular sector n, normalized
/// so that spacing * sum u^2 = 1.
struct RadialState {
  int n = 0;
  double energy = 0.0;
  std::vector<double> u;
};

/// Lowest radial state of every sector n = -N..N for V(r) = (r^2 - 1)^2 on (0, r_max].
inline std::vector<RadialState> mexican_sector_states(double hbar, int N, const RadialGrid& grid) {
  if (N < 0) throw std::invalid_argument("tower size N must be nonnegative");
  std::vector<RadialState> out;
  for (int n = -N; n <= N; ++n) {
    const auto op = build_radial_hamiltonian(grid, hbar, n, [](double r) {
      const double u = r * r - 1.0;
      return u * u;
    });
    SolverOptions opt;
    opt.weight = grid.weight();
    const auto s = lowest_k(op, 1, opt);
    out.push_back({n, s.eigenvalues[0], s.eigenvectors[0]});
  }
  return out;
}

/// Complex field on a polar grid (r_k, phi_j), phi_j = 2 pi j / n_phi.
struct PolarField {
  RadialGrid grid{1.0, 3};
  std::size_t n_phi = 0;
  std::vector<cplx> values;  // values[k * n_phi + j]

  double phi(std::size_t j) const { return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_phi); }
  double norm2() const {
    double s = 0.0;
    for (std::size_t k = 0; k < grid.dof(); ++k)
      for (std::size_t j = 0; j < n_phi; ++j) s += std::norm(values[k * n_phi + j]) * grid.radius(k);
    return s * grid.spacing() * 2.0 * std::numbers::pi / static_cast<double>(n_phi);
  }
  /// Radial marginal of |psi|^2 per angle (integrates to 1 against dphi).
  std::vector<double> angular_density() const {
    std::vector<double> out(n_phi, 0.0);
    for (std::size_t j = 0; j < n_phi; ++j)
      for (std::size_t k = 0; k < grid.dof(); ++k) out[j] += std::norm(values[k * n_phi + j]) * grid.radius(k) * grid.spacing();
    return out;
  }
};

/// (2N+1)^{-1/2} sum_n f_n(r) e^{in(phi - theta)} / sqrt(2 pi) over the given sectors,
/// which must cover n = -N..N exactly once.
inline PolarField mexican_tower(const std::vector<RadialState>& sectors, double theta, const RadialGrid& grid,
                                std::size_t n_phi = 64) {
  if (sectors.empty() || sectors.size() % 2 == 0) throw std::invalid_argument("tower needs sectors n = -N..N");
  const int N = static_cast<int>(sectors.size() / 2);
  std::vector<const RadialState*> by_n(sectors.size(), nullptr);
  for (const auto& s : sectors) {
    if (s.n < -N || s.n > N) throw std::invalid_argument("sector outside -N..N");
    if (s.u.size() != grid.dof()) throw std::invalid_argument("sector state does not match the radial grid");
    by_n[static_cast<std::size_t>(s.n + N)] = &s;
  }
  for (std::size_t i = 0; i < by_n.size(); ++i)
    if (!by_n[i]) throw std::invalid_argument("missing sector n=" + std::to_string(static_cast<int>(i) - N));
  if (n_phi <= static_cast<std::size_t>(2 * N)) throw std::invalid_argument("angular grid too coarse for the tower");

  PolarField out;
  out.grid = grid;
  out.n_phi = n_phi;
  out.values.assign(grid.dof() * n_phi, 0.0);
  const double norm = 1.0 / std::sqrt((2.0 * N + 1.0) * 2.0 * std::numbers::pi);
  for (const auto* s : by_n)
    for (std::size_t j = 0; j < n_phi; ++j) {
      const cplx phase = std::polar(norm, s->n * (out.phi(j) - theta));
      for (std::size_t k = 0; k < grid.dof(); ++k)
        out.values[k * n_phi + j] += phase * (s->u[k] / std::sqrt(grid.radius(k)));
    }
  return out;
}

/// Fraction of |psi|^2 on a 2D grid with coordinate `axis` (0: x, 1: y) above threshold.
inline double half_plane_mass(const std::vector<double>& psi, const Grid2D& grid, int axis, double threshold = 0.0) {
  double above = 0.0, total = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const double w = psi[k] * psi[k];
    total += w;
    if (grid.coordinate(k)[static_cast<std::size_t>(axis)] > threshold) above += w;
  }
  if (!(total > 0.0)) throw std::domain_error("state carries no mass");
  return above / total;
}

}  // namespace ssb

#pragma once

// Uniform grids, sparse symmetric operators and finite-difference Laplacians.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace ssb {

enum class Boundary { Dirichlet, Periodic };

inline const char* to_string(Boundary bc) {
  return bc == Boundary::Dirichlet ? "dirichlet" : "periodic";
}

/// One uniform axis. Dirichlet axes pin the two end nodes to zero, so only the
/// n-2 interior nodes are unknowns; periodic axes identify x_max with x_min.
class Axis {
 public:
  Axis(double min, double max, std::size_t n, Boundary bc) : min_(min), max_(max), n_(n), bc_(bc) {
    if (!(min < max)) throw std::invalid_argument("grid axis requires min < max");
    if (n < 3) throw std::invalid_argument("grid axis requires at least 3 nodes");
  }

  double min() const { return min_; }
  double max() const { return max_; }
  std::size_t nodes() const { return n_; }
  Boundary bc() const { return bc_; }

  double spacing() const {
    return bc_ == Boundary::Periodic ? (max_ - min_) / static_cast<double>(n_)
                                     : (max_ - min_) / static_cast<double>(n_ - 1);
  }
  double node(std::size_t i) const { return min_ + static_cast<double>(i) * spacing(); }

  std::size_t dof() const { return bc_ == Boundary::Periodic ? n_ : n_ - 2; }
  std::size_t dof_to_node(std::size_t k) const { return bc_ == Boundary::Periodic ? k : k + 1; }
  double dof_coordinate(std::size_t k) const { return node(dof_to_node(k)); }

  /// Index of the unknown sitting on node i, or dof() for pinned boundary nodes.
  std::size_t node_to_dof(std::size_t i) const {
    if (bc_ == Boundary::Periodic) return i % n_;
    if (i == 0 || i + 1 >= n_) return dof();
    return i - 1;
  }

 private:
  double min_, max_;
  std::size_t n_;
  Boundary bc_;
};

class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n, Boundary bc = Boundary::Dirichlet)
      : axis_(x_min, x_max, n, bc) {}
  explicit Grid1D(const Axis& axis) : axis_(axis) {}

  const Axis& axis() const { return axis_; }
  Boundary bc() const { return axis_.bc(); }
  double spacing() const { return axis_.spacing(); }
  std::size_t dof() const { return axis_.dof(); }
  double coordinate(std::size_t k) const { return axis_.dof_coordinate(k); }
  /// Quadrature weight of one unknown.
  double weight() const { return axis_.spacing(); }

  static constexpr int dimension = 1;

 private:
  Axis axis_;
};

/// Tensor grid; unknowns are ordered with y fastest: k = kx * dof_y + ky.
class Grid2D {
 public:
  Grid2D(Axis x, Axis y) : x_(x), y_(y) {
    if (x.bc() != y.bc()) throw std::invalid_argument("both axes of a 2D grid share one boundary condition");
  }
  Grid2D(double x_min, double x_max, std::size_t nx, double y_min, double y_max, std::size_t ny,
         Boundary bc)
      : Grid2D(Axis(x_min, x_max, nx, bc), Axis(y_min, y_max, ny, bc)) {}

  const Axis& x() const { return x_; }
  const Axis& y() const { return y_; }
  Boundary bc() const { return x_.bc(); }
  std::size_t dof() const { return x_.dof() * y_.dof(); }
  std::size_t index(std::size_t kx, std::size_t ky) const { return kx * y_.dof() + ky; }
  std::array<double, 2> coordinate(std::size_t k) const {
    return {x_.dof_coordinate(k / y_.dof()), y_.dof_coordinate(k % y_.dof())};
  }
  double weight() const { return x_.spacing() * y_.spacing(); }

  static constexpr int dimension = 2;

 private:
  Axis x_, y_;
};

using AnyGrid = std::variant<Grid1D, Grid2D>;

inline double grid_weight(const AnyGrid& g) {
  return std::visit([](const auto& grid) { return grid.weight(); }, g);
}
inline std::size_t grid_dof(const AnyGrid& g) {
  return std::visit([](const auto& grid) { return grid.dof(); }, g);
}

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Real symmetric matrix in compressed-row form. Construction sorts and merges
/// triplets, so two operators assembled from the same entries are bit-identical.
class SparseSymmetricOperator {
 public:
  SparseSymmetricOperator() = default;

  SparseSymmetricOperator(std::size_t dim, std::vector<Triplet> entries) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("operator dimension must be positive");
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    row_ptr_.assign(dim + 1, 0);
    for (const auto& t : entries) {
      if (t.row >= dim || t.col >= dim) throw std::out_of_range("triplet outside operator dimension");
      if (!std::isfinite(t.value)) throw std::domain_error("operator entry is not finite");
      if (!cols_.empty() && last_row_ == t.row && cols_.back() == t.col) {
        values_.back() += t.value;
        continue;
      }
      cols_.push_back(t.col);
      values_.push_back(t.value);
      last_row_ = t.row;
      ++row_ptr_[t.row + 1];
    }
    for (std::size_t i = 0; i < dim; ++i) row_ptr_[i + 1] += row_ptr_[i];
    if (!is_symmetric()) throw std::invalid_argument("assembled operator is not symmetric");
  }

  std::size_t dim() const { return dim_; }
  std::size_t nonzeros() const { return values_.size(); }

  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) acc += values_[p] * x[cols_[p]];
      y[i] = acc;
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(dim_);
    apply(x, y);
    return y;
  }

  double at(std::size_t i, std::size_t j) const {
    auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? values_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(dim_);
    for (std::size_t i = 0; i < dim_; ++i) d[i] = at(i, i);
    return d;
  }

  /// Canonically ordered (row-major, ascending column) entry list.
  std::vector<Triplet> entries() const {
    std::vector<Triplet> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out.push_back({i, cols_[p], values_[p]});
    return out;
  }

  /// Exact entrywise check A(i,j) == A(j,i).
  bool is_symmetric() const {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
        if (at(cols_[p], i) != values_[p]) return false;
    return true;
  }

  /// True when every entry satisfies |i-j| <= 1 (no periodic wrap).
  bool is_tridiagonal() const {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
        std::size_t j = cols_[p];
        if ((i > j ? i - j : j - i) > 1) return false;
      }
    return true;
  }

  /// Gershgorin bound on the spectral radius.
  double norm_bound() const {
    double best = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      double row = 0.0;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) row += std::abs(values_[p]);
      best = std::max(best, row);
    }
    return best;
  }

  /// Gershgorin interval [lo, hi] containing the spectrum.
  std::pair<double, double> gershgorin() const {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < dim_; ++i) {
      double center = 0.0, radius = 0.0;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
        if (cols_[p] == i)
          center = values_[p];
        else
          radius += std::abs(values_[p]);
      }
      lo = std::min(lo, center - radius);
      hi = std::max(hi, center + radius);
    }
    return {lo, hi};
  }

  /// Returns a copy with `diag` added to the diagonal.
  SparseSymmetricOperator plus_diagonal(std::span<const double> diag) const {
    if (diag.size() != dim_) throw std::invalid_argument("diagonal length does not match operator");
    auto e = entries();
    for (std::size_t i = 0; i < dim_; ++i) e.push_back({i, i, diag[i]});
    return SparseSymmetricOperator(dim_, std::move(e));
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  std::size_t last_row_ = 0;
};

namespace detail {

inline void check_hbar(double hbar) {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be a positive real");
}

// Second-difference stencil -c*(u[k-1] - 2u[k] + u[k+1]) along one axis.
inline void axis_laplacian(const Axis& axis, double c, std::size_t stride, std::size_t other_dof,
                           std::size_t other_stride, std::vector<Triplet>& out) {
  const std::size_t m = axis.dof();
  for (std::size_t o = 0; o < other_dof; ++o) {
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t row = k * stride + o * other_stride;
      out.push_back({row, row, 2.0 * c});
      if (k + 1 < m) {
        const std::size_t col = (k + 1) * stride + o * other_stride;
        out.push_back({row, col, -c});
        out.push_back({col, row, -c});
      } else if (axis.bc() == Boundary::Periodic) {
        const std::size_t col = o * other_stride;  // wrap to k = 0
        out.push_back({row, col, -c});
        out.push_back({col, row, -c});
      }
    }
  }
}

}  // namespace detail

/// -hbar^2 times the central-difference Laplacian.
inline SparseSymmetricOperator build_laplacian(const Grid1D& grid, double hbar) {
  detail::check_hbar(hbar);
  const double h = grid.spacing();
  const double c = hbar * hbar / (h * h);
  std::vector<Triplet> t;
  t.reserve(3 * grid.dof());
  detail::axis_laplacian(grid.axis(), c, 1, 1, 0, t);
  return SparseSymmetricOperator(grid.dof(), std::move(t));
}

inline SparseSymmetricOperator build_laplacian(const Grid2D& grid, double hbar) {
  detail::check_hbar(hbar);
  const double cx = hbar * hbar / (grid.x().spacing() * grid.x().spacing());
  const double cy = hbar * hbar / (grid.y().spacing() * grid.y().spacing());
  std::vector<Triplet> t;
  t.reserve(6 * grid.dof());
  detail::axis_laplacian(grid.x(), cx, grid.y().dof(), grid.y().dof(), 1, t);
  detail::axis_laplacian(grid.y(), cy, 1, grid.x().dof(), grid.y().dof(), t);
  return SparseSymmetricOperator(grid.dof(), std::move(t));
}

inline SparseSymmetricOperator build_laplacian(const AnyGrid& grid, double hbar) {
  return std::visit([hbar](const auto& g) { return build_laplacian(g, hbar); }, grid);
}

/// Half-node radial grid r_k = (k + 1/2) h, k = 0..m-1, with the Dirichlet ghost
/// node r_m = (m + 1/2) h landing exactly on r_max.
class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t m) : r_max_(r_max), m_(m) {
    if (!(r_max > 0.0)) throw std::invalid_argument("radial grid needs r_max > 0");
    if (m < 3) throw std::invalid_argument("radial grid needs at least 3 nodes");
  }
  double r_max() const { return r_max_; }
  std::size_t dof() const { return m_; }
  double spacing() const { return r_max_ / (static_cast<double>(m_) + 0.5); }
  double radius(std::size_t k) const { return (static_cast<double>(k) + 0.5) * spacing(); }
  double weight() const { return spacing(); }

 private:
  double r_max_;
  std::size_t m_;
};

/// Reduced radial operator for angular number n acting on u = sqrt(r) f:
/// the flux form -(1/r)(r f')' is discretized with r_{-1/2} = 0 and symmetrized
/// by the sqrt(r) weighting, which reproduces the r^{|n|+1/2} behaviour at the origin.
template <class RadialPotential>
SparseSymmetricOperator build_radial_hamiltonian(const RadialGrid& grid, double hbar, int n,
                                                 RadialPotential&& potential) {
  detail::check_hbar(hbar);
  const std::size_t m = grid.dof();
  const double h = grid.spacing();
  const double c = hbar * hbar / (h * h);
  std::vector<Triplet> t;
  t.reserve(3 * m);
  for (std::size_t k = 0; k < m; ++k) {
    const double r = grid.radius(k);
    const double r_out = r + 0.5 * h;
    const double r_in = k == 0 ? 0.0 : r - 0.5 * h;
    const double v = potential(r);
    if (!std::isfinite(v)) throw std::domain_error("radial potential is not finite");
    const double diag = c * (r_out + r_in) / r + hbar * hbar * n * n / (r * r) + v;
    t.push_back({k, k, diag});
    if (k + 1 < m) {
      const double off = -c * r_out / std::sqrt(r * grid.radius(k + 1));
      t.push_back({k, k + 1, off});
      t.push_back({k + 1, k, off});
    }
  }
  return SparseSymmetricOperator(m, std::move(t));
}

}  // namespace ssb

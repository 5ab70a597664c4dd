#pragma once

// Reduction of an operator to the even or odd sector of an involutive index
// permutation R (a reflection or spin flip) that commutes with it.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ssb/eigensolve.hpp"
#include "ssb/lattice.hpp"

namespace ssb {

enum class Parity { Even, Odd };

/// Involution on unknown indices.
struct Reflection {
  std::vector<std::size_t> image;

  /// i -> n-1-i: x -> -x on a symmetric 1D grid, k -> N-k on Dicke states.
  static Reflection mirror(std::size_t n) {
    Reflection r;
    r.image.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.image[i] = n - 1 - i;
    return r;
  }

  /// (x, y) -> (-x, y) on a 2D grid whose x axis is symmetric.
  static Reflection mirror_x(const Grid2D& g) {
    Reflection r;
    const std::size_t nx = g.x().dof(), ny = g.y().dof();
    r.image.resize(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) r.image[g.index(i, j)] = g.index(nx - 1 - i, j);
    return r;
  }
};

/// P^T A P for the orthonormal sector basis P, plus the embedding back to the full space.
class SectorOperator {
 public:
  SectorOperator(const SparseSymmetricOperator& a, const Reflection& r, Parity parity, double commute_tol = 1e-12)
      : full_dim_(a.dim()), parity_(parity) {
    const std::size_t n = a.dim();
    if (r.image.size() != n) throw std::invalid_argument("reflection size does not match operator");
    for (std::size_t i = 0; i < n; ++i)
      if (r.image[i] >= n || r.image[r.image[i]] != i) throw std::invalid_argument("reflection is not an involution");

    double asym = 0.0;
    for (const auto& t : a.entries()) asym = std::max(asym, std::abs(a.at(r.image[t.row], r.image[t.col]) - t.value));
    if (asym > commute_tol * std::max(1.0, a.norm_bound()))
      throw std::invalid_argument("operator does not commute with the reflection");

    const double h = 1.0 / std::sqrt(2.0);
    orbit_.assign(n, npos);
    coeff_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = r.image[i];
      if (j < i) continue;
      if (j == i) {
        if (parity == Parity::Odd) continue;
        orbit_[i] = members_.size();
        coeff_[i] = 1.0;
        members_.push_back({i, i});
      } else {
        orbit_[i] = orbit_[j] = members_.size();
        coeff_[i] = h;
        coeff_[j] = parity == Parity::Even ? h : -h;
        members_.push_back({i, j});
      }
    }
    if (members_.empty()) throw std::invalid_argument("sector is empty");

    std::map<std::pair<std::size_t, std::size_t>, double> acc;
    for (const auto& t : a.entries()) {
      const std::size_t I = orbit_[t.row], J = orbit_[t.col];
      if (I == npos || J == npos || I > J) continue;
      acc[{I, J}] += coeff_[t.row] * coeff_[t.col] * t.value;
    }
    std::vector<Triplet> trip;
    for (const auto& [ij, v] : acc) {
      trip.push_back({ij.first, ij.second, v});
      if (ij.first != ij.second) trip.push_back({ij.second, ij.first, v});
    }
    op_ = SparseSymmetricOperator(members_.size(), std::move(trip));
  }

  const SparseSymmetricOperator& op() const { return op_; }
  Parity parity() const { return parity_; }

  std::vector<double> lift(const std::vector<double>& v) const {
    std::vector<double> out(full_dim_, 0.0);
    for (std::size_t I = 0; I < members_.size(); ++I) {
      const auto [i, j] = members_[I];
      out[i] = coeff_[i] * v[I];
      if (j != i) out[j] = coeff_[j] * v[I];
    }
    return out;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t full_dim_;
  Parity parity_;
  std::vector<std::size_t> orbit_;
  std::vector<double> coeff_;
  std::vector<std::pair<std::size_t, std::size_t>> members_;
  SparseSymmetricOperator op_;
};

/// Lowest k eigenpairs within one sector, returned as full-space vectors with
/// residuals recomputed against the full operator.
inline Spectrum lowest_k_in_sector(const SparseSymmetricOperator& a, const Reflection& r, Parity parity,
                                   std::size_t k, const SolverOptions& opt = {}) {
  const SectorOperator sector(a, r, parity);
  SolverOptions inner = opt;
  inner.weight = 1.0;
  Spectrum s = lowest_k(sector.op(), k, inner);
  Spectrum out;
  out.weight = opt.weight;
  out.eigenvalues = s.eigenvalues;
  out.gap = s.gap;
  out.degenerate = s.degenerate;
  const double scale = 1.0 / std::sqrt(opt.weight);
  for (std::size_t i = 0; i < s.eigenvectors.size(); ++i) {
    auto v = sector.lift(s.eigenvectors[i]);
    detail::fix_phase(v);
    out.residuals.push_back(detail::residual_norm(a, v, s.eigenvalues[i]));
    for (auto& x : v) x *= scale;
    out.eigenvectors.push_back(std::move(v));
  }
  return out;
}

/// Ground states of the even and odd sectors; for a symmetric double well these
/// are the tunnelling pair E0 (even) and E1 (odd).
inline Spectrum parity_pair(const SparseSymmetricOperator& a, const Reflection& r, const SolverOptions& opt = {}) {
  auto even = lowest_k_in_sector(a, r, Parity::Even, 1, opt);
  auto odd = lowest_k_in_sector(a, r, Parity::Odd, 1, opt);
  Spectrum s;
  s.weight = opt.weight;
  for (auto* part : {&even, &odd}) {
    s.eigenvalues.push_back(part->eigenvalues[0]);
    if (!part->eigenvectors.empty()) {
      s.eigenvectors.push_back(part->eigenvectors[0]);
      s.residuals.push_back(part->residuals[0]);
    }
  }
  if (s.eigenvalues[1] < s.eigenvalues[0]) {
    std::swap(s.eigenvalues[0], s.eigenvalues[1]);
    if (s.eigenvectors.size() == 2) std::swap(s.eigenvectors[0], s.eigenvectors[1]), std::swap(s.residuals[0], s.residuals[1]);
  }
  s.gap = s.eigenvalues[1] - s.eigenvalues[0];
  s.degenerate = {s.gap <= default_degeneracy_threshold * std::max(1.0, std::abs(s.eigenvalues[0]))};
  return s;
}

}  // namespace ssb

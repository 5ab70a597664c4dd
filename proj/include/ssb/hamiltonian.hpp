#pragma once

// Discretized Schroedinger operators H = -hbar^2 Laplacian + V (+ flea).

#include <cmath>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "ssb/lattice.hpp"
#include "ssb/potentials.hpp"

namespace ssb {

/// Potential plus flea sampled on the unknowns of `grid`.
inline std::vector<double> sample_potential(const AnyGrid& grid, const PotentialSpec& potential,
                                            const std::optional<FleaSpec>& flea = std::nullopt) {
  check_potential(potential);
  const int dim = std::holds_alternative<Grid1D>(grid) ? 1 : 2;
  if (dim != dimension(potential))
    throw std::invalid_argument(std::string(potential_name(potential)) + " does not match the grid dimension");

  std::vector<double> v(grid_dof(grid));
  if (const auto* g1 = std::get_if<Grid1D>(&grid)) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = eval_potential(potential, g1->coordinate(k));
  } else {
    const auto& g2 = std::get<Grid2D>(grid);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto xy = g2.coordinate(k);
      v[k] = eval_potential(potential, xy[0], xy[1]);
    }
  }

  if (flea) {
    const ValidityReport report = validate_flea(potential, *flea, grid);
    if (!report.valid()) throw FleaError(report.message);
    if (const auto* f = std::get_if<Bump1D>(&*flea)) {
      const auto& g1 = std::get<Grid1D>(grid);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += eval_flea(*f, g1.coordinate(k));
    } else if (const auto* f = std::get_if<Bump2D>(&*flea)) {
      const auto& g2 = std::get<Grid2D>(grid);
      for (std::size_t k = 0; k < v.size(); ++k) {
        const auto xy = g2.coordinate(k);
        v[k] += eval_flea(*f, xy[0], xy[1]);
      }
    } else {
      const auto& f2 = std::get<GridPoints2D>(*flea);
      const auto& g2 = std::get<Grid2D>(grid);
      for (const auto& pt : f2.points) {
        const std::size_t kx = g2.x().node_to_dof(pt[0]), ky = g2.y().node_to_dof(pt[1]);
        if (kx == g2.x().dof() || ky == g2.y().dof()) continue;  // pinned boundary node
        v[g2.index(kx, ky)] += f2.delta;
      }
    }
  }

  for (double value : v)
    if (!std::isfinite(value)) throw std::domain_error("potential is not finite on the grid");
  return v;
}

inline SparseSymmetricOperator assemble_hamiltonian(const AnyGrid& grid, double hbar, const PotentialSpec& potential,
                                                    const std::optional<FleaSpec>& flea = std::nullopt) {
  const auto kinetic = build_laplacian(grid, hbar);
  return kinetic.plus_diagonal(sample_potential(grid, potential, flea));
}

}  // namespace ssb

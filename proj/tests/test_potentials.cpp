#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ssb/hamiltonian.hpp"
#include "ssb/potentials.hpp"

using namespace ssb;

TEST(Potential, CatalogValues) {
  EXPECT_EQ(eval_potential(DoubleWell{}, 1.0), 0.0);
  EXPECT_EQ(eval_potential(DoubleWell{}, -1.0), 0.0);
  EXPECT_EQ(eval_potential(DoubleWell{}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_potential(Harmonic{1.0}, 2.0), 2.0);
  EXPECT_EQ(eval_potential(MexicanHat{}, 0.6, 0.8), 0.0);
  EXPECT_THROW(eval_potential(MexicanHat{}, 1.0), std::invalid_argument);
  EXPECT_THROW(eval_potential(DoubleWell{}, 1.0, 0.0), std::invalid_argument);
}

TEST(Potential, GaussianLatticeZeroAtCellCenters) {
  GaussianLattice g;
  g.lattice_const = 3.0;
  for (int i = 0; i < g.cells; ++i)
    for (int j = 0; j < g.cells; ++j) EXPECT_NEAR(eval_potential(g, g.center(i), g.center(j)), 0.0, 1e-14);
  EXPECT_NEAR(eval_potential(GaussianLattice{}, 0.0, 0.0), 0.0, 1e-14);
}

TEST(Potential, GaussianLatticeIsPeriodicAndNonnegative) {
  GaussianLattice g;
  const double L = g.supercell(), s = g.lattice_const;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-L / 2, L / 2);
  for (int i = 0; i < 500; ++i) {
    const double x = u(gen), y = u(gen);
    const double v = eval_potential(g, x, y);
    EXPECT_GE(v, -1e-14);
    EXPECT_NEAR(v, eval_potential(g, x + s, y), 1e-12);
    EXPECT_NEAR(v, eval_potential(g, x, y - s), 1e-12);
    EXPECT_NEAR(v, eval_potential(g, x + L, y), 1e-12);
  }
}

TEST(Potential, GaussianLatticeSingleCellShape) {
  // far-separated wells: near a center the potential is V0 (exp(-r^2) - 1)
  GaussianLattice g;
  g.lattice_const = 20.0;
  for (double r : {0.1, 0.5, 1.0, 2.0})
    EXPECT_NEAR(eval_potential(g, r, 0.0), g.V0 * (std::exp(-r * r) - 1.0), 1e-12);
}

TEST(Potential, InvalidLatticeRejected) {
  GaussianLattice g;
  g.V0 = 1.0;
  EXPECT_THROW(check_potential(g), std::invalid_argument);
  EXPECT_THROW(check_potential(Harmonic{0.0}), std::invalid_argument);
}

TEST(Potential, Symmetries) {
  for (double x = -2.0; x <= 2.0; x += 0.0137)
    EXPECT_EQ(eval_potential(DoubleWell{}, x), eval_potential(DoubleWell{}, -x));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int s = 0; s < 20; ++s) {
    const double x = u(gen), y = u(gen), v = eval_potential(MexicanHat{}, x, y);
    for (int k = 0; k < 64; ++k) {
      const double a = 2 * std::numbers::pi * k / 64;
      const double xr = std::cos(a) * x - std::sin(a) * y, yr = std::sin(a) * x + std::cos(a) * y;
      EXPECT_NEAR(eval_potential(MexicanHat{}, xr, yr), v, 1e-12);
    }
  }
}

TEST(Flea, BumpValues) {
  const Bump1D f{0.65, 0.2, -0.1};
  EXPECT_EQ(eval_flea(f, 0.65), -0.1);
  EXPECT_EQ(eval_flea(f, 0.85), 0.0);
  EXPECT_EQ(eval_flea(f, 0.45), 0.0);
  EXPECT_EQ(eval_flea(f, 2.0), 0.0);
  EXPECT_NEAR(eval_flea(f, 0.75), -0.1 * std::exp(25.0 - 1.0 / 0.03), 1e-15);
  EXPECT_NEAR(eval_flea(f, 0.75), -2.40e-5, 0.01e-5);
}

TEST(Flea, ContinuousAtSupportEdge) {
  const Bump1D f{0.0, 0.2, 1.0};
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    EXPECT_LT(std::abs(eval_flea(f, 0.2 - eps)), 1e-30);
    EXPECT_LT(std::abs(eval_flea(f, -0.2 + eps)), 1e-30);
  }
  EXPECT_EQ(eval_flea(f, 0.2), 0.0);
}

TEST(Minima, Catalog) {
  const auto dw = classical_minima(DoubleWell{});
  ASSERT_EQ(dw.points.size(), 2u);
  EXPECT_EQ(dw.points[0].q[0], -1.0);
  EXPECT_EQ(dw.points[1].q[0], 1.0);
  EXPECT_EQ(dw.points[1].p[0], 0.0);
  const auto h = classical_minima(Harmonic{2.0});
  ASSERT_EQ(h.points.size(), 1u);
  EXPECT_EQ(h.points[0].q[0], 0.0);
  const auto mh = classical_minima(MexicanHat{});
  EXPECT_EQ(mh.kind, ClassicalMinima::Kind::Circle);
  for (int k = 0; k < 1000; ++k) {
    const double a = 2 * std::numbers::pi * k / 1000;
    EXPECT_NEAR(eval_potential(MexicanHat{}, mh.radius * std::cos(a), mh.radius * std::sin(a)), 0.0, 1e-12);
  }
  EXPECT_EQ(classical_minima(GaussianLattice{}).points.size(), 49u);
}

TEST(Minima, NoSampledPointBelowMinimum) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const PotentialSpec spec : {PotentialSpec{DoubleWell{}}, PotentialSpec{Harmonic{1.3}}}) {
    const auto m = classical_minima(spec);
    for (const auto& pt : m.points) EXPECT_NEAR(eval_potential(spec, pt.q[0]) + pt.p[0] * pt.p[0], m.value, 1e-12);
    for (int i = 0; i < 10000; ++i) {
      const double q = u(gen), p = u(gen);
      EXPECT_GE(p * p + eval_potential(spec, q), m.value);
    }
  }
  const PotentialSpec lat = GaussianLattice{};
  const auto m = classical_minima(lat);
  std::uniform_real_distribution<double> w(-5.25, 5.25);
  for (const auto& pt : m.points) EXPECT_NEAR(eval_potential(lat, pt.q[0], pt.q[1]), 0.0, 1e-12);
  for (int i = 0; i < 10000; ++i) EXPECT_GE(eval_potential(lat, w(gen), w(gen)), -1e-12);
}

TEST(Validity, PaperFleaIsValid) {
  const AnyGrid g = Grid1D(-2, 2, 2001);
  const auto r = validate_flea(DoubleWell{}, Bump1D{0.65, 0.2, -0.1}, g);
  EXPECT_TRUE(r.valid()) << r.message;
  EXPECT_NEAR(r.distance, 0.15, 1e-12);
  EXPECT_EQ(r.max_distance, 2.0);
}

TEST(Validity, OverlappingFleaFailsClearance) {
  const AnyGrid g = Grid1D(-2, 2, 2001);
  const auto r = validate_flea(DoubleWell{}, Bump1D{1.0, 0.2, -0.1}, g);
  EXPECT_FALSE(r.support_clear);
  EXPECT_FALSE(r.valid());
}

TEST(Validity, DistantFleaFailsDistance) {
  const AnyGrid g = Grid1D(-5, 5, 2001);
  const auto r = validate_flea(DoubleWell{}, Bump1D{3.5, 0.2, -0.1}, g);
  EXPECT_TRUE(r.support_clear);
  EXPECT_FALSE(r.distance_ok);
  EXPECT_NEAR(r.distance, 2.3, 1e-12);
}

TEST(Validity, ValidCentersFormSymmetricIntervals) {
  const AnyGrid g = Grid1D(-5, 5, 2001);
  std::vector<int> valid;
  for (int i = -400; i <= 400; ++i) valid.push_back(validate_flea(DoubleWell{}, Bump1D{i * 0.01, 0.2, 0.1}, g).valid());
  for (int i = 0; i <= 800; ++i) EXPECT_EQ(valid[i], valid[800 - i]);
  // in |b| the valid centers form two intervals: around the origin and beyond the minimum
  int runs = valid[400];
  for (int i = 401; i <= 800; ++i)
    if (valid[i] && !valid[i - 1]) ++runs;
  EXPECT_EQ(runs, 2);
  EXPECT_TRUE(valid[400 + 50]);
  EXPECT_FALSE(valid[400 + 100]);
  EXPECT_TRUE(valid[400 + 200]);
  EXPECT_FALSE(valid[400 + 350]);
}

TEST(Validity, DimensionMismatches) {
  const AnyGrid g1 = Grid1D(-2, 2, 101);
  const AnyGrid g2 = Grid2D(-2, 2, 41, -2, 2, 41, Boundary::Dirichlet);
  EXPECT_THROW(validate_flea(MexicanHat{}, Bump1D{}, g2), std::invalid_argument);
  EXPECT_THROW(validate_flea(DoubleWell{}, Bump1D{0.65, 0.0, 0.1}, g1), FleaError);
  const auto r = validate_flea(MexicanHat{}, Bump2D{0.65, 0.0, 0.2, -0.1}, g2);
  EXPECT_TRUE(r.valid()) << r.message;
  EXPECT_NEAR(r.distance, 0.15, 1e-12);
}

TEST(Validity, LatticeGridFleas) {
  GaussianLattice lat;
  const Grid2D g = lattice_grid(lat, 40);
  const auto fleas = lattice_fleas(lat, g, 0.1, 3);
  EXPECT_EQ(fleas.points.size(), 48u);
  const auto ok = validate_flea(lat, fleas, AnyGrid(g));
  EXPECT_TRUE(ok.valid()) << ok.message;
  EXPECT_NEAR(ok.distance, 3 * g.x().spacing(), 1e-12);
  const auto close = validate_flea(lat, lattice_fleas(lat, g, 0.1, 2), AnyGrid(g));
  EXPECT_FALSE(close.valid());
  EXPECT_THROW(validate_flea(lat, GridPoints2D{{}, 0.1}, AnyGrid(g)), FleaError);
}

TEST(Validity, GridFleaRaisesOnlyItsNodes) {
  GaussianLattice lat;
  const Grid2D g = lattice_grid(lat, 20);
  const auto fleas = lattice_fleas(lat, g, 0.1, 3);
  const auto base = sample_potential(AnyGrid(g), lat);
  const auto pert = sample_potential(AnyGrid(g), lat, FleaSpec{fleas});
  std::size_t diff = 0;
  for (std::size_t k = 0; k < base.size(); ++k)
    if (base[k] != pert[k]) {
      ++diff;
      EXPECT_NEAR(pert[k] - base[k], 0.1, 1e-14);
    }
  EXPECT_EQ(diff, 48u);
}

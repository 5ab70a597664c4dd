#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "ssb/eigensolve.hpp"
#include "ssb/hamiltonian.hpp"
#include "ssb/lattice.hpp"

using namespace ssb;

namespace {

Eigen::MatrixXd dense(const SparseSymmetricOperator& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.dim()), static_cast<Eigen::Index>(a.dim()));
  for (const auto& t : a.entries()) m(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
  return m;
}

Eigen::VectorXd dense_eigenvalues(const SparseSymmetricOperator& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double lowest_tridiagonal(const SparseSymmetricOperator& a) {
  SolverOptions opt;
  opt.vectors = false;
  return lowest_k(a, 1, opt).eigenvalues[0];
}

}  // namespace

TEST(Grid, SpacingFollowsBoundaryCondition) {
  Grid1D d(0.0, 1.0, 11, Boundary::Dirichlet);
  Grid1D p(0.0, 1.0, 10, Boundary::Periodic);
  EXPECT_DOUBLE_EQ(d.spacing(), 0.1);
  EXPECT_DOUBLE_EQ(p.spacing(), 0.1);
  EXPECT_EQ(d.dof(), 9u);
  EXPECT_EQ(p.dof(), 10u);
  EXPECT_DOUBLE_EQ(d.coordinate(0), 0.1);
  EXPECT_DOUBLE_EQ(p.coordinate(0), 0.0);
}

TEST(Grid, RejectsInvalidAxes) {
  EXPECT_THROW(Grid1D(1.0, 1.0, 10), std::invalid_argument);
  EXPECT_THROW(Grid1D(2.0, 1.0, 10), std::invalid_argument);
  EXPECT_THROW(Grid1D(0.0, 1.0, 2), std::invalid_argument);
  EXPECT_THROW(Grid2D(Axis(0, 1, 5, Boundary::Periodic), Axis(0, 1, 5, Boundary::Dirichlet)), std::invalid_argument);
}

TEST(Grid2D, DimensionIsProductOfAxes) {
  Grid2D g(-1, 1, 7, -2, 2, 9, Boundary::Dirichlet);
  EXPECT_EQ(g.dof(), 5u * 7u);
  Grid2D p(-1, 1, 6, -2, 2, 8, Boundary::Periodic);
  EXPECT_EQ(p.dof(), 48u);
  const auto xy = p.coordinate(p.index(2, 3));
  EXPECT_DOUBLE_EQ(xy[0], -1.0 + 2.0 * 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(xy[1], -2.0 + 3.0 * 4.0 / 8.0);
}

TEST(Laplacian, DirichletStencil) {
  const double hbar = 0.3;
  Grid1D g(-1.0, 1.0, 21);
  const auto a = build_laplacian(g, hbar);
  const double h = g.spacing();
  for (std::size_t i = 0; i < a.dim(); ++i) {
    EXPECT_DOUBLE_EQ(a.at(i, i), 2 * hbar * hbar / (h * h));
    if (i + 1 < a.dim()) {
      EXPECT_DOUBLE_EQ(a.at(i, i + 1), -hbar * hbar / (h * h));
    }
  }
  EXPECT_EQ(a.at(0, a.dim() - 1), 0.0);
  EXPECT_TRUE(a.is_tridiagonal());
}

TEST(Laplacian, PeriodicWrapsAndAnnihilatesConstants) {
  Grid1D g(0.0, 2.0, 16, Boundary::Periodic);
  const auto a = build_laplacian(g, 1.0);
  EXPECT_NE(a.at(0, 15), 0.0);
  EXPECT_FALSE(a.is_tridiagonal());
  std::vector<double> one(a.dim(), 1.0);
  for (double v : a.apply(one)) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_NEAR(dense_eigenvalues(a)(0), 0.0, 1e-10);
}

TEST(Laplacian, PeriodicTwoDimensionalKernel) {
  Grid2D g(0.0, 1.0, 12, 0.0, 3.0, 10, Boundary::Periodic);
  const auto a = build_laplacian(g, 0.7);
  std::vector<double> one(a.dim(), 1.0);
  for (double v : a.apply(one)) EXPECT_NEAR(v, 0.0, 1e-12 * a.norm_bound());
}

TEST(Laplacian, DirichletSpectrumMatchesClosedForm) {
  Grid1D g(0.0, 1.0, 101);
  const double h = g.spacing();
  const auto ev = dense_eigenvalues(build_laplacian(g, 1.0));
  for (int k = 1; k <= 10; ++k) {
    const double s = std::sin(k * std::numbers::pi * h / 2);
    EXPECT_NEAR(ev(k - 1), 4.0 / (h * h) * s * s, 1e-9 * ev(k - 1));
  }
  EXPECT_NEAR(ev(0), std::numbers::pi * std::numbers::pi, 1e-3);
}

TEST(Laplacian, PositiveSemidefinite) {
  for (auto bc : {Boundary::Dirichlet, Boundary::Periodic}) {
    Grid2D g(-1, 1, 14, -1, 1, 12, bc);
    const auto a = build_laplacian(g, 0.4);
    EXPECT_GE(dense_eigenvalues(a)(0), -1e-10 * a.norm_bound());
  }
}

TEST(Laplacian, RejectsBadHbar) {
  Grid1D g(0.0, 1.0, 10);
  EXPECT_THROW(build_laplacian(g, 0.0), std::invalid_argument);
  EXPECT_THROW(build_laplacian(g, -1.0), std::invalid_argument);
  EXPECT_THROW(build_laplacian(g, std::nan("")), std::invalid_argument);
}

TEST(Operator, ExactSymmetryAndCanonicalOrder) {
  Grid2D g(-2, 2, 17, -2, 2, 15, Boundary::Dirichlet);
  const auto a = assemble_hamiltonian(AnyGrid(g), 0.2, MexicanHat{});
  EXPECT_TRUE(a.is_symmetric());
  const auto e = a.entries();
  for (std::size_t i = 1; i < e.size(); ++i)
    EXPECT_TRUE(e[i - 1].row < e[i].row || (e[i - 1].row == e[i].row && e[i - 1].col < e[i].col));
  const auto b = assemble_hamiltonian(AnyGrid(g), 0.2, MexicanHat{});
  const auto f = b.entries();
  ASSERT_EQ(e.size(), f.size());
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(e[i].value, f[i].value);
}

TEST(Operator, RejectsAsymmetricOrNonFiniteEntries) {
  EXPECT_THROW(SparseSymmetricOperator(2, {{0, 1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(SparseSymmetricOperator(2, {{0, 0, INFINITY}}), std::domain_error);
  EXPECT_THROW(SparseSymmetricOperator(2, {{0, 2, 1.0}}), std::out_of_range);
  SparseSymmetricOperator merged(2, {{0, 1, 1.0}, {1, 0, 0.5}, {1, 0, 0.5}});
  EXPECT_EQ(merged.at(1, 0), 1.0);
}

TEST(Assemble, DoubleWellDiagonalAtMinimumIsKinetic) {
  Grid1D g(-2, 2, 2001);
  const double hbar = 0.1;
  const auto h = assemble_hamiltonian(AnyGrid(g), hbar, DoubleWell{});
  const auto t = build_laplacian(g, hbar);
  std::size_t k = 0;
  while (std::abs(g.coordinate(k) - 1.0) > 1e-9) ++k;
  EXPECT_NEAR(h.at(k, k), t.at(k, k), 1e-20);
}

TEST(Assemble, HarmonicGroundEnergy) {
  Grid1D g(-8, 8, 2001);
  const auto h = assemble_hamiltonian(AnyGrid(g), 0.1, Harmonic{1.0});
  EXPECT_NEAR(lowest_tridiagonal(h), 0.1 / std::sqrt(2.0), 1e-5);
}

TEST(Assemble, FleaTouchesOnlyItsSupport) {
  Grid1D g(-2, 2, 2001);
  const auto plain = assemble_hamiltonian(AnyGrid(g), 0.1, DoubleWell{});
  const auto flea = assemble_hamiltonian(AnyGrid(g), 0.1, DoubleWell{}, FleaSpec{Bump1D{0.65, 0.2, -0.1}});
  std::size_t changed = 0;
  for (std::size_t k = 0; k < g.dof(); ++k) {
    const double x = g.coordinate(k);
    if (std::abs(x - 0.65) < 0.1) {
      EXPECT_LT(flea.at(k, k), plain.at(k, k));
      ++changed;
    } else if (std::abs(x - 0.65) < 0.2) {
      EXPECT_LE(flea.at(k, k), plain.at(k, k));
    } else {
      EXPECT_EQ(flea.at(k, k), plain.at(k, k));
    }
    if (k + 1 < g.dof()) {
      EXPECT_EQ(flea.at(k, k + 1), plain.at(k, k + 1));
    }
  }
  EXPECT_GE(changed, 99u);
}

TEST(Assemble, InvalidFleaPropagates) {
  Grid1D g(-2, 2, 401);
  EXPECT_THROW(assemble_hamiltonian(AnyGrid(g), 0.1, DoubleWell{}, FleaSpec{Bump1D{1.0, 0.2, -0.1}}), FleaError);
  EXPECT_THROW(assemble_hamiltonian(AnyGrid(g), 0.1, MexicanHat{}), std::invalid_argument);
}

TEST(Assemble, HarmonicConvergesAtSecondOrder) {
  const double hbar = 0.1, exact = hbar / std::sqrt(2.0);
  std::vector<double> err;
  for (std::size_t n : {201u, 401u, 801u}) {
    Grid1D g(-8, 8, n);
    err.push_back(std::abs(lowest_tridiagonal(assemble_hamiltonian(AnyGrid(g), hbar, Harmonic{1.0})) - exact));
  }
  EXPECT_LT(err[1], err[0]);
  EXPECT_LT(err[2], err[1]);
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.3);
  EXPECT_NEAR(err[1] / err[2], 4.0, 0.3);
}

TEST(Radial, DiskEigenvaluesApproachBesselZeros) {
  RadialGrid g(1.0, 800);
  for (int n : {0, 1, 2}) {
    const auto a = build_radial_hamiltonian(g, 1.0, n, [](double) { return 0.0; });
    const double j = boost::math::cyl_bessel_j_zero(static_cast<double>(n), 1);
    EXPECT_NEAR(lowest_tridiagonal(a), j * j, 2e-3 * j * j) << "n=" << n;
  }
}

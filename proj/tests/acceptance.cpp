// Acceptance checks. `acceptance <k>` runs criterion k, `acceptance` runs all.
// One PASS/FAIL line per check; the exit status is nonzero if any check fails.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ssb/eigensolve/sectors.hpp"
#include "ssb/hamiltonian.hpp"
#include "ssb/semiclassics.hpp"
#include "ssb/spin.hpp"

using namespace ssb;

namespace {

int failures = 0;

void check(int id, const std::string& what, bool ok, const std::string& detail) {
  std::printf("[criterion %d] %s  %s: %s\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void note(int id, const std::string& what, const std::string& detail) {
  std::printf("[criterion %d] INFO  %s: %s\n", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void runtime(int id, const Clock& c, double limit) {
  check(id, "runtime", c.seconds() < limit, fmt("%.2f s (limit %.0f s)", c.seconds(), limit));
}

SolverOptions weighted(double w) {
  SolverOptions o;
  o.weight = w;
  return o;
}

const Grid1D default_grid(-2.0, 2.0, 2001);

double max_deviation(const HusimiField& f, const std::function<double(double, double)>& exact) {
  double d = 0.0;
  for (std::size_t k = 0; k < f.density.size(); ++k) {
    const auto z = f.phase_grid.point(k);
    d = std::max(d, std::abs(f.density[k] - exact(z[0], z[1])));
  }
  return d;
}

std::vector<double> even_ground(const Grid1D& g, double hbar) {
  const auto h = assemble_hamiltonian(AnyGrid(g), hbar, DoubleWell{});
  return lowest_k_in_sector(h, Reflection::mirror(h.dim()), Parity::Even, 1, weighted(g.weight())).eigenvectors[0];
}

// ---------------------------------------------------------------------------

void criterion1() {
  const int id = 1;
  Clock clock;
  const double hbar = 0.1, omega = 1.0;
  const AnyGrid ag(default_grid);
  const auto s = lowest_k(assemble_hamiltonian(ag, hbar, Harmonic{omega}), 1, weighted(default_grid.weight()));
  const double exact = hbar * omega / std::sqrt(2.0);
  const double rel = std::abs(s.eigenvalues[0] - exact) / exact;
  check(id, "E0 = hbar*omega/sqrt(2)", rel <= 1e-4, fmt("relative error %.3e (tol 1e-4)", rel));

  const auto field = husimi(s.eigenvectors[0], hbar, default_phase_grid(ag, hbar), ag);
  const auto coherent = [hbar](double q, double p) { return std::exp(-(q * q + p * p) / (2.0 * hbar)); };
  const double dev = max_deviation(field, coherent);
  check(id, "Husimi = exp(-(q^2+p^2)/2hbar) pointwise, omega=1", dev <= 1e-4, fmt("max deviation %.3e (tol 1e-4)", dev));

  // Supplementary: the omega=1 ground state against its own exact Husimi, and the
  // omega=sqrt(2) ground state, which is the hbar-width coherent state.
  const double s2 = hbar * std::sqrt(2.0) / omega;
  const double dev_exact = max_deviation(field, [&](double q, double p) { return oracle::gaussian_husimi(q, p, s2, hbar); });
  note(id, "supplementary: omega=1 Husimi vs exact squeezed-Gaussian Husimi", fmt("max deviation %.3e", dev_exact));
  const Grid1D wide(-4.0, 4.0, 2001);
  const AnyGrid aw(wide);
  const auto s2w = lowest_k(assemble_hamiltonian(aw, hbar, Harmonic{std::sqrt(2.0)}), 1, weighted(wide.weight()));
  const double dev2 = max_deviation(husimi(s2w.eigenvectors[0], hbar, default_phase_grid(aw, hbar), aw), coherent);
  note(id, "supplementary: omega=sqrt(2) Husimi vs exp(-(q^2+p^2)/2hbar)", fmt("max deviation %.3e", dev2));
  runtime(id, clock, 10.0);
}

void criterion2() {
  const int id = 2;
  Clock clock;
  const AnyGrid ag(default_grid);
  std::vector<HbarState> states;
  for (double hbar : {0.5, 0.1, 0.05, 0.01}) {
    states.push_back({hbar, even_ground(default_grid, hbar)});
    const double m = half_space_mass(husimi(states.back().psi, hbar, default_phase_grid(ag, hbar), ag), 0);
    check(id, "half-space Husimi mass at hbar=" + fmt("%g", hbar), std::abs(m - 0.5) <= 1e-2, fmt("%.6f (target 0.5 +- 1e-2)", m));
  }
  const auto trace = classical_limit_trace(states, default_test_suite(), DiscreteMeasure::uniform(classical_minima(DoubleWell{})), ag);
  const double dev = trace.rows.back().deviation;
  check(id, "trace deviation from (delta+ + delta-)/2 at hbar=0.01", dev <= 1e-2, fmt("%.3e (tol 1e-2)", dev));
  runtime(id, clock, 120.0);
}

void criterion3() {
  const int id = 3;
  Clock clock;
  const AnyGrid ag(default_grid);
  const Bump1D flea{0.65, 0.2, -0.1};
  for (double hbar : {0.5, 0.1, 0.05, 0.01}) {
    const auto s = lowest_k(assemble_hamiltonian(ag, hbar, DoubleWell{}, FleaSpec{flea}), 2, weighted(default_grid.weight()));
    const bool degenerate = degeneracy_check(s);
    check(id, "ground state nondegenerate at hbar=" + fmt("%g", hbar), !degenerate,
          fmt("gap %.3e, E0 %.6f", s.gap, s.eigenvalues[0]));
    // the flea lowers the right well (b > 0, d < 0)
    const double m = half_space_mass(husimi(s.eigenvectors[0], hbar, default_phase_grid(ag, hbar), ag), 0);
    if (hbar == 0.5) check(id, "localized-side mass at hbar=0.5 in [0.4, 0.6]", m >= 0.4 && m <= 0.6, fmt("%.6f", m));
    if (hbar == 0.01) check(id, "localized-side mass at hbar=0.01 >= 0.99", m >= 0.99, fmt("%.12f", m));
    if (hbar == 0.1 || hbar == 0.05) note(id, "localized-side mass at hbar=" + fmt("%g", hbar), fmt("%.6f", m));
  }
  runtime(id, clock, 120.0);
}

void criterion4() {
  const int id = 4;
  Clock clock;
  std::vector<double> hbars;
  for (int i = 0; i < 8; ++i) hbars.push_back(0.3 - 0.25 * i / 7.0);
  const AnyGrid ag(default_grid);
  const auto table = gap_scaling(
      hbars, [&](double h) { return assemble_hamiltonian(ag, h, DoubleWell{}); }, weighted(default_grid.weight()));
  for (const auto& r : table.rows) note(id, "gap at hbar=" + fmt("%.4f", r.hbar), fmt("%.6e", r.gap));
  const double r2 = table.exponential ? table.exponential->r2 : 0.0;
  check(id, "R^2 of ln(gap) vs 1/hbar over 8 points in [0.05, 0.3]", r2 >= 0.99,
        fmt("R^2 = %.6f (tol 0.99), slope %.4f", r2, table.exponential ? table.exponential->slope : 0.0));
  runtime(id, clock, 120.0);
}

void criterion5() {
  const int id = 5;
  Clock clock;
  const double hbar = 0.05;
  const AnyGrid ag(default_grid);
  const auto h = assemble_hamiltonian(ag, hbar, DoubleWell{});
  SolverOptions opt = weighted(default_grid.weight());
  const auto s = parity_pair(h, Reflection::mirror(h.dim()), opt);
  const auto pair = anderson_pair(s.eigenvectors[0], s.eigenvectors[1], default_grid.weight());
  const double target = 0.5 * (s.eigenvalues[0] + s.eigenvalues[1]);
  const auto pg = default_phase_grid(ag, hbar);
  for (const auto* psi : {&pair.plus, &pair.minus}) {
    const std::string name = psi == &pair.plus ? "Psi+" : "Psi-";
    const double m = half_space_mass(husimi(*psi, hbar, pg, ag), 0);
    check(id, name + " Husimi mass in one half-plane >= 0.95", std::max(m, 1.0 - m) >= 0.95, fmt("%.9f", std::max(m, 1.0 - m)));
    const auto hv = h.apply(*psi);
    double e = 0.0;
    for (std::size_t k = 0; k < hv.size(); ++k) e += (*psi)[k] * hv[k];
    e *= default_grid.weight();
    check(id, name + " energy = (E0+E1)/2", std::abs(e - target) <= opt.tol,
          fmt("|<H> - (E0+E1)/2| = %.3e (tol %.0e)", std::abs(e - target), opt.tol));
  }
  runtime(id, clock, 60.0);
}

void metal(int id, double lattice_const, const std::string& label) {
  GaussianLattice lat;
  lat.lattice_const = lattice_const;
  const std::size_t npc = 40;
  const Grid2D g = lattice_grid(lat, npc);
  const auto fleas = lattice_fleas(lat, g, 0.1, 3);
  const auto cells = static_cast<std::size_t>(lat.cells);
  const std::size_t center = cells / 2;
  for (double hbar : {0.1, 0.025}) {
    const auto s = lowest_k(assemble_hamiltonian(AnyGrid(g), hbar, lat, FleaSpec{fleas}), 2, weighted(g.weight()));
    std::vector<double> mass(cells * cells, 0.0);
    for (std::size_t kx = 0; kx < g.x().dof(); ++kx)
      for (std::size_t ky = 0; ky < g.y().dof(); ++ky) {
        const double a = s.eigenvectors[0][g.index(kx, ky)];
        mass[(kx / npc) * cells + ky / npc] += a * a * g.weight();
      }
    const double cmass = mass[center * cells + center];
    const double mmax = *std::max_element(mass.begin(), mass.end());
    check(id, label + " ground state nondegenerate at hbar=" + fmt("%g", hbar), !degeneracy_check(s), fmt("gap %.3e", s.gap));
    if (hbar == 0.025) check(id, label + " center-cell mass at hbar=0.025 >= 0.9", cmass >= 0.9, fmt("%.9f", cmass));
    if (hbar == 0.1) check(id, label + " max-cell mass at hbar=0.1 < 0.5", mmax < 0.5, fmt("%.9f (center cell %.9f)", mmax, cmass));
  }
}

void criterion6() {
  const int id = 6;
  Clock clock;
  metal(id, 3.0, "s=3");
  metal(id, 1.5, "s=1.5");
  runtime(id, clock, 900.0);
}

void criterion7() {
  const int id = 7;
  Clock clock;
  const Grid1D g(-2.0, 2.0, 200);
  const double hbar = 0.1;
  const auto pg = default_phase_grid(AnyGrid(g), hbar);
  std::mt19937_64 gen(0x5EED);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-1.5, 1.5), wd(0.2, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::complex<double>> psi(g.dof());
    double n2 = 0.0;
    for (auto& v : psi) v = {nd(gen), nd(gen)}, n2 += std::norm(v);
    for (auto& v : psi) v /= std::sqrt(n2 * g.weight());
    // random smooth symbol: sum of three Gaussians with random centers, widths and signs
    std::vector<std::array<double, 4>> bumps(3);
    for (auto& b : bumps) b = {ud(gen), ud(gen), wd(gen), nd(gen)};
    const auto f = [&](std::span<const double> z) {
      double s = 0.0;
      for (const auto& b : bumps) s += b[3] * std::exp(-((z[0] - b[0]) * (z[0] - b[0]) + (z[1] - b[1]) * (z[1] - b[1])) / (2.0 * b[2] * b[2]));
      return s;
    };
    const auto q = berezin_quantize(sample_phase_function(f, pg), hbar, pg, g);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(psi.size()));
    for (std::size_t i = 0; i < psi.size(); ++i) v(static_cast<Eigen::Index>(i)) = psi[i];
    const double lhs = v.dot(q * v).real() * g.weight();
    const double rhs = husimi(psi, hbar, pg, AnyGrid(g)).integrate(f);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  check(id, "|<psi, Q(f) psi> - integral of f against the Husimi measure| over 20 random pairs", worst <= 1e-8,
        fmt("max %.3e (tol 1e-8)", worst));
  runtime(id, clock, 60.0);
}

void criterion8() {
  const int id = 8;
  Clock clock;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 8; ++n)
    for (double B : {0.2, 0.5, 0.9})
      worst = std::max(worst, std::abs(cw_ground(n, 1.0, B).energy - oracle::ground_energy(oracle::curie_weiss(n, 1.0, B))));
  check(id, "Dicke sector vs full space ground energy, N <= 8", worst <= 1e-8, fmt("max |dE| %.3e (tol 1e-8)", worst));
  const auto minima = cw_classical_minima(1.0, 0.5);
  const auto g50 = cw_ground(50, 1.0, 0.5), g200 = cw_ground(200, 1.0, 0.5);
  const double ex50 = std::abs(g50.magnetization.x - minima[0].x), ex200 = std::abs(g200.magnetization.x - minima[0].x);
  const double ez50 = std::abs(g50.magnetization.z2 - minima[0].z2), ez200 = std::abs(g200.magnetization.z2 - minima[0].z2);
  check(id, "x error at N=200 below N=50", ex200 < ex50, fmt("%.4e < %.4e", ex200, ex50));
  check(id, "z^2 error at N=200 below N=50", ez200 < ez50, fmt("%.4e < %.4e", ez200, ez50));
  runtime(id, clock, 60.0);
}

void criterion9() {
  const int id = 9;
  Clock clock;
  const std::vector<std::size_t> Ns{4, 5, 6, 7, 8, 9, 10, 11, 12};
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const auto scan = order_of_limits_scan(Ns, eps, 1.0, 0.5);
  bool rows = true, cols = true;
  for (bool r : scan.row_vanishes) rows = rows && r;
  for (bool c : scan.column_nondecreasing) cols = cols && c;
  check(id, "every row tends to 0 as epsilon -> 0", rows, fmt("|m(N=12, 1e-6)| = %.3e, |m(N=12, 1e-1)| = %.3e", std::abs(scan.m.back().back()), std::abs(scan.m.back().front())));
  check(id, "every column has |m| nondecreasing in N", cols, fmt("|m(N=4, 1e-2)| = %.3e, |m(N=12, 1e-2)| = %.3e", std::abs(scan.m.front()[1]), std::abs(scan.m.back()[1])));
  check(id, "m odd in epsilon", scan.odd_defect <= 1e-8, fmt("max |m(eps) + m(-eps)| = %.3e (tol 1e-8)", scan.odd_defect));
  check(id, "sign(m) = -sign(epsilon)", scan.sign_opposes_field, scan.sign_opposes_field ? "all cells" : "violated");
  runtime(id, clock, 600.0);
}

void criterion10() {
  const int id = 10;
  Clock clock;
  const RadialGrid rg(2.0, 400);
  const std::size_t nphi = 64;
  const auto tower = mexican_tower(mexican_sector_states(0.1, 3, rg), 0.0, rg, nphi);
  const auto a = tower.angular_density();
  const auto peak = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  const std::size_t dist = std::min(peak, nphi - peak);
  check(id, "N=3 tower angular density peaks at phi=0 within one bin", dist <= 1, fmt("peak at phi=%.4f (bin width %.4f)", tower.phi(peak), tower.phi(1)));
  const Grid2D g(-2, 2, 161, -2, 2, 161, Boundary::Dirichlet);
  const Bump2D flea{0.65, 0.0, 0.2, -0.1};
  for (double hbar : {0.1, 0.05}) {
    const auto s = lowest_k(assemble_hamiltonian(AnyGrid(g), hbar, MexicanHat{}, FleaSpec{flea}), 1, weighted(g.weight()));
    const double m = half_plane_mass(s.eigenvectors[0], g, 0);
    check(id, "bump flea leaves half-plane mass in [0.4, 0.6] at hbar=" + fmt("%g", hbar), m >= 0.4 && m <= 0.6, fmt("%.6f", m));
  }
  runtime(id, clock, 600.0);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<void (*)()> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                         criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: acceptance [1..%zu]...\n", criteria.size());
      return 2;
    }
    which.push_back(k);
  }
  if (which.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) which.push_back(k);
  for (int k : which) {
    try {
      criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      check(k, "exception", false, e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssb/eigensolve.hpp"
#include "ssb/eigensolve/sectors.hpp"
#include "ssb/lattice.hpp"
#include "ssb/potentials.hpp"

namespace ssb {

// ---------------------------------------------------------------------------
// Curie-Weiss model in the maximal-spin (Dicke) sector

/// Collective spin operators S_x, S_z for j = N/2 in the basis m = k - N/2, k = 0..N.
class DickeSector {
 public:
  explicit DickeSector(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("Dicke sector needs N >= 1");
    const auto d = static_cast<Eigen::Index>(n + 1);
    sz_ = Eigen::MatrixXd::Zero(d, d);
    sx_ = Eigen::MatrixXd::Zero(d, d);
    const double j = 0.5 * static_cast<double>(n);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double m = static_cast<double>(k) - j;
      sz_(k, k) = m;
      if (k + 1 < d) {
        const double up = 0.5 * std::sqrt(j * (j + 1.0) - m * (m + 1.0));
        sx_(k + 1, k) = up;
        sx_(k, k + 1) = up;
      }
    }
  }

  std::size_t N() const { return n_; }
  std::size_t dim() const { return n_ + 1; }
  const Eigen::MatrixXd& sx() const { return sx_; }
  const Eigen::MatrixXd& sz() const { return sz_; }

  /// i S_y as a real antisymmetric matrix, (S_+ - S_-)/2, from the ladder formula.
  Eigen::MatrixXd i_sy() const {
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    const double j = 0.5 * static_cast<double>(n_);
    for (Eigen::Index k = 0; k + 1 < d; ++k) {
      const double m = static_cast<double>(k) - j;
      const double c = 0.5 * std::sqrt(j * (j + 1.0) - m * (m + 1.0));
      out(k + 1, k) = c;   // S_+/2
      out(k, k + 1) = -c;  // -S_-/2
    }
    return out;
  }

  /// || [S_x, S_z] + i S_y ||_F; zero for a correct representation.
  double commutator_defect() const { return (sx_ * sz_ - sz_ * sx_ + i_sy()).norm(); }

  /// Casimir S_x^2 + S_y^2 + S_z^2.
  Eigen::MatrixXd casimir() const {
    const Eigen::MatrixXd isy = i_sy();
    return sx_ * sx_ - isy * isy + sz_ * sz_;
  }

 private:
  std::size_t n_;
  Eigen::MatrixXd sx_, sz_;
};

inline void check_cw(std::size_t n, double J, double B) {
  if (n == 0) throw std::invalid_argument("Curie-Weiss model needs N >= 1");
  if (!std::isfinite(J) || !std::isfinite(B)) throw std::invalid_argument("J and B must be finite");
}

/// Z2-symmetric bump on the magnetization variable m = 2k/N - 1. With `odd`
/// the mirror bump of opposite sign is added, making the flea Z2-odd.
struct SpinFlea {
  double b = 0.65;
  double c = 0.2;
  double d = 0.1;
  bool odd = false;

  double operator()(double m) const {
    double v = bump_profile(m - b, c, d);
    if (odd) v -= bump_profile(m + b, c, d);
    return v;
  }
};

/// The flea support must stay clear of the classical magnetizations +-sqrt(1 - (B/J)^2).
inline ValidityReport validate_spin_flea(const SpinFlea& f, double J, double B) {
  if (!(f.c > 0.0)) throw FleaError("flea half-width c must be positive (compact support)");
  ValidityReport r;
  const double ratio = std::min(std::abs(B / J), 1.0);
  const double zmin = std::sqrt(1.0 - ratio * ratio);
  std::vector<double> centers{f.b};
  if (f.odd) centers.push_back(-f.b);
  r.distance = INFINITY;
  for (double c : centers)
    for (double z : {zmin, -zmin}) r.distance = std::min(r.distance, std::abs(c - z) - f.c);
  r.support_clear = r.distance > 0.0;
  r.distance_ok = true;
  r.max_distance = INFINITY;
  r.message = r.support_clear ? "spin flea support clear of the classical minima"
                              : "spin flea support overlaps a classical minimum";
  return r;
}

/// H = -(J/2N)(sum sigma_3)^2 - B sum sigma_1 = -(2J/N) S_z^2 - 2B S_x (tridiagonal),
/// plus an optional diagonal flea.
inline SparseSymmetricOperator cw_hamiltonian(std::size_t n, double J, double B,
                                              const std::optional<SpinFlea>& flea = std::nullopt) {
  check_cw(n, J, B);
  const DickeSector s(n);
  std::vector<Triplet> t;
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double m = s.sz()(kk, kk);
    double diag = -(2.0 * J / nn) * m * m;
    if (flea) diag += (*flea)(2.0 * m / nn);
    t.push_back({k, k, diag});
    if (k < n) {
      const double off = -2.0 * B * s.sx()(kk + 1, kk);
      t.push_back({k, k + 1, off});
      t.push_back({k + 1, k, off});
    }
  }
  return SparseSymmetricOperator(n + 1, std::move(t));
}

/// Components of the expectation of 2S/N, plus <(2S_z/N)^2>.
struct MagnetizationPoint {
  double x = 0.0, y = 0.0, z = 0.0;
  double z2 = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool in_ball() const { return x * x + y * y + z * z <= 1.0 + 1e-8; }
};

struct CwGround {
  double energy = 0.0;
  std::vector<double> state;  // unit vector in the Dicke basis
  MagnetizationPoint magnetization;
  double gap = 0.0;
  bool degenerate = false;
};

inline MagnetizationPoint dicke_magnetization(const DickeSector& s, const std::vector<double>& v) {
  const Eigen::Map<const Eigen::VectorXd> psi(v.data(), static_cast<Eigen::Index>(v.size()));
  const double scale = 2.0 / static_cast<double>(s.N());
  MagnetizationPoint p;
  p.x = scale * psi.dot(s.sx() * psi);
  p.y = 0.0;  // <psi| S_y |psi> vanishes for real psi
  p.z = scale * psi.dot(s.sz() * psi);
  p.z2 = scale * scale * psi.dot(s.sz() * (s.sz() * psi));
  return p;
}

/// Ground state of the Curie-Weiss model. Without a flea the state is taken from
/// the spin-flip-even sector, where it is unique.
inline CwGround cw_ground(std::size_t n, double J, double B, const std::optional<SpinFlea>& flea = std::nullopt,
                          const SolverOptions& opt = {}) {
  if (flea) {
    const auto rep = validate_spin_flea(*flea, J, B);
    if (!rep.valid()) throw FleaError(rep.message);
  }
  const auto h = cw_hamiltonian(n, J, B, flea);
  const DickeSector s(n);
  CwGround g;
  SolverOptions o = opt;
  o.weight = 1.0;
  if (n == 1) {
    const auto spec = lowest_k(h, 1, o);
    g.energy = spec.eigenvalues[0];
    g.state = spec.eigenvectors[0];
  } else if (flea) {
    const auto spec = lowest_k(h, 2, o);
    g.energy = spec.eigenvalues[0];
    g.state = spec.eigenvectors[0];
    g.gap = spec.gap;
    g.degenerate = spec.degenerate[0];
  } else {
    const auto pair = parity_pair(h, Reflection::mirror(n + 1), o);
    const auto even = lowest_k_in_sector(h, Reflection::mirror(n + 1), Parity::Even, 1, o);
    g.energy = even.eigenvalues[0];
    g.state = even.eigenvectors[0];
    g.gap = pair.gap;
    g.degenerate = pair.degenerate[0];
  }
  g.magnetization = dicke_magnetization(s, g.state);
  return g;
}

/// Minimizers of -(J z^2/2 + B x) on the unit ball.
inline std::vector<MagnetizationPoint> cw_classical_minima(double J, double B) {
  if (!(J > 0.0) || !(B >= 0.0)) throw std::invalid_argument("classical minima need J > 0 and B >= 0");
  if (B >= J) return {{1.0, 0.0, 0.0, 0.0}};
  const double x = B / J, z = std::sqrt(1.0 - x * x);
  return {{x, 0.0, z, z * z}, {x, 0.0, -z, z * z}};
}

// ---------------------------------------------------------------------------
// Transverse-field Ising chain

enum class ChainBoundary { Periodic, Open };

inline std::string to_string(ChainBoundary b) { return b == ChainBoundary::Periodic ? "periodic" : "open"; }

struct IsingChain {
  std::size_t N = 8;
  double J = 1.0;
  double B = 0.5;
  double epsilon = 0.0;
  ChainBoundary bc = ChainBoundary::Periodic;
};

inline constexpr std::size_t ising_max_sites = 14;
inline constexpr double epsilon_floor = 1e-14;

inline void check_chain(const IsingChain& c) {
  if (c.N < 2 || c.N > ising_max_sites) throw std::invalid_argument("Ising chain needs 2 <= N <= 14");
  if (!std::isfinite(c.J) || !std::isfinite(c.B) || !std::isfinite(c.epsilon))
    throw std::invalid_argument("Ising couplings must be finite");
}

namespace detail {

// sigma_3 = +1 for a clear bit, -1 for a set bit
inline double sigma3(std::uint32_t s, std::size_t i) { return ((s >> i) & 1u) ? -1.0 : 1.0; }

inline double ising_diagonal(const IsingChain& c, std::uint32_t s, double eps) {
  double zz = 0.0, z = 0.0;
  const std::size_t bonds = c.bc == ChainBoundary::Periodic ? c.N : c.N - 1;
  for (std::size_t i = 0; i < bonds; ++i) zz += sigma3(s, i) * sigma3(s, (i + 1) % c.N);
  for (std::size_t i = 0; i < c.N; ++i) z += sigma3(s, i);
  return -c.J * zz + eps * z;
}

inline double effective_epsilon(double eps) { return std::abs(eps) < epsilon_floor ? 0.0 : eps; }

}  // namespace detail

/// H = -J sum sigma_3 sigma_3 - B sum sigma_1 + epsilon sum sigma_3 on the 2^N basis.
inline SparseSymmetricOperator ising_hamiltonian(const IsingChain& c) {
  check_chain(c);
  const double eps = detail::effective_epsilon(c.epsilon);
  const std::uint32_t dim = 1u << c.N;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(dim) * (c.N + 1));
  for (std::uint32_t s = 0; s < dim; ++s) {
    t.push_back({s, s, detail::ising_diagonal(c, s, eps)});
    if (c.B != 0.0)
      for (std::size_t i = 0; i < c.N; ++i) t.push_back({s, s ^ (1u << i), -c.B});
  }
  return SparseSymmetricOperator(dim, std::move(t));
}

/// Basis states grouped into orbits of the chain's site symmetries (cyclic shifts
/// and reflection for periodic chains, reflection for open chains). The Ising
/// Hamiltonian restricted to symmetric orbit sums contains the ground state when
/// B > 0, since the ground state is then unique with positive amplitudes.
struct SymmetricIsingSector {
  std::vector<std::uint32_t> reps;
  std::vector<std::size_t> orbit_size;
  std::vector<double> diag;  // diagonal energy without the epsilon term
  std::vector<double> mz;    // (1/N) sum sigma_3
  Eigen::MatrixXd hop;       // matrix of sum sigma_1 in the orbit basis

  explicit SymmetricIsingSector(const IsingChain& c) {
    check_chain(c);
    const std::size_t n = c.N;
    const std::uint32_t dim = 1u << n, mask = dim - 1u;
    auto reflect = [n](std::uint32_t s) {
      std::uint32_t r = 0;
      for (std::size_t i = 0; i < n; ++i)
        if ((s >> i) & 1u) r |= 1u << (n - 1 - i);
      return r;
    };
    auto rotate = [n, mask](std::uint32_t s) { return ((s << 1) | (s >> (n - 1))) & mask; };
    std::vector<std::int64_t> rep_of(dim, -1);
    for (std::uint32_t s = 0; s < dim; ++s) {
      if (rep_of[s] >= 0) continue;
      std::vector<std::uint32_t> orbit;
      auto add = [&](std::uint32_t t) {
        if (std::find(orbit.begin(), orbit.end(), t) == orbit.end()) orbit.push_back(t);
      };
      std::uint32_t t = s;
      const std::size_t shifts = c.bc == ChainBoundary::Periodic ? n : 1;
      for (std::size_t k = 0; k < shifts; ++k) {
        add(t);
        add(reflect(t));
        t = rotate(t);
      }
      const auto id = static_cast<std::int64_t>(reps.size());
      for (auto o : orbit) rep_of[o] = id;
      reps.push_back(s);
      orbit_size.push_back(orbit.size());
      diag.push_back(detail::ising_diagonal(c, s, 0.0));
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) z += detail::sigma3(s, i);
      mz.push_back(z / static_cast<double>(n));
    }
    const auto d = static_cast<Eigen::Index>(reps.size());
    hop = Eigen::MatrixXd::Zero(d, d);
    // <r'|X|r> = sqrt(L_r / L_r') * #{i : flip_i(r) in orbit r'}
    for (Eigen::Index a = 0; a < d; ++a) {
      const std::uint32_t r = reps[static_cast<std::size_t>(a)];
      std::map<std::int64_t, int> counts;
      for (std::size_t i = 0; i < n; ++i) ++counts[rep_of[r ^ (1u << i)]];
      for (const auto& [b, cnt] : counts)
        hop(b, a) = std::sqrt(static_cast<double>(orbit_size[static_cast<std::size_t>(a)]) /
                              static_cast<double>(orbit_size[static_cast<std::size_t>(b)])) * cnt;
    }
    hop = 0.5 * (hop + hop.transpose()).eval();
  }

  std::size_t dim() const { return reps.size(); }

  Eigen::MatrixXd hamiltonian(const IsingChain& c) const {
    const double eps = detail::effective_epsilon(c.epsilon);
    Eigen::MatrixXd h = -c.B * hop;
    for (std::size_t k = 0; k < dim(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      h(kk, kk) += diag[k] + eps * static_cast<double>(c.N) * mz[k];
    }
    return h;
  }
};

struct IsingGround {
  double energy = 0.0;
  double magnetization = 0.0;  // <(1/N) sum sigma_3>
  std::size_t sector_dim = 0;
};

inline IsingGround ising_ground(const IsingChain& c, const SymmetricIsingSector& sector) {
  if (!(c.B > 0.0)) throw std::invalid_argument("symmetric-sector ground state needs B > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sector.hamiltonian(c));
  if (es.info() != Eigen::Success) throw SolverError("dense sector diagonalization failed", {}, {});
  const Eigen::VectorXd v = es.eigenvectors().col(0);
  IsingGround g;
  g.energy = es.eigenvalues()(0);
  g.sector_dim = sector.dim();
  for (std::size_t k = 0; k < sector.dim(); ++k) g.magnetization += v(static_cast<Eigen::Index>(k)) * v(static_cast<Eigen::Index>(k)) * sector.mz[k];
  return g;
}

inline IsingGround ising_ground(const IsingChain& c) { return ising_ground(c, SymmetricIsingSector(c)); }

inline double ising_ground_magnetization(const IsingChain& c) { return ising_ground(c).magnetization; }

/// m(N, epsilon) table with trend summaries for the two orders of limits.
struct OrderOfLimits {
  std::vector<std::size_t> Ns;
  std::vector<double> epsilons;
  std::vector<std::vector<double>> m;         // m[i][j] at Ns[i], epsilons[j]
  std::vector<std::vector<double>> m_mirror;  // same at -epsilons[j]
  std::vector<bool> row_vanishes;             // |m| smallest at the smallest |epsilon| of the row
  std::vector<bool> column_nondecreasing;     // |m| nondecreasing in N
  double odd_defect = 0.0;                    // max |m(eps) + m(-eps)|
  bool sign_opposes_field = true;             // sign(m) = -sign(epsilon) wherever epsilon != 0
};

inline OrderOfLimits order_of_limits_scan(const std::vector<std::size_t>& Ns, const std::vector<double>& epsilons,
                                          double J, double B, ChainBoundary bc = ChainBoundary::Periodic) {
  if (Ns.empty() || epsilons.empty()) throw std::invalid_argument("scan lists must be nonempty");
  OrderOfLimits out;
  out.Ns = Ns;
  out.epsilons = epsilons;
  std::size_t smallest = 0;
  for (std::size_t j = 1; j < epsilons.size(); ++j)
    if (std::abs(epsilons[j]) < std::abs(epsilons[smallest])) smallest = j;
  for (std::size_t n : Ns) {
    IsingChain c{n, J, B, 0.0, bc};
    const SymmetricIsingSector sector(c);
    std::vector<double> row, mirror;
    for (double eps : epsilons) {
      c.epsilon = eps;
      row.push_back(ising_ground(c, sector).magnetization);
      c.epsilon = -eps;
      mirror.push_back(ising_ground(c, sector).magnetization);
      const double e = detail::effective_epsilon(eps);
      out.odd_defect = std::max(out.odd_defect, std::abs(row.back() + mirror.back()));
      if (e != 0.0 && !(row.back() * e < 0.0)) out.sign_opposes_field = false;
    }
    bool vanishes = true;
    for (double v : row)
      if (std::abs(v) < std::abs(row[smallest])) vanishes = false;
    out.row_vanishes.push_back(vanishes);
    out.m.push_back(std::move(row));
    out.m_mirror.push_back(std::move(mirror));
  }
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    bool ok = true;
    for (std::size_t i = 1; i < Ns.size(); ++i)
      if (std::abs(out.m[i][j]) < std::abs(out.m[i - 1][j])) ok = false;
    out.column_nondecreasing.push_back(ok);
  }
  return out;
}

}  // namespace ssb

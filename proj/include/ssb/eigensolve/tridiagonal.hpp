#pragma once

// Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for eigenvalues
// (any floating type, including boost multiprecision) and inverse iteration for
// eigenvectors in double precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace ssb::tridiag {

template <class Real>
struct Tridiagonal {
  std::vector<Real> diag;  // n entries
  std::vector<Real> off;   // n-1 entries, off[i] = T(i, i+1)

  std::size_t size() const { return diag.size(); }
};

template <class Real>
Real pivot_floor(const Tridiagonal<Real>& t) {
  using std::abs;
  Real emax = 1;
  for (const Real& e : t.off) emax = std::max<Real>(emax, e * e);
  return std::numeric_limits<Real>::min() * emax;
}

/// Number of eigenvalues strictly less than x.
template <class Real>
std::size_t sturm_count(const Tridiagonal<Real>& t, const Real& x, const Real& pivmin) {
  using std::abs;
  std::size_t count = 0;
  Real q = t.diag[0] - x;
  if (abs(q) <= pivmin) q = -pivmin;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < t.size(); ++i) {
    q = t.diag[i] - x - t.off[i - 1] * t.off[i - 1] / q;
    if (abs(q) <= pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

template <class Real>
std::pair<Real, Real> gershgorin(const Tridiagonal<Real>& t) {
  using std::abs;
  Real lo = t.diag[0], hi = t.diag[0];
  for (std::size_t i = 0; i < t.size(); ++i) {
    Real r = 0;
    if (i > 0) r += abs(t.off[i - 1]);
    if (i + 1 < t.size()) r += abs(t.off[i]);
    lo = std::min<Real>(lo, t.diag[i] - r);
    hi = std::max<Real>(hi, t.diag[i] + r);
  }
  const Real pad = (hi - lo) * std::numeric_limits<Real>::epsilon() * 4 + std::numeric_limits<Real>::min();
  return {lo - pad, hi + pad};
}

/// Eigenvalue with zero-based index j, bisected until the bracket cannot shrink further.
template <class Real>
Real bisect_eigenvalue(const Tridiagonal<Real>& t, std::size_t j, Real lo, Real hi, const Real& pivmin) {
  using std::abs;
  const Real eps = std::numeric_limits<Real>::epsilon();
  for (int iter = 0; iter < 4096; ++iter) {
    const Real mid = (lo + hi) / 2;
    if (!(mid > lo && mid < hi)) break;
    if (hi - lo <= 2 * eps * std::max<Real>(abs(lo), abs(hi)) + pivmin) break;
    if (sturm_count(t, mid, pivmin) <= j)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2;
}

/// The k smallest eigenvalues in ascending order.
template <class Real>
std::vector<Real> lowest_eigenvalues(const Tridiagonal<Real>& t, std::size_t k) {
  if (t.size() == 0 || t.off.size() + 1 != t.size()) throw std::invalid_argument("malformed tridiagonal matrix");
  if (k > t.size()) throw std::invalid_argument("requested more eigenvalues than the dimension");
  const Real pivmin = pivot_floor(t);
  auto [lo, hi] = gershgorin(t);
  std::vector<Real> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    // eigenvalue j lies above every eigenvalue found so far
    Real start = j == 0 ? lo : out.back() - (hi - lo) * std::numeric_limits<Real>::epsilon() * 4;
    if (start < lo) start = lo;
    out.push_back(bisect_eigenvalue(t, j, start, hi, pivmin));
  }
  return out;
}

/// Tridiagonal LU with partial pivoting of (T - lambda I).
class ShiftedLU {
 public:
  ShiftedLU(const Tridiagonal<double>& t, double lambda, double pivot_floor) {
    const std::size_t n = t.size();
    u_.assign(n, 0.0);
    s1_.assign(n, 0.0);
    s2_.assign(n, 0.0);
    l_.assign(n, 0.0);
    swap_.assign(n, false);
    std::vector<double> a(n), b(t.off.begin(), t.off.end());
    for (std::size_t i = 0; i < n; ++i) a[i] = t.diag[i] - lambda;
    b.push_back(0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double c = t.off[i];
      if (std::abs(a[i]) >= std::abs(c)) {
        double piv = a[i];
        if (std::abs(piv) < pivot_floor) piv = std::copysign(pivot_floor, piv == 0.0 ? 1.0 : piv);
        l_[i] = c / piv;
        u_[i] = piv;
        s1_[i] = b[i];
        s2_[i] = 0.0;
        a[i + 1] -= l_[i] * b[i];
      } else {
        swap_[i] = true;
        l_[i] = a[i] / c;
        u_[i] = c;
        s1_[i] = a[i + 1];
        s2_[i] = b[i + 1];
        const double next_a = b[i] - l_[i] * a[i + 1];
        b[i + 1] = -l_[i] * b[i + 1];
        a[i + 1] = next_a;
      }
    }
    double piv = a[n - 1];
    if (std::abs(piv) < pivot_floor) piv = std::copysign(pivot_floor, piv == 0.0 ? 1.0 : piv);
    u_[n - 1] = piv;
  }

  void solve(std::vector<double>& y) const {
    const std::size_t n = u_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swap_[i]) std::swap(y[i], y[i + 1]);
      y[i + 1] -= l_[i] * y[i];
    }
    y[n - 1] /= u_[n - 1];
    if (n >= 2) y[n - 2] = (y[n - 2] - s1_[n - 2] * y[n - 1]) / u_[n - 2];
    for (std::size_t i = n >= 3 ? n - 2 : 0; i-- > 0;) y[i] = (y[i] - s1_[i] * y[i + 1] - s2_[i] * y[i + 2]) / u_[i];
  }

 private:
  std::vector<double> u_, s1_, s2_, l_;
  std::vector<bool> swap_;
};

inline double one_norm(const Tridiagonal<double>& t) {
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double s = std::abs(t.diag[i]);
    if (i > 0) s += std::abs(t.off[i - 1]);
    if (i + 1 < t.size()) s += std::abs(t.off[i]);
    best = std::max(best, s);
  }
  return best;
}

inline void apply(const Tridiagonal<double>& t, const std::vector<double>& x, std::vector<double>& y) {
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = t.diag[i] * x[i];
    if (i > 0) acc += t.off[i - 1] * x[i - 1];
    if (i + 1 < n) acc += t.off[i] * x[i + 1];
    y[i] = acc;
  }
}

/// Eigenvectors (Euclidean unit norm) for ascending eigenvalues by inverse iteration.
/// Vectors in a cluster (eigenvalue spacing below 1e-3 |T|) are reorthogonalized.
inline std::vector<std::vector<double>> inverse_iteration(const Tridiagonal<double>& t, std::vector<double> lambdas,
                                                          std::uint64_t seed) {
  const std::size_t n = t.size();
  const double tnorm = std::max(one_norm(t), std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();
  const double ortol = 1e-3 * tnorm;
  const double floor = eps * tnorm;
  std::mt19937_64 gen(seed);
  auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };

  std::vector<std::vector<double>> vecs;
  std::size_t cluster_start = 0;
  std::vector<double> y(n), ty(n);
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (j > 0) {
      if (lambdas[j] - lambdas[j - 1] > ortol) cluster_start = j;
      const double sep = 10.0 * eps * std::max(std::abs(lambdas[j]), tnorm * eps);
      if (lambdas[j] - lambdas[j - 1] < sep) lambdas[j] = lambdas[j - 1] + sep;
    }
    ShiftedLU lu(t, lambdas[j], floor);
    for (auto& v : y) v = 2.0 * uniform() - 1.0;
    for (int iter = 0; iter < 6; ++iter) {
      lu.solve(y);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t c = cluster_start; c < j; ++c) {
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += vecs[c][i] * y[i];
          for (std::size_t i = 0; i < n; ++i) y[i] -= dot * vecs[c][i];
        }
      double nrm = 0.0;
      for (double v : y) nrm += v * v;
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0) || !std::isfinite(nrm)) throw std::runtime_error("inverse iteration broke down");
      for (auto& v : y) v /= nrm;
      apply(t, y, ty);
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res += (ty[i] - lambdas[j] * y[i]) * (ty[i] - lambdas[j] * y[i]);
      if (iter >= 1 && std::sqrt(res) <= 100.0 * eps * tnorm * std::sqrt(static_cast<double>(n))) break;
    }
    vecs.push_back(y);
  }
  return vecs;
}

}  // namespace ssb::tridiag

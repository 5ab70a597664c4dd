#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssb/eigensolve/krylov.hpp"
#include "ssb/eigensolve/tridiagonal.hpp"
#include "ssb/lattice.hpp"

namespace ssb {

inline constexpr std::uint64_t default_seed = 0x5EED;
inline constexpr double default_degeneracy_threshold = 1e-10;

/// Low-lying eigenpairs. Eigenvectors are grid functions normalized so that
/// weight * sum |v_i|^2 = 1; residuals are ||Hv - lambda v|| in the same norm.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
  std::vector<double> residuals;
  double weight = 1.0;
  double gap = 0.0;
  std::vector<bool> degenerate;  // degenerate[i]: eigenvalues i and i+1 within the default threshold

  std::size_t size() const { return eigenvalues.size(); }

  double inner(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (std::size_t a = 0; a < eigenvectors[i].size(); ++a) s += eigenvectors[i][a] * eigenvectors[j][a];
    return s * weight;
  }
};

struct SolverOptions {
  enum class Method { Auto, Tridiagonal, Krylov };
  Method method = Method::Auto;
  double tol = 1e-8;
  std::size_t max_restarts = 10000;
  std::ptrdiff_t block = 2;
  std::ptrdiff_t basis = 0;
  std::optional<double> shift;  // shift-invert about this value (must lie below the spectrum)
  double cg_tol = 1e-13;
  std::uint64_t seed = default_seed;
  double weight = 1.0;  // quadrature weight of one unknown
  bool vectors = true;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> values, std::vector<double> residuals)
      : std::runtime_error(what), values_(std::move(values)), residuals_(std::move(residuals)) {}
  const std::vector<double>& best_values() const { return values_; }
  const std::vector<double>& best_residuals() const { return residuals_; }

 private:
  std::vector<double> values_, residuals_;
};

namespace detail {

inline tridiag::Tridiagonal<double> to_tridiagonal(const SparseSymmetricOperator& op) {
  tridiag::Tridiagonal<double> t;
  const std::size_t n = op.dim();
  t.diag.resize(n);
  t.off.resize(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    t.diag[i] = op.at(i, i);
    if (i + 1 < n) t.off[i] = op.at(i, i + 1);
  }
  return t;
}

// Largest-magnitude entry made positive; near-ties (symmetric or antisymmetric
// states) resolve to the lowest index so the choice survives rounding.
inline void fix_phase(std::vector<double>& v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  std::size_t best = 0;
  while (best < v.size() && std::abs(v[best]) < (1.0 - 1e-6) * peak) ++best;
  if (best < v.size() && v[best] < 0.0)
    for (auto& x : v) x = -x;
}

inline double residual_norm(const SparseSymmetricOperator& op, const std::vector<double>& unit, double lambda) {
  const auto hv = op.apply(unit);
  double s = 0.0;
  for (std::size_t i = 0; i < unit.size(); ++i) s += (hv[i] - lambda * unit[i]) * (hv[i] - lambda * unit[i]);
  return std::sqrt(s);
}

// Converts unit-norm vectors to weighted normalization and certifies residuals.
inline Spectrum finish(const SparseSymmetricOperator& op, std::vector<double> values,
                       std::vector<std::vector<double>> unit, const SolverOptions& opt) {
  Spectrum s;
  s.weight = opt.weight;
  s.eigenvalues = std::move(values);
  if (opt.vectors) {
    const double scale = 1.0 / std::sqrt(opt.weight);
    for (auto& v : unit) {
      fix_phase(v);
      const double r = residual_norm(op, v, s.eigenvalues[s.residuals.size()]);
      s.residuals.push_back(r);
      for (auto& x : v) x *= scale;
    }
    s.eigenvectors = std::move(unit);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!(s.residuals[i] <= opt.tol * std::max(1.0, std::abs(s.eigenvalues[i])))) {
        std::ostringstream msg;
        msg << "eigenpair " << i << " residual " << s.residuals[i] << " exceeds tolerance";
        throw SolverError(msg.str(), s.eigenvalues, s.residuals);
      }
  }
  s.gap = s.size() >= 2 ? std::max(0.0, s.eigenvalues[1] - s.eigenvalues[0]) : 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    s.degenerate.push_back(s.eigenvalues[i + 1] - s.eigenvalues[i] <=
                           default_degeneracy_threshold * std::max(1.0, std::abs(s.eigenvalues[i])));
  return s;
}

inline Spectrum solve_tridiagonal(const SparseSymmetricOperator& op, std::size_t k, const SolverOptions& opt) {
  const auto t = to_tridiagonal(op);
  auto values = tridiag::lowest_eigenvalues(t, k);
  std::vector<std::vector<double>> vecs;
  if (opt.vectors) vecs = tridiag::inverse_iteration(t, values, opt.seed);
  return finish(op, std::move(values), std::move(vecs), opt);
}

inline Spectrum solve_krylov(const SparseSymmetricOperator& op, std::size_t k, const SolverOptions& opt) {
  using krylov::MatrixXd;
  using krylov::VectorXd;
  const auto n = static_cast<Eigen::Index>(op.dim());
  krylov::Options ko;
  ko.block = opt.block;
  ko.basis = opt.basis;
  ko.max_restarts = opt.max_restarts;
  ko.seed = opt.seed;

  auto apply_a = [&op](const VectorXd& x, VectorXd& y) {
    y.resize(x.size());
    op.apply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
             std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
  };

  krylov::BlockOp block_op;
  krylov::Certify certify;
  std::function<double(double)> to_lambda = [](double t) { return t; };

  if (!opt.shift) {
    block_op = [&](const MatrixXd& X, MatrixXd& Y) {
      Y.resize(X.rows(), X.cols());
      VectorXd y;
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        apply_a(X.col(j), y);
        Y.col(j) = y;
      }
    };
    certify = [&](const MatrixXd& X, const MatrixXd& AX, const VectorXd& theta, VectorXd& res) {
      std::vector<bool> ok(static_cast<std::size_t>(theta.size()));
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        res(j) = (AX.col(j) - theta(j) * X.col(j)).norm();
        ok[static_cast<std::size_t>(j)] = res(j) <= 0.5 * opt.tol * std::max(1.0, std::abs(theta(j)));
      }
      return ok;
    };
  } else {
    const double sigma = *opt.shift;
    const auto d = op.diagonal();
    const VectorXd diag = Eigen::Map<const VectorXd>(d.data(), n);
    block_op = [&, sigma, diag](const MatrixXd& X, MatrixXd& Y) {
      Y.resize(X.rows(), X.cols());
      VectorXd x;
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        krylov::conjugate_gradient(apply_a, diag, sigma, X.col(j), x, opt.cg_tol, 50 * static_cast<std::size_t>(n));
        Y.col(j) = -x;
      }
    };
    to_lambda = [sigma](double t) { return sigma - 1.0 / t; };
    certify = [&, to_lambda](const MatrixXd& X, const MatrixXd&, const VectorXd& theta, VectorXd& res) {
      std::vector<bool> ok(static_cast<std::size_t>(theta.size()));
      VectorXd ax;
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double lambda = to_lambda(theta(j));
        apply_a(X.col(j), ax);
        res(j) = (ax - lambda * X.col(j)).norm();
        ok[static_cast<std::size_t>(j)] = theta(j) < 0.0 && res(j) <= 0.5 * opt.tol * std::max(1.0, std::abs(lambda));
      }
      return ok;
    };
  }

  const auto r = krylov::smallest(block_op, n, static_cast<Eigen::Index>(k), ko, certify);
  std::vector<double> values(k);
  std::vector<std::vector<double>> vecs(k);
  for (std::size_t j = 0; j < k; ++j) {
    values[j] = to_lambda(r.theta(static_cast<Eigen::Index>(j)));
    const auto col = r.vectors.col(static_cast<Eigen::Index>(j));
    vecs[j].assign(col.data(), col.data() + n);
  }
  if (!r.converged) {
    std::vector<double> res(r.residuals.data(), r.residuals.data() + r.residuals.size());
    throw SolverError("Krylov iteration did not converge within the restart budget", values, res);
  }
  // Ritz values of the shift-inverted operator sort the wanted eigenvalues first as well
  std::vector<std::size_t> order(k);
  for (std::size_t j = 0; j < k; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> sv;
  std::vector<std::vector<double>> svec;
  for (auto j : order) {
    sv.push_back(values[j]);
    svec.push_back(std::move(vecs[j]));
  }
  SolverOptions fin = opt;
  fin.vectors = true;
  auto s = finish(op, std::move(sv), std::move(svec), fin);
  if (!opt.vectors) s.eigenvectors.clear();
  return s;
}

}  // namespace detail

/// The k lowest eigenpairs of a symmetric operator. Tridiagonal operators are solved
/// by bisection and inverse iteration, everything else by block Krylov-Schur.
inline Spectrum lowest_k(const SparseSymmetricOperator& op, std::size_t k, const SolverOptions& opt = {}) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (k > op.dim() || (k == op.dim() && !op.is_tridiagonal()))
    throw std::invalid_argument("k must be smaller than the operator dimension");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(opt.weight > 0.0)) throw std::invalid_argument("quadrature weight must be positive");
  auto method = opt.method;
  if (method == SolverOptions::Method::Auto)
    method = (op.is_tridiagonal() && !opt.shift) ? SolverOptions::Method::Tridiagonal : SolverOptions::Method::Krylov;
  if (method == SolverOptions::Method::Tridiagonal) {
    if (!op.is_tridiagonal()) throw std::invalid_argument("operator is not tridiagonal");
    return detail::solve_tridiagonal(op, k, opt);
  }
  return detail::solve_krylov(op, k, opt);
}

inline Spectrum lowest_k(const SparseSymmetricOperator& op, std::size_t k, double tol) {
  SolverOptions opt;
  opt.tol = tol;
  return lowest_k(op, k, opt);
}

/// True when eigenvalues `level` and `level + 1` are within rel_threshold * max(1, |E_level|).
inline bool degeneracy_check(const Spectrum& spec, double rel_threshold = default_degeneracy_threshold,
                             std::size_t level = 0) {
  if (spec.size() < level + 2) throw std::invalid_argument("degeneracy check needs two eigenvalues");
  const double e0 = spec.eigenvalues[level];
  return spec.eigenvalues[level + 1] - e0 <= rel_threshold * std::max(1.0, std::abs(e0));
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    sse += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

struct GapRow {
  double hbar = 0.0;
  double gap = 0.0;
  double e0 = 0.0;
  double e1 = 0.0;
};

/// Gap table with fits of ln(gap) against 1/hbar (exponential law) and against
/// ln(hbar) (power law). The exponential law is accepted when its R^2 reaches
/// `accept_r2` and exceeds the power-law R^2.
struct GapScaling {
  std::vector<GapRow> rows;
  std::optional<LinearFit> exponential;
  std::optional<LinearFit> power;
  bool exponential_accepted = false;
  std::string failure;  // nonempty when a solve failed; rows hold the partial table
};

using HamiltonianFactory = std::function<SparseSymmetricOperator(double hbar)>;

class GapScalingError : public std::runtime_error {
 public:
  GapScalingError(const std::string& what, GapScaling partial) : std::runtime_error(what), partial_(std::move(partial)) {}
  const GapScaling& partial() const { return partial_; }

 private:
  GapScaling partial_;
};

/// Fills the exponential and power-law fits of a gap table (needs two rows with positive gaps).
inline void fit_gap_table(GapScaling& out, double accept_r2 = 0.99) {
  out.exponential.reset();
  out.power.reset();
  out.exponential_accepted = false;
  if (out.rows.size() < 2) return;
  std::vector<double> inv, lnh, lng;
  for (const auto& r : out.rows) {
    if (!(r.gap > 0.0)) return;  // no logarithmic fit through a vanishing gap
    inv.push_back(1.0 / r.hbar);
    lnh.push_back(std::log(r.hbar));
    lng.push_back(std::log(r.gap));
  }
  out.exponential = least_squares(inv, lng);
  out.power = least_squares(lnh, lng);
  out.exponential_accepted = out.exponential->r2 >= accept_r2 && out.exponential->r2 > out.power->r2;
}

inline GapScaling gap_scaling(const std::vector<double>& hbars, const HamiltonianFactory& factory,
                              SolverOptions opt = {}, double accept_r2 = 0.99) {
  if (hbars.empty()) throw std::invalid_argument("gap scaling needs at least one hbar");
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!(hbars[i] > 0.0)) throw std::invalid_argument("hbar values must be positive");
    if (i > 0 && !(hbars[i] < hbars[i - 1])) throw std::invalid_argument("hbar values must be strictly descending");
  }
  GapScaling out;
  opt.vectors = false;
  for (double hb : hbars) {
    try {
      const auto spec = lowest_k(factory(hb), 2, opt);
      out.rows.push_back({hb, spec.gap, spec.eigenvalues[0], spec.eigenvalues[1]});
    } catch (const std::exception& e) {
      out.failure = e.what();
      throw GapScalingError(std::string("gap scaling failed at hbar=") + std::to_string(hb) + ": " + e.what(), out);
    }
  }
  fit_gap_table(out, accept_r2);
  return out;
}

}  // namespace ssb

#pragma once

// Block Krylov-Schur (thick-restart block Lanczos) for the smallest eigenpairs of a
// symmetric operator, with full CGS2 reorthogonalization, and a Jacobi-preconditioned
// conjugate-gradient solver for shift-invert.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace ssb::krylov {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Deterministic start block: uniforms in [-1, 1) from a 64-bit Mersenne twister.
inline MatrixXd random_block(Index n, Index b, std::mt19937_64& gen) {
  MatrixXd w(n, b);
  for (Index j = 0; j < b; ++j)
    for (Index i = 0; i < n; ++i) w(i, j) = 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
  return w;
}

/// Orthonormalizes the columns of W against V[:, :used] and against each other.
/// Columns that collapse are replaced by fresh random directions.
inline void orthonormalize(const MatrixXd& V, Index used, MatrixXd& W, std::mt19937_64& gen) {
  const Index n = W.rows();
  for (Index j = 0; j < W.cols(); ++j) {
    bool done = false;
    for (int attempt = 0; attempt < 4 && !done; ++attempt) {
      const double before = W.col(j).norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (used > 0) {
          const VectorXd c = V.leftCols(used).transpose() * W.col(j);
          W.col(j).noalias() -= V.leftCols(used) * c;
        }
        for (Index i = 0; i < j; ++i) W.col(j) -= W.col(i).dot(W.col(j)) * W.col(i);
      }
      const double after = W.col(j).norm();
      if (after > 1e-10 * before && after > 0.0) {
        W.col(j) /= after;
        done = true;
      } else {
        W.col(j) = random_block(n, 1, gen);
      }
    }
    if (!done) throw std::runtime_error("Krylov space exhausted while orthonormalizing");
  }
}

struct Options {
  Index block = 2;
  Index basis = 0;  // 0: automatic
  std::size_t max_restarts = 10000;
  std::uint64_t seed = 0x5EED;
};

struct Result {
  VectorXd theta;        // Ritz values of the iterated operator, ascending
  MatrixXd vectors;      // matching Ritz vectors, unit norm
  VectorXd residuals;    // as reported by the certification callback
  std::size_t restarts = 0;
  std::size_t applications = 0;
  bool converged = false;
};

/// Operator: Y = Op(X) for an n x b block.
using BlockOp = std::function<void(const MatrixXd&, MatrixXd&)>;

/// Certification: given Ritz vectors X, their images OX and Ritz values theta,
/// returns one residual per column and whether each column is converged.
using Certify = std::function<std::vector<bool>(const MatrixXd& X, const MatrixXd& OX, const VectorXd& theta,
                                                VectorXd& residuals)>;

inline Result smallest(const BlockOp& op, Index n, Index k, const Options& opt, const Certify& certify) {
  if (k < 1 || k > n) throw std::invalid_argument("invalid number of wanted eigenpairs");
  const Index b = std::max<Index>(1, std::min(opt.block, n));
  Index m = opt.basis > 0 ? opt.basis : std::max<Index>(64, 4 * k + 4 * b);
  m = std::min(n, std::max(m, k + 2 * b));

  std::mt19937_64 gen(opt.seed);
  MatrixXd V(n, m), AV(n, m), H = MatrixXd::Zero(m, m);
  MatrixXd W = random_block(n, b, gen);
  Index used = 0;
  Result out;

  for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
    while (used < m) {
      const Index bb = std::min(b, m - used);
      MatrixXd Wb = W.leftCols(std::min<Index>(bb, W.cols()));
      if (Wb.cols() < bb) {
        MatrixXd extra = random_block(n, bb - Wb.cols(), gen);
        MatrixXd joined(n, bb);
        joined << Wb, extra;
        Wb = joined;
      }
      orthonormalize(V, used, Wb, gen);
      V.middleCols(used, bb) = Wb;
      MatrixXd Y(n, bb);
      op(Wb, Y);
      out.applications += static_cast<std::size_t>(bb);
      AV.middleCols(used, bb) = Y;
      const MatrixXd cross = V.leftCols(used + bb).transpose() * Y;
      H.block(0, used, used + bb, bb) = cross;
      H.block(used, 0, bb, used + bb) = cross.transpose();
      used += bb;
      W = Y;
    }

    const MatrixXd Hs = 0.5 * (H.topLeftCorner(used, used) + H.topLeftCorner(used, used).transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Hs);
    if (eig.info() != Eigen::Success) throw std::runtime_error("projected eigenproblem failed");
    const VectorXd& theta = eig.eigenvalues();
    const MatrixXd& S = eig.eigenvectors();

    const MatrixXd X = V.leftCols(used) * S.leftCols(k);
    const MatrixXd OX = AV.leftCols(used) * S.leftCols(k);
    VectorXd res(k);
    const std::vector<bool> ok = certify(X, OX, theta.head(k), res);
    out.theta = theta.head(k);
    out.vectors = X;
    out.residuals = res;
    out.restarts = restart;
    const bool all = std::all_of(ok.begin(), ok.end(), [](bool v) { return v; });
    if (all || used == n) {
      out.converged = all;
      return out;
    }

    // residual block: component of the last images outside the current basis
    const Index last = std::min(b, used);
    W = AV.middleCols(used - last, last);
    for (int pass = 0; pass < 2; ++pass) {
      const MatrixXd c = V.leftCols(used).transpose() * W;
      W.noalias() -= V.leftCols(used) * c;
    }

    const Index keep = std::min(used - last, std::max(k + b, k + (m - k) / 2));
    const MatrixXd Vk = V.leftCols(used) * S.leftCols(keep);
    const MatrixXd AVk = AV.leftCols(used) * S.leftCols(keep);
    V.leftCols(keep) = Vk;
    AV.leftCols(keep) = AVk;
    H.setZero();
    H.topLeftCorner(keep, keep) = theta.head(keep).asDiagonal();
    used = keep;
  }
  return out;
}

struct CGStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (A - sigma I) x = b for symmetric positive definite A - sigma I.
/// `apply` computes y = A x; `diag` is the diagonal of A.
inline CGStats conjugate_gradient(const std::function<void(const VectorXd&, VectorXd&)>& apply,
                                  const VectorXd& diag, double sigma, const VectorXd& b, VectorXd& x,
                                  double rel_tol, std::size_t max_iter) {
  const Index n = b.size();
  VectorXd pinv(n);
  for (Index i = 0; i < n; ++i) {
    const double d = diag(i) - sigma;
    pinv(i) = d > 0.0 ? 1.0 / d : 1.0;
  }
  x.setZero(n);
  VectorXd r = b, z = pinv.cwiseProduct(r), p = z, q(n);
  double rz = r.dot(z);
  const double bnorm = b.norm();
  CGStats st;
  if (bnorm == 0.0) return st;
  for (std::size_t it = 0; it < max_iter; ++it) {
    apply(p, q);
    q -= sigma * p;
    const double pq = p.dot(q);
    if (!(pq > 0.0)) throw std::runtime_error("shift-invert: shifted operator is not positive definite");
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    st.iterations = it + 1;
    st.relative_residual = r.norm() / bnorm;
    if (st.relative_residual <= rel_tol) return st;
    z = pinv.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return st;
}

}  // namespace ssb::krylov

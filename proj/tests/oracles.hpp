#pragma once

// Brute-force references built from single-site Pauli matrices by Kronecker products.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::MatrixXd pauli_x() { return (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished(); }
inline Eigen::MatrixXd pauli_z() { return (Eigen::MatrixXd(2, 2) << 1, 0, 0, -1).finished(); }

/// sigma at `site` of an n-site chain (site 0 leftmost factor).
inline Eigen::MatrixXd site_op(const Eigen::MatrixXd& sigma, std::size_t site, std::size_t n) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
  for (std::size_t i = 0; i < n; ++i) out = kron(out, i == site ? sigma : Eigen::MatrixXd::Identity(2, 2));
  return out;
}

inline Eigen::MatrixXd total(const Eigen::MatrixXd& sigma, std::size_t n) {
  const auto d = Eigen::Index{1} << n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < n; ++i) out += site_op(sigma, i, n);
  return out;
}

/// -(J/2N) (sum sigma_3)^2 - B sum sigma_1 on the full 2^n space.
inline Eigen::MatrixXd curie_weiss(std::size_t n, double J, double B) {
  const Eigen::MatrixXd z = total(pauli_z(), n);
  return -(J / (2.0 * static_cast<double>(n))) * z * z - B * total(pauli_x(), n);
}

/// -J sum sigma_3 sigma_3 - B sum sigma_1 + eps sum sigma_3.
inline Eigen::MatrixXd ising(std::size_t n, double J, double B, double eps, bool periodic) {
  const auto d = Eigen::Index{1} << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  const std::size_t bonds = periodic ? n : n - 1;
  for (std::size_t i = 0; i < bonds; ++i) h -= J * site_op(pauli_z(), i, n) * site_op(pauli_z(), (i + 1) % n, n);
  h -= B * total(pauli_x(), n);
  h += eps * total(pauli_z(), n);
  return h;
}

inline double ground_energy(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// <(1/n) sum sigma_3> in the dense ground state.
inline double ising_magnetization(std::size_t n, double J, double B, double eps, bool periodic) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ising(n, J, B, eps, periodic));
  const Eigen::VectorXd v = es.eigenvectors().col(0);
  return v.dot(total(pauli_z(), n) * v) / static_cast<double>(n);
}

/// |<phi_qp, g>|^2 for g(x) = (pi s2)^{-1/4} exp(-x^2/2 s2) against width-hbar coherent states.
inline double gaussian_husimi(double q, double p, double s2, double hbar) {
  const double sum = s2 + hbar;
  return 2.0 * std::sqrt(s2 * hbar) / sum * std::exp(-q * q / sum - p * p * s2 / (hbar * sum));
}

}  // namespace oracle

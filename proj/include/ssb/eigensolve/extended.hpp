#pragma once

// Extended-precision tunnelling gaps for mirror-symmetric tridiagonal operators.
// The even and odd sectors are formed directly in the wide type, so splittings far
// below double-precision resolution remain measurable.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cstddef>
#include <stdexcept>

#include "ssb/eigensolve/tridiagonal.hpp"
#include "ssb/lattice.hpp"

namespace ssb {

using wide_real = boost::multiprecision::cpp_bin_float_100;

struct WideParityGap {
  wide_real even;  // ground energy of the even sector
  wide_real odd;   // ground energy of the odd sector
  wide_real gap() const { return odd - even; }
};

/// The operator is read from its first half (rows 0..ceil(n/2)-1) and treated as
/// exactly symmetric under i -> n-1-i.
inline WideParityGap parity_gap_extended(const SparseSymmetricOperator& op) {
  if (!op.is_tridiagonal()) throw std::invalid_argument("extended parity gap needs a tridiagonal operator");
  const std::size_t n = op.dim();
  if (n < 3) throw std::invalid_argument("operator too small for a parity split");
  const std::size_t half = n / 2;
  const wide_real root2 = boost::multiprecision::sqrt(wide_real(2));

  tridiag::Tridiagonal<wide_real> even, odd;
  for (std::size_t i = 0; i < half; ++i) {
    even.diag.push_back(wide_real(op.at(i, i)));
    odd.diag.push_back(wide_real(op.at(i, i)));
    if (i + 1 < half) {
      even.off.push_back(wide_real(op.at(i, i + 1)));
      odd.off.push_back(wide_real(op.at(i, i + 1)));
    }
  }
  if (n % 2 == 1) {
    // center node belongs to the even sector only
    even.off.push_back(root2 * wide_real(op.at(half - 1, half)));
    even.diag.push_back(wide_real(op.at(half, half)));
  } else {
    const wide_real c(op.at(half - 1, half));
    even.diag.back() += c;
    odd.diag.back() -= c;
  }
  return {tridiag::lowest_eigenvalues(even, 1)[0], tridiag::lowest_eigenvalues(odd, 1)[0]};
}

}  // namespace ssb

#ifndef STABLEREC_SVD_HPP
#define STABLEREC_SVD_HPP

#include "stablerec/linops.hpp"

namespace stablerec {

struct SvdResult {
  DenseMatrix u; // m x n, orthonormal columns
  Vector sigma;  // descending
  DenseMatrix v; // n x n, orthogonal
};

/// One-sided (Hestenes) Jacobi SVD of a tall or square matrix (m >= n).
SvdResult jacobi_svd(const DenseMatrix& a, int max_sweeps = 80);

} // namespace stablerec

#endif

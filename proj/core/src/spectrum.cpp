// LAPACK-backed spectra. zgesdd/zheevd are considerably faster than the
// built-in Eigen iterations at the 1024-dimensional cuts the larger runs hit.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "miptsim/linalg.hpp"

#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

namespace mipt {

std::vector<double> singular_values(const Matrix& m) {
  const lapack_int rows = static_cast<lapack_int>(m.rows());
  const lapack_int cols = static_cast<lapack_int>(m.cols());
  if (rows == 0 || cols == 0) return {};
  Matrix work = m;  // zgesdd destroys its input
  std::vector<double> sv(std::min(rows, cols));
  lapack_int info = LAPACKE_zgesdd(
      LAPACK_COL_MAJOR, 'N', rows, cols,
      reinterpret_cast<lapack_complex_double*>(work.data()), rows, sv.data(),
      nullptr, 1, nullptr, 1);
  if (info != 0) throw std::runtime_error("zgesdd failed");
  return sv;  // zgesdd returns singular values in descending order
}

std::vector<double> hermitian_eigenvalues(const Matrix& m) {
  const lapack_int n = static_cast<lapack_int>(m.rows());
  if (n == 0) return {};
  if (m.cols() != n) throw std::invalid_argument("hermitian_eigenvalues: not square");
  Matrix work = m;
  std::vector<double> ev(n);
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'N', 'L', n,
      reinterpret_cast<lapack_complex_double*>(work.data()), n, ev.data());
  if (info != 0) throw std::runtime_error("zheevd failed");
  std::reverse(ev.begin(), ev.end());
  return ev;
}

}  // namespace mipt

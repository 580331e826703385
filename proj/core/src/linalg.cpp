#include "miptsim/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace mipt {

Matrix sample_ginibre(RngStream& rng, int rows, int cols) {
  Matrix g(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) g(r, c) = rng.complex_normal(1.0);
  return g;
}

Matrix sample_haar_unitary(RngStream& rng, int dim) {
  if (dim < 1) throw std::invalid_argument("sample_haar_unitary: dim < 1");
  Matrix g = sample_ginibre(rng, dim, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < dim; ++k) {
    Complex rkk = r(k, k);
    double a = std::abs(rkk);
    Complex phase = (a > 0.0) ? rkk / a : Complex(1.0, 0.0);
    q.col(k) *= phase;
  }
  return q;
}

std::vector<Complex> sample_gaussian_tensor(RngStream& rng,
                                            const std::vector<int>& dims) {
  std::size_t total = 1;
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("sample_gaussian_tensor: dim < 1");
    total *= static_cast<std::size_t>(d);
  }
  std::vector<Complex> t(total);
  for (auto& v : t) v = rng.complex_normal(1.0);
  return t;
}

Matrix reshape_bipartition(std::span<const Complex> amps, int local_dim,
                           int sites, std::span<const int> left) {
  std::vector<char> in_left(sites, 0);
  for (int s : left) in_left[s] = 1;

  // per-site weights in the (row, col) = (left, rest) indexing
  std::vector<long> roww(sites, 0), colw(sites, 0);
  long nrow = 1, ncol = 1;
  for (int s = 0; s < sites; ++s) {
    if (in_left[s]) {
      roww[s] = nrow;
      nrow *= local_dim;
    } else {
      colw[s] = ncol;
      ncol *= local_dim;
    }
  }

  Matrix m(nrow, ncol);
  std::vector<int> digit(sites, 0);
  long row = 0, col = 0;
  for (std::size_t n = 0;; ++n) {
    m(row, col) = amps[n];
    if (n + 1 == amps.size()) break;
    for (int s = 0; s < sites; ++s) {  // odometer increment
      if (++digit[s] < local_dim) {
        row += roww[s];
        col += colw[s];
        break;
      }
      digit[s] = 0;
      row -= roww[s] * (local_dim - 1);
      col -= colw[s] * (local_dim - 1);
    }
  }
  return m;
}

std::vector<double> schmidt_spectrum(std::span<const Complex> amps,
                                     int local_dim, int sites,
                                     std::span<const int> left) {
  double norm2 = 0.0;
  for (const auto& a : amps) norm2 += std::norm(a);
  if (std::abs(norm2 - 1.0) > 1e-8)
    throw std::invalid_argument("schmidt_spectrum: state not normalized");

  Matrix m = reshape_bipartition(amps, local_dim, sites, left);
  std::vector<double> sv = singular_values(m);
  std::vector<double> probs(sv.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    probs[i] = sv[i] * sv[i];
    sum += probs[i];
  }
  // guard against numerical drift in the SVD itself
  if (sum > 0.0)
    for (auto& p : probs) p /= sum;
  return probs;
}

double renyi_entropy_from_spectrum(std::span<const double> probs, double n) {
  constexpr double clamp = 1e-14;
  if (n < 1.0) throw std::invalid_argument("renyi index must be >= 1");
  if (n == 1.0) {
    double s = 0.0;
    for (double p : probs)
      if (p > clamp) s -= p * std::log(p);
    return std::max(s, 0.0);
  }
  double t = 0.0;
  for (double p : probs)
    if (p > clamp) t += std::pow(p, n);
  return std::log(t) / (1.0 - n);
}

}  // namespace mipt

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "miptsim/rng.hpp"

namespace mipt {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// matrix with i.i.d. entries ~ CN(0,1)
Matrix sample_ginibre(RngStream& rng, int rows, int cols);

// Haar-distributed d x d unitary: QR of a Ginibre matrix with the diagonal
// of R rotated to be real positive (makes the decomposition unique).
Matrix sample_haar_unitary(RngStream& rng, int dim);

// flattened tensor of i.i.d. CN(0,1) entries, one leg per entry of dims
std::vector<Complex> sample_gaussian_tensor(RngStream& rng,
                                            const std::vector<int>& dims);

// Amplitude vector reshaped to a matrix with rows indexing the sites in
// `left` and columns the rest. Sites are indexed little-endian (site s has
// stride local_dim^s).
Matrix reshape_bipartition(std::span<const Complex> amps, int local_dim,
                           int sites, std::span<const int> left);

// Entanglement spectrum of a normalized amplitude vector across the cut
// (sites in `left`) vs rest: squared singular values of the reshaped
// amplitude matrix, sorted descending, summing to 1. Throws
// std::invalid_argument on an unnormalized input.
std::vector<double> schmidt_spectrum(std::span<const Complex> amps,
                                     int local_dim, int sites,
                                     std::span<const int> left);

// singular values of m, descending (LAPACK zgesdd)
std::vector<double> singular_values(const Matrix& m);

// eigenvalues of a Hermitian matrix, descending (LAPACK zheevd)
std::vector<double> hermitian_eigenvalues(const Matrix& m);

// Renyi entropy of a probability spectrum in nats; n = 1 is von Neumann.
// Entries below 1e-14 are excluded.
double renyi_entropy_from_spectrum(std::span<const double> probs, double n);

}  // namespace mipt

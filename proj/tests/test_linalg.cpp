#include <doctest.h>

#include <cmath>
#include <complex>

#include "miptsim/linalg.hpp"
#include "miptsim/rng.hpp"

using namespace mipt;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

struct MeanVar {
  double mean, se;
};

MeanVar mc_stats(const std::vector<double>& xs) {
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (xs.size() - 1);
  return {mean, std::sqrt(var / xs.size())};
}

}  // namespace

TEST_CASE("haar unitary: unitarity at machine precision") {
  RngStream rng(42, 0);
  for (int d : {1, 2, 3, 4}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix u = sample_haar_unitary(rng, d);
      const Matrix err = u.adjoint() * u - Matrix::Identity(d, d);
      CHECK(max_abs(err) < 1e-12);
    }
  }
  // d = 1 is a pure phase
  const Matrix u1 = sample_haar_unitary(rng, 1);
  CHECK(std::abs(std::abs(u1(0, 0)) - 1.0) < 1e-12);
}

TEST_CASE("haar unitary: first moment E|U00|^2 = 1/d") {
  RngStream rng(7, 0);
  const int n = 10000;
  std::vector<double> xs(n);
  for (int k = 0; k < n; ++k) {
    const Matrix u = sample_haar_unitary(rng, 2);
    xs[k] = std::norm(u(0, 0));
  }
  const auto [mean, se] = mc_stats(xs);
  CHECK(std::abs(mean - 0.5) < 5 * se);
}

TEST_CASE("haar unitary: left invariance of the first moment") {
  RngStream vs(99, 1);
  const Matrix v = sample_haar_unitary(vs, 2);
  RngStream rng(7, 2);
  const int n = 10000;
  std::vector<double> xs(n), ys(n);
  for (int k = 0; k < n; ++k) {
    const Matrix u = sample_haar_unitary(rng, 2);
    xs[k] = std::norm(u(0, 0));
    ys[k] = std::norm((v * u)(0, 0));
  }
  const auto [mx, sx] = mc_stats(xs);
  const auto [my, sy] = mc_stats(ys);
  CHECK(std::abs(mx - my) < 5 * std::sqrt(sx * sx + sy * sy));
}

TEST_CASE("rng determinism and stream independence") {
  RngStream a(123, 5), b(123, 5), c(123, 6);
  bool identical = true, differs = false;
  for (int k = 0; k < 100; ++k) {
    const double x = a.uniform(), y = b.uniform(), z = c.uniform();
    identical = identical && (x == y);
    differs = differs || (x != z);
  }
  CHECK(identical);
  CHECK(differs);

  RngStream r1(77, 3), r2(77, 3);
  const Matrix u1 = sample_haar_unitary(r1, 4);
  const Matrix u2 = sample_haar_unitary(r2, 4);
  CHECK(max_abs(u1 - u2) == 0.0);  // bit-identical
}

TEST_CASE("gaussian tensor: zero mean, unit variance, delta correlations") {
  RngStream rng(11, 0);
  const int n = 100000;
  std::vector<double> re(n), im(n), abs2(n), cross_re(n);
  for (int k = 0; k < n; ++k) {
    const auto t = sample_gaussian_tensor(rng, {2, 2});
    re[k] = t[0].real();
    im[k] = t[0].imag();
    abs2[k] = std::norm(t[1]);
    const Complex c = std::conj(t[2]) * t[3];
    cross_re[k] = c.real();
  }
  const auto [m_re, se_re] = mc_stats(re);
  const auto [m_im, se_im] = mc_stats(im);
  const auto [m_a2, se_a2] = mc_stats(abs2);
  const auto [m_x, se_x] = mc_stats(cross_re);
  CHECK(std::abs(m_re) < 5 * se_re);
  CHECK(std::abs(m_im) < 5 * se_im);
  CHECK(std::abs(m_a2 - 1.0) < 5 * se_a2);
  CHECK(std::abs(m_x) < 5 * se_x);
}

TEST_CASE("schmidt spectrum: bell, product, normalization") {
  // two-qubit Bell state cut between the qubits
  std::vector<Complex> bell = {1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)};
  const int left[] = {0};
  auto spec = schmidt_spectrum(bell, 2, 2, left);
  REQUIRE(spec.size() == 2);
  CHECK(spec[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(spec[1] == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<Complex> prod = {1.0, 0.0, 0.0, 0.0};  // |00>
  spec = schmidt_spectrum(prod, 2, 2, left);
  CHECK(spec[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spec[1] == doctest::Approx(0.0).epsilon(1e-12));

  // random 3-qubit state: any cut sums to 1
  RngStream rng(5, 0);
  std::vector<Complex> amps(8);
  double n2 = 0;
  for (auto& a : amps) {
    a = rng.complex_normal();
    n2 += std::norm(a);
  }
  for (auto& a : amps) a /= std::sqrt(n2);
  for (auto cut : {std::vector<int>{0}, {1}, {0, 2}}) {
    const auto s = schmidt_spectrum(amps, 2, 3, cut);
    double sum = 0;
    for (double p : s) sum += p;
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
}

TEST_CASE("schmidt spectrum rejects unnormalized input") {
  std::vector<Complex> amps = {2.0, 0.0, 0.0, 0.0};
  const int left[] = {0};
  CHECK_THROWS_AS(schmidt_spectrum(amps, 2, 2, left), std::invalid_argument);
}

TEST_CASE("renyi entropy from spectrum") {
  const std::vector<double> flat = {0.5, 0.5};
  for (double n : {1.0, 2.0, 3.0, 7.5})
    CHECK(renyi_entropy_from_spectrum(flat, n) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const std::vector<double> pure = {1.0, 0.0};
  CHECK(renyi_entropy_from_spectrum(pure, 1.0) == doctest::Approx(0.0));
  // clamped tail does not contribute
  const std::vector<double> tiny = {1.0 - 1e-16, 1e-16};
  CHECK(renyi_entropy_from_spectrum(tiny, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

#include "miptsim/state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mipt {

namespace {

long ipow(int base, int exp) {
  long r = 1;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

constexpr std::size_t kMaxAmplitudes = std::size_t(1) << 26;  // hard safety rail

}  // namespace

// --- Region ----------------------------------------------------------------

Region::Region(std::vector<int> sites) : sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end());
  auto dup = std::adjacent_find(sites_.begin(), sites_.end());
  if (dup != sites_.end()) throw std::invalid_argument("Region: duplicate site");
}

Region Region::contiguous(int first, int count, int sites) {
  std::vector<int> s(count);
  for (int k = 0; k < count; ++k) s[k] = (first + k) % sites;
  return Region(std::move(s));
}

bool Region::contains(int s) const {
  return std::binary_search(sites_.begin(), sites_.end(), s);
}

Region Region::complement(int total_sites) const {
  std::vector<int> s;
  s.reserve(total_sites - size());
  for (int k = 0; k < total_sites; ++k)
    if (!contains(k)) s.push_back(k);
  return Region(std::move(s));
}

Region Region::united(const Region& other) const {
  std::vector<int> s;
  std::set_union(sites_.begin(), sites_.end(), other.sites_.begin(),
                 other.sites_.end(), std::back_inserter(s));
  return Region(std::move(s));
}

void Region::check_bounds(int total_sites) const {
  for (int s : sites_)
    if (s < 0 || s >= total_sites)
      throw std::invalid_argument("Region: site out of range");
}

// --- PureState ---------------------------------------------------------------

PureState::PureState(int local_dim, int sites) : d_(local_dim), sites_(sites) {
  if (local_dim < 2) throw std::invalid_argument("PureState: local_dim < 2");
  if (sites < 1) throw std::invalid_argument("PureState: sites < 1");
  std::size_t n = 1;
  for (int k = 0; k < sites; ++k) {
    n *= static_cast<std::size_t>(local_dim);
    if (n > kMaxAmplitudes) throw std::invalid_argument("PureState: register too large");
  }
  amps_.assign(n, Complex(0.0, 0.0));
  amps_[0] = Complex(1.0, 0.0);
}

double PureState::norm_sq() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

void PureState::renormalize() {
  const double n2 = norm_sq();
  if (n2 < kAnnihilationNorm) throw StateAnnihilated();
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& a : amps_) a *= inv;
  log_weight_ += std::log(n2);
}

void PureState::assert_normalized(double tol) const {
  if (std::abs(norm_sq() - 1.0) > tol)
    throw std::invalid_argument("state not normalized");
}

// --- DensityState ------------------------------------------------------------

DensityState::DensityState(int local_dim, int sites)
    : d_(local_dim), sites_(sites) {
  const long n = ipow(local_dim, sites);
  if (n > (1 << 13)) throw std::invalid_argument("DensityState: register too large");
  rho_ = Matrix::Zero(n, n);
  rho_(0, 0) = 1.0;
}

DensityState DensityState::maximally_mixed(int local_dim, int sites) {
  DensityState s(local_dim, sites);
  const long n = s.rho_.rows();
  s.rho_ = Matrix::Identity(n, n) / static_cast<double>(n);
  return s;
}

double DensityState::trace_real() const { return rho_.trace().real(); }

void DensityState::renormalize() {
  const double tr = trace_real();
  if (tr < kAnnihilationNorm) throw StateAnnihilated();
  rho_ /= tr;
  log_weight_ += std::log(tr);
}

// --- two-site gate kernels ---------------------------------------------------

namespace {

// Permute the gate so that the site pair can be applied as (j, i).
Matrix transpose_pair_roles(const Matrix& gate, int d) {
  const int d2 = d * d;
  Matrix g(d2, d2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e)
          g(b * d + a, e * d + c) = gate(a * d + b, c * d + e);
  return g;
}

// d = 2 fast path; g row-major 4x4, sites i < j, n = total amplitudes
void gate2_qubit(Complex* a, long n, int i, int j, const Complex* g) {
  const long si = 1L << i, sj = 1L << j;
  const long outer = n >> (j + 1), mid = sj >> (i + 1);
  for (long r2 = 0; r2 < outer; ++r2) {
    const long base2 = r2 << (j + 1);
    for (long r1 = 0; r1 < mid; ++r1) {
      const long base = base2 + (r1 << (i + 1));
      Complex* p0 = a + base;
      Complex* p1 = p0 + sj;
      Complex* p2 = p0 + si;
      Complex* p3 = p0 + si + sj;
#pragma GCC ivdep
      for (long r0 = 0; r0 < si; ++r0) {
        const Complex v0 = p0[r0], v1 = p1[r0], v2 = p2[r0], v3 = p3[r0];
        p0[r0] = g[0] * v0 + g[1] * v1 + g[2] * v2 + g[3] * v3;
        p1[r0] = g[4] * v0 + g[5] * v1 + g[6] * v2 + g[7] * v3;
        p2[r0] = g[8] * v0 + g[9] * v1 + g[10] * v2 + g[11] * v3;
        p3[r0] = g[12] * v0 + g[13] * v1 + g[14] * v2 + g[15] * v3;
      }
    }
  }
}

// generic qudit path, sites i < j
void gate2_generic(Complex* a, long n, int d, int i, int j, const Complex* g) {
  const long si = ipow(d, i), sj = ipow(d, j);
  const long outer = n / (sj * d), mid = sj / (si * d);
  const int d2 = d * d;
  Complex v[64], w[64];
  for (long r2 = 0; r2 < outer; ++r2) {
    const long base2 = r2 * sj * d;
    for (long r1 = 0; r1 < mid; ++r1) {
      const long base1 = base2 + r1 * si * d;
      for (long r0 = 0; r0 < si; ++r0) {
        Complex* p = a + base1 + r0;
        for (int ai = 0; ai < d; ++ai)
          for (int bj = 0; bj < d; ++bj) v[ai * d + bj] = p[ai * si + bj * sj];
        for (int k = 0; k < d2; ++k) {
          Complex acc(0.0, 0.0);
          const Complex* row = g + static_cast<long>(k) * d2;
          for (int l = 0; l < d2; ++l) acc += row[l] * v[l];
          w[k] = acc;
        }
        for (int ai = 0; ai < d; ++ai)
          for (int bj = 0; bj < d; ++bj) p[ai * si + bj * sj] = w[ai * d + bj];
      }
    }
  }
}

void gate2_flat(Complex* a, long n, int d, int i, int j, const Complex* g) {
  if (d == 2)
    gate2_qubit(a, n, i, j, g);
  else
    gate2_generic(a, n, d, i, j, g);
}

// single-site operator, stride form
void gate1_flat(Complex* a, long n, int d, int site, const Complex* k) {
  const long si = ipow(d, site);
  const long outer = n / (si * d);
  Complex v[8], w[8];
  if (d == 2) {
    const Complex k00 = k[0], k01 = k[1], k10 = k[2], k11 = k[3];
    for (long r1 = 0; r1 < outer; ++r1) {
      Complex* p0 = a + r1 * si * 2;
      Complex* p1 = p0 + si;
#pragma GCC ivdep
      for (long r0 = 0; r0 < si; ++r0) {
        const Complex v0 = p0[r0], v1 = p1[r0];
        p0[r0] = k00 * v0 + k01 * v1;
        p1[r0] = k10 * v0 + k11 * v1;
      }
    }
    return;
  }
  for (long r1 = 0; r1 < outer; ++r1) {
    const long base = r1 * si * d;
    for (long r0 = 0; r0 < si; ++r0) {
      Complex* p = a + base + r0;
      for (int x = 0; x < d; ++x) v[x] = p[x * si];
      for (int x = 0; x < d; ++x) {
        Complex acc(0.0, 0.0);
        for (int y = 0; y < d; ++y) acc += k[x * d + y] * v[y];
        w[x] = acc;
      }
      for (int x = 0; x < d; ++x) p[x * si] = w[x];
    }
  }
}

void check_pair(const PureState& s, int i, int j) {
  if (i == j) throw std::invalid_argument("two-site gate: i == j");
  if (i < 0 || j < 0 || i >= s.sites() || j >= s.sites())
    throw std::invalid_argument("two-site gate: site out of range");
}

}  // namespace

void apply_two_site_gate(PureState& state, int i, int j, const Matrix& gate) {
  check_pair(state, i, j);
  const int d = state.local_dim();
  if (gate.rows() != d * d || gate.cols() != d * d)
    throw std::invalid_argument("two-site gate: dimension mismatch");
  Complex* a = state.amplitudes().data();
  const long n = static_cast<long>(state.dim());
  if (i < j) {
    Matrix g = gate.transpose();  // row-major view of the same operator
    gate2_flat(a, n, d, i, j, g.data());
  } else {
    Matrix g = transpose_pair_roles(gate, d).transpose();
    gate2_flat(a, n, d, j, i, g.data());
  }
}

void apply_two_site_gate(DensityState& state, int i, int j, const Matrix& gate) {
  const int d = state.local_dim();
  if (i == j || i < 0 || j < 0 || i >= state.sites() || j >= state.sites())
    throw std::invalid_argument("two-site gate: bad sites");
  if (gate.rows() != d * d || gate.cols() != d * d)
    throw std::invalid_argument("two-site gate: dimension mismatch");

  int lo = i, hi = j;
  Matrix base = gate;
  if (i > j) {
    base = transpose_pair_roles(gate, d);
    lo = j;
    hi = i;
  }
  Matrix grow = base.transpose();  // row-major of operator for column kernel

  Matrix& rho = state.matrix();
  const long n = rho.rows();
  // left: G rho, columnwise
  for (long c = 0; c < n; ++c)
    gate2_flat(rho.col(c).data(), n, d, lo, hi, grow.data());

  // right: (G rho) G^dag -- linear combinations of whole columns
  const long si = ipow(d, lo), sj = ipow(d, hi);
  const long outer = n / (sj * d), mid = sj / (si * d);
  const int d2 = d * d;
  Matrix gconj = base.conjugate();
  Matrix buf(n, d2);
  std::vector<long> cols(d2);
  for (long r2 = 0; r2 < outer; ++r2) {
    for (long r1 = 0; r1 < mid; ++r1) {
      const long cbase = r2 * sj * d + r1 * si * d;
      for (long r0 = 0; r0 < si; ++r0) {
        for (int ai = 0; ai < d; ++ai)
          for (int bj = 0; bj < d; ++bj)
            cols[ai * d + bj] = cbase + r0 + ai * si + bj * sj;
        for (int k = 0; k < d2; ++k) buf.col(k) = rho.col(cols[k]);
        for (int k = 0; k < d2; ++k) {
          auto out = rho.col(cols[k]);
          out = gconj(k, 0) * buf.col(0);
          for (int l = 1; l < d2; ++l) out += gconj(k, l) * buf.col(l);
        }
      }
    }
  }
}

// --- Kraus and measurement ---------------------------------------------------

void apply_site_kraus(PureState& state, int site, const Matrix& k) {
  const int d = state.local_dim();
  if (site < 0 || site >= state.sites())
    throw std::invalid_argument("site kraus: site out of range");
  if (k.rows() != d || k.cols() != d)
    throw std::invalid_argument("site kraus: dimension mismatch");
  Matrix krow = k.transpose();
  gate1_flat(state.amplitudes().data(), static_cast<long>(state.dim()), d, site,
             krow.data());
  state.renormalize();
}

void apply_site_kraus(DensityState& state, int site, const Matrix& k) {
  const int d = state.local_dim();
  if (site < 0 || site >= state.sites())
    throw std::invalid_argument("site kraus: site out of range");
  if (k.rows() != d || k.cols() != d)
    throw std::invalid_argument("site kraus: dimension mismatch");
  Matrix& rho = state.matrix();
  const long n = rho.rows();
  Matrix krow = k.transpose();
  for (long c = 0; c < n; ++c)
    gate1_flat(rho.col(c).data(), n, d, site, krow.data());
  // rho K^dag via column combinations
  const long si = ipow(d, site);
  const long outer = n / (si * d);
  Matrix kconj = k.conjugate();
  Matrix buf(n, d);
  for (long r1 = 0; r1 < outer; ++r1) {
    const long cbase = r1 * si * d;
    for (long r0 = 0; r0 < si; ++r0) {
      for (int x = 0; x < d; ++x) buf.col(x) = rho.col(cbase + r0 + x * si);
      for (int x = 0; x < d; ++x) {
        auto out = rho.col(cbase + r0 + x * si);
        out = kconj(x, 0) * buf.col(0);
        for (int y = 1; y < d; ++y) out += kconj(x, y) * buf.col(y);
      }
    }
  }
  state.renormalize();
}

namespace {

// keep-flag walker: true iff every flagged site holds digit 0
template <typename Fn>
void walk_kept(long n, int d, int sites, std::span<const std::uint8_t> flags, Fn&& fn) {
  std::vector<int> digit(sites, 0);
  int violations = 0;
  for (long idx = 0;; ++idx) {
    fn(idx, violations == 0);
    if (idx + 1 == n) break;
    for (int s = 0; s < sites; ++s) {
      if (++digit[s] < d) {
        if (flags[s] && digit[s] == 1) ++violations;
        break;
      }
      digit[s] = 0;
      if (flags[s]) --violations;
    }
  }
}

}  // namespace

void forced_project_zero(PureState& state, std::span<const std::uint8_t> flags) {
  const int d = state.local_dim();
  const long n = static_cast<long>(state.dim());
  Complex* a = state.amplitudes().data();
  bool any = false;
  for (int s = 0; s < state.sites(); ++s) any = any || flags[s];
  if (!any) return;

  double kept = 0.0;
  if (d == 2) {
    std::uint64_t mask = 0;
    for (int s = 0; s < state.sites(); ++s)
      if (flags[s]) mask |= (std::uint64_t(1) << s);
    for (long idx = 0; idx < n; ++idx) {
      if (static_cast<std::uint64_t>(idx) & mask)
        a[idx] = Complex(0.0, 0.0);
      else
        kept += std::norm(a[idx]);
    }
  } else {
    walk_kept(n, d, state.sites(), flags, [&](long idx, bool keep) {
      if (keep)
        kept += std::norm(a[idx]);
      else
        a[idx] = Complex(0.0, 0.0);
    });
  }
  if (kept < kAnnihilationNorm) throw StateAnnihilated();
  const double inv = 1.0 / std::sqrt(kept);
  for (long idx = 0; idx < n; ++idx) a[idx] *= inv;
  state.add_log_weight(std::log(kept));
}

void forced_project_zero(DensityState& state, std::span<const std::uint8_t> flags) {
  const int d = state.local_dim();
  Matrix& rho = state.matrix();
  const long n = rho.rows();
  bool any = false;
  for (int s = 0; s < state.sites(); ++s) any = any || flags[s];
  if (!any) return;

  std::vector<std::uint8_t> keep(n, 0);
  walk_kept(n, d, state.sites(), flags,
            [&](long idx, bool k) { keep[idx] = k ? 1 : 0; });
  double tr = 0.0;
  for (long c = 0; c < n; ++c) {
    if (keep[c]) {
      for (long r = 0; r < n; ++r)
        if (!keep[r]) rho(r, c) = Complex(0.0, 0.0);
      tr += rho(c, c).real();
    } else {
      rho.col(c).setZero();
    }
  }
  if (tr < kAnnihilationNorm) throw StateAnnihilated();
  rho /= tr;
  state.add_log_weight(std::log(tr));
}

BornOutcome born_measure_site(PureState& state, int site, RngStream& rng) {
  const int d = state.local_dim();
  const long n = static_cast<long>(state.dim());
  const long si = ipow(d, site);
  Complex* a = state.amplitudes().data();

  std::vector<double> probs(d, 0.0);
  const long outer = n / (si * d);
  for (long r1 = 0; r1 < outer; ++r1) {
    const long base = r1 * si * d;
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      const Complex* p = a + base + k * si;
      for (long r0 = 0; r0 < si; ++r0) acc += std::norm(p[r0]);
      probs[k] += acc;
    }
  }
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = rng.uniform() * total;
  int outcome = 0;
  double cum = 0.0;
  for (int k = 0; k < d; ++k) {
    cum += probs[k];
    if (u < cum || k == d - 1) {
      outcome = k;
      break;
    }
  }
  while (probs[outcome] <= 0.0 && outcome > 0) --outcome;  // rounding guard
  if (probs[outcome] < kAnnihilationNorm) throw StateAnnihilated();

  const double inv = 1.0 / std::sqrt(probs[outcome]);
  for (long r1 = 0; r1 < outer; ++r1) {
    const long base = r1 * si * d;
    for (int k = 0; k < d; ++k) {
      Complex* p = a + base + k * si;
      if (k == outcome) {
        for (long r0 = 0; r0 < si; ++r0) p[r0] *= inv;
      } else {
        for (long r0 = 0; r0 < si; ++r0) p[r0] = Complex(0.0, 0.0);
      }
    }
  }
  return {outcome, std::log(probs[outcome] / total)};
}

void apply_diagonal_sweep(PureState& state, std::span<const double> weights,
                          int limit_sites) {
  const int d = state.local_dim();
  if (static_cast<int>(weights.size()) != d)
    throw std::invalid_argument("diagonal sweep: weights size != d");
  const int sites = state.sites();
  if (limit_sites < 0 || limit_sites > sites) limit_sites = sites;
  bool trivial = true;
  for (double w : weights) trivial = trivial && (w == 1.0);
  if (trivial || limit_sites == 0) return;

  const int lo_sites = sites / 2;
  const long nlo = ipow(d, lo_sites), nhi = ipow(d, sites - lo_sites);
  auto build = [&](long count, int first_site, int nsites) {
    std::vector<double> tab(count);
    tab[0] = 1.0;
    long len = 1;
    for (int s = first_site; s < first_site + nsites; ++s) {
      const bool active = s < limit_sites;
      for (int k = d - 1; k >= 1; --k) {
        const double w = active ? weights[k] : 1.0;
        for (long m = 0; m < len; ++m) tab[k * len + m] = tab[m] * w;
      }
      const double w0 = active ? weights[0] : 1.0;
      for (long m = 0; m < len; ++m) tab[m] *= w0;
      len *= d;
    }
    return tab;
  };
  const std::vector<double> lowtab = build(nlo, 0, lo_sites);
  const std::vector<double> hightab = build(nhi, lo_sites, sites - lo_sites);

  Complex* a = state.amplitudes().data();
  double norm2 = 0.0;
  for (long hi = 0; hi < nhi; ++hi) {
    const double wh = hightab[hi];
    Complex* p = a + hi * nlo;
    for (long lo = 0; lo < nlo; ++lo) {
      p[lo] *= wh * lowtab[lo];
      norm2 += std::norm(p[lo]);
    }
  }
  if (norm2 < kAnnihilationNorm) throw StateAnnihilated();
  const double inv = 1.0 / std::sqrt(norm2);
  const long n = static_cast<long>(state.dim());
  for (long idx = 0; idx < n; ++idx) a[idx] *= inv;
  state.add_log_weight(std::log(norm2));
}

// --- diagnostics ---------------------------------------------------------

Matrix reduced_density(const PureState& state, const Region& region) {
  state.assert_normalized();
  region.check_bounds(state.sites());
  Matrix m = reshape_bipartition(state.amplitudes(), state.local_dim(),
                                 state.sites(), region.sites());
  return m * m.adjoint();
}

std::vector<double> entanglement_spectrum(const PureState& state,
                                          const Region& region) {
  region.check_bounds(state.sites());
  // the reshape across (A, complement) is the transpose of the one across
  // (complement, A); use the smaller side as rows
  const Region* side = &region;
  Region comp = region.complement(state.sites());
  if (comp.size() < region.size()) side = &comp;
  return schmidt_spectrum(state.amplitudes(), state.local_dim(), state.sites(),
                          side->sites());
}

double renyi_entropy(const PureState& state, const Region& region, double n) {
  const auto spec = entanglement_spectrum(state, region);
  return renyi_entropy_from_spectrum(spec, n);
}

double von_neumann_entropy(const DensityState& state) {
  const double tr = state.trace_real();
  auto ev = hermitian_eigenvalues(state.matrix());
  double s = 0.0;
  for (double p : ev) {
    p /= tr;
    if (p > 1e-14) s -= p * std::log(p);
  }
  return std::max(s, 0.0);
}

// --- ancilla attachment ----------------------------------------------------

AncillaHandle attach_ancilla_bell(PureState& state, int site) {
  if (site < 0 || site >= state.sites())
    throw std::invalid_argument("attach_ancilla_bell: site out of range");
  const int d = state.local_dim();
  const int L = state.sites();
  const long sr = ipow(d, site);
  const long n_old = static_cast<long>(state.dim());
  const long s_spec = n_old;           // stride of the spectator slot
  const long s_anc = n_old * d;        // stride of the ancilla slot
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));

  PureState grown(d, L + 2);
  Complex* out = grown.amplitudes().data();
  std::fill(out, out + grown.dim(), Complex(0.0, 0.0));
  const Complex* in = state.amplitudes().data();

  // old digit k at `site` moves to the spectator slot; the site and the
  // ancilla are jointly set to (1/sqrt d) sum_j |j, j>
  for (long hi = 0; hi < n_old / (sr * d); ++hi) {
    for (int k = 0; k < d; ++k) {
      const long in_base = hi * sr * d + k * sr;
      for (long lo = 0; lo < sr; ++lo) {
        const Complex v = in[in_base + lo] * inv;
        const long rest = hi * sr * d + lo + k * s_spec;
        for (int j = 0; j < d; ++j) out[rest + j * sr + j * s_anc] = v;
      }
    }
  }
  grown.add_log_weight(state.log_weight());
  std::swap(state, grown);
  return {L + 1, L};
}

// --- snapshot dump -----------------------------------------------------------

void dump_state_csv(const PureState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_state_csv: cannot open " + path);
  char line[96];
  std::snprintf(line, sizeof line, "%d,%d,%.17g\n", state.local_dim(),
                state.sites(), state.log_weight());
  out << "d,L,log_weight\n" << line << "index,re,im\n";
  const auto amps = state.amplitudes();
  for (std::size_t idx = 0; idx < amps.size(); ++idx) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", idx,
                  amps[idx].real(), amps[idx].imag());
    out << line;
  }
}

PureState load_state_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_state_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);
  int d = 0, L = 0;
  double lw = 0.0;
  if (std::sscanf(line.c_str(), "%d,%d,%lg", &d, &L, &lw) != 3)
    throw std::runtime_error("load_state_csv: bad header");
  PureState s(d, L);
  std::getline(in, line);  // column header
  auto amps = s.amplitudes();
  while (std::getline(in, line)) {
    std::size_t idx;
    double re, im;
    if (std::sscanf(line.c_str(), "%zu,%lg,%lg", &idx, &re, &im) != 3)
      throw std::runtime_error("load_state_csv: bad row");
    if (idx >= amps.size()) throw std::runtime_error("load_state_csv: bad index");
    amps[idx] = Complex(re, im);
  }
  s.add_log_weight(lw);
  return s;
}

}  // namespace mipt

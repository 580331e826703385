#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "miptsim/linalg.hpp"

namespace mipt {

// Raised when a Kraus/projection leaves no amplitude. Trajectory runners
// catch it and flag the record; it is never silently dropped.
struct StateAnnihilated : std::runtime_error {
  StateAnnihilated() : std::runtime_error("state annihilated by measurement") {}
};

constexpr double kAnnihilationNorm = 1e-28;

// Set of site indices in [0, L), stored sorted and unique.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<int> sites);
  static Region contiguous(int first, int count, int sites);  // wraps mod L

  const std::vector<int>& sites() const { return sites_; }
  int size() const { return static_cast<int>(sites_.size()); }
  bool contains(int s) const;
  Region complement(int total_sites) const;
  Region united(const Region& other) const;
  void check_bounds(int total_sites) const;

 private:
  std::vector<int> sites_;
};

// L qudits, little-endian amplitude indexing (site s has stride d^s), plus
// the accumulated ln of squared-norm factors stripped by renormalization.
class PureState {
 public:
  PureState(int local_dim, int sites);  // |0...0>

  int local_dim() const { return d_; }
  int sites() const { return sites_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }

  double log_weight() const { return log_weight_; }
  void add_log_weight(double dw) { log_weight_ += dw; }

  double norm_sq() const;
  // strips the norm and books ln(norm^2); throws StateAnnihilated below cutoff
  void renormalize();
  void assert_normalized(double tol = 1e-8) const;

 private:
  int d_;
  int sites_;
  std::vector<Complex> amps_;
  double log_weight_ = 0.0;
};

// Hermitian operator over L qudits with the analogous trace ledger.
class DensityState {
 public:
  DensityState(int local_dim, int sites);  // |0..0><0..0|
  static DensityState maximally_mixed(int local_dim, int sites);

  int local_dim() const { return d_; }
  int sites() const { return sites_; }
  const Matrix& matrix() const { return rho_; }
  Matrix& matrix() { return rho_; }

  double log_weight() const { return log_weight_; }
  void add_log_weight(double dw) { log_weight_ += dw; }

  double trace_real() const;
  void renormalize();  // books ln(trace)

 private:
  int d_;
  int sites_;
  Matrix rho_;
  double log_weight_ = 0.0;
};

// --- gate / Kraus application -------------------------------------------
//
// Two-site gates are (d^2 x d^2) with row index a*d + b where a is the new
// digit of site i and b of site j (kron(op_i, op_j) convention). Sites may
// be given in any order, including the periodic wrap pair (L-1, 0).

void apply_two_site_gate(PureState& state, int i, int j, const Matrix& gate);
void apply_two_site_gate(DensityState& state, int i, int j, const Matrix& gate);

// K rho K^dag / |K psi|^2 with renormalization and ledger booking
void apply_site_kraus(PureState& state, int site, const Matrix& k);
void apply_site_kraus(DensityState& state, int site, const Matrix& k);

// Forced projection of every flagged site onto |0>, fused into one sweep;
// books one combined ln(norm^2) (equal to the per-site sum).
void forced_project_zero(PureState& state, std::span<const std::uint8_t> flags);
void forced_project_zero(DensityState& state, std::span<const std::uint8_t> flags);

// Born-rule projective measurement of one site; returns the outcome and
// books nothing (the caller owns the ln-probability ledger).
struct BornOutcome {
  int outcome;
  double log_prob;
};
BornOutcome born_measure_site(PureState& state, int site, RngStream& rng);

// Diagonal sweep: multiplies every amplitude by prod_s weights[digit_s]
// over sites s < limit_sites (-1 for all), renormalizes, books ln(norm^2).
void apply_diagonal_sweep(PureState& state, std::span<const double> weights,
                          int limit_sites = -1);

// --- diagnostics ---------------------------------------------------------

Matrix reduced_density(const PureState& state, const Region& region);
std::vector<double> entanglement_spectrum(const PureState& state,
                                          const Region& region);
double renyi_entropy(const PureState& state, const Region& region, double n);
double von_neumann_entropy(const DensityState& state);

// --- ancilla probe -------------------------------------------------------
//
// Swap-in Bell coupling: the site's previous qudit is displaced to a fresh
// spectator slot and a maximally entangled pair is installed between the
// site and a fresh ancilla, so S(ancilla) = ln d exactly at coupling time.
// The register grows by two qudits per attachment.
struct AncillaHandle {
  int ancilla;    // site index of the ancilla qudit
  int spectator;  // site index holding the displaced qudit
};
AncillaHandle attach_ancilla_bell(PureState& state, int site);

// --- debug snapshot dump (CSV, header line d,L,log_weight) ----------------
void dump_state_csv(const PureState& state, const std::string& path);
PureState load_state_csv(const std::string& path);

}  // namespace mipt

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "miptsim/circuit.hpp"
#include "miptsim/probes.hpp"
#include "miptsim/record.hpp"
#include "miptsim/rng.hpp"
#include "miptsim/state.hpp"

namespace mipt {

// Edge pair state |I_e> = sum lambda_{mu nu} |mu, nu>, kept diagonal and
// positive; any lambda is equivalent to its singular values up to local
// basis changes absorbable into the adjacent Gaussian tensors.
struct EdgeState {
  int bond_dim = 2;
  std::vector<double> lambda;  // diagonal entries, tr(lambda lambda^dag) = 1
  double chi = 0.0;            // cached Renyi-2 mutual information (nats)
};

// chi^(n) = 2/(1-n) ln tr (lambda lambda^dag)^n for a diagonal lambda;
// rejects unnormalized input.
double chi_of_lambda(const std::vector<double>& lambda_diag, double n = 2.0);

// One-parameter family diag(sqrt q, sqrt((1-q)/(D-1)), ...) with q chosen by
// bisection so the Renyi-2 mutual information equals chi.
EdgeState lambda_for_chi(double chi, int bond_dim);

// Gaussian 4-leg tensor reshaped to D^2 x D^2 with the lambda of both input
// edges absorbed: G = T (lambda x lambda).
Matrix build_rtn_gate(RngStream& rng, int bond_dim, const EdgeState& edge);

// Row-by-row contraction of the L x t network. One row is one brickwork
// gate layer (parity alternating row to row, periodic wrap); the top
// boundary edges receive one terminal lambda per site so every lattice edge
// carries exactly one lambda.
struct RtnConfig {
  int sites = 8;   // L, even
  int rows = 1;    // t
  int bond_dim = 2;
  double chi = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;
  bool translation_invariant = false;  // one tensor drawn once, repeated
  std::vector<int> snapshot_rows;      // empty -> final row only

  void validate(int extra_sites = 0) const;
  std::vector<int> snapshots() const;
};

// test hook: lets oracles substitute the per-gate operator
struct RtnGateSource {
  virtual ~RtnGateSource() = default;
  virtual Matrix gate(int row, int pair_index) = 0;
};

TrajectoryRecord run_rtn(const RtnConfig& cfg, const ProbeSet& probes);
TrajectoryRecord run_rtn_with_source(const RtnConfig& cfg,
                                     const ProbeSet& probes,
                                     RtnGateSource& source);

// two-ancilla correlation probe in the RTN; time is measured in rows
TrajectoryRecord rtn_two_ancilla_run(const RtnConfig& cfg,
                                     const TwoAncillaOptions& opt);

}  // namespace mipt

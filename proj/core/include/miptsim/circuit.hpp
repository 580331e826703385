#pragma once

#include <cstdint>
#include <vector>

#include "miptsim/probes.hpp"
#include "miptsim/record.hpp"
#include "miptsim/rng.hpp"
#include "miptsim/state.hpp"

namespace mipt {

enum class MeasureMode { forced, born };

// Brickwork circuit of Haar gates with rate-p single-site measurements.
// Forced mode projects onto |0> at classically random locations and books
// ln(norm^2) into the state ledger; Born mode samples outcomes.
struct RqcConfig {
  int sites = 8;           // L, even
  int local_dim = 2;       // 2 qubits, 3 qutrits
  double rate = 0.0;       // p
  int steps = 1;           // t (two gate layers + two sweeps per step)
  MeasureMode mode = MeasureMode::forced;
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;
  std::vector<int> snapshot_steps;  // empty -> final step only

  void validate(int extra_sites = 0) const;
  std::vector<int> snapshots() const;
};

// Time-periodic variant: one gate drawn once from gate_seed and repeated,
// with a fixed weak measurement applied on every site after each layer.
struct TiConfig {
  int sites = 8;
  int local_dim = 2;
  double weak_strength = 0.0;  // p_w in [0, 1]
  std::uint64_t gate_seed = 0;
  std::uint64_t realization = 0;  // indexes the gate draw within an ensemble
  int steps = 1;
  std::vector<int> snapshot_steps;

  void validate() const;
  std::vector<int> snapshots() const;
};

// Bernoulli(p) measurement-location field, one draw per site in site order.
// Depends only on the stream, never on the state.
std::vector<std::uint8_t> bernoulli_pattern(RngStream& rng, int sites, double p);

// K(p_w) = |0><0| + sqrt(1-p_w) sum_{k>=1} |k><k|
Matrix weak_measurement_kraus(int local_dim, double pw);
std::vector<double> weak_measurement_weights(int local_dim, double pw);

// One gate layer of the given parity (0: pairs (0,1),(2,3),...; 1: pairs
// (1,2),...,(L-1,0)) followed by one measurement sweep. Gates act on sites
// [0, system_sites) only; the register may be larger (ancilla slots).
void rqc_half_step(PureState& state, int parity, int system_sites,
                   RngStream& gates, RngStream& pattern, RngStream& outcomes,
                   double p, MeasureMode mode, double& born_log_prob);
void rqc_half_step(DensityState& state, int parity, int system_sites,
                   RngStream& gates, RngStream& pattern, double p);

TrajectoryRecord run_rqc(const RqcConfig& cfg, const ProbeSet& probes);
TrajectoryRecord run_ti_circuit(const TiConfig& cfg, const ProbeSet& probes);

// Global purification probe: evolves rho from I/d^L under the same schedule
// and records the entropy of the normalized state as "sa" every
// snapshot_cadence steps.
struct PurificationOptions {
  int snapshot_cadence = 1;
};
TrajectoryRecord purification_run(const RqcConfig& cfg,
                                  const PurificationOptions& opt = {});

// Local order parameter: run to t0, Bell-couple one ancilla at `site`,
// keep evolving for `duration` steps recording S_1(ancilla) as "sa_bulk".
struct OrderParameterOptions {
  int t0 = 0;        // coupling step (0 -> 4L)
  int site = 0;
  int duration = 0;  // steps after coupling (0 -> 4L)
};
TrajectoryRecord order_parameter_run(const RqcConfig& cfg,
                                     const OrderParameterOptions& opt = {});

// Two-ancilla correlation probe; records I2 = S(a1)+S(a2)-S(a1 a2) as "i2"
// each step after the last coupling, out to the relaxation horizon.
struct TwoAncillaOptions {
  enum class Coupling { spatial, temporal };
  Coupling coupling = Coupling::spatial;
  int t0 = 0;       // 0 -> 4L
  int r1 = 0;
  int r2 = -1;      // spatial partner site (-1 -> L/2)
  int delta_t = 1;  // temporal separation in steps
  int horizon = 0;  // steps after last coupling (0 -> 2L)
};
TrajectoryRecord two_ancilla_run(const RqcConfig& cfg,
                                 const TwoAncillaOptions& opt = {});

}  // namespace mipt

#include "miptsim/circuit.hpp"

#include <cmath>
#include <stdexcept>

namespace mipt {

namespace {

double pow_int(int base, int exp) {
  double r = 1.0;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

void check_budget_pure(int d, int sites) {
  double n = pow_int(d, sites);
  if (n > double(1 << 22))
    throw std::invalid_argument("register exceeds the 2^22 amplitude budget");
}

}  // namespace

void RqcConfig::validate(int extra_sites) const {
  if (sites < 2 || sites % 2 != 0)
    throw std::invalid_argument("RqcConfig: sites must be even and >= 2");
  if (local_dim < 2 || local_dim > 4)
    throw std::invalid_argument("RqcConfig: local_dim out of range");
  if (rate < 0.0 || rate > 1.0)
    throw std::invalid_argument("RqcConfig: rate outside [0, 1]");
  if (steps < 1) throw std::invalid_argument("RqcConfig: steps < 1");
  check_budget_pure(local_dim, sites + extra_sites);
  for (int s : snapshot_steps)
    if (s < 1 || s > steps)
      throw std::invalid_argument("RqcConfig: snapshot step out of range");
}

std::vector<int> RqcConfig::snapshots() const {
  return snapshot_steps.empty() ? std::vector<int>{steps} : snapshot_steps;
}

void TiConfig::validate() const {
  if (sites < 2 || sites % 2 != 0)
    throw std::invalid_argument("TiConfig: sites must be even and >= 2");
  if (local_dim < 2 || local_dim > 4)
    throw std::invalid_argument("TiConfig: local_dim out of range");
  if (weak_strength < 0.0 || weak_strength > 1.0)
    throw std::invalid_argument("TiConfig: weak_strength outside [0, 1]");
  if (steps < 1) throw std::invalid_argument("TiConfig: steps < 1");
  check_budget_pure(local_dim, sites);
}

std::vector<int> TiConfig::snapshots() const {
  return snapshot_steps.empty() ? std::vector<int>{steps} : snapshot_steps;
}

std::vector<std::uint8_t> bernoulli_pattern(RngStream& rng, int sites, double p) {
  std::vector<std::uint8_t> flags(sites, 0);
  for (int s = 0; s < sites; ++s) flags[s] = rng.bernoulli(p) ? 1 : 0;
  return flags;
}

std::vector<double> weak_measurement_weights(int local_dim, double pw) {
  std::vector<double> w(local_dim, std::sqrt(1.0 - pw));
  w[0] = 1.0;
  return w;
}

Matrix weak_measurement_kraus(int local_dim, double pw) {
  const auto w = weak_measurement_weights(local_dim, pw);
  Matrix k = Matrix::Zero(local_dim, local_dim);
  for (int i = 0; i < local_dim; ++i) k(i, i) = w[i];
  return k;
}

namespace {

// gate layer in fixed pair order: even (0,1),(2,3),...; odd (1,2),...,(L-1,0)
template <class StateT>
void haar_gate_layer(StateT& st, int parity, int L, RngStream& gates) {
  const int d = st.local_dim();
  if (parity == 0) {
    for (int i = 0; i + 1 < L; i += 2)
      apply_two_site_gate(st, i, i + 1, sample_haar_unitary(gates, d * d));
  } else {
    for (int i = 1; i + 1 < L; i += 2)
      apply_two_site_gate(st, i, i + 1, sample_haar_unitary(gates, d * d));
    apply_two_site_gate(st, L - 1, 0, sample_haar_unitary(gates, d * d));
  }
}

template <class StateT>
void fixed_gate_layer(StateT& st, int parity, int L, const Matrix& gate) {
  if (parity == 0) {
    for (int i = 0; i + 1 < L; i += 2) apply_two_site_gate(st, i, i + 1, gate);
  } else {
    for (int i = 1; i + 1 < L; i += 2) apply_two_site_gate(st, i, i + 1, gate);
    apply_two_site_gate(st, L - 1, 0, gate);
  }
}

std::vector<std::uint8_t> padded_pattern(RngStream& pattern, int L, double p,
                                         int register_sites) {
  auto flags = bernoulli_pattern(pattern, L, p);
  flags.resize(register_sites, 0);
  return flags;
}

}  // namespace

void rqc_half_step(PureState& state, int parity, int system_sites,
                   RngStream& gates, RngStream& pattern, RngStream& outcomes,
                   double p, MeasureMode mode, double& born_log_prob) {
  haar_gate_layer(state, parity, system_sites, gates);
  const auto flags = padded_pattern(pattern, system_sites, p, state.sites());
  if (mode == MeasureMode::forced) {
    forced_project_zero(state, flags);
  } else {
    for (int s = 0; s < system_sites; ++s) {
      if (!flags[s]) continue;
      born_log_prob += born_measure_site(state, s, outcomes).log_prob;
    }
  }
}

void rqc_half_step(DensityState& state, int parity, int system_sites,
                   RngStream& gates, RngStream& pattern, double p) {
  haar_gate_layer(state, parity, system_sites, gates);
  const auto flags = padded_pattern(pattern, system_sites, p, state.sites());
  forced_project_zero(state, flags);
}

TrajectoryRecord run_rqc(const RqcConfig& cfg, const ProbeSet& probes) {
  cfg.validate();
  TrajectoryRecord rec;
  rec.realization = cfg.realization;

  RngStream gates(cfg.seed, stream_index_for(cfg.realization, StreamClass::gates));
  RngStream pattern(cfg.seed, stream_index_for(cfg.realization, StreamClass::pattern));
  RngStream outcomes(cfg.seed, stream_index_for(cfg.realization, StreamClass::outcomes));

  PureState state(cfg.local_dim, cfg.sites);
  const auto snaps = cfg.snapshots();
  std::size_t next_snap = 0;

  try {
    for (int t = 1; t <= cfg.steps; ++t) {
      rqc_half_step(state, 0, cfg.sites, gates, pattern, outcomes, cfg.rate,
                    cfg.mode, rec.born_log_prob);
      rqc_half_step(state, 1, cfg.sites, gates, pattern, outcomes, cfg.rate,
                    cfg.mode, rec.born_log_prob);
      if (next_snap < snaps.size() && snaps[next_snap] == t) {
        ObservableBundle bundle;
        probes.evaluate(state, bundle);
        rec.snapshots[t] = std::move(bundle);
        ++next_snap;
      }
    }
  } catch (const StateAnnihilated&) {
    rec.annihilated = true;
  }
  rec.log_z = state.log_weight();
  return rec;
}

TrajectoryRecord run_ti_circuit(const TiConfig& cfg, const ProbeSet& probes) {
  cfg.validate();
  TrajectoryRecord rec;
  rec.realization = cfg.realization;

  RngStream gate_rng(cfg.gate_seed,
                     stream_index_for(cfg.realization, StreamClass::gates));
  const Matrix gate = sample_haar_unitary(gate_rng, cfg.local_dim * cfg.local_dim);
  const auto weights = weak_measurement_weights(cfg.local_dim, cfg.weak_strength);

  PureState state(cfg.local_dim, cfg.sites);
  const auto snaps = cfg.snapshots();
  std::size_t next_snap = 0;

  try {
    for (int t = 1; t <= cfg.steps; ++t) {
      for (int parity = 0; parity < 2; ++parity) {
        fixed_gate_layer(state, parity, cfg.sites, gate);
        apply_diagonal_sweep(state, weights);
      }
      if (next_snap < snaps.size() && snaps[next_snap] == t) {
        ObservableBundle bundle;
        probes.evaluate(state, bundle);
        rec.snapshots[t] = std::move(bundle);
        ++next_snap;
      }
    }
  } catch (const StateAnnihilated&) {
    rec.annihilated = true;
  }
  rec.log_z = state.log_weight();
  return rec;
}

TrajectoryRecord purification_run(const RqcConfig& cfg,
                                  const PurificationOptions& opt) {
  cfg.validate();
  if (cfg.mode != MeasureMode::forced)
    throw std::invalid_argument("purification_run: forced mode only");
  if (pow_int(cfg.local_dim, cfg.sites) > double(1 << 12))
    throw std::invalid_argument("purification_run: exceeds density budget");
  if (opt.snapshot_cadence < 1)
    throw std::invalid_argument("purification_run: cadence < 1");

  TrajectoryRecord rec;
  rec.realization = cfg.realization;
  RngStream gates(cfg.seed, stream_index_for(cfg.realization, StreamClass::gates));
  RngStream pattern(cfg.seed, stream_index_for(cfg.realization, StreamClass::pattern));

  DensityState rho = DensityState::maximally_mixed(cfg.local_dim, cfg.sites);
  rec.snapshots[0].values["sa"] = von_neumann_entropy(rho);

  try {
    for (int t = 1; t <= cfg.steps; ++t) {
      rqc_half_step(rho, 0, cfg.sites, gates, pattern, cfg.rate);
      rqc_half_step(rho, 1, cfg.sites, gates, pattern, cfg.rate);
      if (t % opt.snapshot_cadence == 0 || t == cfg.steps)
        rec.snapshots[t].values["sa"] = von_neumann_entropy(rho);
    }
  } catch (const StateAnnihilated&) {
    rec.annihilated = true;
  }
  rec.log_z = rho.log_weight();
  return rec;
}

namespace {

double region_entropy(const PureState& st, std::vector<int> sites) {
  return renyi_entropy(st, Region(std::move(sites)), 1.0);
}

}  // namespace

TrajectoryRecord order_parameter_run(const RqcConfig& cfg,
                                     const OrderParameterOptions& opt_in) {
  OrderParameterOptions opt = opt_in;
  if (opt.t0 <= 0) opt.t0 = 4 * cfg.sites;
  if (opt.duration <= 0) opt.duration = 4 * cfg.sites;
  cfg.validate(2);
  if (opt.site < 0 || opt.site >= cfg.sites)
    throw std::invalid_argument("order_parameter_run: bad site");

  TrajectoryRecord rec;
  rec.realization = cfg.realization;
  RngStream gates(cfg.seed, stream_index_for(cfg.realization, StreamClass::gates));
  RngStream pattern(cfg.seed, stream_index_for(cfg.realization, StreamClass::pattern));
  RngStream outcomes(cfg.seed, stream_index_for(cfg.realization, StreamClass::outcomes));

  PureState state(cfg.local_dim, cfg.sites);
  try {
    for (int t = 1; t <= opt.t0; ++t) {
      rqc_half_step(state, 0, cfg.sites, gates, pattern, outcomes, cfg.rate,
                    cfg.mode, rec.born_log_prob);
      rqc_half_step(state, 1, cfg.sites, gates, pattern, outcomes, cfg.rate,
                    cfg.mode, rec.born_log_prob);
    }
    const auto anc = attach_ancilla_bell(state, opt.site);
    rec.snapshots[opt.t0].values["sa_bulk"] = region_entropy(state, {anc.ancilla});
    for (int t = opt.t0 + 1; t <= opt.t0 + opt.duration; ++t) {
      rqc_half_step(state, 0, cfg.sites, gates, pattern, outcomes, cfg.rate,
                    cfg.mode, rec.born_log_prob);
      rqc_half_step(state, 1, cfg.sites, gates, pattern, outcomes, cfg.rate,
                    cfg.mode, rec.born_log_prob);
      rec.snapshots[t].values["sa_bulk"] = region_entropy(state, {anc.ancilla});
    }
  } catch (const StateAnnihilated&) {
    rec.annihilated = true;
  }
  rec.log_z = state.log_weight();
  return rec;
}

TrajectoryRecord two_ancilla_run(const RqcConfig& cfg,
                                 const TwoAncillaOptions& opt_in) {
  TwoAncillaOptions opt = opt_in;
  if (opt.t0 <= 0) opt.t0 = 4 * cfg.sites;
  if (opt.horizon <= 0) opt.horizon = 2 * cfg.sites;
  if (opt.r2 < 0) opt.r2 = cfg.sites / 2;
  cfg.validate(4);
  const bool spatial = opt.coupling == TwoAncillaOptions::Coupling::spatial;
  if (spatial && opt.r1 == opt.r2)
    throw std::invalid_argument("two_ancilla_run: spatial sites must differ");
  if (!spatial && opt.delta_t < 1)
    throw std::invalid_argument("two_ancilla_run: delta_t < 1");

  TrajectoryRecord rec;
  rec.realization = cfg.realization;
  RngStream gates(cfg.seed, stream_index_for(cfg.realization, StreamClass::gates));
  RngStream pattern(cfg.seed, stream_index_for(cfg.realization, StreamClass::pattern));
  RngStream outcomes(cfg.seed, stream_index_for(cfg.realization, StreamClass::outcomes));

  PureState state(cfg.local_dim, cfg.sites);
  auto step = [&](int) {
    rqc_half_step(state, 0, cfg.sites, gates, pattern, outcomes, cfg.rate,
                  cfg.mode, rec.born_log_prob);
    rqc_half_step(state, 1, cfg.sites, gates, pattern, outcomes, cfg.rate,
                  cfg.mode, rec.born_log_prob);
  };

  try {
    for (int t = 1; t <= opt.t0; ++t) step(t);

    AncillaHandle a1{}, a2{};
    int last_coupling = opt.t0;
    a1 = attach_ancilla_bell(state, opt.r1);
    if (spatial) {
      a2 = attach_ancilla_bell(state, opt.r2);
    } else {
      for (int t = opt.t0 + 1; t <= opt.t0 + opt.delta_t; ++t) step(t);
      last_coupling = opt.t0 + opt.delta_t;
      a2 = attach_ancilla_bell(state, opt.r1);
    }

    auto record_i2 = [&](int t) {
      const double s1 = region_entropy(state, {a1.ancilla});
      const double s2 = region_entropy(state, {a2.ancilla});
      const double s12 = region_entropy(state, {a1.ancilla, a2.ancilla});
      rec.snapshots[t].values["i2"] = s1 + s2 - s12;
    };
    record_i2(last_coupling);
    for (int t = last_coupling + 1; t <= last_coupling + opt.horizon; ++t) {
      step(t);
      record_i2(t);
    }
  } catch (const StateAnnihilated&) {
    rec.annihilated = true;
  }
  rec.log_z = state.log_weight();
  return rec;
}

}  // namespace mipt

#include "miptsim/rtn.hpp"

#include <cmath>
#include <stdexcept>

namespace mipt {

double chi_of_lambda(const std::vector<double>& lambda_diag, double n) {
  if (n <= 1.0) throw std::invalid_argument("chi_of_lambda: n must be > 1");
  double norm = 0.0, mom = 0.0;
  for (double l : lambda_diag) {
    const double p = l * l;
    norm += p;
    mom += std::pow(p, n);
  }
  if (std::abs(norm - 1.0) > 1e-10)
    throw std::invalid_argument("chi_of_lambda: lambda not normalized");
  return 2.0 / (1.0 - n) * std::log(mom);
}

EdgeState lambda_for_chi(double chi, int bond_dim) {
  const int D = bond_dim;
  if (D < 2) throw std::invalid_argument("lambda_for_chi: bond_dim < 2");
  const double chi_max = 2.0 * std::log(static_cast<double>(D));
  if (chi < 0.0 || chi > chi_max + 1e-12)
    throw std::invalid_argument("lambda_for_chi: chi outside [0, 2 ln D]");

  auto family = [&](double q) {
    std::vector<double> l(D, std::sqrt((1.0 - q) / (D - 1)));
    l[0] = std::sqrt(q);
    return l;
  };
  EdgeState edge;
  edge.bond_dim = D;
  if (chi <= 0.0) {
    edge.lambda.assign(D, 0.0);
    edge.lambda[0] = 1.0;
    edge.chi = 0.0;
    return edge;
  }
  if (chi >= chi_max) {
    edge.lambda.assign(D, 1.0 / std::sqrt(static_cast<double>(D)));
    edge.chi = chi_max;
    return edge;
  }
  // chi(q) = -2 ln(q^2 + (1-q)^2/(D-1)) decreases monotonically on [1/D, 1]
  double lo = 1.0 / D, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double c = chi_of_lambda(family(mid));
    if (c > chi)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-16) break;
  }
  const double q = 0.5 * (lo + hi);
  edge.lambda = family(q);
  edge.chi = chi_of_lambda(edge.lambda);
  return edge;
}

Matrix build_rtn_gate(RngStream& rng, int bond_dim, const EdgeState& edge) {
  const int D = bond_dim;
  if (static_cast<int>(edge.lambda.size()) != D)
    throw std::invalid_argument("build_rtn_gate: edge dimension mismatch");
  Matrix g = sample_ginibre(rng, D * D, D * D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) g.col(a * D + b) *= edge.lambda[a] * edge.lambda[b];
  return g;
}

void RtnConfig::validate(int extra_sites) const {
  if (sites < 2 || sites % 2 != 0)
    throw std::invalid_argument("RtnConfig: sites must be even and >= 2");
  if (rows < 1) throw std::invalid_argument("RtnConfig: rows < 1");
  if (bond_dim < 2 || bond_dim > 4)
    throw std::invalid_argument("RtnConfig: bond_dim out of range");
  const double chi_max = 2.0 * std::log(static_cast<double>(bond_dim));
  if (chi < 0.0 || chi > chi_max + 1e-12)
    throw std::invalid_argument("RtnConfig: chi outside [0, 2 ln D]");
  double n = 1.0;
  for (int k = 0; k < sites + extra_sites; ++k) n *= bond_dim;
  if (n > double(1 << 22))
    throw std::invalid_argument("RtnConfig: register exceeds the amplitude budget");
  for (int r : snapshot_rows)
    if (r < 1 || r > rows)
      throw std::invalid_argument("RtnConfig: snapshot row out of range");
}

std::vector<int> RtnConfig::snapshots() const {
  return snapshot_rows.empty() ? std::vector<int>{rows} : snapshot_rows;
}

namespace {

struct GaussianSource : RtnGateSource {
  RngStream rng;
  int bond_dim;
  EdgeState edge;
  bool ti;
  Matrix cached;

  GaussianSource(const RtnConfig& cfg)
      : rng(cfg.seed, stream_index_for(cfg.realization, StreamClass::tensors)),
        bond_dim(cfg.bond_dim),
        edge(lambda_for_chi(cfg.chi, cfg.bond_dim)),
        ti(cfg.translation_invariant) {
    if (ti) cached = build_rtn_gate(rng, bond_dim, edge);
  }

  Matrix gate(int, int) override {
    return ti ? cached : build_rtn_gate(rng, bond_dim, edge);
  }
};

// one brickwork row; parity 0 pairs (0,1),(2,3),..., parity 1 wraps
void rtn_row(PureState& state, int parity, int sites, int row,
             RtnGateSource& source) {
  int pair = 0;
  if (parity == 0) {
    for (int i = 0; i + 1 < sites; i += 2) {
      apply_two_site_gate(state, i, i + 1, source.gate(row, pair++));
      state.renormalize();
    }
  } else {
    for (int i = 1; i + 1 < sites; i += 2) {
      apply_two_site_gate(state, i, i + 1, source.gate(row, pair++));
      state.renormalize();
    }
    apply_two_site_gate(state, sites - 1, 0, source.gate(row, pair++));
    state.renormalize();
  }
}

// top-boundary lambda, one per system site; books its norm into the ledger
void apply_terminal_lambda(PureState& state, const EdgeState& edge, int sites) {
  apply_diagonal_sweep(state, edge.lambda, sites);
}

TrajectoryRecord run_rtn_impl(const RtnConfig& cfg, const ProbeSet& probes,
                              RtnGateSource& source) {
  TrajectoryRecord rec;
  rec.realization = cfg.realization;
  const EdgeState edge = lambda_for_chi(cfg.chi, cfg.bond_dim);

  PureState state(cfg.bond_dim, cfg.sites);
  const auto snaps = cfg.snapshots();
  std::size_t next_snap = 0;

  try {
    for (int row = 1; row <= cfg.rows; ++row) {
      rtn_row(state, (row - 1) % 2, cfg.sites, row - 1, source);
      if (next_snap < snaps.size() && snaps[next_snap] == row) {
        if (row == cfg.rows) {
          apply_terminal_lambda(state, edge, cfg.sites);
          ObservableBundle bundle;
          probes.evaluate(state, bundle);
          rec.snapshots[row] = std::move(bundle);
        } else {
          // truncating the network here: the copy receives the boundary
          // lambdas so that every edge of the truncated lattice carries one
          PureState copy = state;
          apply_terminal_lambda(copy, edge, cfg.sites);
          ObservableBundle bundle;
          probes.evaluate(copy, bundle);
          rec.snapshots[row] = std::move(bundle);
        }
        ++next_snap;
      } else if (row == cfg.rows) {
        apply_terminal_lambda(state, edge, cfg.sites);
      }
    }
  } catch (const StateAnnihilated&) {
    rec.annihilated = true;
  }
  rec.log_z = state.log_weight();
  return rec;
}

}  // namespace

TrajectoryRecord run_rtn(const RtnConfig& cfg, const ProbeSet& probes) {
  cfg.validate();
  GaussianSource source(cfg);
  return run_rtn_impl(cfg, probes, source);
}

TrajectoryRecord run_rtn_with_source(const RtnConfig& cfg,
                                     const ProbeSet& probes,
                                     RtnGateSource& source) {
  cfg.validate();
  return run_rtn_impl(cfg, probes, source);
}

TrajectoryRecord rtn_two_ancilla_run(const RtnConfig& cfg,
                                     const TwoAncillaOptions& opt_in) {
  TwoAncillaOptions opt = opt_in;
  if (opt.t0 <= 0) opt.t0 = 4 * cfg.sites;
  if (opt.horizon <= 0) opt.horizon = 2 * cfg.sites;
  if (opt.r2 < 0) opt.r2 = cfg.sites / 2;
  cfg.validate(4);
  const bool spatial = opt.coupling == TwoAncillaOptions::Coupling::spatial;
  if (spatial && opt.r1 == opt.r2)
    throw std::invalid_argument("rtn_two_ancilla_run: spatial sites must differ");
  if (!spatial && opt.delta_t < 1)
    throw std::invalid_argument("rtn_two_ancilla_run: delta_t < 1");

  TrajectoryRecord rec;
  rec.realization = cfg.realization;
  GaussianSource source(cfg);
  const EdgeState edge = lambda_for_chi(cfg.chi, cfg.bond_dim);

  PureState state(cfg.bond_dim, cfg.sites);
  int row = 0;
  auto advance = [&]() {
    rtn_row(state, row % 2, cfg.sites, row, source);
    ++row;
  };

  try {
    while (row < opt.t0) advance();

    AncillaHandle a1 = attach_ancilla_bell(state, opt.r1), a2{};
    int last_coupling = opt.t0;
    if (spatial) {
      a2 = attach_ancilla_bell(state, opt.r2);
    } else {
      while (row < opt.t0 + opt.delta_t) advance();
      last_coupling = opt.t0 + opt.delta_t;
      a2 = attach_ancilla_bell(state, opt.r1);
    }

    auto record_i2 = [&](int at) {
      PureState copy = state;
      apply_terminal_lambda(copy, edge, cfg.sites);
      const double s1 = renyi_entropy(copy, Region({a1.ancilla}), 1.0);
      const double s2 = renyi_entropy(copy, Region({a2.ancilla}), 1.0);
      const double s12 = renyi_entropy(copy, Region({a1.ancilla, a2.ancilla}), 1.0);
      rec.snapshots[at].values["i2"] = s1 + s2 - s12;
    };
    record_i2(last_coupling);
    while (row < last_coupling + opt.horizon) {
      advance();
      record_i2(row);
    }
  } catch (const StateAnnihilated&) {
    rec.annihilated = true;
  }
  rec.log_z = state.log_weight();
  return rec;
}

}  // namespace mipt

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "miptsim/analysis.hpp"
#include "miptsim/record.hpp"

namespace mipt {

// knobs for the ancilla and purification probe runs
struct ProbeOptions {
  int t0 = 0;        // coupling step; 0 -> 4L
  int site = 0;      // order-parameter coupling site
  int duration = 0;  // order-parameter steps after coupling; 0 -> 4L
  std::string coupling = "spatial";  // spatial | temporal
  int r1 = 0;
  int r2 = -1;       // -1 -> L/2
  int delta_t = 1;
  int horizon = 0;   // steps after last coupling; 0 -> 2L
  int purify_cadence = 1;
};

// One experiment: a (sizes x sweep x realizations) ensemble of trajectories
// with a fixed probe list. Realization r of cell (si, wi) draws its RNG
// streams from the injective index ((si * n_sweep + wi) * realizations + r).
struct ExperimentSpec {
  std::string model = "rqc";    // rqc | rtn | ti_rqc | ti_rtn
  std::string mode = "forced";  // forced | born   (rqc only)
  int local_dim = 2;            // qudit dimension d, or bond dimension D
  std::vector<int> sizes;
  std::vector<double> sweep;    // p (rqc), chi (rtn), p_w (ti_rqc)
  int steps_per_size = 4;       // t = k * L; rows for the tensor network
  int steps_abs = 0;            // absolute override when > 0
  int realizations = 1;
  std::vector<std::string> probes;
  std::uint64_t base_seed = 1;
  std::string output = "out/experiment";
  int workers = 0;              // 0 -> MIPTSIM_WORKERS or hardware
  std::vector<int> snapshot_steps;  // empty -> final step only
  ProbeOptions options;

  void validate() const;  // throws std::invalid_argument
  int steps_for(int size) const;
  std::uint64_t realization_index(int size_idx, int sweep_idx, int r) const;

  static ExperimentSpec from_json_file(const std::string& path);
  static ExperimentSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct EnsembleResult {
  // records[size_idx][sweep_idx][r]
  std::vector<std::vector<std::vector<TrajectoryRecord>>> records;
};

EnsembleResult run_ensemble(const ExperimentSpec& spec);

struct ExperimentOutput {
  std::string csv_path;
  std::string json_path;
  long annihilated = 0;
};
// runs the ensemble and writes <output>.csv (per-realization rows) and
// <output>.json (aggregates + metadata)
ExperimentOutput run_experiment(const ExperimentSpec& spec);

int resolve_workers(int requested);
std::string version_string();

// --- CSV / JSON data interchange ------------------------------------------

struct CsvRow {
  std::string model;
  int size = 0;
  double control = 0.0;
  std::uint64_t realization = 0;
  std::string probe;
  int step = 0;
  double value = 0.0;
  double log_z = 0.0;
  int annihilated = 0;
};

std::vector<CsvRow> load_csv(const std::string& path);

// cells keyed by (L, control value); y = probe value at the last snapshot
// of each realization; annihilated realizations are excluded
CellSamples cells_control_vs_final(const std::vector<CsvRow>& rows,
                                   const std::string& probe);

// cells keyed by (L, snapshot step); optionally shifts each (L, control)
// group's steps so the earliest snapshot is 0 and drops x < min_x
CellSamples cells_time_series(const std::vector<CsvRow>& rows,
                              const std::string& probe, bool shift_to_zero,
                              double min_x);

// free-energy density cells: y = -log_z / (v L t), one entry per realization
CellSamples cells_free_energy_density(const std::vector<CsvRow>& rows, double v);

void write_fit_json(const FitResult& fit, const std::vector<std::string>& inputs,
                    const std::string& path);

}  // namespace mipt

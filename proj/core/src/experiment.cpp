#include "miptsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "miptsim/circuit.hpp"
#include "miptsim/rtn.hpp"

namespace mipt {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "miptsim 0.1.0";

double pow_int(int base, int exp) {
  double r = 1.0;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

bool is_circuit_model(const std::string& m) { return m == "rqc" || m == "ti_rqc"; }

struct ProbePlan {
  enum class Run { plain, purification, order_parameter, two_ancilla } run;
  std::vector<std::string> plain_probes;
};

ProbePlan plan_probes(const ExperimentSpec& spec) {
  ProbePlan plan{ProbePlan::Run::plain, {}};
  bool special = false;
  for (const auto& p : spec.probes) {
    if (p == "sa") {
      plan.run = ProbePlan::Run::purification;
      special = true;
    } else if (p == "sa_bulk") {
      plan.run = ProbePlan::Run::order_parameter;
      special = true;
    } else if (p == "i2") {
      plan.run = ProbePlan::Run::two_ancilla;
      special = true;
    } else {
      plan.plain_probes.push_back(p);
    }
  }
  if (special && (spec.probes.size() != 1))
    throw std::invalid_argument(
        "probes sa, sa_bulk and i2 each require a dedicated experiment");
  return plan;
}

}  // namespace

int ExperimentSpec::steps_for(int size) const {
  return steps_abs > 0 ? steps_abs : steps_per_size * size;
}

std::uint64_t ExperimentSpec::realization_index(int size_idx, int sweep_idx,
                                                int r) const {
  const auto w = static_cast<std::uint64_t>(sweep.size());
  const auto n = static_cast<std::uint64_t>(realizations);
  return (static_cast<std::uint64_t>(size_idx) * w + sweep_idx) * n + r;
}

void ExperimentSpec::validate() const {
  if (model != "rqc" && model != "rtn" && model != "ti_rqc" && model != "ti_rtn")
    throw std::invalid_argument("unknown model: " + model);
  if (mode != "forced" && mode != "born")
    throw std::invalid_argument("unknown mode: " + mode);
  if (mode == "born" && model != "rqc")
    throw std::invalid_argument("born mode applies to the rqc model only");
  if (sizes.empty()) throw std::invalid_argument("sizes must be nonempty");
  if (sweep.empty()) throw std::invalid_argument("sweep must be nonempty");
  if (realizations < 1) throw std::invalid_argument("realizations must be >= 1");
  if (local_dim < 2 || local_dim > 4)
    throw std::invalid_argument("local_dim must be in [2, 4]");
  if (steps_abs < 0 || (steps_abs == 0 && steps_per_size < 1))
    throw std::invalid_argument("steps rule must give t >= 1");
  if (probes.empty()) throw std::invalid_argument("probes must be nonempty");

  const ProbePlan plan = plan_probes(*this);
  const bool needs_i3 =
      std::any_of(probes.begin(), probes.end(),
                  [](const std::string& p) { return p.rfind("i3", 0) == 0; });
  const bool circuit = is_circuit_model(model);

  if (plan.run != ProbePlan::Run::plain) {
    if (plan.run == ProbePlan::Run::purification && model != "rqc")
      throw std::invalid_argument("probe sa requires model rqc");
    if (plan.run == ProbePlan::Run::order_parameter && model != "rqc")
      throw std::invalid_argument("probe sa_bulk requires model rqc");
    if (plan.run == ProbePlan::Run::two_ancilla &&
        (model == "ti_rqc" || model == "ti_rtn"))
      throw std::invalid_argument("probe i2 requires model rqc or rtn");
    if (options.coupling != "spatial" && options.coupling != "temporal")
      throw std::invalid_argument("coupling must be spatial or temporal");
  } else {
    ProbeSet::parse(plan.plain_probes);  // throws on unknown names
  }

  for (int L : sizes) {
    if (L < 2 || L % 2 != 0)
      throw std::invalid_argument("sizes must be even and >= 2");
    if (needs_i3 && L % 4 != 0)
      throw std::invalid_argument("tripartite probes need L divisible by 4");
    if (steps_for(L) < 1) throw std::invalid_argument("steps rule gives t < 1");
    int extra = 0;
    if (plan.run == ProbePlan::Run::order_parameter) extra = 2;
    if (plan.run == ProbePlan::Run::two_ancilla) extra = 4;
    if (plan.run == ProbePlan::Run::purification) {
      if (pow_int(local_dim, L) > double(1 << 12))
        throw std::invalid_argument("purification exceeds the density budget");
    } else if (pow_int(local_dim, L + extra) > double(1 << 22)) {
      throw std::invalid_argument("register exceeds the 2^22 amplitude budget");
    }
    for (int s : snapshot_steps)
      if (s < 1 || s > steps_for(L))
        throw std::invalid_argument("snapshot step out of range");
  }
  for (double w : sweep) {
    if (circuit && (w < 0.0 || w > 1.0))
      throw std::invalid_argument("rate must lie in [0, 1]");
    if (!circuit) {
      const double chi_max = 2.0 * std::log(double(local_dim));
      if (w < 0.0 || w > chi_max + 1e-12)
        throw std::invalid_argument("chi must lie in [0, 2 ln D]");
    }
  }
  if (workers < 0) throw std::invalid_argument("workers must be >= 0");
}

namespace {

TrajectoryRecord run_one(const ExperimentSpec& spec, const ProbePlan& plan,
                         int size, double control, std::uint64_t realization) {
  const int steps = spec.steps_for(size);
  if (spec.model == "rqc") {
    RqcConfig cfg;
    cfg.sites = size;
    cfg.local_dim = spec.local_dim;
    cfg.rate = control;
    cfg.steps = steps;
    cfg.mode = spec.mode == "born" ? MeasureMode::born : MeasureMode::forced;
    cfg.seed = spec.base_seed;
    cfg.realization = realization;
    cfg.snapshot_steps = spec.snapshot_steps;
    switch (plan.run) {
      case ProbePlan::Run::plain:
        return run_rqc(cfg, ProbeSet::parse(plan.plain_probes));
      case ProbePlan::Run::purification: {
        PurificationOptions opt;
        opt.snapshot_cadence = spec.options.purify_cadence;
        return purification_run(cfg, opt);
      }
      case ProbePlan::Run::order_parameter: {
        OrderParameterOptions opt;
        opt.t0 = spec.options.t0;
        opt.site = spec.options.site;
        opt.duration = spec.options.duration;
        return order_parameter_run(cfg, opt);
      }
      case ProbePlan::Run::two_ancilla: {
        TwoAncillaOptions opt;
        opt.coupling = spec.options.coupling == "temporal"
                           ? TwoAncillaOptions::Coupling::temporal
                           : TwoAncillaOptions::Coupling::spatial;
        opt.t0 = spec.options.t0;
        opt.r1 = spec.options.r1;
        opt.r2 = spec.options.r2;
        opt.delta_t = spec.options.delta_t;
        opt.horizon = spec.options.horizon;
        return two_ancilla_run(cfg, opt);
      }
    }
  } else if (spec.model == "ti_rqc") {
    TiConfig cfg;
    cfg.sites = size;
    cfg.local_dim = spec.local_dim;
    cfg.weak_strength = control;
    cfg.gate_seed = spec.base_seed;
    cfg.realization = realization;
    cfg.steps = steps;
    cfg.snapshot_steps = spec.snapshot_steps;
    return run_ti_circuit(cfg, ProbeSet::parse(plan.plain_probes));
  } else {
    RtnConfig cfg;
    cfg.sites = size;
    cfg.rows = steps;
    cfg.bond_dim = spec.local_dim;
    cfg.chi = control;
    cfg.seed = spec.base_seed;
    cfg.realization = realization;
    cfg.translation_invariant = spec.model == "ti_rtn";
    cfg.snapshot_rows = spec.snapshot_steps;
    if (plan.run == ProbePlan::Run::two_ancilla) {
      TwoAncillaOptions opt;
      opt.coupling = spec.options.coupling == "temporal"
                         ? TwoAncillaOptions::Coupling::temporal
                         : TwoAncillaOptions::Coupling::spatial;
      opt.t0 = spec.options.t0;
      opt.r1 = spec.options.r1;
      opt.r2 = spec.options.r2;
      opt.delta_t = spec.options.delta_t;
      opt.horizon = spec.options.horizon;
      return rtn_two_ancilla_run(cfg, opt);
    }
    return run_rtn(cfg, ProbeSet::parse(plan.plain_probes));
  }
  throw std::logic_error("unreachable model dispatch");
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MIPTSIM_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string version_string() { return kVersion; }

EnsembleResult run_ensemble(const ExperimentSpec& spec) {
  spec.validate();
  const ProbePlan plan = plan_probes(spec);

  struct Task {
    int size_idx, sweep_idx, r;
  };
  std::vector<Task> tasks;
  tasks.reserve(spec.sizes.size() * spec.sweep.size() * spec.realizations);
  for (int si = 0; si < static_cast<int>(spec.sizes.size()); ++si)
    for (int wi = 0; wi < static_cast<int>(spec.sweep.size()); ++wi)
      for (int r = 0; r < spec.realizations; ++r) tasks.push_back({si, wi, r});

  std::vector<TrajectoryRecord> flat(tasks.size());
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::string error_msg;
  std::mutex error_mu;

  auto work = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t k = cursor.fetch_add(1);
      if (k >= tasks.size()) break;
      const Task& t = tasks[k];
      try {
        flat[k] = run_one(spec, plan, spec.sizes[t.size_idx], spec.sweep[t.sweep_idx],
                          spec.realization_index(t.size_idx, t.sweep_idx, t.r));
      } catch (const std::exception& e) {
        std::scoped_lock lk(error_mu);
        failed = true;
        error_msg = e.what();
      }
    }
  };

  const int nworkers = resolve_workers(spec.workers);
  if (nworkers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failed) throw std::runtime_error("ensemble task failed: " + error_msg);

  EnsembleResult out;
  out.records.resize(spec.sizes.size());
  for (auto& per_size : out.records) per_size.resize(spec.sweep.size());
  for (std::size_t k = 0; k < tasks.size(); ++k)
    out.records[tasks[k].size_idx][tasks[k].sweep_idx].push_back(std::move(flat[k]));
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentSpec& spec) {
  const EnsembleResult ens = run_ensemble(spec);

  namespace fs = std::filesystem;
  const fs::path base(spec.output);
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  ExperimentOutput out;
  out.csv_path = base.string() + ".csv";
  out.json_path = base.string() + ".json";

  std::ofstream csv(out.csv_path);
  if (!csv) throw std::runtime_error("cannot open " + out.csv_path);
  csv << "model,L,control_value,realization,probe_name,snapshot_step,value,log_Z,"
         "annihilated\n";

  struct Agg {
    double sum = 0, sum2 = 0;
    long count = 0;
  };
  std::map<std::tuple<int, double, std::string, int>, Agg> agg;
  std::map<std::pair<int, double>, long> excluded;

  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    for (std::size_t wi = 0; wi < spec.sweep.size(); ++wi) {
      const int L = spec.sizes[si];
      const double control = spec.sweep[wi];
      excluded.try_emplace({L, control}, 0);
      for (int r = 0; r < spec.realizations; ++r) {
        const TrajectoryRecord& rec = ens.records[si][wi][r];
        const int flag = rec.annihilated ? 1 : 0;
        if (flag) {
          ++excluded[{L, control}];
          ++out.annihilated;
        }
        auto emit = [&](const std::string& probe, int step, double value) {
          csv << spec.model << ',' << L << ',' << fmt_double(control) << ',' << r
              << ',' << probe << ',' << step << ',' << fmt_double(value) << ','
              << fmt_double(rec.log_z) << ',' << flag << '\n';
          if (!flag) {
            Agg& a = agg[{L, control, probe, step}];
            a.sum += value;
            a.sum2 += value * value;
            ++a.count;
          }
        };
        for (const auto& [step, bundle] : rec.snapshots)
          for (const auto& [probe, value] : bundle.values) emit(probe, step, value);
        if (spec.mode == "born" && !rec.snapshots.empty())
          emit("born_log_prob", rec.snapshots.rbegin()->first, rec.born_log_prob);
        if (flag) emit("annihilated", 0, 1.0);
      }
    }
  }
  csv.close();

  json j;
  j["metadata"]["version"] = version_string();
  j["metadata"]["seed"] = spec.base_seed;
  j["metadata"]["model"] = spec.model;
  j["metadata"]["mode"] = spec.mode;
  j["metadata"]["realizations"] = spec.realizations;
  j["metadata"]["timestamp"] =
      static_cast<long>(std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count());
  j["aggregates"] = json::array();
  for (const auto& [key, a] : agg) {
    const auto& [L, control, probe, step] = key;
    json cell;
    cell["L"] = L;
    cell["control_value"] = control;
    cell["probe"] = probe;
    cell["snapshot_step"] = step;
    const double mean = a.count > 0 ? a.sum / a.count : 0.0;
    cell["mean"] = mean;
    double stderr_ = 0.0;
    if (a.count > 1) {
      const double var = (a.sum2 - a.count * mean * mean) / (a.count - 1);
      stderr_ = std::sqrt(std::max(var, 0.0) / a.count);
    }
    cell["stderr"] = stderr_;
    cell["count"] = a.count;
    cell["excluded_count"] = excluded[{L, control}];
    j["aggregates"].push_back(cell);
  }
  std::ofstream jf(out.json_path);
  jf << j.dump(2) << '\n';
  return out;
}

// --- spec <-> json -----------------------------------------------------------

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentSpec s;
  s.model = j.value("model", s.model);
  s.mode = j.value("mode", s.mode);
  s.local_dim = j.value("local_dim", s.local_dim);
  s.sizes = j.value("sizes", s.sizes);
  s.sweep = j.value("sweep", s.sweep);
  s.steps_per_size = j.value("steps_per_l", s.steps_per_size);
  s.steps_abs = j.value("steps", s.steps_abs);
  s.realizations = j.value("realizations", s.realizations);
  s.probes = j.value("probes", s.probes);
  s.base_seed = j.value("base_seed", s.base_seed);
  s.output = j.value("output", s.output);
  s.workers = j.value("workers", s.workers);
  s.snapshot_steps = j.value("snapshot_steps", s.snapshot_steps);
  if (j.contains("options")) {
    const json& o = j["options"];
    s.options.t0 = o.value("t0", s.options.t0);
    s.options.site = o.value("site", s.options.site);
    s.options.duration = o.value("duration", s.options.duration);
    s.options.coupling = o.value("coupling", s.options.coupling);
    s.options.r1 = o.value("r1", s.options.r1);
    s.options.r2 = o.value("r2", s.options.r2);
    s.options.delta_t = o.value("delta_t", s.options.delta_t);
    s.options.horizon = o.value("horizon", s.options.horizon);
    s.options.purify_cadence = o.value("purify_cadence", s.options.purify_cadence);
  }
  return s;
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ExperimentSpec::to_json_text() const {
  json j;
  j["model"] = model;
  j["mode"] = mode;
  j["local_dim"] = local_dim;
  j["sizes"] = sizes;
  j["sweep"] = sweep;
  j["steps_per_l"] = steps_per_size;
  j["steps"] = steps_abs;
  j["realizations"] = realizations;
  j["probes"] = probes;
  j["base_seed"] = base_seed;
  j["output"] = output;
  j["workers"] = workers;
  j["snapshot_steps"] = snapshot_steps;
  j["options"]["t0"] = options.t0;
  j["options"]["site"] = options.site;
  j["options"]["duration"] = options.duration;
  j["options"]["coupling"] = options.coupling;
  j["options"]["r1"] = options.r1;
  j["options"]["r2"] = options.r2;
  j["options"]["delta_t"] = options.delta_t;
  j["options"]["horizon"] = options.horizon;
  j["options"]["purify_cadence"] = options.purify_cadence;
  return j.dump(2);
}

// --- CSV loading and cell builders -------------------------------------------

std::vector<CsvRow> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("csv schema mismatch: empty file");
  if (line.rfind("model,L,control_value,realization,probe_name", 0) != 0)
    throw std::runtime_error("csv schema mismatch: bad header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CsvRow r;
    std::stringstream ss(line);
    std::string field;
    auto next = [&]() {
      if (!std::getline(ss, field, ','))
        throw std::runtime_error("csv schema mismatch: short row");
      return field;
    };
    r.model = next();
    r.size = std::stoi(next());
    r.control = std::stod(next());
    r.realization = std::stoull(next());
    r.probe = next();
    r.step = std::stoi(next());
    r.value = std::stod(next());
    r.log_z = std::stod(next());
    r.annihilated = std::stoi(next());
    rows.push_back(std::move(r));
  }
  return rows;
}

CellSamples cells_control_vs_final(const std::vector<CsvRow>& rows,
                                   const std::string& probe) {
  // last snapshot step per (L, control) group
  std::map<std::pair<int, double>, int> last_step;
  for (const auto& r : rows) {
    if (r.probe != probe || r.annihilated) continue;
    auto [it, fresh] = last_step.try_emplace({r.size, r.control}, r.step);
    if (!fresh) it->second = std::max(it->second, r.step);
  }
  CellSamples cells;
  for (const auto& r : rows) {
    if (r.probe != probe || r.annihilated) continue;
    if (r.step != last_step[{r.size, r.control}]) continue;
    cells[{r.size, r.control}].push_back(r.value);
  }
  return cells;
}

CellSamples cells_time_series(const std::vector<CsvRow>& rows,
                              const std::string& probe, bool shift_to_zero,
                              double min_x) {
  std::map<std::pair<int, double>, int> first_step;
  for (const auto& r : rows) {
    if (r.probe != probe || r.annihilated) continue;
    auto [it, fresh] = first_step.try_emplace({r.size, r.control}, r.step);
    if (!fresh) it->second = std::min(it->second, r.step);
  }
  CellSamples cells;
  for (const auto& r : rows) {
    if (r.probe != probe || r.annihilated) continue;
    double x = r.step;
    if (shift_to_zero) x -= first_step[{r.size, r.control}];
    if (x < min_x) continue;
    cells[{r.size, x}].push_back(r.value);
  }
  return cells;
}

CellSamples cells_free_energy_density(const std::vector<CsvRow>& rows, double v) {
  // one log_z per realization: take each realization's last snapshot row
  std::map<std::tuple<int, double, std::uint64_t>, std::pair<int, double>> per_real;
  std::map<std::tuple<int, double, std::uint64_t>, int> tmax;
  for (const auto& r : rows) {
    if (r.annihilated || r.probe == "annihilated") continue;
    auto key = std::make_tuple(r.size, r.control, r.realization);
    auto [it, fresh] = per_real.try_emplace(key, std::make_pair(r.step, r.log_z));
    if (!fresh && r.step > it->second.first) it->second = {r.step, r.log_z};
    auto [jt, f2] = tmax.try_emplace(key, r.step);
    if (!f2) jt->second = std::max(jt->second, r.step);
  }
  CellSamples cells;
  for (const auto& [key, sv] : per_real) {
    const auto& [L, control, real] = key;
    const int t = tmax[key];
    cells[{L, control}].push_back(-sv.second / (v * L * t));
  }
  return cells;
}

void write_fit_json(const FitResult& fit, const std::vector<std::string>& inputs,
                    const std::string& path) {
  json j;
  for (std::size_t k = 0; k < fit.param_names.size(); ++k) {
    j["params"][fit.param_names[k]] = fit.params[k];
    j["errors"][fit.param_names[k]] = fit.errors[k];
  }
  j["quality"] = fit.quality;
  j["diagnostics"] = fit.diagnostics;
  j["notes"] = fit.notes;
  j["provenance"]["inputs"] = inputs;
  j["provenance"]["version"] = version_string();
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mipt

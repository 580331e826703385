// Experiment runner and analysis front end.
//
//   miptsim simulate --config spec.json [overrides]
//   miptsim analyze <collapse|ceff|alpha|power|anisotropy> ...
//   miptsim validate --config spec.json
//   miptsim version

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "miptsim/experiment.hpp"

using namespace mipt;
using nlohmann::json;

namespace {

int fail_json(const std::string& kind, const std::string& detail) {
  json j;
  j["error"] = kind;
  j["detail"] = detail;
  std::cout << j.dump() << std::endl;
  return 2;
}

void apply_overrides(ExperimentSpec& spec, const std::vector<int>& sizes,
                     const std::vector<double>& sweep, int realizations,
                     long long seed, const std::string& output, int workers) {
  if (!sizes.empty()) spec.sizes = sizes;
  if (!sweep.empty()) spec.sweep = sweep;
  if (realizations > 0) spec.realizations = realizations;
  if (seed >= 0) spec.base_seed = static_cast<std::uint64_t>(seed);
  if (!output.empty()) spec.output = output;
  if (workers > 0) spec.workers = workers;
}

FitResult bootstrap_fit(const CellSamples& cells,
                        const std::function<FitResult(const DataSeries&)>& fit,
                        int resamples, std::uint64_t seed) {
  if (resamples > 0) return with_bootstrap(cells, fit, resamples, seed);
  return fit(aggregate_cells(cells));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"monitored-circuit / random-tensor-network criticality toolkit"};
  app.require_subcommand(1);

  // --- simulate ---------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "run an experiment from a config");
  std::string cfg_path, output_override;
  std::vector<int> sizes_override;
  std::vector<double> sweep_override;
  int realizations_override = 0, workers_override = 0;
  long long seed_override = -1;
  sim->add_option("--config", cfg_path, "experiment spec (json)")->required();
  sim->add_option("--sizes", sizes_override, "override sizes");
  sim->add_option("--sweep", sweep_override, "override sweep values");
  sim->add_option("--realizations", realizations_override, "override realizations");
  sim->add_option("--seed", seed_override, "override base seed");
  sim->add_option("--output", output_override, "override output prefix");
  sim->add_option("--workers", workers_override, "override worker count");

  // --- validate ---------------------------------------------------------
  auto* val = app.add_subcommand("validate", "dry-run spec check");
  std::string val_path;
  val->add_option("--config", val_path, "experiment spec (json)")->required();

  // --- version ----------------------------------------------------------
  auto* ver = app.add_subcommand("version", "print the version string");

  // --- analyze ----------------------------------------------------------
  auto* ana = app.add_subcommand("analyze", "fit simulation outputs");
  ana->require_subcommand(1);

  std::string in_csv, out_json = "fit.json", form = "i3";
  std::string probe = "i3";
  std::vector<double> pc_range{0.0, 1.0}, nu_range{0.5, 4.0};
  std::vector<double> z_range{0.5, 2.0}, beta_range{0.0, 1.0};
  double min_t_over_l = 1.0;
  int bootstrap_n = 200;
  std::uint64_t bootstrap_seed = 7777;

  auto* col = ana->add_subcommand("collapse", "finite-size scaling collapse");
  col->add_option("--input", in_csv)->required();
  col->add_option("--output", out_json);
  col->add_option("--form", form, "i3 | sa | sa_bulk");
  col->add_option("--probe", probe, "probe column to collapse");
  col->add_option("--pc-range", pc_range)->expected(2);
  col->add_option("--nu-range", nu_range)->expected(2);
  col->add_option("--z-range", z_range)->expected(2);
  col->add_option("--beta-range", beta_range)->expected(2);
  col->add_option("--min-t-over-l", min_t_over_l,
                  "discard early times t < c*L (sa form)");
  col->add_option("--bootstrap", bootstrap_n);
  col->add_option("--bootstrap-seed", bootstrap_seed);

  auto* ceff = ana->add_subcommand("ceff", "Casimir fit of the free-energy density");
  std::string ceff_in, ceff_out = "ceff.json";
  double anis_v = 0.70;
  std::vector<int> lmin_sweep;
  ceff->add_option("--input", ceff_in)->required();
  ceff->add_option("--output", ceff_out);
  ceff->add_option("--v", anis_v, "anisotropy factor in A = v L t");
  ceff->add_option("--lmin", lmin_sweep, "L_min sweep")->required();
  ceff->add_option("--bootstrap", bootstrap_n);
  ceff->add_option("--bootstrap-seed", bootstrap_seed);

  auto* alp = ana->add_subcommand("alpha", "half-cut log coefficients and a/n + b");
  std::string alp_in, alp_out = "alpha.json";
  int alp_nmax = 5;
  alp->add_option("--input", alp_in)->required();
  alp->add_option("--output", alp_out);
  alp->add_option("--nmax", alp_nmax, "largest Renyi index present");
  alp->add_option("--bootstrap", bootstrap_n);
  alp->add_option("--bootstrap-seed", bootstrap_seed);

  auto* pow = ana->add_subcommand("power", "power-law fit of I2 against L");
  std::string pow_in, pow_out = "power.json";
  pow->add_option("--input", pow_in)->required();
  pow->add_option("--output", pow_out);
  pow->add_option("--bootstrap", bootstrap_n);
  pow->add_option("--bootstrap-seed", bootstrap_seed);

  auto* anis = ana->add_subcommand("anisotropy", "space-time anisotropy factor");
  std::string sp_csv, t1_csv, t2_csv, anis_out = "anisotropy.json";
  std::vector<double> dts{0, 0};
  int anis_l = 16;
  anis->add_option("--spatial", sp_csv)->required();
  anis->add_option("--temporal1", t1_csv)->required();
  anis->add_option("--temporal2", t2_csv)->required();
  anis->add_option("--dt", dts, "the two temporal separations")->expected(2);
  anis->add_option("--l", anis_l, "system size");
  anis->add_option("--output", anis_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ver->parsed()) {
      std::cout << version_string() << "\n";
      return 0;
    }
    if (val->parsed()) {
      ExperimentSpec spec = ExperimentSpec::from_json_file(val_path);
      try {
        spec.validate();
      } catch (const std::exception& e) {
        return fail_json("validation", e.what());
      }
      std::cout << "{\"ok\":true}" << std::endl;
      return 0;
    }
    if (sim->parsed()) {
      ExperimentSpec spec = ExperimentSpec::from_json_file(cfg_path);
      apply_overrides(spec, sizes_override, sweep_override, realizations_override,
                      seed_override, output_override, workers_override);
      try {
        spec.validate();
      } catch (const std::exception& e) {
        return fail_json("validation", e.what());
      }
      const ExperimentOutput out = run_experiment(spec);
      std::cout << "wrote " << out.csv_path << " and " << out.json_path;
      if (out.annihilated > 0)
        std::cout << " (" << out.annihilated << " annihilated trajectories excluded)";
      std::cout << "\n";
      return 0;
    }

    // analyze subcommands
    FitResult fit;
    std::vector<std::string> inputs;
    std::string out_path;
    if (col->parsed()) {
      inputs = {in_csv};
      out_path = out_json;
      const auto rows = load_csv(in_csv);
      if (form == "i3") {
        const auto cells = cells_control_vs_final(rows, probe);
        const ScalingForm f =
            crossing_form(pc_range[0], pc_range[1], nu_range[0], nu_range[1]);
        fit = bootstrap_fit(
            cells, [&](const DataSeries& d) { return scaling_collapse(d, f); },
            bootstrap_n, bootstrap_seed);
      } else if (form == "sa") {
        auto cells = cells_time_series(rows, "sa", false, 0.0);
        CellSamples kept;
        for (auto& [key, v] : cells)
          if (key.x >= min_t_over_l * key.size) kept[key] = std::move(v);
        const ScalingForm f = purification_form(z_range[0], z_range[1]);
        fit = bootstrap_fit(
            kept, [&](const DataSeries& d) { return scaling_collapse(d, f); },
            bootstrap_n, bootstrap_seed);
      } else if (form == "sa_bulk") {
        const auto cells = cells_time_series(rows, "sa_bulk", true, 1.0);
        const ScalingForm f = order_parameter_form(beta_range[0], beta_range[1],
                                                   z_range[0], z_range[1]);
        fit = bootstrap_fit(
            cells, [&](const DataSeries& d) { return scaling_collapse(d, f); },
            bootstrap_n, bootstrap_seed);
      } else {
        return fail_json("usage", "unknown collapse form: " + form);
      }
    } else if (ceff->parsed()) {
      inputs = {ceff_in};
      out_path = ceff_out;
      const auto rows = load_csv(ceff_in);
      const auto cells = cells_free_energy_density(rows, anis_v);
      fit = bootstrap_fit(
          cells,
          [&](const DataSeries& d) { return casimir_fit(d, lmin_sweep); },
          bootstrap_n, bootstrap_seed);
    } else if (alp->parsed()) {
      inputs = {alp_in};
      out_path = alp_out;
      const auto rows = load_csv(alp_in);
      std::vector<std::array<double, 3>> alphas;
      json per_n;
      for (int n = 1; n <= alp_nmax; ++n) {
        const std::string pname = "halfcut_n" + std::to_string(n);
        const auto cells = cells_control_vs_final(rows, pname);
        if (cells.empty()) continue;
        const FitResult fr = bootstrap_fit(
            cells, [&](const DataSeries& d) { return fit_log_coefficient(d); },
            bootstrap_n, bootstrap_seed);
        alphas.push_back({static_cast<double>(n), fr.param("alpha"),
                          std::max(fr.error("alpha"), 1e-12)});
        per_n["alpha_n" + std::to_string(n)] = fr.param("alpha");
        per_n["alpha_n" + std::to_string(n) + "_err"] = fr.error("alpha");
      }
      fit = fit_alpha_form(alphas);
      for (auto it = per_n.begin(); it != per_n.end(); ++it)
        fit.diagnostics[it.key()] = it.value().get<double>();
    } else if (pow->parsed()) {
      inputs = {pow_in};
      out_path = pow_out;
      const auto rows = load_csv(pow_in);
      const auto cells = cells_control_vs_final(rows, "i2");
      fit = bootstrap_fit(
          cells, [&](const DataSeries& d) { return power_fit(d); }, bootstrap_n,
          bootstrap_seed);
    } else if (anis->parsed()) {
      inputs = {sp_csv, t1_csv, t2_csv};
      out_path = anis_out;
      auto mean_sig = [](const std::string& path) {
        const auto rows = load_csv(path);
        const auto cells = cells_control_vs_final(rows, "i2");
        if (cells.size() != 1)
          throw std::runtime_error("expected a single (L, control) cell in " + path);
        const DataSeries d = aggregate_cells(cells);
        return std::make_pair(d.points[0].y, d.points[0].sigma);
      };
      const auto [isp, ssp] = mean_sig(sp_csv);
      const auto [i1, s1] = mean_sig(t1_csv);
      const auto [i2v, s2] = mean_sig(t2_csv);
      AnisotropyInput in;
      in.dt1 = dts[0];
      in.i2_t1 = i1;
      in.sig_t1 = s1;
      in.dt2 = dts[1];
      in.i2_t2 = i2v;
      in.sig_t2 = s2;
      in.i2_spatial = isp;
      in.sig_spatial = ssp;
      in.size = anis_l;
      fit = anisotropy_factor(in);
    }

    write_fit_json(fit, inputs, out_path);
    std::cout << "wrote " << out_path << "\n";
    for (std::size_t k = 0; k < fit.param_names.size(); ++k)
      std::printf("  %-10s = %.6g +/- %.3g\n", fit.param_names[k].c_str(),
                  fit.params[k], fit.errors[k]);
    std::printf("  quality    = %.6g\n", fit.quality);
    return 0;
  } catch (const std::exception& e) {
    return fail_json("runtime", e.what());
  }
}

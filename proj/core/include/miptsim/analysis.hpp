#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mipt {

struct DataPoint {
  int size;      // L
  double x;      // control parameter or time
  double y;
  double sigma;  // standard error, > 0 for weighted fits
};

struct DataSeries {
  std::vector<DataPoint> points;
  std::string label;
};

struct FitParam {
  std::string name;
  double lo = 0.0, hi = 1.0;
  int grid = 21;
};

// Scaling form with parameterized x/y transforms. scale_y must be linear
// homogeneous in y (sigmas are scaled through it).
struct ScalingForm {
  std::string name;
  std::vector<FitParam> params;
  std::function<double(double x, int size, const std::vector<double>&)> scale_x;
  std::function<double(double y, int size, const std::vector<double>&)> scale_y;
};

// x' = L^{1/nu} (x - x_c), y' = y; params (x_c, nu)
ScalingForm crossing_form(double xc_lo, double xc_hi, double nu_lo, double nu_hi);
// x' = x / L^z, y' = y; params (z)
ScalingForm purification_form(double z_lo, double z_hi);
// x' = x / L^z, y' = y L^beta; params (beta, z)
ScalingForm order_parameter_form(double beta_lo, double beta_hi, double z_lo,
                                 double z_hi);

struct FitResult {
  std::vector<std::string> param_names;
  std::vector<double> params;
  std::vector<double> errors;  // bootstrap; zero when not resampled
  double quality = 0.0;        // collapse cost or chi^2/dof
  std::map<std::string, double> diagnostics;
  std::vector<std::string> notes;

  double param(const std::string& name) const;
  double error(const std::string& name) const;
};

struct NoOverlapError : std::runtime_error {
  NoOverlapError() : std::runtime_error("scaled supports of system sizes do not overlap") {}
};

// Master-curve collapse cost: for every point, squared deviation from the
// linear interpolation through the scaled points of the other system sizes,
// weighted by the combined sigma, normalized by the number of usable points.
double collapse_cost(const DataSeries& data, const ScalingForm& form,
                     const std::vector<double>& theta);

// coarse grid over the parameter box followed by shrinking local grids;
// deterministic, ties broken toward the lexicographically smaller vector
FitResult scaling_collapse(const DataSeries& data, const ScalingForm& form);

// weighted least squares of y against ln L; slope reported as "alpha"
FitResult fit_log_coefficient(const DataSeries& data);

// weighted least squares of alpha(n) in the basis {1/n, 1}; input tuples
// (n, alpha, sigma); params ("a", "b")
FitResult fit_alpha_form(const std::vector<std::array<double, 3>>& alphas);

// Casimir fit: slope m(L_min) of f against 1/L^2 using sizes L > L_min,
// then m(L_min) extrapolated against 1/L_min^2; c_eff = -6 m(inf) / pi.
FitResult casimir_fit(const DataSeries& f_of_l, const std::vector<int>& lmin_sweep);

// weighted fit of ln y against ln L under the convention y ~ L^-eta
FitResult power_fit(const DataSeries& data);

// Linear interpolation in Delta-t of the temporal I2 to match the spatial
// one; v = ln(1+sqrt 2) L / (pi t*). Temporal pairs must bracket the
// spatial value with dt1 < dt2.
struct AnisotropyInput {
  double dt1 = 0, i2_t1 = 0, sig_t1 = 0;
  double dt2 = 0, i2_t2 = 0, sig_t2 = 0;
  double i2_spatial = 0, sig_spatial = 0;
  int size = 0;
};
FitResult anisotropy_factor(const AnisotropyInput& in);

// crossing of two curves sampled on a shared grid: steepest sign-change
// segment of the difference, linearly interpolated
struct CrossingResult {
  double x = 0.0;
  bool found = false;
};
CrossingResult crossing_point(const std::vector<double>& xs,
                              const std::vector<double>& y1,
                              const std::vector<double>& y2);

// --- bootstrap over disorder realizations --------------------------------

struct CellKey {
  int size;
  double x;
  bool operator<(const CellKey& o) const {
    return size != o.size ? size < o.size : x < o.x;
  }
};
// per-(L, x) sets of per-realization values
using CellSamples = std::map<CellKey, std::vector<double>>;

DataSeries aggregate_cells(const CellSamples& cells);

// point estimate from the full aggregate; errors from `resamples`
// realization-level bootstrap replicas with a fixed seed
FitResult with_bootstrap(const CellSamples& cells,
                         const std::function<FitResult(const DataSeries&)>& fit,
                         int resamples = 200, std::uint64_t seed = 7777);

// line fit helper shared by the fitters
struct LineFit {
  double slope = 0, intercept = 0;
  double slope_err = 0, intercept_err = 0;
  double chi2_per_dof = 0;
  int dof = 0;
};
LineFit weighted_line_fit(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::vector<double>& sigma);

}  // namespace mipt

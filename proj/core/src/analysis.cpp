#include "miptsim/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "miptsim/rng.hpp"

namespace mipt {

double FitResult::param(const std::string& name) const {
  for (std::size_t k = 0; k < param_names.size(); ++k)
    if (param_names[k] == name) return params[k];
  throw std::invalid_argument("FitResult: no parameter " + name);
}

double FitResult::error(const std::string& name) const {
  for (std::size_t k = 0; k < param_names.size(); ++k)
    if (param_names[k] == name) return errors[k];
  throw std::invalid_argument("FitResult: no parameter " + name);
}

ScalingForm crossing_form(double xc_lo, double xc_hi, double nu_lo, double nu_hi) {
  ScalingForm f;
  f.name = "crossing";
  f.params = {{"x_c", xc_lo, xc_hi, 21}, {"nu", nu_lo, nu_hi, 21}};
  f.scale_x = [](double x, int L, const std::vector<double>& th) {
    return std::pow(static_cast<double>(L), 1.0 / th[1]) * (x - th[0]);
  };
  f.scale_y = [](double y, int, const std::vector<double>&) { return y; };
  return f;
}

ScalingForm purification_form(double z_lo, double z_hi) {
  ScalingForm f;
  f.name = "purification";
  f.params = {{"z", z_lo, z_hi, 41}};
  f.scale_x = [](double x, int L, const std::vector<double>& th) {
    return x / std::pow(static_cast<double>(L), th[0]);
  };
  f.scale_y = [](double y, int, const std::vector<double>&) { return y; };
  return f;
}

ScalingForm order_parameter_form(double beta_lo, double beta_hi, double z_lo,
                                 double z_hi) {
  ScalingForm f;
  f.name = "order_parameter";
  f.params = {{"beta", beta_lo, beta_hi, 21}, {"z", z_lo, z_hi, 21}};
  f.scale_x = [](double x, int L, const std::vector<double>& th) {
    return x / std::pow(static_cast<double>(L), th[1]);
  };
  f.scale_y = [](double y, int L, const std::vector<double>& th) {
    return y * std::pow(static_cast<double>(L), th[0]);
  };
  return f;
}

namespace {

struct ScaledPoint {
  double x, y, s;
  int size;
};

std::vector<DataPoint> canonical_points(const DataSeries& data) {
  std::vector<DataPoint> pts = data.points;
  std::sort(pts.begin(), pts.end(), [](const DataPoint& a, const DataPoint& b) {
    if (a.size != b.size) return a.size < b.size;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  return pts;
}

}  // namespace

double collapse_cost(const DataSeries& data, const ScalingForm& form,
                     const std::vector<double>& theta) {
  const auto pts = canonical_points(data);
  std::vector<ScaledPoint> sp(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    sp[k].x = form.scale_x(pts[k].x, pts[k].size, theta);
    sp[k].y = form.scale_y(pts[k].y, pts[k].size, theta);
    sp[k].s = form.scale_y(pts[k].sigma, pts[k].size, theta);
    sp[k].size = pts[k].size;
  }
  std::vector<std::size_t> order(sp.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sp[a].x < sp[b].x;
  });

  double cost = 0.0;
  long used = 0;
  std::vector<const ScaledPoint*> master;
  master.reserve(sp.size());
  for (std::size_t k = 0; k < sp.size(); ++k) {
    const ScaledPoint& p = sp[k];
    master.clear();
    for (std::size_t m : order)
      if (sp[m].size != p.size) master.push_back(&sp[m]);
    if (master.size() < 2) continue;
    if (p.x < master.front()->x || p.x > master.back()->x) continue;
    auto it = std::lower_bound(master.begin(), master.end(), p.x,
                               [](const ScaledPoint* q, double x) { return q->x < x; });
    const ScaledPoint* hi = (it == master.end()) ? master.back() : *it;
    const ScaledPoint* lo = (it == master.begin()) ? *it : *(it - 1);
    if (lo == hi) {
      if (it != master.end() && it + 1 != master.end())
        hi = *(it + 1);
      else if (it != master.begin())
        lo = *(it - 1);
    }
    double yhat, shat2;
    if (hi->x == lo->x) {
      yhat = 0.5 * (lo->y + hi->y);
      shat2 = 0.25 * (lo->s * lo->s + hi->s * hi->s);
    } else {
      const double w = (p.x - lo->x) / (hi->x - lo->x);
      yhat = (1.0 - w) * lo->y + w * hi->y;
      shat2 = (1.0 - w) * (1.0 - w) * lo->s * lo->s + w * w * hi->s * hi->s;
    }
    const double denom = p.s * p.s + shat2;
    if (denom <= 0.0) continue;
    const double r = p.y - yhat;
    cost += r * r / denom;
    ++used;
  }
  if (used == 0) throw NoOverlapError();
  return cost / static_cast<double>(used);
}

FitResult scaling_collapse(const DataSeries& data, const ScalingForm& form) {
  std::vector<int> sizes;
  for (const auto& p : data.points)
    if (std::find(sizes.begin(), sizes.end(), p.size) == sizes.end())
      sizes.push_back(p.size);
  if (sizes.size() < 2) throw NoOverlapError();
  if (sizes.size() < 3)
    throw std::invalid_argument("scaling_collapse: need >= 3 system sizes");

  const int npar = static_cast<int>(form.params.size());
  std::vector<double> lo(npar), hi(npar);
  for (int k = 0; k < npar; ++k) {
    lo[k] = form.params[k].lo;
    hi[k] = form.params[k].hi;
  }

  auto grid_search = [&](const std::vector<double>& a, const std::vector<double>& b,
                         const std::vector<int>& counts, std::vector<double>& best,
                         double& best_cost) {
    std::vector<int> idx(npar, 0);
    std::vector<double> theta(npar);
    while (true) {
      for (int k = 0; k < npar; ++k) {
        theta[k] = (counts[k] == 1)
                       ? 0.5 * (a[k] + b[k])
                       : a[k] + (b[k] - a[k]) * idx[k] / double(counts[k] - 1);
      }
      double c;
      try {
        c = collapse_cost(data, form, theta);
      } catch (const NoOverlapError&) {
        c = std::numeric_limits<double>::infinity();
      }
      if (c < best_cost || (c == best_cost && theta < best)) {
        best_cost = c;
        best = theta;
      }
      int k = 0;
      for (; k < npar; ++k) {
        if (++idx[k] < counts[k]) break;
        idx[k] = 0;
      }
      if (k == npar) break;
    }
  };

  std::vector<double> best(npar);
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> counts(npar);
  for (int k = 0; k < npar; ++k) counts[k] = form.params[k].grid;
  grid_search(lo, hi, counts, best, best_cost);
  if (!std::isfinite(best_cost)) throw NoOverlapError();

  // shrink around the incumbent
  std::vector<double> a = lo, b = hi;
  for (int round = 0; round < 10; ++round) {
    std::vector<double> na(npar), nb(npar);
    for (int k = 0; k < npar; ++k) {
      const double step = (b[k] - a[k]) / double(std::max(counts[k] - 1, 1));
      na[k] = std::max(lo[k], best[k] - 1.5 * step);
      nb[k] = std::min(hi[k], best[k] + 1.5 * step);
    }
    a = na;
    b = nb;
    std::vector<int> c2(npar, 11);
    grid_search(a, b, c2, best, best_cost);
    counts.assign(npar, 11);
  }

  FitResult res;
  for (const auto& p : form.params) res.param_names.push_back(p.name);
  res.params = best;
  res.errors.assign(npar, 0.0);
  res.quality = best_cost;
  res.diagnostics["n_points"] = static_cast<double>(data.points.size());

  // flat-landscape warning: probe one final step in each direction
  double flat_span = 0.0;
  for (int k = 0; k < npar; ++k) {
    const double step = (b[k] - a[k]) / 10.0;
    for (double s : {-step, step}) {
      std::vector<double> th = best;
      th[k] = std::clamp(th[k] + s, lo[k], hi[k]);
      try {
        flat_span = std::max(flat_span,
                             std::abs(collapse_cost(data, form, th) - best_cost));
      } catch (const NoOverlapError&) {
      }
    }
  }
  if (flat_span <= 1e-14 * std::max(best_cost, 1e-300)) {
    res.diagnostics["degenerate"] = 1.0;
    res.notes.push_back("cost landscape flat within tolerance");
  }
  return res;
}

LineFit weighted_line_fit(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::vector<double>& sigma) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || sigma.size() != n)
    throw std::invalid_argument("weighted_line_fit: need >= 2 points");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (sigma[k] <= 0.0)
      throw std::invalid_argument("weighted_line_fit: sigma must be positive");
    const double w = 1.0 / (sigma[k] * sigma[k]);
    sw += w;
    swx += w * x[k];
    swy += w * y[k];
    swxx += w * x[k] * x[k];
    swxy += w * x[k] * y[k];
  }
  const double delta = sw * swxx - swx * swx;
  if (delta <= 0.0) throw std::invalid_argument("weighted_line_fit: degenerate x");
  LineFit f;
  f.slope = (sw * swxy - swx * swy) / delta;
  f.intercept = (swxx * swy - swx * swxy) / delta;
  f.slope_err = std::sqrt(sw / delta);
  f.intercept_err = std::sqrt(swxx / delta);
  double chi2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = (y[k] - f.slope * x[k] - f.intercept) / sigma[k];
    chi2 += r * r;
  }
  f.dof = static_cast<int>(n) - 2;
  f.chi2_per_dof = f.dof > 0 ? chi2 / f.dof : 0.0;
  return f;
}

FitResult fit_log_coefficient(const DataSeries& data) {
  const auto pts = canonical_points(data);
  std::vector<double> x, y, s;
  for (const auto& p : pts) {
    x.push_back(std::log(static_cast<double>(p.size)));
    y.push_back(p.y);
    s.push_back(p.sigma);
  }
  std::vector<double> ux = x;
  std::sort(ux.begin(), ux.end());
  ux.erase(std::unique(ux.begin(), ux.end()), ux.end());
  if (ux.size() < 3)
    throw std::invalid_argument("fit_log_coefficient: need >= 3 sizes");
  const LineFit f = weighted_line_fit(x, y, s);
  FitResult res;
  res.param_names = {"alpha", "offset"};
  res.params = {f.slope, f.intercept};
  res.errors = {f.slope_err, f.intercept_err};
  res.quality = f.chi2_per_dof;
  return res;
}

FitResult fit_alpha_form(const std::vector<std::array<double, 3>>& alphas) {
  bool has_one = false, has_four = false;
  for (const auto& a : alphas) {
    if (a[0] == 1.0) has_one = true;
    if (a[0] >= 4.0) has_four = true;
  }
  if (alphas.size() < 3 || !has_one || !has_four)
    throw std::invalid_argument(
        "fit_alpha_form: need >= 3 indices including n = 1 and n >= 4");
  std::vector<double> x, y, s;
  for (const auto& a : alphas) {
    x.push_back(1.0 / a[0]);
    y.push_back(a[1]);
    s.push_back(a[2]);
  }
  const LineFit f = weighted_line_fit(x, y, s);  // alpha = a * (1/n) + b
  FitResult res;
  res.param_names = {"a", "b"};
  res.params = {f.slope, f.intercept};
  res.errors = {f.slope_err, f.intercept_err};
  res.quality = f.chi2_per_dof;
  return res;
}

FitResult casimir_fit(const DataSeries& f_of_l, const std::vector<int>& lmin_sweep) {
  const auto pts = canonical_points(f_of_l);
  std::vector<int> sizes;
  for (const auto& p : pts)
    if (std::find(sizes.begin(), sizes.end(), p.size) == sizes.end())
      sizes.push_back(p.size);
  if (sizes.size() < 4)
    throw std::invalid_argument("casimir_fit: need >= 4 sizes");

  std::vector<double> mx, my, ms;
  FitResult res;
  for (int lmin : lmin_sweep) {
    std::vector<double> x, y, s;
    for (const auto& p : pts) {
      if (p.size <= lmin) continue;
      x.push_back(1.0 / (static_cast<double>(p.size) * p.size));
      y.push_back(p.y);
      s.push_back(p.sigma);
    }
    std::vector<double> ux = x;
    std::sort(ux.begin(), ux.end());
    ux.erase(std::unique(ux.begin(), ux.end()), ux.end());
    if (ux.size() < 2) continue;  // this L_min leaves too little data
    const LineFit f = weighted_line_fit(x, y, s);
    mx.push_back(1.0 / (static_cast<double>(lmin) * lmin));
    my.push_back(f.slope);
    ms.push_back(f.slope_err);
    res.diagnostics["m_lmin_" + std::to_string(lmin)] = f.slope;
  }
  if (my.empty())
    throw std::invalid_argument("casimir_fit: every L_min was skipped");

  double m_inf, m_inf_err, quality = 0.0;
  if (my.size() == 1) {
    m_inf = my[0];
    m_inf_err = ms[0];
    res.notes.push_back("single usable L_min; no extrapolation");
  } else {
    const LineFit g = weighted_line_fit(mx, my, ms);  // m = m_inf + b / L_min^2
    m_inf = g.intercept;
    m_inf_err = g.intercept_err;
    quality = g.chi2_per_dof;
  }
  const double pi = std::acos(-1.0);
  res.param_names = {"c_eff", "m_inf"};
  res.params = {-6.0 * m_inf / pi, m_inf};
  res.errors = {6.0 * m_inf_err / pi, m_inf_err};
  res.quality = quality;
  return res;
}

FitResult power_fit(const DataSeries& data) {
  const auto pts = canonical_points(data);
  std::vector<int> sizes;
  std::vector<double> x, y, s;
  for (const auto& p : pts) {
    if (p.y <= 0.0) throw std::invalid_argument("power_fit: values must be > 0");
    if (std::find(sizes.begin(), sizes.end(), p.size) == sizes.end())
      sizes.push_back(p.size);
    x.push_back(std::log(static_cast<double>(p.size)));
    y.push_back(std::log(p.y));
    s.push_back(p.sigma / p.y);
  }
  if (sizes.size() < 3) throw std::invalid_argument("power_fit: need >= 3 sizes");
  const LineFit f = weighted_line_fit(x, y, s);
  FitResult res;
  res.param_names = {"eta", "log_amplitude"};
  res.params = {-f.slope, f.intercept};
  res.errors = {f.slope_err, f.intercept_err};
  res.quality = f.chi2_per_dof;
  return res;
}

FitResult anisotropy_factor(const AnisotropyInput& in) {
  if (!(in.dt1 < in.dt2))
    throw std::invalid_argument("anisotropy_factor: need dt1 < dt2");
  const double i1 = in.i2_t1, i2 = in.i2_t2, isp = in.i2_spatial;
  const double lo = std::min(i1, i2), hi = std::max(i1, i2);
  if (isp < lo || isp > hi)
    throw std::invalid_argument(
        "anisotropy_factor: spatial value not bracketed by the temporal pair");
  const double frac = (i1 - isp) / (i1 - i2);
  const double t_star = in.dt1 + frac * (in.dt2 - in.dt1);
  const double pi = std::acos(-1.0);
  const double c = std::log(1.0 + std::sqrt(2.0)) * in.size / pi;
  const double v = c / t_star;

  // Gaussian propagation through the interpolation
  const double den = i1 - i2;
  const double d_i1 = (isp - i2) / (den * den) * (in.dt2 - in.dt1);
  const double d_i2 = (i1 - isp) / (den * den) * (in.dt2 - in.dt1);
  const double d_isp = -1.0 / den * (in.dt2 - in.dt1);
  const double var_t = d_i1 * d_i1 * in.sig_t1 * in.sig_t1 +
                       d_i2 * d_i2 * in.sig_t2 * in.sig_t2 +
                       d_isp * d_isp * in.sig_spatial * in.sig_spatial;
  const double sig_t = std::sqrt(var_t);
  const double sig_v = c / (t_star * t_star) * sig_t;

  FitResult res;
  res.param_names = {"v", "t_star"};
  res.params = {v, t_star};
  res.errors = {sig_v, sig_t};
  res.diagnostics["interp_fraction"] = frac;
  return res;
}

CrossingResult crossing_point(const std::vector<double>& xs,
                              const std::vector<double>& y1,
                              const std::vector<double>& y2) {
  CrossingResult out;
  if (xs.size() < 2 || y1.size() != xs.size() || y2.size() != xs.size())
    return out;
  double best_drop = -1.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double d0 = y1[k] - y2[k];
    const double d1 = y1[k + 1] - y2[k + 1];
    if (d0 == 0.0 && d1 == 0.0) continue;
    if ((d0 > 0.0 && d1 > 0.0) || (d0 < 0.0 && d1 < 0.0)) continue;
    const double drop = std::abs(d0 - d1);
    if (drop <= best_drop) continue;
    best_drop = drop;
    out.x = (d0 == d1) ? xs[k] : xs[k] + d0 * (xs[k + 1] - xs[k]) / (d0 - d1);
    out.found = true;
  }
  return out;
}

DataSeries aggregate_cells(const CellSamples& cells) {
  DataSeries out;
  for (const auto& [key, vals] : cells) {
    if (vals.empty()) continue;
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    double stderr_ = 0.0;
    if (vals.size() > 1) {
      var /= static_cast<double>(vals.size() - 1);
      stderr_ = std::sqrt(var / static_cast<double>(vals.size()));
    }
    out.points.push_back({key.size, key.x, mean, stderr_});
  }
  return out;
}

FitResult with_bootstrap(const CellSamples& cells,
                         const std::function<FitResult(const DataSeries&)>& fit,
                         int resamples, std::uint64_t seed) {
  FitResult central = fit(aggregate_cells(cells));

  const DataSeries base = aggregate_cells(cells);
  std::map<CellKey, double> base_sigma;
  for (const auto& p : base.points) base_sigma[{p.size, p.x}] = p.sigma;

  std::vector<std::vector<double>> draws(central.params.size());
  RngStream rng(seed, 0);
  int failures = 0;
  for (int b = 0; b < resamples; ++b) {
    DataSeries replica;
    for (const auto& [key, vals] : cells) {
      const std::size_t n = vals.size();
      if (n == 0) continue;
      double mean = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const auto pick = static_cast<std::size_t>(rng.uniform() * n);
        mean += vals[pick < n ? pick : n - 1];
      }
      mean /= static_cast<double>(n);
      replica.points.push_back({key.size, key.x, mean, base_sigma[key]});
    }
    try {
      const FitResult r = fit(replica);
      for (std::size_t k = 0; k < r.params.size(); ++k)
        draws[k].push_back(r.params[k]);
    } catch (const std::exception&) {
      ++failures;
    }
  }
  for (std::size_t k = 0; k < central.params.size(); ++k) {
    const auto& d = draws[k];
    if (d.size() < 2) continue;
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    central.errors[k] = std::sqrt(var / static_cast<double>(d.size() - 1));
  }
  central.diagnostics["bootstrap_resamples"] = resamples;
  if (failures > 0) central.diagnostics["bootstrap_failures"] = failures;
  return central;
}

}  // namespace mipt

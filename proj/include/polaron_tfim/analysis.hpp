#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polaron_tfim/errors.hpp"
#include "polaron_tfim/golden_section.hpp"
#include "polaron_tfim/model.hpp"
#include "polaron_tfim/parallel.hpp"
#include "polaron_tfim/qmc_engine.hpp"

namespace polaron_tfim::analysis {

/// Mean fraction of sites whose projected spin changes between consecutive
/// snapshots: (1/N_steps) sum_t (1/2N) sum_i |s_i(t+1) - s_i(t)|.
inline double reconfiguration_rate(std::span<const SpinConfig> snapshots) {
  if (snapshots.size() < 2) throw UndefinedRateError("rate needs at least two snapshots");
  const int n = snapshots.front().size();
  long long flips = 0;
  for (std::size_t t = 1; t < snapshots.size(); ++t) {
    if (snapshots[t].size() != n) throw GeometryMismatchError("snapshots differ in size");
    const auto& a = snapshots[t - 1].spins();
    const auto& b = snapshots[t].spins();
    for (int i = 0; i < n; ++i) flips += std::abs(b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)]);
  }
  const double steps = static_cast<double>(snapshots.size() - 1);
  return static_cast<double>(flips) / (2.0 * n) / steps;
}

inline double reconfiguration_rate(const qmc::Trajectory& traj) { return reconfiguration_rate(traj.snapshots); }

struct RatePoint {
  double T = 0.0;
  double R = 0.0;
  double R_stderr = 0.0;
  int n_seeds = 0;
  int n_steps = 0;
  int slices = 0;  // Trotter slices used; not serialized to CSV
};

struct RateCurve {
  double h_x = 0.0;
  std::vector<RatePoint> points;
  int width = 0;
  int height = 0;
  std::vector<std::uint64_t> seeds;

  void validate() const {
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto& p = points[k];
      if (!(p.T > 0.0)) throw PreconditionError("rate curve temperatures must be positive");
      if (k > 0 && !(p.T > points[k - 1].T)) throw PreconditionError("rate curve temperatures must increase strictly");
      if (!(p.R >= 0.0 && p.R <= 1.0)) throw PreconditionError("rate outside [0, 1]");
    }
  }
};

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Standard error of the mean; 0 for a single sample.
inline double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

/// R(T) on a temperature grid, averaged over seeds. Chain (T, seed) runs with
/// rng seed `seed`; the result does not depend on `jobs`.
inline RateCurve rate_vs_temperature(const SpinConfig& init, const ModelParams& params, std::span<const double> t_grid,
                                     const qmc::TrotterPolicy& policy, int n_steps,
                                     std::span<const std::uint64_t> seeds, int jobs = 1) {
  if (t_grid.empty()) throw PreconditionError("temperature grid is empty");
  if (seeds.empty()) throw PreconditionError("at least one seed is required");
  if (n_steps < 1) throw PreconditionError("rate needs at least one step");
  std::vector<double> grid(t_grid.begin(), t_grid.end());
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw PreconditionError("temperature grid must increase strictly");
  }

  const std::size_t n_t = grid.size();
  const std::size_t n_s = seeds.size();
  std::vector<double> rates(n_t * n_s);
  std::vector<int> slices(n_t);
  for (std::size_t a = 0; a < n_t; ++a) slices[a] = qmc::choose_slices(params, 1.0 / grid[a], policy);

  parallel_for_index(n_t * n_s, jobs, [&](std::size_t task) {
    const std::size_t a = task / n_s;
    const std::size_t b = task % n_s;
    const auto traj = qmc::run_relaxation(init, params, grid[a], slices[a], n_steps, seeds[b]);
    rates[task] = reconfiguration_rate(traj);
  });

  RateCurve curve;
  curve.h_x = params.h_x;
  curve.width = init.geometry().width();
  curve.height = init.geometry().height();
  curve.seeds.assign(seeds.begin(), seeds.end());
  for (std::size_t a = 0; a < n_t; ++a) {
    std::span<const double> r(rates.data() + a * n_s, n_s);
    curve.points.push_back({grid[a], mean(r), standard_error(r), static_cast<int>(n_s), n_steps, slices[a]});
  }
  return curve;
}

/// T -> h_x^n T on every point; R is untouched.
inline std::vector<RateCurve> rescale_curves(std::span<const RateCurve> curves, double n) {
  std::vector<RateCurve> out(curves.begin(), curves.end());
  for (auto& c : out) {
    if (!(c.h_x > 0.0)) throw PreconditionError("rescaling undefined for h_x <= 0");
    const double factor = std::pow(c.h_x, n);
    for (auto& p : c.points) p.T *= factor;
  }
  return out;
}

inline constexpr int kCollapseGridPoints = 64;

namespace detail {

struct LogCurve {
  double h_x = 0.0;
  std::vector<double> log_t;
  std::vector<double> log_r;
};

/// Drops R = 0 points (log undefined) and orders curves by h_x so the objective
/// does not depend on input order.
inline std::vector<LogCurve> to_log_curves(std::span<const RateCurve> curves) {
  std::vector<LogCurve> out;
  for (const auto& c : curves) {
    if (!(c.h_x > 0.0)) throw PreconditionError("collapse needs h_x > 0 on every curve");
    LogCurve lc;
    lc.h_x = c.h_x;
    for (const auto& p : c.points) {
      if (p.R > 0.0) {
        lc.log_t.push_back(std::log(p.T));
        lc.log_r.push_back(std::log(p.R));
      }
    }
    if (lc.log_t.size() < 2) throw PreconditionError("curve has fewer than two nonzero rate points");
    out.push_back(std::move(lc));
  }
  std::stable_sort(out.begin(), out.end(), [](const LogCurve& a, const LogCurve& b) {
    if (a.h_x != b.h_x) return a.h_x < b.h_x;
    return a.log_t < b.log_t;
  });
  return out;
}

inline double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  if (hi == 0) return ys.front();
  if (hi >= xs.size()) return ys.back();
  const std::size_t lo = hi - 1;
  const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

inline double residual(const std::vector<LogCurve>& curves, double n, int grid_points) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    const double shift = n * std::log(c.h_x);
    lo = std::max(lo, c.log_t.front() + shift);
    hi = std::min(hi, c.log_t.back() + shift);
  }
  if (!(hi > lo)) throw NoOverlapError("rescaled temperature supports do not overlap");

  const std::size_t n_c = curves.size();
  std::vector<double> pooled;
  pooled.reserve(n_c * static_cast<std::size_t>(grid_points));
  double within = 0.0;
  std::vector<double> column(n_c);
  for (int g = 0; g < grid_points; ++g) {
    const double x = lo + (hi - lo) * g / (grid_points - 1);
    double m = 0.0;
    for (std::size_t c = 0; c < n_c; ++c) {
      column[c] = interpolate(curves[c].log_t, curves[c].log_r, x - n * std::log(curves[c].h_x));
      m += column[c];
    }
    m /= static_cast<double>(n_c);
    double v = 0.0;
    for (double y : column) v += (y - m) * (y - m);
    within += v / static_cast<double>(n_c);
    pooled.insert(pooled.end(), column.begin(), column.end());
  }
  within /= grid_points;

  const double pm = mean(pooled);
  double total = 0.0;
  for (double y : pooled) total += (y - pm) * (y - pm);
  total /= static_cast<double>(pooled.size());
  if (total == 0.0) return 0.0;
  return within / total;
}

}  // namespace detail

/// Normalized cross-curve variance of log R on a common log T' grid spanning the
/// intersection of the rescaled supports. 0 is a perfect collapse; 1 means no
/// more agreement than the pooled spread.
inline double collapse_residual(std::span<const RateCurve> curves, double n, int grid_points = kCollapseGridPoints) {
  if (curves.size() < 2) throw PreconditionError("collapse needs at least two curves");
  return detail::residual(detail::to_log_curves(curves), n, grid_points);
}

struct CollapseResult {
  double n = 0.0;
  double residual = 0.0;
  double n_min = 0.0;
  double n_max = 0.0;
  std::vector<std::pair<double, double>> trace;  // coarse grid (n, residual)
  std::vector<RateCurve> rescaled;
  int dropped_points = 0;  // R = 0 points left out of the log-log objective
};

/// Coarse scan of n over [n_min, n_max] at `step`, then golden-section
/// refinement to `tol` around the best grid point.
inline CollapseResult fit_collapse_exponent(std::span<const RateCurve> curves, double n_min = 0.0, double n_max = 3.0,
                                            double step = 0.01, double tol = 1e-3) {
  if (curves.size() < 3) throw PreconditionError("collapse fit needs at least three curves");
  if (!(n_max > n_min) || !(step > 0.0)) throw PreconditionError("invalid exponent search interval");
  std::vector<double> hx;
  for (const auto& c : curves) hx.push_back(c.h_x);
  std::sort(hx.begin(), hx.end());
  if (std::adjacent_find(hx.begin(), hx.end()) != hx.end()) throw PreconditionError("curves must have distinct h_x");

  const auto logs = detail::to_log_curves(curves);
  auto objective = [&](double n) {
    try {
      return detail::residual(logs, n, kCollapseGridPoints);
    } catch (const NoOverlapError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  CollapseResult result;
  result.n_min = n_min;
  result.n_max = n_max;
  const auto steps = static_cast<long>(std::floor((n_max - n_min) / step + 1e-9));
  for (long k = 0; k <= steps + 1; ++k) {
    const double n = k > steps ? n_max : n_min + static_cast<double>(k) * step;
    if (k > steps && n <= n_min + static_cast<double>(steps) * step) break;
    const double r = objective(n);
    if (std::isfinite(r)) result.trace.emplace_back(n, r);
  }
  if (result.trace.empty()) throw FitImpossibleError("no exponent in the search interval gives overlapping curves");

  const auto best = std::min_element(result.trace.begin(), result.trace.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  result.n = best->first;
  result.residual = best->second;
  const auto refined = golden_section_minimize(objective, std::max(n_min, result.n - step),
                                               std::min(n_max, result.n + step), tol);
  if (refined.fx < result.residual) {
    result.n = refined.x;
    result.residual = refined.fx;
  }
  result.rescaled = rescale_curves(curves, result.n);
  for (const auto& c : curves) {
    for (const auto& p : c.points) result.dropped_points += p.R > 0.0 ? 0 : 1;
  }
  return result;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline constexpr const char* kRateCsvHeader = "h_x,T,R,R_stderr,n_seeds,n_steps";

inline void write_rate_csv(std::ostream& os, const RateCurve& curve) {
  os << kRateCsvHeader << '\n';
  for (const auto& p : curve.points) {
    os << format_double(curve.h_x) << ',' << format_double(p.T) << ',' << format_double(p.R) << ','
       << format_double(p.R_stderr) << ',' << p.n_seeds << ',' << p.n_steps << '\n';
  }
}

/// Parses one or more rate CSV bodies; rows are grouped into curves by h_x.
inline std::vector<RateCurve> read_rate_csv(std::istream& is) {
  std::vector<RateCurve> curves;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == kRateCsvHeader) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 6) throw Error("rate CSV line " + std::to_string(line_no) + ": expected 6 fields");
    RatePoint p;
    double h_x = 0.0;
    try {
      h_x = std::stod(fields[0]);
      p.T = std::stod(fields[1]);
      p.R = std::stod(fields[2]);
      p.R_stderr = std::stod(fields[3]);
      p.n_seeds = std::stoi(fields[4]);
      p.n_steps = std::stoi(fields[5]);
    } catch (const std::exception&) {
      throw Error("rate CSV line " + std::to_string(line_no) + ": malformed number");
    }
    auto it = std::find_if(curves.begin(), curves.end(), [&](const RateCurve& c) { return c.h_x == h_x; });
    if (it == curves.end()) {
      curves.push_back(RateCurve{h_x, {}, 0, 0, {}});
      it = std::prev(curves.end());
    }
    it->points.push_back(p);
  }
  for (auto& c : curves) {
    std::sort(c.points.begin(), c.points.end(), [](const RatePoint& a, const RatePoint& b) { return a.T < b.T; });
    c.validate();
  }
  return curves;
}

inline nlohmann::json to_json(const CollapseResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& [n, res] : r.trace) trace.push_back({n, res});
  return {{"n", r.n}, {"residual", r.residual}, {"trace", trace}};
}

}  // namespace polaron_tfim::analysis

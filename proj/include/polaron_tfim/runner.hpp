#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "polaron_tfim/analysis.hpp"
#include "polaron_tfim/config.hpp"
#include "polaron_tfim/ed_oracle.hpp"
#include "polaron_tfim/errors.hpp"
#include "polaron_tfim/lattice.hpp"
#include "polaron_tfim/model.hpp"
#include "polaron_tfim/parallel.hpp"
#include "polaron_tfim/qmc_engine.hpp"
#include "polaron_tfim/swtheory.hpp"

#ifndef POLARON_TFIM_VERSION
#define POLARON_TFIM_VERSION "0.0.0"
#endif

namespace polaron_tfim {

inline constexpr const char* kVersion = POLARON_TFIM_VERSION;
inline constexpr const char* kOutputEnv = "POLARON_TFIM_OUT";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3 };

namespace fs = std::filesystem;

/// Writes through a hidden temporary in the target directory and renames it into
/// place, so readers never observe a partially written file.
inline void write_file_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    body(os);
    os.flush();
    if (!os) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline void write_file_atomic(const fs::path& path, const std::string& content) {
  write_file_atomic(path, [&](std::ostream& os) { os << content; });
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct RunOptions {
  int jobs = 1;
  /// --out; overrides output.dir and the environment default.
  std::string out_dir;
};

inline fs::path resolve_output_dir(const RunConfig& cfg, const RunOptions& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') return env;
  return "out";
}

inline std::string hx_file_tag(double h_x) {
  std::ostringstream os;
  os << h_x;
  return os.str();
}

inline std::string rate_csv_name(double h_x) { return "rates_hx" + hx_file_tag(h_x) + ".csv"; }

inline nlohmann::json manifest_base(const RunConfig& cfg) {
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : cfg.resolved) config[k] = v;
  return {{"kind", to_string(cfg.kind)}, {"version", kVersion}, {"config", config}};
}

inline SpinConfig initial_config(const RunConfig& cfg) {
  const LatticeGeom geom = build_lattice(cfg.width, cfg.height);
  if (cfg.init == InitKind::GroundState) return ground_state(geom, cfg.left);
  return domain_wall_config(geom, cfg.left, cfg.right, cfg.wall_column);
}

namespace runner_detail {

inline nlohmann::json run_relax(const RunConfig& cfg, const RunOptions& opts, const fs::path& dir) {
  const SpinConfig init = initial_config(cfg);
  const int slices = qmc::choose_slices(cfg.model, 1.0 / cfg.temperature, cfg.trotter);
  std::vector<qmc::Trajectory> runs(cfg.seeds.size());
  parallel_for_index(cfg.seeds.size(), opts.jobs, [&](std::size_t k) {
    runs[k] = qmc::run_relaxation(init, cfg.model, cfg.temperature, slices, cfg.n_steps, cfg.seeds[k]);
  });

  nlohmann::json results = nlohmann::json::array();
  for (const auto& traj : runs) {
    const std::string name = "trajectory_seed" + std::to_string(traj.seed) + ".jsonl";
    if (cfg.write_trajectory) {
      write_file_atomic(dir / name, [&](std::ostream& os) {
        for (std::size_t t = 0; t < traj.snapshots.size(); ++t) {
          nlohmann::json line = to_json(traj.snapshots[t]);
          line["sweep"] = t;
          line["energy"] = classical_energy(traj.snapshots[t], cfg.model);
          line["density"] = polaron_density(traj.snapshots[t]);
          os << line.dump() << '\n';
        }
      });
    }
    const auto& first = traj.snapshots.front();
    const auto& last = traj.snapshots.back();
    results.push_back({{"seed", traj.seed},
                       {"file", cfg.write_trajectory ? nlohmann::json(name) : nlohmann::json(nullptr)},
                       {"initial_energy", classical_energy(first, cfg.model)},
                       {"final_energy", classical_energy(last, cfg.model)},
                       {"initial_density", polaron_density(first)},
                       {"final_density", polaron_density(last)},
                       {"rate", analysis::reconfiguration_rate(traj)}});
  }
  nlohmann::json manifest = manifest_base(cfg);
  manifest["slices"] = slices;
  manifest["runs"] = results;
  write_file_atomic(dir / "manifest_relax.json", dump(manifest));
  return manifest;
}

inline nlohmann::json run_rates(const RunConfig& cfg, const RunOptions& opts, const fs::path& dir) {
  const SpinConfig init = initial_config(cfg);
  std::vector<analysis::RateCurve> curves;
  for (double h_x : cfg.h_x_list) {
    ModelParams params = cfg.model;
    params.h_x = h_x;
    curves.push_back(analysis::rate_vs_temperature(init, params, cfg.t_grid, cfg.trotter, cfg.n_steps, cfg.seeds,
                                                   opts.jobs));
  }
  nlohmann::json files = nlohmann::json::array();
  for (const auto& c : curves) {
    const std::string name = rate_csv_name(c.h_x);
    write_file_atomic(dir / name, [&](std::ostream& os) { analysis::write_rate_csv(os, c); });
    std::vector<int> slices;
    for (const auto& p : c.points) slices.push_back(p.slices);
    files.push_back({{"h_x", c.h_x}, {"file", name}, {"slices", slices}});
  }
  nlohmann::json manifest = manifest_base(cfg);
  manifest["curves"] = files;
  write_file_atomic(dir / "manifest_rates.json", dump(manifest));
  return manifest;
}

inline std::vector<analysis::RateCurve> load_rate_curves(const fs::path& input) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.starts_with("rates_hx") && name.ends_with(".csv")) files.push_back(e.path());
    }
  } else if (fs::is_regular_file(input)) {
    files.push_back(input);
  } else {
    throw Error("collapse input " + input.string() + " does not exist");
  }
  std::sort(files.begin(), files.end());
  std::vector<analysis::RateCurve> curves;
  for (const auto& f : files) {
    std::ifstream is(f);
    for (auto& c : analysis::read_rate_csv(is)) curves.push_back(std::move(c));
  }
  if (curves.empty()) throw Error("no rate curves found in " + input.string());
  return curves;
}

inline nlohmann::json run_collapse(const RunConfig& cfg, const fs::path& dir) {
  const fs::path input = cfg.collapse_input.empty() ? dir : fs::path(cfg.collapse_input);
  const auto curves = load_rate_curves(input);
  const auto fit = analysis::fit_collapse_exponent(curves, cfg.n_min, cfg.n_max);

  nlohmann::json result = analysis::to_json(fit);
  nlohmann::json at_zero = nullptr;
  try {
    at_zero = analysis::collapse_residual(curves, 0.0);
  } catch (const NoOverlapError&) {
  }
  result["residual_at_zero"] = at_zero;
  result["dropped_points"] = fit.dropped_points;
  std::vector<double> hx;
  for (const auto& c : curves) hx.push_back(c.h_x);
  result["h_x"] = hx;
  result["search_interval"] = {cfg.n_min, cfg.n_max};
  write_file_atomic(dir / "collapse.json", dump(result));

  nlohmann::json manifest = manifest_base(cfg);
  manifest["n"] = fit.n;
  manifest["residual"] = fit.residual;
  manifest["residual_at_zero"] = at_zero;
  manifest["reference_n"] = 1.2;
  manifest["h_x"] = hx;
  write_file_atomic(dir / "manifest_collapse.json", dump(manifest));
  return result;
}

inline nlohmann::json run_sw_check(const RunConfig& cfg, const fs::path& dir) {
  const auto sub = sw::build_subspace(cfg.model.J, cfg.model.h_z, cfg.model.h_x, cfg.Z_h, cfg.Z_p);
  const auto num = sw::schrieffer_wolff(sub);
  const sw::Matrix4 S_closed = sw::closed_form_generator(sub);
  const double lam = sw::closed_form_lambda(sub);

  double deviation = (num.S - S_closed).cwiseAbs().maxCoeff();
  deviation = std::max(deviation, std::abs(num.alpha - sw::closed_form_alpha(sub)));
  deviation = std::max(deviation, std::abs(num.beta - sw::closed_form_beta(sub)));
  if (sub.h_x > 0.0) deviation = std::max(deviation, std::abs(num.lambda - lam));
  nlohmann::json hprime_dev = nullptr;
  if (const auto closed = sw::closed_form_correction(sub)) {
    const double d = ((num.Hprime - sub.H0) - *closed).cwiseAbs().maxCoeff();
    hprime_dev = d;
    deviation = std::max(deviation, d);
  }
  nlohmann::json out{{"alpha", sw::closed_form_alpha(sub)},
                     {"beta", sw::closed_form_beta(sub)},
                     {"lambda", lam},
                     {"t", sw::effective_hopping(sub.J, sub.h_z, sub.Z_h, sub.Z_p, sub.h_x)},
                     {"max_commutator_residual", sw::commutator_residual(sub, num.S)},
                     {"max_closed_numeric_deviation", deviation},
                     {"hprime_deviation", hprime_dev},
                     {"degenerate_environment", sub.Z_h == sub.Z_p}};
  write_file_atomic(dir / "sw_check.json", dump(out));
  nlohmann::json manifest = manifest_base(cfg);
  manifest["result"] = out;
  write_file_atomic(dir / "manifest_sw-check.json", dump(manifest));
  return out;
}

inline nlohmann::json run_ed_check(const RunConfig& cfg, const fs::path& dir) {
  std::vector<double> hx = cfg.h_x_list;
  std::vector<double> t;
  for (double h : hx) t.push_back(ed::sw_pair_hopping(cfg.model.J, cfg.model.h_z, cfg.Z_h, cfg.Z_p, h));
  const double slope = ed::fit_hopping_exponent(hx, t);
  const double lam = sw::closed_form_lambda(cfg.model.J, cfg.model.h_z, cfg.Z_h, cfg.Z_p);

  // Richardson applies when the sorted list halves at every step.
  std::vector<std::size_t> order(hx.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return hx[a] > hx[b]; });
  bool halving = true;
  std::vector<double> ratios;
  for (std::size_t k = 0; k < order.size(); ++k) {
    ratios.push_back(t[order[k]] / (hx[order[k]] * hx[order[k]]));
    if (k > 0 && std::abs(hx[order[k - 1]] - 2.0 * hx[order[k]]) > 1e-12 * hx[order[k - 1]]) halving = false;
  }
  nlohmann::json extrapolated = nullptr;
  if (halving) extrapolated = ed::richardson_even(ratios);

  nlohmann::json out{{"h_x", hx},
                     {"t_eff", t},
                     {"slope", slope},
                     {"lambda", lam},
                     {"lambda_richardson", extrapolated}};
  write_file_atomic(dir / "ed_check.json", dump(out));
  nlohmann::json manifest = manifest_base(cfg);
  manifest["result"] = out;
  write_file_atomic(dir / "manifest_ed-check.json", dump(manifest));
  return out;
}

}  // namespace runner_detail

/// Runs one experiment; outputs land in the resolved output directory.
/// Returns the summary JSON (also persisted as the kind's manifest).
inline nlohmann::json run_experiment(const RunConfig& cfg, const RunOptions& opts = {}) {
  const fs::path dir = resolve_output_dir(cfg, opts);
  fs::create_directories(dir);
  switch (cfg.kind) {
    case ExperimentKind::Relax: return runner_detail::run_relax(cfg, opts, dir);
    case ExperimentKind::Rates: return runner_detail::run_rates(cfg, opts, dir);
    case ExperimentKind::Collapse: return runner_detail::run_collapse(cfg, dir);
    case ExperimentKind::SwCheck: return runner_detail::run_sw_check(cfg, dir);
    case ExperimentKind::EdCheck: return runner_detail::run_ed_check(cfg, dir);
  }
  throw Error("unhandled experiment kind");
}

inline nlohmann::json error_json(const std::string& kind, const std::exception& e) {
  nlohmann::json err{{"kind", kind}, {"message", e.what()}};
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    err["key"] = ce->key();
    err["line"] = ce->line();
  }
  return {{"error", err}};
}

}  // namespace polaron_tfim

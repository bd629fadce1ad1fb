#pragma once

// Discrete-time path-integral Monte Carlo for the transverse-field Ising model.
//
// Suzuki-Trotter maps the quantum partition function onto M coupled classical
// replicas. The reduced action of a worldline is
//
//   S = dtau * sum_k E_cl(slice k) - k_tau * sum_{i,k} s_{i,k} s_{i,k+1},
//
// with dtau = beta / M, periodic in k, and k_tau = 1/2 ln coth(dtau h_x).
// Local Metropolis moves flip one (site, slice) spin. With h_x = 0 and M = 1 the
// update is ordinary single-spin Metropolis at temperature T.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "polaron_tfim/errors.hpp"
#include "polaron_tfim/model.hpp"
#include "polaron_tfim/rng.hpp"

namespace polaron_tfim::qmc {

/// k_tau = 1/2 ln coth(beta h_x / M).
inline double trotter_coupling(double h_x, double beta, int slices) {
  if (!(h_x > 0.0)) throw ClassicalLimitError("no Trotter coupling at h_x = 0 (classical limit)");
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  if (slices < 2) throw PreconditionError("Trotter coupling needs at least two slices");
  const double x = beta * h_x / slices;
  // coth(x) = 1 + 2 / (e^{2x} - 1); log1p keeps precision when x is large.
  return 0.5 * std::log1p(2.0 / std::expm1(2.0 * x));
}

/// Slice-count policy: at least `min_slices`, raised until
/// dtau * max(6J + |h_z|, h_x) <= max_dtau_energy when `auto_raise` is set.
struct TrotterPolicy {
  int min_slices = 32;
  bool auto_raise = true;
  double max_dtau_energy = 0.3;
};

inline int choose_slices(const ModelParams& params, double beta, const TrotterPolicy& policy) {
  if (params.h_x == 0.0) return 1;
  int m = std::max(2, policy.min_slices);
  if (policy.auto_raise) {
    const double scale = std::max(6.0 * params.J + std::abs(params.h_z), params.h_x);
    const double needed = std::ceil(beta * scale / policy.max_dtau_energy - 1e-9);
    if (needed > m) m = static_cast<int>(needed);
  }
  return m;
}

class WorldLine {
 public:
  using Spin = SpinConfig::Spin;

  WorldLine(const SpinConfig& init, int slices, double beta, const ModelParams& params)
      : geom_(init.geometry()), slices_(slices), beta_(beta), params_(params) {
    params.validate();
    if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionError("beta must be positive and finite");
    if (params.h_x > 0.0 && slices < 2) throw PreconditionError("h_x > 0 requires at least two Trotter slices");
    if (params.h_x == 0.0 && slices != 1) {
      throw PreconditionError("h_x = 0 is the classical limit and requires exactly one slice");
    }
    k_tau_ = params.h_x > 0.0 ? trotter_coupling(params.h_x, beta, slices) : 0.0;
    spins_.resize(static_cast<std::size_t>(geom_.size()) * static_cast<std::size_t>(slices));
    for (int i = 0; i < geom_.size(); ++i) {
      for (int k = 0; k < slices; ++k) spins_[offset(i, k)] = init[i];
    }
  }

  const LatticeGeom& geometry() const noexcept { return geom_; }
  const ModelParams& params() const noexcept { return params_; }
  int slices() const noexcept { return slices_; }
  int sites() const noexcept { return geom_.size(); }
  double beta() const noexcept { return beta_; }
  double temperature() const noexcept { return 1.0 / beta_; }
  double dtau() const noexcept { return beta_ / slices_; }
  double k_tau() const noexcept { return k_tau_; }

  Spin at(int site, int slice) const { return spins_[offset(site, slice)]; }
  void set(int site, int slice, Spin s) {
    if (s != 1 && s != -1) throw PreconditionError("spin values must be -1 or +1");
    spins_[offset(site, slice)] = s;
  }

  SpinConfig slice(int k) const {
    std::vector<Spin> out(static_cast<std::size_t>(geom_.size()));
    for (int i = 0; i < geom_.size(); ++i) out[static_cast<std::size_t>(i)] = at(i, k);
    return SpinConfig(geom_, std::move(out));
  }

  /// Site-major storage: the M slices of one site are contiguous.
  std::vector<Spin>& raw() noexcept { return spins_; }
  const std::vector<Spin>& raw() const noexcept { return spins_; }

 private:
  std::size_t offset(int site, int slice) const noexcept {
    return static_cast<std::size_t>(site) * static_cast<std::size_t>(slices_) + static_cast<std::size_t>(slice);
  }

  LatticeGeom geom_;
  int slices_;
  double beta_;
  ModelParams params_;
  double k_tau_ = 0.0;
  std::vector<Spin> spins_;
};

inline WorldLine init_worldline(const SpinConfig& config, int slices, double beta, const ModelParams& params) {
  return WorldLine(config, slices, beta, params);
}

struct FlipRecord {
  std::vector<int> accepted_per_slice;

  long long total() const {
    long long n = 0;
    for (int a : accepted_per_slice) n += a;
    return n;
  }
};

struct NoObserver {
  void operator()(int, int, double, bool) const noexcept {}
};

/// Action change for flipping a spin `s` with spatial neighbor sum `nsum` and
/// imaginary-time neighbor sum `tsum`.
inline double flip_action(const WorldLine& w, int s, int nsum, int tsum) {
  const double classical = -2.0 * s * (w.params().J * nsum + w.params().h_z);
  return w.dtau() * classical + 2.0 * w.k_tau() * s * tsum;
}

/// One Metropolis pass over every (site, slice) pair, site-major and slice-minor.
/// The uniform for proposal (i, k) in sweep t is rng.uniform(i, k, t); it is only
/// drawn when the move raises the action. `observer(site, slice, dS, accepted)`
/// sees every proposal.
template <class Observer = NoObserver>
FlipRecord sweep(WorldLine& w, const Philox4x32& rng, std::uint64_t sweep_index, Observer&& observer = {}) {
  const int n = w.sites();
  const int m = w.slices();
  const auto& nbr = w.geometry().flat_neighbors();
  auto& s = w.raw();

  // Acceptance table indexed by (spin, nsum, tsum); nsum in [-6, 6], tsum in [-2, 2].
  std::array<double, 2 * 13 * 5> action{};
  std::array<double, 2 * 13 * 5> accept{};
  for (int si = 0; si < 2; ++si) {
    for (int ns = -6; ns <= 6; ++ns) {
      for (int ts = -2; ts <= 2; ++ts) {
        const std::size_t idx = static_cast<std::size_t>((si * 13 + ns + 6) * 5 + ts + 2);
        action[idx] = flip_action(w, si ? 1 : -1, ns, ts);
        accept[idx] = std::exp(-action[idx]);
      }
    }
  }

  FlipRecord record;
  record.accepted_per_slice.assign(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(m);
    const int* nb = nbr.data() + static_cast<std::size_t>(i) * LatticeGeom::kCoordination;
    for (int k = 0; k < m; ++k) {
      int nsum = 0;
      for (int q = 0; q < LatticeGeom::kCoordination; ++q) {
        nsum += s[static_cast<std::size_t>(nb[q]) * static_cast<std::size_t>(m) + static_cast<std::size_t>(k)];
      }
      int tsum = 0;
      if (m > 1) {
        const int prev = k == 0 ? m - 1 : k - 1;
        const int next = k == m - 1 ? 0 : k + 1;
        tsum = s[base + static_cast<std::size_t>(prev)] + s[base + static_cast<std::size_t>(next)];
      }
      const int spin = s[base + static_cast<std::size_t>(k)];
      const std::size_t idx = static_cast<std::size_t>(((spin > 0 ? 1 : 0) * 13 + nsum + 6) * 5 + tsum + 2);
      const double dS = action[idx];
      const bool accepted =
          dS <= 0.0 || rng.uniform(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k), sweep_index) < accept[idx];
      if (accepted) {
        s[base + static_cast<std::size_t>(k)] = static_cast<WorldLine::Spin>(-spin);
        ++record.accepted_per_slice[static_cast<std::size_t>(k)];
      }
      observer(i, k, dS, accepted);
    }
  }
  return record;
}

/// Per-site majority over slices; ties resolve to slice 0.
inline SpinConfig project(const WorldLine& w) {
  const int n = w.sites();
  const int m = w.slices();
  const auto& s = w.raw();
  std::vector<SpinConfig::Spin> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(m);
    int sum = 0;
    for (int k = 0; k < m; ++k) sum += s[base + static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = sum > 0 ? 1 : sum < 0 ? -1 : s[base];
  }
  return SpinConfig(w.geometry(), std::move(out));
}

struct Trajectory {
  std::vector<SpinConfig> snapshots;
  ModelParams params;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  int slices = 1;

  int n_steps() const { return static_cast<int>(snapshots.size()) - 1; }
};

/// Snapshot 0 is the initial configuration; snapshot t is the projection after sweep t.
inline Trajectory run_relaxation(const SpinConfig& init, const ModelParams& params, double temperature, int slices,
                                 int n_steps, std::uint64_t seed) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw PreconditionError("temperature must be positive");
  if (n_steps < 0) throw PreconditionError("step count must be non-negative");
  WorldLine w = init_worldline(init, slices, 1.0 / temperature, params);
  const Philox4x32 rng(seed);

  Trajectory traj;
  traj.params = params;
  traj.temperature = temperature;
  traj.seed = seed;
  traj.slices = slices;
  traj.snapshots.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.snapshots.push_back(project(w));
  for (int t = 1; t <= n_steps; ++t) {
    sweep(w, rng, static_cast<std::uint64_t>(t));
    traj.snapshots.push_back(project(w));
  }
  return traj;
}

}  // namespace polaron_tfim::qmc

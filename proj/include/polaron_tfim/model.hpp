#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "polaron_tfim/errors.hpp"
#include "polaron_tfim/lattice.hpp"

namespace polaron_tfim {

/// Couplings of the transverse-field Ising Hamiltonian
///   H = J sum_<ij> s_i s_j - h_x sum_i sigma^x_i + h_z sum_i s_i.
struct ModelParams {
  double J = 1.0;
  double h_x = 0.0;
  double h_z = 2.0;

  void validate() const {
    if (!(J > 0.0) || !std::isfinite(J)) throw PreconditionError("J must be positive and finite");
    if (!(h_x >= 0.0) || !std::isfinite(h_x)) throw PreconditionError("h_x must be non-negative");
    if (!std::isfinite(h_z)) throw PreconditionError("h_z must be finite");
  }
};

/// Classical Ising state; +1 marks a polaron.
class SpinConfig {
 public:
  using Spin = std::int8_t;

  SpinConfig() = default;
  SpinConfig(LatticeGeom geom, Spin fill) : geom_(std::move(geom)), spins_(geom_.size(), fill) {
    check_spin(fill);
  }
  SpinConfig(LatticeGeom geom, std::vector<Spin> spins) : geom_(std::move(geom)), spins_(std::move(spins)) {
    if (static_cast<int>(spins_.size()) != geom_.size()) {
      throw GeometryMismatchError("spin vector length " + std::to_string(spins_.size()) +
                                  " does not match lattice size " + std::to_string(geom_.size()));
    }
    for (Spin s : spins_) check_spin(s);
  }

  const LatticeGeom& geometry() const noexcept { return geom_; }
  int size() const noexcept { return static_cast<int>(spins_.size()); }
  const std::vector<Spin>& spins() const noexcept { return spins_; }

  Spin operator[](int i) const noexcept { return spins_[static_cast<std::size_t>(i)]; }
  Spin at(int i) const {
    geom_.check_index(i);
    return spins_[static_cast<std::size_t>(i)];
  }
  void set(int i, Spin s) {
    geom_.check_index(i);
    check_spin(s);
    spins_[static_cast<std::size_t>(i)] = s;
  }
  void flip(int i) {
    geom_.check_index(i);
    spins_[static_cast<std::size_t>(i)] = static_cast<Spin>(-spins_[static_cast<std::size_t>(i)]);
  }

  friend bool operator==(const SpinConfig& a, const SpinConfig& b) {
    return a.geom_.same_shape(b.geom_) && a.spins_ == b.spins_;
  }

 private:
  static void check_spin(Spin s) {
    if (s != 1 && s != -1) throw PreconditionError("spin values must be -1 or +1");
  }

  LatticeGeom geom_;
  std::vector<Spin> spins_;
};

struct EnergySplit {
  double interaction = 0.0;
  double chemical = 0.0;
  double total() const { return interaction + chemical; }
};

inline EnergySplit energy_split(const SpinConfig& config, const ModelParams& params) {
  long long bond_sum = 0;
  for (const auto& [i, j] : config.geometry().bonds()) bond_sum += config[i] * config[j];
  long long field_sum = 0;
  for (auto s : config.spins()) field_sum += s;
  return {params.J * static_cast<double>(bond_sum), params.h_z * static_cast<double>(field_sum)};
}

inline double classical_energy(const SpinConfig& config, const ModelParams& params) {
  return energy_split(config, params).total();
}

/// Checked variant for callers holding a separate geometry.
inline double classical_energy(const LatticeGeom& geom, const SpinConfig& config, const ModelParams& params) {
  if (!geom.same_shape(config.geometry())) {
    throw GeometryMismatchError("configuration does not belong to the given lattice");
  }
  return classical_energy(config, params);
}

/// Energy change from flipping site i: -2 s_i (J sum_nbr s_j + h_z).
inline double flip_cost(const SpinConfig& config, int i, const ModelParams& params) {
  const auto& nbrs = config.geometry().neighbors(i);
  int nsum = 0;
  for (int j : nbrs) nsum += config[j];
  return -2.0 * config[i] * (params.J * nsum + params.h_z);
}

/// Sublattice `which` occupied, all other sites empty.
inline SpinConfig ground_state(const LatticeGeom& geom, Sublattice which) {
  SpinConfig config(geom, SpinConfig::Spin{-1});
  for (int i = 0; i < geom.size(); ++i) {
    if (geom.sublattice_of(i) == which) config.set(i, 1);
  }
  return config;
}

/// Straight interface along a2: columns x < wall_column follow `left`, the rest `right`.
/// Periodic wrap in x produces a second wall at column 0.
inline SpinConfig domain_wall_config(const LatticeGeom& geom, Sublattice left, Sublattice right, int wall_column) {
  if (left == right) throw DegenerateWallError("domain wall needs two different orderings");
  if (wall_column <= 0 || wall_column >= geom.width()) {
    throw IndexError("wall column " + std::to_string(wall_column) + " must lie in (0, " +
                     std::to_string(geom.width()) + ")");
  }
  SpinConfig config(geom, SpinConfig::Spin{-1});
  for (int i = 0; i < geom.size(); ++i) {
    const Sublattice target = geom.column(i) < wall_column ? left : right;
    if (geom.sublattice_of(i) == target) config.set(i, 1);
  }
  return config;
}

inline double polaron_density(const SpinConfig& config) {
  int count = 0;
  for (auto s : config.spins()) count += (s > 0);
  return static_cast<double>(count) / static_cast<double>(config.size());
}

inline nlohmann::json to_json(const SpinConfig& config) {
  nlohmann::json spins = nlohmann::json::array();
  for (auto s : config.spins()) spins.push_back(static_cast<int>(s));
  return {{"width", config.geometry().width()}, {"height", config.geometry().height()}, {"spins", spins}};
}

inline SpinConfig spin_config_from_json(const nlohmann::json& j) {
  const LatticeGeom geom = build_lattice(j.at("width").get<int>(), j.at("height").get<int>());
  std::vector<SpinConfig::Spin> spins;
  spins.reserve(static_cast<std::size_t>(geom.size()));
  for (const auto& v : j.at("spins")) spins.push_back(static_cast<SpinConfig::Spin>(v.get<int>()));
  return SpinConfig(geom, std::move(spins));
}

}  // namespace polaron_tfim

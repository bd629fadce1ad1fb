#pragma once

// Dense exact diagonalization of small transverse-field Ising clusters.
//
// Basis states are bit patterns over the cluster sites; bit k set means spin +1
// on cluster site k. Clusters are explicit bond lists with per-site longitudinal
// fields, so frozen environment spins enter as field shifts and a constant offset.

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polaron_tfim/errors.hpp"
#include "polaron_tfim/lattice.hpp"
#include "polaron_tfim/model.hpp"

namespace polaron_tfim::ed {

using BasisState = std::uint32_t;

/// Dense storage is 8 * 4^N bytes; 12 sites is 128 MiB.
inline constexpr int kMaxSites = 12;

struct Bond {
  int i = 0;
  int j = 0;
  double coupling = 0.0;
};

struct Cluster {
  int n_sites = 0;
  std::vector<Bond> bonds;
  std::vector<double> fields;
  double offset = 0.0;
  double h_x = 0.0;

  static int spin(BasisState state, int site) { return ((state >> site) & 1u) ? 1 : -1; }

  double classical_energy(BasisState state) const {
    double e = 0.0;
    for (const auto& b : bonds) e += b.coupling * spin(state, b.i) * spin(state, b.j);
    for (int k = 0; k < n_sites; ++k) e += fields[static_cast<std::size_t>(k)] * spin(state, k);
    return e + offset;
  }

  bool bonded(int a, int b) const {
    for (const auto& bond : bonds) {
      if ((bond.i == a && bond.j == b) || (bond.i == b && bond.j == a)) return true;
    }
    return false;
  }
};

/// Whole periodic lattice as a cluster; site k is lattice site k.
inline Cluster cluster_from_lattice(const LatticeGeom& geom, const ModelParams& params) {
  Cluster c;
  c.n_sites = geom.size();
  for (const auto& [i, j] : geom.bonds()) c.bonds.push_back({i, j, params.J});
  c.fields.assign(static_cast<std::size_t>(geom.size()), params.h_z);
  c.h_x = params.h_x;
  return c;
}

/// Active sites of `environment` become quantum; everything else is frozen.
/// Cluster site k corresponds to lattice site active[k].
inline Cluster embedded_cluster(const SpinConfig& environment, const ModelParams& params,
                                std::span<const int> active) {
  const LatticeGeom& geom = environment.geometry();
  std::vector<int> slot(static_cast<std::size_t>(geom.size()), -1);
  for (std::size_t k = 0; k < active.size(); ++k) {
    geom.check_index(active[k]);
    if (slot[static_cast<std::size_t>(active[k])] != -1) throw PreconditionError("duplicate active site");
    slot[static_cast<std::size_t>(active[k])] = static_cast<int>(k);
  }

  Cluster c;
  c.n_sites = static_cast<int>(active.size());
  c.fields.assign(active.size(), params.h_z);
  c.h_x = params.h_x;
  for (const auto& [i, j] : geom.bonds()) {
    const int si = slot[static_cast<std::size_t>(i)];
    const int sj = slot[static_cast<std::size_t>(j)];
    if (si >= 0 && sj >= 0) {
      c.bonds.push_back({si, sj, params.J});
    } else if (si >= 0) {
      c.fields[static_cast<std::size_t>(si)] += params.J * environment[j];
    } else if (sj >= 0) {
      c.fields[static_cast<std::size_t>(sj)] += params.J * environment[i];
    } else {
      c.offset += params.J * environment[i] * environment[j];
    }
  }
  for (int i = 0; i < geom.size(); ++i) {
    if (slot[static_cast<std::size_t>(i)] < 0) c.offset += params.h_z * environment[i];
  }
  return c;
}

/// Two-site cluster whose classical energies reproduce the reference-subtracted
/// domain-wall subspace: E(-1,-1) = -2h_z + 2JZ_h, E(-1,1) = E(1,-1) = 0,
/// E(1,1) = 2h_z - 2JZ_p. Site 1 is the first spin, so basis index order matches
/// (|-1,-1>, |-1,1>, |1,-1>, |1,1>).
inline Cluster sw_pair_cluster(double J, double h_z, double h_x, double Z_h, double Z_p) {
  const double bond = 0.5 * J * (Z_h - Z_p);
  const double field = h_z - 0.5 * J * (Z_h + Z_p);
  Cluster c;
  c.n_sites = 2;
  c.bonds.push_back({0, 1, bond});
  c.fields = {field, field};
  c.offset = bond;
  c.h_x = h_x;
  return c;
}

struct DenseHamiltonian {
  int n_sites = 0;
  Eigen::MatrixXd matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
};

inline DenseHamiltonian build_hamiltonian(const Cluster& cluster) {
  if (cluster.n_sites < 1) throw SizeError("cluster must have at least one site");
  if (cluster.n_sites > kMaxSites) {
    throw CapacityError("dense diagonalization limited to " + std::to_string(kMaxSites) + " sites, got " +
                        std::to_string(cluster.n_sites));
  }
  const BasisState dim = BasisState{1} << cluster.n_sites;
  DenseHamiltonian ham;
  ham.n_sites = cluster.n_sites;
  ham.matrix = Eigen::MatrixXd::Zero(dim, dim);
  for (BasisState s = 0; s < dim; ++s) {
    ham.matrix(s, s) = cluster.classical_energy(s);
    for (int k = 0; k < cluster.n_sites; ++k) ham.matrix(s, s ^ (BasisState{1} << k)) = -cluster.h_x;
  }
  return ham;
}

inline DenseHamiltonian build_hamiltonian(const LatticeGeom& geom, const ModelParams& params) {
  return build_hamiltonian(cluster_from_lattice(geom, params));
}

inline BasisState basis_state(const SpinConfig& config) {
  if (config.size() > kMaxSites) throw CapacityError("configuration too large for a dense basis");
  BasisState s = 0;
  for (int i = 0; i < config.size(); ++i) {
    if (config[i] > 0) s |= BasisState{1} << i;
  }
  return s;
}

struct Spectrum {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values(k)
};

inline Spectrum low_spectrum(const DenseHamiltonian& ham, Eigen::Index k) {
  if (k < 0 || k > ham.dimension()) throw PreconditionError("requested more eigenpairs than the dimension");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ham.matrix);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  return {solver.eigenvalues().head(k), solver.eigenvectors().leftCols(k)};
}

struct Splitting {
  double t_eff = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double weight_lower = 0.0;
  double weight_upper = 0.0;
};

/// Half the splitting of the two eigenstates that carry most of their weight
/// (> 0.5) on the classical pair {a, b}. The pair must be classically degenerate
/// and differ by a polaron exchange across one bond.
inline Splitting tunneling_splitting(const Cluster& cluster, BasisState a, BasisState b) {
  const double ea = cluster.classical_energy(a);
  const double eb = cluster.classical_energy(b);
  if (std::abs(ea - eb) > 1e-9) {
    throw PreconditionError("pair is not classically degenerate (dE = " + std::to_string(ea - eb) + ")");
  }
  const BasisState diff = a ^ b;
  if (std::popcount(diff) != 2 || std::popcount(a & diff) != 1) {
    throw PreconditionError("pair must differ by exchanging one polaron between two sites");
  }
  const int p = std::countr_zero(diff);
  const int q = 31 - std::countl_zero(diff);
  if (!cluster.bonded(p, q)) throw PreconditionError("exchanged sites are not bonded");

  const DenseHamiltonian ham = build_hamiltonian(cluster);
  const Spectrum spec = low_spectrum(ham, ham.dimension());

  std::vector<Eigen::Index> picked;
  std::vector<double> weights;
  for (Eigen::Index k = 0; k < spec.values.size(); ++k) {
    const double w = spec.vectors(a, k) * spec.vectors(a, k) + spec.vectors(b, k) * spec.vectors(b, k);
    if (w > 0.5) {
      picked.push_back(k);
      weights.push_back(w);
    }
  }
  if (picked.size() != 2) {
    throw PreconditionError("pair sector is not isolated: " + std::to_string(picked.size()) +
                            " eigenstates dominated by the pair");
  }
  Splitting out;
  out.lower = spec.values(picked[0]);
  out.upper = spec.values(picked[1]);
  out.weight_lower = weights[0];
  out.weight_upper = weights[1];
  out.t_eff = 0.5 * std::abs(out.upper - out.lower);
  return out;
}

inline Splitting tunneling_splitting(const ModelParams& params, const SpinConfig& a, const SpinConfig& b) {
  if (!a.geometry().same_shape(b.geometry())) throw GeometryMismatchError("pair on different lattices");
  return tunneling_splitting(cluster_from_lattice(a.geometry(), params), basis_state(a), basis_state(b));
}

/// t_eff of the two-spin domain-wall subspace, solved as a 4-state problem.
inline double sw_pair_hopping(double J, double h_z, double Z_h, double Z_p, double h_x) {
  const Cluster c = sw_pair_cluster(J, h_z, h_x, Z_h, Z_p);
  return tunneling_splitting(c, 0b01, 0b10).t_eff;
}

/// Least-squares slope of log t versus log h_x.
inline double fit_hopping_exponent(std::span<const double> h_x, std::span<const double> t) {
  if (h_x.size() != t.size()) throw PreconditionError("h_x and t lists differ in length");
  if (h_x.size() < 3) throw PreconditionError("need at least three h_x values");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h_x.size());
  for (std::size_t k = 0; k < h_x.size(); ++k) {
    if (!(t[k] > 0.0) || !(h_x[k] > 0.0)) throw DegenerateFitError("hopping amplitude vanished; log fit undefined");
    const double x = std::log(h_x[k]);
    const double y = std::log(t[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) <= 1e-12 * n * sxx) throw DegenerateFitError("h_x values are not distinct");
  return (n * sxy - sx * sy) / denom;
}

/// Richardson extrapolation to h -> 0 for f(h) = f0 + c2 h^2 + c4 h^4 + ...,
/// given samples at h, h/2, h/4, ... (coarsest first).
inline double richardson_even(std::vector<double> samples) {
  if (samples.empty()) throw PreconditionError("no samples to extrapolate");
  double factor = 4.0;
  while (samples.size() > 1) {
    std::vector<double> next;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
      next.push_back((factor * samples[k + 1] - samples[k]) / (factor - 1.0));
    }
    samples = std::move(next);
    factor *= 4.0;
  }
  return samples.front();
}

}  // namespace polaron_tfim::ed

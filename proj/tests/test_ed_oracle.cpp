#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "polaron_tfim/ed_oracle.hpp"
#include "polaron_tfim/swtheory.hpp"
#include "support/oracles.hpp"

using namespace polaron_tfim;

namespace {

ed::Cluster two_site(double J, double h_z, double h_x) {
  ed::Cluster c;
  c.n_sites = 2;
  c.bonds.push_back({0, 1, J});
  c.fields = {h_z, h_z};
  c.h_x = h_x;
  return c;
}

}  // namespace

TEST(DenseHamiltonian, TwoSiteHandEnumeration) {
  const auto ham = ed::build_hamiltonian(two_site(1.0, 0.0, 0.1));
  Eigen::Matrix4d expected;
  // clang-format off
  expected <<  1.0, -0.1, -0.1,  0.0,
              -0.1, -1.0,  0.0, -0.1,
              -0.1,  0.0, -1.0, -0.1,
               0.0, -0.1, -0.1,  1.0;
  // clang-format on
  EXPECT_EQ(ham.matrix, Eigen::MatrixXd(expected));
}

TEST(DenseHamiltonian, InvariantsOnThreeByThree) {
  const auto geom = build_lattice(3, 3);
  const ModelParams p{1.0, 0.17, 2.0};
  const auto ham = ed::build_hamiltonian(geom, p);
  ASSERT_EQ(ham.dimension(), 512);
  EXPECT_TRUE(ham.matrix.isApprox(ham.matrix.transpose(), 0.0));
  std::vector<SpinConfig::Spin> spins(9);
  for (ed::BasisState s = 0; s < 512; ++s) {
    for (int i = 0; i < 9; ++i) spins[static_cast<std::size_t>(i)] = ((s >> i) & 1u) ? 1 : -1;
    const SpinConfig c(geom, spins);
    EXPECT_EQ(ed::basis_state(c), s);
    EXPECT_NEAR(ham.matrix(s, s), classical_energy(c, p), 1e-12 * 27.0);
    double off = 0.0;
    for (ed::BasisState t = 0; t < 512; ++t) {
      if (t == s) continue;
      const double expected = std::popcount(s ^ t) == 1 ? -0.17 : 0.0;
      ASSERT_EQ(ham.matrix(s, t), expected);
      off += std::abs(ham.matrix(s, t));
    }
    EXPECT_NEAR(off, 9 * 0.17, 1e-12);
  }
}

TEST(DenseHamiltonian, CapacityLimit) {
  ed::Cluster c;
  c.n_sites = ed::kMaxSites + 1;
  c.fields.assign(static_cast<std::size_t>(c.n_sites), 0.0);
  EXPECT_THROW(ed::build_hamiltonian(c), CapacityError);
  EXPECT_THROW(ed::build_hamiltonian(build_lattice(6, 3), ModelParams{}), CapacityError);
}

TEST(Spectrum, ClassicalLimitIsMultisetOfEnergies) {
  const auto geom = build_lattice(3, 3);
  const ModelParams p{1.0, 0.0, 2.0};
  const auto spec = ed::low_spectrum(ed::build_hamiltonian(geom, p), 512);
  std::vector<double> oracle_e;
  const auto bonds = oracle::enumerate_bonds(3, 3);
  for (std::uint32_t s = 0; s < 512; ++s) {
    std::vector<int> spins(9);
    for (int i = 0; i < 9; ++i) spins[static_cast<std::size_t>(i)] = ((s >> i) & 1u) ? 1 : -1;
    oracle_e.push_back(oracle::bond_sum_energy(spins, 3, 3, 1.0, 2.0));
  }
  std::sort(oracle_e.begin(), oracle_e.end());
  for (int k = 0; k < 512; ++k) EXPECT_NEAR(spec.values(k), oracle_e[static_cast<std::size_t>(k)], 1e-12 * 27.0);
}

TEST(Spectrum, ThreeByThreeGroundStateDegeneracy) {
  const auto geom = build_lattice(3, 3);
  const ModelParams p{1.0, 0.0, 2.0};
  const auto spec = ed::low_spectrum(ed::build_hamiltonian(geom, p), 4);
  const double e_gs = classical_energy(ground_state(geom, Sublattice::A), p);
  EXPECT_EQ(e_gs, -15.0);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(spec.values(k), e_gs, 1e-12);
  EXPECT_GT(spec.values(3), e_gs + 1.0);
  for (auto s : {Sublattice::B, Sublattice::C}) EXPECT_EQ(classical_energy(ground_state(geom, s), p), e_gs);

  // Quantum splitting of the threefold manifold is tiny.
  const auto q = ed::low_spectrum(ed::build_hamiltonian(geom, ModelParams{1.0, 0.05, 2.0}), 3);
  EXPECT_LT(q.values(2) - q.values(0), 1e-6);
}

TEST(Spectrum, TwoSiteClassical) {
  const auto spec = ed::low_spectrum(ed::build_hamiltonian(two_site(1.0, 0.0, 0.0)), 4);
  EXPECT_EQ(spec.values, Eigen::Vector4d(-1.0, -1.0, 1.0, 1.0));
}

TEST(Spectrum, ResidualsAndOrthonormality) {
  const auto geom = build_lattice(3, 3);
  const auto ham = ed::build_hamiltonian(geom, ModelParams{1.0, 0.3, 2.0});
  const auto spec = ed::low_spectrum(ham, 20);
  const double norm = ham.matrix.norm();
  for (int k = 0; k < 20; ++k) {
    if (k > 0) EXPECT_LE(spec.values(k - 1), spec.values(k));
    const Eigen::VectorXd r = ham.matrix * spec.vectors.col(k) - spec.values(k) * spec.vectors.col(k);
    EXPECT_LT(r.norm(), 1e-10 * norm);
  }
  const Eigen::MatrixXd gram = spec.vectors.transpose() * spec.vectors;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(ed::low_spectrum(ham, 513), PreconditionError);
}

TEST(Tunneling, PairClusterReproducesSubspace) {
  const auto c = ed::sw_pair_cluster(1.0, 2.0, 0.1, 1.0, 3.0);
  const auto sub = sw::build_subspace(1.0, 2.0, 0.1, 1.0, 3.0);
  const auto ham = ed::build_hamiltonian(c);
  // Basis orders agree: bit 1 is the first spin.
  Eigen::Matrix4d reordered;
  const int map[4] = {0, 2, 1, 3};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) reordered(a, b) = ham.matrix(map[a], map[b]);
  }
  EXPECT_LT((reordered - sub.hamiltonian()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Tunneling, ZeroFieldGivesZero) {
  EXPECT_EQ(ed::sw_pair_hopping(1.0, 2.0, 1.0, 3.0, 0.0), 0.0);
}

TEST(Tunneling, MatchesSecondOrderHopping) {
  const double lambda = sw::closed_form_lambda(1.0, 2.0, 1.0, 3.0);
  double prev = 0.0;
  for (double hx : {0.04, 0.02, 0.01, 0.005}) {
    const double t = ed::sw_pair_hopping(1.0, 2.0, 1.0, 3.0, hx);
    const double dev = std::abs(t - lambda * hx * hx) / (hx * hx);
    if (prev > 0.0) EXPECT_GE(prev / dev, 3.0) << hx;
    prev = dev;
  }
}

TEST(Tunneling, RichardsonRecoversLambda) {
  std::vector<double> ratios;
  for (double hx : {0.02, 0.01, 0.005}) ratios.push_back(ed::sw_pair_hopping(1.0, 2.0, 1.0, 3.0, hx) / (hx * hx));
  EXPECT_NEAR(ed::richardson_even(ratios), 1.0, 1e-6);
}

TEST(Tunneling, RichardsonExactOnPolynomial) {
  auto f = [](double h) { return 3.0 - 2.0 * h * h + 5.0 * std::pow(h, 4); };
  EXPECT_NEAR(ed::richardson_even({f(0.4), f(0.2), f(0.1)}), 3.0, 1e-12);
}

TEST(Tunneling, EmbeddedPolaronExchange) {
  // One polaron hops across a bond inside a frozen 6x6 background.
  const auto geom = build_lattice(6, 6);
  const auto gs = ground_state(geom, Sublattice::A);
  int a = -1;
  for (int i = 0; i < geom.size(); ++i) {
    if (gs[i] > 0) {
      a = i;
      break;
    }
  }
  const int b = geom.neighbors(a)[0];
  auto moved = gs;
  moved.flip(a);
  moved.flip(b);
  const ModelParams p{1.0, 0.05, 2.0};
  const std::vector<int> active{a, b};
  const auto cluster = ed::embedded_cluster(gs, p, active);
  // Embedded energies track the full lattice.
  EXPECT_NEAR(cluster.classical_energy(0b01), classical_energy(gs, p), 1e-12);
  EXPECT_NEAR(cluster.classical_energy(0b10), classical_energy(moved, p), 1e-12);
  const double e_gs = classical_energy(gs, p), e_mv = classical_energy(moved, p);
  if (std::abs(e_gs - e_mv) > 1e-9) {
    EXPECT_THROW(ed::tunneling_splitting(cluster, 0b01, 0b10), PreconditionError);
  } else {
    EXPECT_GT(ed::tunneling_splitting(cluster, 0b01, 0b10).t_eff, 0.0);
  }
}

TEST(Tunneling, Preconditions) {
  const auto c = ed::sw_pair_cluster(1.0, 2.0, 0.1, 1.0, 3.0);
  EXPECT_THROW(ed::tunneling_splitting(c, 0b00, 0b11), PreconditionError);  // not degenerate-exchange
  EXPECT_THROW(ed::tunneling_splitting(c, 0b01, 0b01), PreconditionError);
  const auto d = ed::sw_pair_cluster(1.0, 2.0, 0.1, 1.0, 1.5);
  EXPECT_NO_THROW(ed::tunneling_splitting(d, 0b01, 0b10));
  auto unbonded = c;
  unbonded.bonds.clear();
  EXPECT_THROW(ed::tunneling_splitting(unbonded, 0b01, 0b10), PreconditionError);
  auto tilted = c;
  tilted.fields[0] += 0.3;
  EXPECT_THROW(ed::tunneling_splitting(tilted, 0b01, 0b10), PreconditionError);
}

TEST(HoppingExponent, SyntheticPowerLaws) {
  const std::vector<double> hx{0.005, 0.01, 0.02, 0.04};
  std::vector<double> t2, t20;
  for (double h : hx) {
    t2.push_back(0.7 * h * h);
    t20.push_back(std::pow(h / 0.005, 20));
  }
  EXPECT_NEAR(ed::fit_hopping_exponent(hx, t2), 2.0, 1e-12);
  EXPECT_NEAR(ed::fit_hopping_exponent(hx, t20), 20.0, 1e-10);
}

TEST(HoppingExponent, SubspaceFamily) {
  const std::vector<double> hx{0.005, 0.01, 0.02, 0.04};
  std::vector<double> t;
  for (double h : hx) t.push_back(ed::sw_pair_hopping(1.0, 2.0, 1.0, 3.0, h));
  EXPECT_NEAR(ed::fit_hopping_exponent(hx, t), 2.0, 0.02);
}

TEST(HoppingExponent, Errors) {
  const std::vector<double> hx{0.01, 0.02, 0.04};
  EXPECT_THROW(ed::fit_hopping_exponent(hx, std::vector<double>{1.0, 0.0, 2.0}), DegenerateFitError);
  EXPECT_THROW(ed::fit_hopping_exponent(std::vector<double>{0.1, 0.1, 0.1}, std::vector<double>{1, 2, 3}),
               DegenerateFitError);
  EXPECT_THROW(ed::fit_hopping_exponent(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 2}), PreconditionError);
}

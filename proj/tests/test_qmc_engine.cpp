#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "polaron_tfim/qmc_engine.hpp"
#include "support/oracles.hpp"

using namespace polaron_tfim;

TEST(TrotterCoupling, DirectEvaluation) {
  const double x = 0.5;
  const double coth = (std::exp(2 * x) + 1.0) / (std::exp(2 * x) - 1.0);
  EXPECT_NEAR(qmc::trotter_coupling(0.5, 2.0, 2), 0.5 * std::log(coth), 1e-15);
  EXPECT_NEAR(qmc::trotter_coupling(0.5, 2.0, 2), 0.385968, 1e-6);
  EXPECT_NEAR(qmc::trotter_coupling(1e-3, 32.0, 32), 0.5 * std::log(1.0 / std::tanh(1e-3)), 1e-12);
}

TEST(TrotterCoupling, LimitsAndMonotonicity) {
  double prev = INFINITY;
  for (double hx : {1e-9, 1e-4, 0.01, 0.1, 0.3, 1.0, 3.0}) {
    const double k = qmc::trotter_coupling(hx, 2.5, 32);
    EXPECT_GT(k, 0.0);
    EXPECT_TRUE(std::isfinite(k));
    EXPECT_LT(k, prev);
    prev = k;
  }
  EXPECT_GT(qmc::trotter_coupling(1e-9, 2.5, 32), 9.0);
  // Large argument must not underflow to zero.
  EXPECT_GT(qmc::trotter_coupling(50.0, 10.0, 2), 0.0);
  EXPECT_THROW(qmc::trotter_coupling(0.0, 1.0, 4), ClassicalLimitError);
  EXPECT_THROW(qmc::trotter_coupling(0.1, 1.0, 1), PreconditionError);
}

TEST(TrotterPolicy, ChooseSlices) {
  const qmc::TrotterPolicy policy;
  EXPECT_EQ(qmc::choose_slices(ModelParams{1.0, 0.0, 2.0}, 2.5, policy), 1);
  EXPECT_EQ(qmc::choose_slices(ModelParams{1.0, 0.3, 2.0}, 1.0 / 3.0, policy), 32);
  // beta = 2.5, scale 8: 2.5 * 8 / 0.3 = 66.7.
  EXPECT_EQ(qmc::choose_slices(ModelParams{1.0, 0.3, 2.0}, 2.5, policy), 67);
  EXPECT_EQ(qmc::choose_slices(ModelParams{1.0, 0.3, 2.0}, 2.5, {32, false, 0.3}), 32);
  const int m = qmc::choose_slices(ModelParams{1.0, 0.2, 2.0}, 1.0 / 0.15, policy);
  EXPECT_LE(1.0 / 0.15 / m * 8.0, 0.3);
}

TEST(WorldLine, Construction) {
  const auto geom = build_lattice(6, 6);
  const auto gs = ground_state(geom, Sublattice::A);
  const auto w = qmc::init_worldline(gs, 32, 2.0, ModelParams{1.0, 0.3, 2.0});
  for (int k = 0; k < 32; ++k) EXPECT_EQ(w.slice(k), gs);
  EXPECT_EQ(qmc::project(w), gs);
  EXPECT_DOUBLE_EQ(w.dtau(), 2.0 / 32);
  EXPECT_NO_THROW(qmc::init_worldline(gs, 1, 2.0, ModelParams{1.0, 0.0, 2.0}));
  EXPECT_THROW(qmc::init_worldline(gs, 1, 2.0, ModelParams{1.0, 0.3, 2.0}), PreconditionError);
  EXPECT_THROW(qmc::init_worldline(gs, 4, 2.0, ModelParams{1.0, 0.0, 2.0}), PreconditionError);
  EXPECT_THROW(qmc::init_worldline(gs, 4, 0.0, ModelParams{1.0, 0.1, 2.0}), PreconditionError);
}

TEST(Project, TieGoesToSliceZero) {
  const auto geom = build_lattice(3, 3);
  const auto a = ground_state(geom, Sublattice::A);
  const auto b = ground_state(geom, Sublattice::B);
  auto w = qmc::init_worldline(a, 2, 1.0, ModelParams{1.0, 0.2, 2.0});
  for (int i = 0; i < 9; ++i) w.set(i, 1, b[i]);
  EXPECT_EQ(qmc::project(w), a);
}

TEST(Project, CyclicRelabelingWithoutTies) {
  const auto geom = build_lattice(3, 3);
  std::mt19937_64 gen(5);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 * (trial % 8) + 3;
    auto w = qmc::init_worldline(SpinConfig(geom, SpinConfig::Spin{1}), m, 1.0, ModelParams{1.0, 0.2, 2.0});
    for (int i = 0; i < 9; ++i) {
      for (int k = 0; k < m; ++k) w.set(i, k, coin(gen) ? 1 : -1);
    }
    auto shifted = w;
    const int r = trial % m;
    for (int i = 0; i < 9; ++i) {
      for (int k = 0; k < m; ++k) shifted.set(i, (k + r) % m, w.at(i, k));
    }
    EXPECT_EQ(qmc::project(w), qmc::project(shifted));
  }
}

TEST(Sweep, FlipActionMatchesWorldlineActionDifference) {
  const auto geom = build_lattice(3, 3);
  const ModelParams p{1.0, 0.4, 1.5};
  auto w = qmc::init_worldline(ground_state(geom, Sublattice::B), 6, 1.7, p);
  std::mt19937_64 gen(9);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 9; ++i) {
    for (int k = 0; k < 6; ++k) w.set(i, k, coin(gen) ? 1 : -1);
  }
  auto action = [&](const qmc::WorldLine& x) {
    double s = 0.0;
    for (int k = 0; k < x.slices(); ++k) {
      s += x.dtau() * oracle::bond_sum_energy(oracle::to_ints(x.slice(k)), 3, 3, p.J, p.h_z);
      for (int i = 0; i < 9; ++i) s -= x.k_tau() * x.at(i, k) * x.at(i, (k + 1) % x.slices());
    }
    return s;
  };
  const double s0 = action(w);
  for (int i = 0; i < 9; ++i) {
    for (int k = 0; k < 6; ++k) {
      int nsum = 0;
      for (int j : geom.neighbors(i)) nsum += w.at(j, k);
      const int tsum = w.at(i, (k + 5) % 6) + w.at(i, (k + 1) % 6);
      auto f = w;
      f.set(i, k, -w.at(i, k));
      EXPECT_NEAR(qmc::flip_action(w, w.at(i, k), nsum, tsum), action(f) - s0, 1e-11);
    }
  }
}

TEST(Sweep, EmpiricalAcceptanceMatchesMetropolisRatio) {
  // 3x3 torus, M = 8: group proposals by action change and compare the
  // accepted fraction of uphill moves with exp(-dS).
  const auto geom = build_lattice(3, 3);
  const ModelParams p{1.0, 0.5, 2.0};
  auto w = qmc::init_worldline(ground_state(geom, Sublattice::A), 8, 1.0, p);
  const Philox4x32 rng(77);
  struct Tally {
    long long tried = 0;
    long long accepted = 0;
  };
  std::map<long long, std::pair<double, Tally>> classes;
  auto obs = [&](int, int, double dS, bool acc) {
    if (dS <= 0.0) {
      ASSERT_TRUE(acc);
      return;
    }
    auto& [ds, t] = classes[std::llround(dS * 1e9)];
    ds = dS;
    ++t.tried;
    t.accepted += acc;
  };
  for (std::uint64_t t = 1; t <= 20000; ++t) qmc::sweep(w, rng, t, obs);
  int checked = 0;
  for (const auto& [key, entry] : classes) {
    const auto& [dS, t] = entry;
    if (t.tried < 2000) continue;
    const double p_acc = std::exp(-dS);
    const double sigma = std::sqrt(p_acc * (1.0 - p_acc) / static_cast<double>(t.tried));
    EXPECT_NEAR(static_cast<double>(t.accepted) / static_cast<double>(t.tried), p_acc, 3.0 * sigma + 1e-12) << dS;
    ++checked;
  }
  EXPECT_GE(checked, 3);
}

TEST(Sweep, InfiniteTemperatureClassicalAcceptsEverything) {
  const auto geom = build_lattice(6, 6);
  auto w = qmc::init_worldline(ground_state(geom, Sublattice::A), 1, 1e-14, ModelParams{1.0, 0.0, 2.0});
  const auto rec = qmc::sweep(w, Philox4x32(1), 1);
  EXPECT_EQ(rec.total(), 36);
}

TEST(Sweep, ClassicalModeIsSingleSpinMetropolis) {
  // Replay one sweep by hand with the same uniforms.
  const auto geom = build_lattice(6, 6);
  const ModelParams p{1.0, 0.0, 2.0};
  const double T = 1.3;
  const auto init = domain_wall_config(geom, Sublattice::A, Sublattice::C, 3);
  auto w = qmc::init_worldline(init, 1, 1.0 / T, p);
  const Philox4x32 rng(31);
  auto ref = init;
  for (std::uint64_t t = 1; t <= 50; ++t) {
    qmc::sweep(w, rng, t);
    for (int i = 0; i < 36; ++i) {
      const double dE = flip_cost(ref, i, p);
      if (dE <= 0.0 || rng.uniform(static_cast<std::uint32_t>(i), 0, t) < std::exp(-dE / T)) ref.flip(i);
    }
    ASSERT_EQ(w.slice(0), ref) << t;
  }
}

TEST(Sweep, ClassicalLimitMatchesIndependentMetropolis) {
  // Independent reference: random-site Metropolis with a different generator.
  const int W = 3, H = 3, N = 9;
  const double J = 1.0, hz = 2.0, T = 1.5;
  const auto bonds = oracle::enumerate_bonds(W, H);
  std::vector<std::vector<int>> adj(N);
  for (auto [i, j] : bonds) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> site(0, N - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> s(N, -1);
  std::vector<double> ref_e, qmc_e;
  const int sweeps = 40000, thin = 20;
  for (int t = 0; t < sweeps; ++t) {
    for (int step = 0; step < N; ++step) {
      const int i = site(gen);
      int nsum = 0;
      for (int j : adj[static_cast<std::size_t>(i)]) nsum += s[static_cast<std::size_t>(j)];
      const double dE = -2.0 * s[static_cast<std::size_t>(i)] * (J * nsum + hz);
      if (dE <= 0 || u(gen) < std::exp(-dE / T)) s[static_cast<std::size_t>(i)] *= -1;
    }
    if (t % thin == 0) ref_e.push_back(oracle::bond_sum_energy(s, W, H, J, hz));
  }
  const auto geom = build_lattice(W, H);
  const ModelParams p{J, 0.0, hz};
  auto w = qmc::init_worldline(SpinConfig(geom, SpinConfig::Spin{-1}), 1, 1.0 / T, p);
  const Philox4x32 rng(8);
  for (int t = 0; t < sweeps; ++t) {
    qmc::sweep(w, rng, static_cast<std::uint64_t>(t) + 1);
    if (t % thin == 0) qmc_e.push_back(classical_energy(w.slice(0), p));
  }
  EXPECT_GT(oracle::ks_two_sample_p(ref_e, qmc_e), 0.01);
}

TEST(Sweep, ClassicalStationarityAgainstEnumeration) {
  const ModelParams p{1.0, 0.0, 2.0};
  const double T = 2.0;
  const auto geom = build_lattice(3, 3);
  const auto exact = oracle::boltzmann_levels(3, 3, p.J, p.h_z, T);
  auto w = qmc::init_worldline(ground_state(geom, Sublattice::A), 1, 1.0 / T, p);
  const Philox4x32 rng(123);
  std::map<long long, double> hist;
  std::vector<double> trace;
  const int sweeps = 20000;
  for (int t = 1; t <= sweeps; ++t) {
    qmc::sweep(w, rng, static_cast<std::uint64_t>(t));
    const double e = classical_energy(w.slice(0), p);
    hist[std::llround(e * 1e9)] += 1.0;
    trace.push_back(e);
  }
  const double tau = oracle::integrated_autocorrelation(trace);
  double chi2 = 0.0;
  int bins = 0;
  double tail_obs = 0.0, tail_exp = 0.0;
  for (const auto& [key, prob] : exact) {
    const double expected = prob * sweeps;
    const double observed = hist.count(key) ? hist[key] : 0.0;
    if (expected < 5.0) {
      tail_obs += observed;
      tail_exp += expected;
      continue;
    }
    chi2 += (observed - expected) * (observed - expected) / expected;
    ++bins;
  }
  if (tail_exp > 0.0) {
    chi2 += (tail_obs - tail_exp) * (tail_obs - tail_exp) / tail_exp;
    ++bins;
  }
  EXPECT_GT(oracle::chi_square_sf(chi2 / (2.0 * tau), bins - 1), 0.01) << "chi2=" << chi2 << " tau=" << tau;
}

TEST(Relaxation, DeterministicForSeed) {
  const auto geom = build_lattice(6, 6);
  const auto init = domain_wall_config(geom, Sublattice::A, Sublattice::B, 3);
  const ModelParams p{1.0, 0.3, 2.0};
  const auto a = qmc::run_relaxation(init, p, 0.4, 8, 50, 99);
  const auto b = qmc::run_relaxation(init, p, 0.4, 8, 50, 99);
  const auto c = qmc::run_relaxation(init, p, 0.4, 8, 50, 100);
  ASSERT_EQ(a.n_steps(), 50);
  ASSERT_EQ(a.snapshots.size(), 51u);
  EXPECT_EQ(a.snapshots.front(), init);
  EXPECT_EQ(a.snapshots, b.snapshots);
  EXPECT_NE(a.snapshots, c.snapshots);
}

TEST(Relaxation, DomainWallRelaxesTowardGroundState) {
  const auto geom = build_lattice(6, 6);
  const auto init = domain_wall_config(geom, Sublattice::A, Sublattice::B, 3);
  const ModelParams p{1.0, 0.3, 2.0};
  const double e_gs = classical_energy(ground_state(geom, Sublattice::A), p);
  int success = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto traj = qmc::run_relaxation(init, p, 0.4, 32, 5000, seed);
    const auto& last = traj.snapshots.back();
    const double e = classical_energy(last, p);
    if (std::abs(e - e_gs) <= 0.05 * std::abs(e_gs)) {
      ++success;
      EXPECT_GE(polaron_density(last), polaron_density(init));
    }
    EXPECT_LT(e, classical_energy(init, p));
  }
  RecordProperty("successes", success);
  EXPECT_GE(success, 8);
}

#pragma once

// Second-order Schrieffer-Wolff reduction of the two-spin domain-wall subspace.
//
// Basis order is (|-1,-1>, |-1,1>, |1,-1>, |1,1>). The two middle states are the
// degenerate domain configurations related by a single-polaron hop; the outer
// states are the virtual hole (both empty) and particle (both occupied) states.

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "polaron_tfim/errors.hpp"

namespace polaron_tfim::sw {

using Matrix4 = Eigen::Matrix4d;

struct SWSubspace {
  double J = 1.0;
  double h_z = 0.0;
  double h_x = 0.0;
  double Z_h = 0.0;
  double Z_p = 0.0;
  /// Energy of the initial domain state, removed from H0 so the pair sits at zero.
  double reference_energy = 0.0;
  Matrix4 H0 = Matrix4::Zero();
  Matrix4 V = Matrix4::Zero();

  /// Cost of the virtual hole state, -2 h_z + 2 J Z_h.
  double hole_cost() const { return H0(0, 0); }
  /// Cost of the virtual particle state, 2 h_z - 2 J Z_p.
  double particle_cost() const { return H0(3, 3); }

  Matrix4 hamiltonian() const { return H0 + V; }
  Matrix4 absolute_H0() const { return H0 + reference_energy * Matrix4::Identity(); }
};

struct SWResult {
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  double t = 0.0;
  Matrix4 S = Matrix4::Zero();
  /// H0 + [S, V] / 2, in the reference-subtracted convention.
  Matrix4 Hprime = Matrix4::Zero();
};

namespace detail {

inline double resonance_scale(double J, double h_z, double Z) {
  return std::max({1.0, std::abs(h_z), std::abs(J * Z)});
}

inline void check_denominator(double h_z, double J, double Z, const char* name) {
  if (std::abs(h_z - J * Z) <= 1e-12 * resonance_scale(J, h_z, Z)) {
    throw ResonanceError(std::string("resonant virtual state: h_z equals J*") + name);
  }
}

}  // namespace detail

inline SWSubspace build_subspace(double J, double h_z, double h_x, double Z_h, double Z_p,
                                 double reference_energy = 0.0) {
  if (!(J > 0.0)) throw PreconditionError("J must be positive");
  if (!(h_x >= 0.0)) throw PreconditionError("h_x must be non-negative");
  detail::check_denominator(h_z, J, Z_h, "Z_h");
  detail::check_denominator(h_z, J, Z_p, "Z_p");

  SWSubspace sub;
  sub.J = J;
  sub.h_z = h_z;
  sub.h_x = h_x;
  sub.Z_h = Z_h;
  sub.Z_p = Z_p;
  sub.reference_energy = reference_energy;
  sub.H0.diagonal() << -2.0 * h_z + 2.0 * J * Z_h, 0.0, 0.0, 2.0 * h_z - 2.0 * J * Z_p;

  // sigma^x on either spin: connects states differing in exactly one bit.
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (std::popcount(static_cast<unsigned>(a ^ b)) == 1) sub.V(a, b) = -h_x;
    }
  }
  return sub;
}

/// Solves V + [S, H0] = 0 elementwise: S_ab = V_ab / (E_a - E_b), zero inside
/// energy-degenerate blocks.
inline Matrix4 solve_generator_numeric(const SWSubspace& sub) {
  const Eigen::Vector4d E = sub.H0.diagonal();
  const double scale = std::max(1.0, E.cwiseAbs().maxCoeff());
  Matrix4 S = Matrix4::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double gap = E(a) - E(b);
      if (std::abs(gap) > 1e-12 * scale) {
        S(a, b) = sub.V(a, b) / gap;
      } else if (sub.V(a, b) != 0.0 && a != b) {
        throw ResonanceError("perturbation couples degenerate states " + std::to_string(a) + " and " +
                             std::to_string(b));
      }
    }
  }
  return S;
}

inline double closed_form_alpha(const SWSubspace& sub) {
  return sub.h_x / (2.0 * (sub.h_z - sub.J * sub.Z_h));
}

inline double closed_form_beta(const SWSubspace& sub) {
  return sub.h_x / (2.0 * (sub.h_z - sub.J * sub.Z_p));
}

inline double closed_form_lambda(double J, double h_z, double Z_h, double Z_p) {
  detail::check_denominator(h_z, J, Z_h, "Z_h");
  detail::check_denominator(h_z, J, Z_p, "Z_p");
  return 0.5 * (1.0 / (h_z - J * Z_h) + 1.0 / (-h_z + J * Z_p));
}

inline double closed_form_lambda(const SWSubspace& sub) {
  return closed_form_lambda(sub.J, sub.h_z, sub.Z_h, sub.Z_p);
}

inline Matrix4 closed_form_generator(const SWSubspace& sub) {
  const double a = closed_form_alpha(sub);
  const double b = closed_form_beta(sub);
  Matrix4 S;
  // clang-format off
  S <<  0,  a,  a, 0,
       -a,  0,  0, b,
       -a,  0,  0, b,
        0, -b, -b, 0;
  // clang-format on
  return S;
}

/// Second-order correction lambda h_x^2 * M as printed; excludes H0. Empty when
/// Z_h == Z_p, where the diagonal prefactors are 0/0.
inline std::optional<Matrix4> closed_form_correction(const SWSubspace& sub) {
  if (sub.Z_h == sub.Z_p) return std::nullopt;
  const double lam = closed_form_lambda(sub);
  const double denom = sub.J * (sub.Z_h - sub.Z_p);
  const double d0 = 2.0 * (-sub.h_z + sub.J * sub.Z_p) / denom;
  const double d3 = 2.0 * (sub.h_z - sub.J * sub.Z_h) / denom;
  Matrix4 M;
  // clang-format off
  M << d0, 0, 0, -1,
        0, 1, 1,  0,
        0, 1, 1,  0,
       -1, 0, 0, d3;
  // clang-format on
  return Matrix4(lam * sub.h_x * sub.h_x * M);
}

inline Matrix4 commutator(const Matrix4& A, const Matrix4& B) { return A * B - B * A; }

/// max |V_off + [S, H0]| where V_off drops entries inside degenerate blocks.
inline double commutator_residual(const SWSubspace& sub, const Matrix4& S) {
  const Eigen::Vector4d E = sub.H0.diagonal();
  const double scale = std::max(1.0, E.cwiseAbs().maxCoeff());
  Matrix4 V_off = sub.V;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (std::abs(E(a) - E(b)) <= 1e-12 * scale) V_off(a, b) = 0.0;
    }
  }
  return (V_off + commutator(S, sub.H0)).cwiseAbs().maxCoeff();
}

/// H' = H0 + [S, V] / 2 with the numerically solved generator.
inline Matrix4 effective_hamiltonian(const SWSubspace& sub) {
  const Matrix4 S = solve_generator_numeric(sub);
  return sub.H0 + 0.5 * commutator(S, sub.V);
}

/// Untruncated e^S H e^-S, used to expose the O(h_x^3) remainder.
inline Matrix4 rotated_hamiltonian(const SWSubspace& sub) {
  const Matrix4 S = solve_generator_numeric(sub);
  const Matrix4 U = S.exp();
  const Matrix4 U_inv = (-S).exp();
  return U * sub.hamiltonian() * U_inv;
}

inline double effective_hopping(double J, double h_z, double Z_h, double Z_p, double h_x) {
  return closed_form_lambda(J, h_z, Z_h, Z_p) * h_x * h_x;
}

/// Full reduction through the numeric route. alpha, beta and lambda are read
/// back from the matrices so they can be compared with the closed forms.
inline SWResult schrieffer_wolff(const SWSubspace& sub) {
  SWResult r;
  r.S = solve_generator_numeric(sub);
  r.Hprime = sub.H0 + 0.5 * commutator(r.S, sub.V);
  r.alpha = r.S(0, 1);
  r.beta = r.S(1, 3);
  r.t = r.Hprime(1, 2);
  r.lambda = sub.h_x > 0.0 ? r.t / (sub.h_x * sub.h_x) : closed_form_lambda(sub);
  return r;
}

}  // namespace polaron_tfim::sw

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vql/common.hpp"
#include "vql/pauli.hpp"

namespace vql {

using Matrix4c = Eigen::Matrix4cd;

/// Two-qubit unitary. Validated at construction (U†U = I within 1e-10).
/// Index convention for the 4-dim local space of apply_gate2q(state, g, qa, qb):
/// local index = 2*bit(qa) + bit(qb), i.e. in g = A ⊗ B the factor A acts on
/// qa and B on qb.
class Gate2Q {
 public:
  explicit Gate2Q(const Matrix4c& m);

  static Gate2Q identity();
  static Gate2Q swap();
  /// Flips the qa bit when the qb bit is 1; conjugates Z(qb) -> Z(qa)Z(qb).
  static Gate2Q cnot_second_controls_first();
  /// Flips the qb bit when the qa bit is 1; conjugates Z(qa) -> Z(qa)Z(qb).
  static Gate2Q cnot_first_controls_second();
  static Gate2Q kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b);

  const Matrix4c& matrix() const { return m_; }

 private:
  Matrix4c m_;
};

/// Dense statevector over n qubits, little-endian: qubit 0 is the least
/// significant bit of the amplitude index. Hard cap n <= 26.
class StateVector {
 public:
  StateVector(int n_qubits, std::vector<cplx> amplitudes);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  const std::vector<cplx>& amplitudes() const { return amps_; }
  cplx amplitude(std::size_t index) const { return amps_[index]; }

  double norm() const;

 private:
  friend StateVector apply_gate2q(const StateVector&, const Gate2Q&, int, int);
  friend class CircuitEngine;

  int n_qubits_;
  std::vector<cplx> amps_;
};

inline constexpr int kMaxQubits = 26;

StateVector basis_state(int n_qubits, std::uint64_t index);

StateVector apply_gate2q(const StateVector& state, const Gate2Q& g, int qa, int qb);

/// <state|P|state>. Imaginary residue is checked (< 1e-10) and discarded.
double pauli_expectation(const StateVector& state, const PauliString& p);

/// Sum_i <Z_i> in one pass over amplitudes.
double sum_z_expectation(const StateVector& state);

/// <a|b> with a fixed pairwise reduction order (deterministic under threads).
cplx overlap(const StateVector& a, const StateVector& b);

/// P(measuring `outcome` on `qubit`).
double marginal_prob(const StateVector& state, int qubit, int outcome);

// Raw kernels shared with the circuit engine; `amps` need not be normalized.
namespace kernel {
void apply_gate2q_inplace(std::vector<cplx>& amps, int n_qubits, const Matrix4c& g, int qa, int qb);
void apply_pauli_inplace(std::vector<cplx>& amps, int n_qubits, const PauliString& p);
}  // namespace kernel

}  // namespace vql

#pragma once

#include <cstdint>
#include <string>

#include "vql/common.hpp"

namespace vql {

enum class PauliLetter : int { I = 0, X = 1, Y = 2, Z = 3 };

/// Signed n-qubit Pauli word, stored as X/Z bit masks plus a power of i.
/// The represented operator is i^phase_power * (letter_0 ⊗ ... acting on
/// qubit 0, 1, ...). Letter encoding: x bit set, z clear -> X; both -> Y;
/// z only -> Z. Supports up to 64 qubits.
class PauliString {
 public:
  PauliString(int n_qubits, std::uint64_t x_mask, std::uint64_t z_mask, int phase_power = 0);

  static PauliString identity(int n_qubits) { return PauliString(n_qubits, 0, 0, 0); }
  static PauliString single(int n_qubits, int qubit, PauliLetter letter);
  static PauliString from_letters(const std::string& letters, int phase_power = 0);

  int n_qubits() const { return n_qubits_; }
  std::uint64_t x_mask() const { return x_mask_; }
  std::uint64_t z_mask() const { return z_mask_; }
  int phase_power() const { return phase_power_; }
  cplx phase() const;

  PauliLetter letter(int qubit) const;
  void set_letter(int qubit, PauliLetter letter);
  bool is_identity_word() const { return x_mask_ == 0 && z_mask_ == 0; }
  int weight() const;

  std::string str() const;

  bool operator==(const PauliString& other) const = default;

 private:
  int n_qubits_;
  std::uint64_t x_mask_;
  std::uint64_t z_mask_;
  int phase_power_;  // reduced mod 4
};

/// Product ab with the accumulated phase.
PauliString pauli_mul(const PauliString& a, const PauliString& b);

/// Tr(ab) without materializing matrices: 2^n * i^phase when ab is a phased
/// identity word, else 0.
cplx pauli_trace_product(const PauliString& a, const PauliString& b);

}  // namespace vql

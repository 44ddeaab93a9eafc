#pragma once

#include <array>
#include <vector>

#include "vql/rng.hpp"
#include "vql/statevec.hpp"

namespace vql {

/// Real and imaginary parts of a 4x4 complex matrix M in row-major order:
/// values[2*(4r+c)] = Re M(r,c), values[2*(4r+c)+1] = Im M(r,c).
/// The gate is exp(M - M†).
struct GateParams32 {
  std::array<double, 32> values{};
};

/// Coefficients on the skew-Hermitian basis {i*Q_k}, Q_k the 16 two-qubit
/// Pauli words I,X,Y,Z ⊗ I,X,Y,Z in lexicographic order (k = 4*first + second,
/// first factor on qa). The identity generator only moves the global phase.
struct GateParams16 {
  std::array<double, 16> values{};
};

enum class SlotKind { params32, params16 };

inline constexpr int param_count(SlotKind kind) { return kind == SlotKind::params32 ? 32 : 16; }

/// Unitary together with the exact partial derivatives dU/dθ_k.
struct FrechetPair {
  Matrix4c unitary;
  std::vector<Matrix4c> partials;
};

Gate2Q build_unitary32(const GateParams32& p);
Gate2Q build_unitary16(const GateParams16& p);
Gate2Q build_unitary(SlotKind kind, std::span<const double> values);

FrechetPair build_with_partials(const GateParams32& p);
FrechetPair build_with_partials(const GateParams16& p);
FrechetPair build_with_partials(SlotKind kind, std::span<const double> values);

/// i.i.d. standard normal entries, the initialization used by every trainable
/// and fixed random gate in the experiments.
GateParams32 random_params32(Rng& rng);
GateParams16 random_params16(Rng& rng);

/// The 16 two-qubit Pauli words as dense matrices, lexicographic order.
const std::array<Matrix4c, 16>& two_qubit_pauli_basis();

}  // namespace vql

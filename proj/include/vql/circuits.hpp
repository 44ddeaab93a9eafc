#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "vql/paramgate.hpp"
#include "vql/statevec.hpp"

namespace vql {

/// One two-qubit gate placement. Exactly one of param_slot / fixed_gate is
/// set; application order is the layout's list order.
struct Brick {
  int layer = 0;
  int qa = 0;
  int qb = 0;
  int param_slot = -1;
  std::optional<Gate2Q> fixed_gate;

  bool trainable() const { return param_slot >= 0; }
};

class CircuitLayout {
 public:
  CircuitLayout(int n_qubits, std::vector<Brick> bricks, std::vector<SlotKind> slots,
                std::optional<int> readout = std::nullopt);

  int n_qubits() const { return n_qubits_; }
  const std::vector<Brick>& bricks() const { return bricks_; }
  const std::vector<SlotKind>& slots() const { return slots_; }
  std::optional<int> readout() const { return readout_; }

  int param_count() const { return total_params_; }
  int slot_offset(int slot) const { return offsets_[static_cast<std::size_t>(slot)]; }
  SlotKind slot_kind(int slot) const { return slots_[static_cast<std::size_t>(slot)]; }
  int layer_count() const;

  /// Appends one checkerboard brick row (fresh params32 slots); used by the
  /// layer-wise growth schedule.
  void append_checkerboard_row(int layer_index);

 private:
  void validate() const;
  void rebuild_offsets();

  int n_qubits_;
  std::vector<Brick> bricks_;
  std::vector<SlotKind> slots_;
  std::optional<int> readout_;
  std::vector<int> offsets_;
  int total_params_ = 0;
};

struct GradResult {
  double value = 0.0;
  std::vector<double> grad;
};

/// Hermitian observable for expectation losses: either an explicit Pauli sum
/// or Sum_i Z_i plus a constant shift (the VQE fast path).
struct PauliSum {
  std::vector<std::pair<double, PauliString>> terms;
};
struct SumZPlusShift {
  double shift = 0.0;
};
using Observable = std::variant<PauliSum, SumZPlusShift>;

/// L brick rows on alternating even/odd offsets with cyclic wrap; every brick
/// gets its own params32 slot, 32*L*floor(n/2) real parameters in total.
CircuitLayout build_checkerboard(int n_qubits, int layers);

/// ceil(log2 n) convolution layers, one shared params16 slot per layer applied
/// to all cyclically adjacent pairs of the active qubits; after each layer the
/// odd positions of the active list are pooled (removed, never acted on
/// again). Readout is the surviving qubit. 16*ceil(log2 n) parameters.
CircuitLayout build_qcnn(int n_qubits);

StateVector forward(const CircuitLayout& layout, std::span<const double> params,
                    const StateVector& input);

GradResult grad_expectation(const CircuitLayout& layout, std::span<const double> params,
                            const StateVector& input, const Observable& observable);

/// value = 1 - |<target|psi(theta)>|^2.
GradResult grad_overlap(const CircuitLayout& layout, std::span<const double> params,
                        const StateVector& input, const StateVector& target);

/// value = P(readout qubit measures 1).
GradResult grad_marginal(const CircuitLayout& layout, std::span<const double> params,
                         const StateVector& input);

/// Qubits that can influence the readout qubit through the circuit.
std::vector<int> reverse_light_cone(const CircuitLayout& layout, int readout_qubit);

namespace detail {
/// Builds each slot's unitary once (shared slots reuse it).
std::vector<Gate2Q> slot_unitaries(const CircuitLayout& layout, std::span<const double> params);

/// Adjoint sweep shared by the three losses: given the forward-final state
/// psi and lambda with value = <lambda|psi> (+ constant), accumulates
/// sign * 2 Re <lambda_b| dU_b |psi_{b-1}> into grad, slot-shared entries
/// additively.
void adjoint_accumulate(const CircuitLayout& layout, std::span<const double> params,
                        std::vector<cplx> psi, std::vector<cplx> lambda, double sign,
                        std::vector<double>& grad);
}  // namespace detail

}  // namespace vql

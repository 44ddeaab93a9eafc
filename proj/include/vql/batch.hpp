#pragma once

#include <cstdint>
#include <vector>

#include "vql/circuits.hpp"

namespace vql::batch {

/// Batch of statevectors in structure-of-arrays form: separate re/im planes,
/// amplitude-major with the lane index contiguous (index = amp * stride +
/// lane). Lanes beyond `lanes` are zero padding up to a multiple of 4, which
/// keeps the hot loops free of tails. This is the vectorized engine behind
/// the training harnesses; the per-state path in circuits.hpp is the
/// reference it is tested against.
class BatchedStates {
 public:
  BatchedStates(int n_qubits, int lanes);

  static BatchedStates from_basis_indices(int n_qubits, const std::vector<std::uint64_t>& indices);

  int n_qubits() const { return n_qubits_; }
  int lanes() const { return lanes_; }
  int stride() const { return stride_; }
  std::size_t dim() const { return dim_; }

  double* re() { return re_.data(); }
  double* im() { return im_.data(); }
  const double* re() const { return re_.data(); }
  const double* im() const { return im_.data(); }

  cplx amplitude(std::size_t amp, int lane) const {
    const std::size_t k = amp * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(lane);
    return {re_[k], im_[k]};
  }

  StateVector lane_state(int lane) const;

 private:
  int n_qubits_;
  int lanes_;
  int stride_;
  std::size_t dim_;
  std::vector<double> re_;
  std::vector<double> im_;
};

void apply_gate(BatchedStates& s, const Matrix4c& g, int qa, int qb);

void forward(const CircuitLayout& layout, std::span<const double> params, BatchedStates& s);

/// P(qubit = 1) per lane.
std::vector<double> lane_marginals(const BatchedStates& s, int qubit);

/// <a_lane|b_lane> per lane.
std::vector<cplx> lane_overlaps(const BatchedStates& a, const BatchedStates& b);

/// lambda_lane = coeff_lane * source_lane, optionally projected onto the
/// qubit=1 subspace first (project_qubit >= 0).
BatchedStates scaled_copy(const BatchedStates& source, const std::vector<cplx>& coeffs,
                          int project_qubit);

/// Batched mirror of detail::adjoint_accumulate: psi holds the forward-final
/// batch, lambda the loss adjoint per lane; gradients of shared parameters
/// accumulate over bricks and lanes. Deterministic for any thread count.
void adjoint_accumulate(const CircuitLayout& layout, std::span<const double> params,
                        BatchedStates psi, BatchedStates lambda, double sign,
                        std::vector<double>& grad);

}  // namespace vql::batch

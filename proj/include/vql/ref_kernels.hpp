#pragma once

#include "vql/statevec.hpp"

namespace vql::ref {

// Plain serial counterparts of the OpenMP kernels. These are the reference
// implementations the tests compare against; the bench target times both.

void apply_gate2q_inplace(std::vector<cplx>& amps, int n_qubits, const Matrix4c& g, int qa, int qb);

StateVector apply_gate2q(const StateVector& state, const Gate2Q& g, int qa, int qb);

double pauli_expectation(const StateVector& state, const PauliString& p);

double sum_z_expectation(const StateVector& state);

cplx overlap(const StateVector& a, const StateVector& b);

double marginal_prob(const StateVector& state, int qubit, int outcome);

}  // namespace vql::ref

#include "vql/ref_kernels.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace vql::ref {

void apply_gate2q_inplace(std::vector<cplx>& amps, int n_qubits, const Matrix4c& g, int qa, int qb) {
  if (qa == qb || qa < 0 || qb < 0 || qa >= n_qubits || qb >= n_qubits)
    throw std::domain_error("ref::apply_gate2q: bad qubit pair");
  const std::size_t dim = amps.size();
  const std::size_t bit_a = std::size_t{1} << qa;
  const std::size_t bit_b = std::size_t{1} << qb;
  std::vector<cplx> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const int row = 2 * static_cast<int>((i & bit_a) != 0) + static_cast<int>((i & bit_b) != 0);
    const std::size_t base = i & ~(bit_a | bit_b);
    cplx acc{0.0, 0.0};
    for (int col = 0; col < 4; ++col) {
      const std::size_t j = base | (col & 2 ? bit_a : 0) | (col & 1 ? bit_b : 0);
      acc += g(row, col) * amps[j];
    }
    out[i] = acc;
  }
  amps = std::move(out);
}

StateVector apply_gate2q(const StateVector& state, const Gate2Q& g, int qa, int qb) {
  std::vector<cplx> amps = state.amplitudes();
  apply_gate2q_inplace(amps, state.n_qubits(), g.matrix(), qa, qb);
  return StateVector(state.n_qubits(), std::move(amps));
}

double pauli_expectation(const StateVector& state, const PauliString& p) {
  if (p.n_qubits() != state.n_qubits()) throw std::domain_error("ref::pauli_expectation: size mismatch");
  const auto& s = state.amplitudes();
  const std::size_t x = p.x_mask();
  const std::size_t z = p.z_mask();
  static const cplx i_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const cplx global = i_pow[(p.phase_power() + std::popcount(x & z)) % 4];
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double sign = (std::popcount(j & z) & 1) ? -1.0 : 1.0;
    acc += std::conj(s[j ^ x]) * (sign * s[j]);
  }
  return (acc * global).real();
}

double sum_z_expectation(const StateVector& state) {
  const auto& s = state.amplitudes();
  double acc = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j)
    acc += std::norm(s[j]) * static_cast<double>(state.n_qubits() - 2 * std::popcount(j));
  return acc;
}

cplx overlap(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) throw std::domain_error("ref::overlap: size mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < a.dim(); ++j) acc += std::conj(a.amplitude(j)) * b.amplitude(j);
  return acc;
}

double marginal_prob(const StateVector& state, int qubit, int outcome) {
  const std::size_t bit = std::size_t{1} << qubit;
  double acc = 0.0;
  for (std::size_t j = 0; j < state.dim(); ++j)
    if ((((j & bit) != 0) ? 1 : 0) == outcome) acc += std::norm(state.amplitude(j));
  return acc;
}

}  // namespace vql::ref

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "vql/circuits.hpp"
#include "vql/rng.hpp"
#include "vql/statevec.hpp"

namespace vql::testing {

using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

inline Eigen::Matrix2cd pauli_dense1(PauliLetter letter) {
  Eigen::Matrix2cd m;
  switch (letter) {
    case PauliLetter::I: m << 1, 0, 0, 1; break;
    case PauliLetter::X: m << 0, 1, 1, 0; break;
    case PauliLetter::Y: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case PauliLetter::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

// Dense operator of a PauliString under the little-endian convention:
// qubit n-1 is the leftmost Kronecker factor.
inline MatrixXc pauli_dense(const PauliString& p) {
  MatrixXc out = MatrixXc::Identity(1, 1);
  for (int q = 0; q < p.n_qubits(); ++q) {
    const Eigen::Matrix2cd f = pauli_dense1(p.letter(q));
    MatrixXc next(out.rows() * 2, out.cols() * 2);
    next.block(0, 0, out.rows(), out.cols()) = f(0, 0) * out;
    next.block(0, out.cols(), out.rows(), out.cols()) = f(0, 1) * out;
    next.block(out.rows(), 0, out.rows(), out.cols()) = f(1, 0) * out;
    next.block(out.rows(), out.cols(), out.rows(), out.cols()) = f(1, 1) * out;
    out = next;
  }
  return p.phase() * out;
}

// Dense 2^n x 2^n operator of a two-qubit gate on (qa, qb): entry convention
// matches apply_gate2q (local index 2*bit(qa) + bit(qb)).
inline MatrixXc gate_dense(int n_qubits, const Matrix4c& g, int qa, int qb) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  MatrixXc out = MatrixXc::Zero(static_cast<long>(dim), static_cast<long>(dim));
  const std::size_t bit_a = std::size_t{1} << qa;
  const std::size_t bit_b = std::size_t{1} << qb;
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & (bit_a | bit_b)) continue;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        const std::size_t row = base | (r & 2 ? bit_a : 0) | (r & 1 ? bit_b : 0);
        const std::size_t col = base | (c & 2 ? bit_a : 0) | (c & 1 ? bit_b : 0);
        out(static_cast<long>(row), static_cast<long>(col)) = g(r, c);
      }
  }
  return out;
}

// Full circuit unitary built column by column (n small).
inline MatrixXc circuit_dense(const CircuitLayout& layout, std::span<const double> params) {
  const std::size_t dim = std::size_t{1} << layout.n_qubits();
  MatrixXc out(static_cast<long>(dim), static_cast<long>(dim));
  for (std::size_t col = 0; col < dim; ++col) {
    const StateVector psi = forward(layout, params, basis_state(layout.n_qubits(), col));
    for (std::size_t row = 0; row < dim; ++row)
      out(static_cast<long>(row), static_cast<long>(col)) = psi.amplitude(row);
  }
  return out;
}

inline StateVector random_state(int n_qubits, Rng& rng) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  std::vector<cplx> amps(dim);
  double norm_sq = 0.0;
  for (auto& a : amps) {
    a = cplx(rng.normal(), rng.normal());
    norm_sq += std::norm(a);
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (auto& a : amps) a *= inv;
  return StateVector(n_qubits, std::move(amps));
}

inline Gate2Q random_gate(Rng& rng) {
  GateParams32 p = random_params32(rng);
  return build_unitary32(p);
}

inline std::vector<double> random_params(const CircuitLayout& layout, Rng& rng) {
  std::vector<double> params(static_cast<std::size_t>(layout.param_count()));
  for (auto& v : params) v = rng.normal();
  return params;
}

// Central finite differences of a scalar loss over a parameter vector.
inline std::vector<double> finite_difference_grad(
    const std::function<double(const std::vector<double>&)>& loss, std::vector<double> params,
    double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss(params);
    params[i] = saved - h;
    const double down = loss(params);
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double max_abs = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_abs = std::max(max_abs, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return max_abs / std::max(scale, 1e-8);
}

}  // namespace vql::testing

#include "vql/statevec.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace vql {

namespace {

constexpr std::size_t kParallelDim = std::size_t{1} << 12;

void check_qubit_pair(int n_qubits, int qa, int qb) {
  if (qa == qb) throw std::domain_error("gate qubits must differ");
  if (qa < 0 || qb < 0 || qa >= n_qubits || qb >= n_qubits)
    throw std::domain_error("gate qubit index out of range");
}

}  // namespace

Gate2Q::Gate2Q(const Matrix4c& m) : m_(m) {
  if (!m.allFinite()) throw std::domain_error("Gate2Q: non-finite entries");
  const Matrix4c residue = m.adjoint() * m - Matrix4c::Identity();
  if (residue.cwiseAbs().maxCoeff() > 1e-10) throw std::domain_error("Gate2Q: not unitary");
}

Gate2Q Gate2Q::identity() { return Gate2Q(Matrix4c::Identity()); }

Gate2Q Gate2Q::swap() {
  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = 1;
  m(1, 2) = 1;
  m(2, 1) = 1;
  m(3, 3) = 1;
  return Gate2Q(m);
}

Gate2Q Gate2Q::cnot_second_controls_first() {
  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = 1;
  m(3, 1) = 1;
  m(2, 2) = 1;
  m(1, 3) = 1;
  return Gate2Q(m);
}

Gate2Q Gate2Q::cnot_first_controls_second() {
  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = 1;
  m(1, 1) = 1;
  m(3, 2) = 1;
  m(2, 3) = 1;
  return Gate2Q(m);
}

Gate2Q Gate2Q::kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Matrix4c m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return Gate2Q(m);
}

StateVector::StateVector(int n_qubits, std::vector<cplx> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  if (n_qubits < 1) throw std::domain_error("StateVector: need at least one qubit");
  if (n_qubits > kMaxQubits) throw resource_error("StateVector: n_qubits exceeds hard cap 26");
  if (amps_.size() != (std::size_t{1} << n_qubits))
    throw std::domain_error("StateVector: amplitude count must be 2^n");
  const double n = norm();
  if (std::abs(n - 1.0) > 1e-9) throw std::domain_error("StateVector: not normalized");
}

double StateVector::norm() const {
  const double sq = blocked_sum<double>(amps_.size(), [&](std::size_t i) { return std::norm(amps_[i]); });
  return std::sqrt(sq);
}

StateVector basis_state(int n_qubits, std::uint64_t index) {
  if (n_qubits < 1) throw std::domain_error("basis_state: need at least one qubit");
  if (n_qubits > kMaxQubits) throw resource_error("basis_state: n_qubits exceeds hard cap 26");
  const std::size_t dim = std::size_t{1} << n_qubits;
  if (index >= dim) throw std::domain_error("basis_state: index out of range");
  std::vector<cplx> amps(dim, cplx{0.0, 0.0});
  amps[index] = cplx{1.0, 0.0};
  return StateVector(n_qubits, std::move(amps));
}

namespace kernel {

void apply_gate2q_inplace(std::vector<cplx>& amps, int n_qubits, const Matrix4c& g, int qa, int qb) {
  check_qubit_pair(n_qubits, qa, qb);
  const std::size_t dim = amps.size();
  const std::size_t bit_a = std::size_t{1} << qa;
  const std::size_t bit_b = std::size_t{1} << qb;
  const int q_lo = qa < qb ? qa : qb;
  const int q_hi = qa < qb ? qb : qa;
  const std::size_t mask_lo = (std::size_t{1} << q_lo) - 1;
  const std::size_t mask_mid = ((std::size_t{1} << q_hi) - 1) ^ ((std::size_t{1} << (q_lo + 1)) - 1);
  const std::size_t mask_hi = ~((std::size_t{2} << q_hi) - 1);
  const std::size_t groups = dim >> 2;

  cplx gm[4][4];
  double gr[4][4], gi[4][4];
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      gm[r][c] = g(r, c);
      gr[r][c] = g(r, c).real();
      gi[r][c] = g(r, c).imag();
    }

  if (q_lo >= 2) {
    // The four rows of each group come in contiguous runs of 2^q_lo
    // amplitudes; sweep the run with deinterleaved real arithmetic so the
    // inner loop vectorizes.
    const std::size_t run = std::size_t{1} << q_lo;
    const std::size_t supers = groups >> q_lo;
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(supers); ++si) {
      const std::size_t u = static_cast<std::size_t>(si) << q_lo;
      const std::size_t base = (u & mask_lo) | ((u << 1) & mask_mid) | ((u << 2) & mask_hi);
      double* __restrict__ p0 = reinterpret_cast<double*>(amps.data() + base);
      double* __restrict__ p1 = reinterpret_cast<double*>(amps.data() + (base | bit_b));
      double* __restrict__ p2 = reinterpret_cast<double*>(amps.data() + (base | bit_a));
      double* __restrict__ p3 = reinterpret_cast<double*>(amps.data() + (base | bit_a | bit_b));
      for (std::size_t j = 0; j < run; ++j) {
        const double ar[4] = {p0[2 * j], p1[2 * j], p2[2 * j], p3[2 * j]};
        const double ai[4] = {p0[2 * j + 1], p1[2 * j + 1], p2[2 * j + 1], p3[2 * j + 1]};
        double* const out[4] = {p0, p1, p2, p3};
        for (int r = 0; r < 4; ++r) {
          double sr = 0.0, si_acc = 0.0;
          for (int c = 0; c < 4; ++c) {
            sr += gr[r][c] * ar[c] - gi[r][c] * ai[c];
            si_acc += gr[r][c] * ai[c] + gi[r][c] * ar[c];
          }
          out[r][2 * j] = sr;
          out[r][2 * j + 1] = si_acc;
        }
      }
    }
    return;
  }

#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
  for (std::ptrdiff_t gi_ = 0; gi_ < static_cast<std::ptrdiff_t>(groups); ++gi_) {
    const std::size_t u = static_cast<std::size_t>(gi_);
    // Deposit the group bits around positions q_lo and q_hi.
    const std::size_t base = (u & mask_lo) | ((u << 1) & mask_mid) | ((u << 2) & mask_hi);
    const std::size_t i00 = base;
    const std::size_t i01 = base | bit_b;
    const std::size_t i10 = base | bit_a;
    const std::size_t i11 = base | bit_a | bit_b;
    const cplx a0 = amps[i00], a1 = amps[i01], a2 = amps[i10], a3 = amps[i11];
    amps[i00] = gm[0][0] * a0 + gm[0][1] * a1 + gm[0][2] * a2 + gm[0][3] * a3;
    amps[i01] = gm[1][0] * a0 + gm[1][1] * a1 + gm[1][2] * a2 + gm[1][3] * a3;
    amps[i10] = gm[2][0] * a0 + gm[2][1] * a1 + gm[2][2] * a2 + gm[2][3] * a3;
    amps[i11] = gm[3][0] * a0 + gm[3][1] * a1 + gm[3][2] * a2 + gm[3][3] * a3;
  }
}

void apply_pauli_inplace(std::vector<cplx>& amps, int n_qubits, const PauliString& p) {
  if (p.n_qubits() != n_qubits) throw std::domain_error("apply_pauli: size mismatch");
  const std::size_t x = p.x_mask();
  const std::size_t z = p.z_mask();
  const int y_count = std::popcount(p.x_mask() & p.z_mask());
  static const cplx i_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const cplx global = i_pow[(p.phase_power() + y_count) % 4];
  const std::size_t dim = amps.size();
  if (x == 0) {
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(dim); ++j) {
      const double sign = (std::popcount(static_cast<std::size_t>(j) & z) & 1) ? -1.0 : 1.0;
      amps[static_cast<std::size_t>(j)] *= sign * global;
    }
    return;
  }
  // (P s)_{j^x} = i^{phase+|Y|} (-1)^{|j & z|} s_j; swap each pair once.
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(dim); ++j) {
    const std::size_t src = static_cast<std::size_t>(j);
    const std::size_t dst = src ^ x;
    if (dst < src) continue;
    const cplx cs = ((std::popcount(src & z) & 1) ? -global : global) * amps[src];
    const cplx cd = ((std::popcount(dst & z) & 1) ? -global : global) * amps[dst];
    amps[dst] = cs;
    amps[src] = cd;
  }
}

}  // namespace kernel

StateVector apply_gate2q(const StateVector& state, const Gate2Q& g, int qa, int qb) {
  std::vector<cplx> amps = state.amplitudes();
  kernel::apply_gate2q_inplace(amps, state.n_qubits(), g.matrix(), qa, qb);
  StateVector out(state.n_qubits(), std::move(amps));
  return out;
}

double pauli_expectation(const StateVector& state, const PauliString& p) {
  if (p.n_qubits() != state.n_qubits()) throw std::domain_error("pauli_expectation: size mismatch");
  const auto& s = state.amplitudes();
  const std::size_t x = p.x_mask();
  const std::size_t z = p.z_mask();
  const int y_count = std::popcount(p.x_mask() & p.z_mask());
  static const cplx i_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const cplx global = i_pow[(p.phase_power() + y_count) % 4];
  const cplx value = blocked_sum<cplx>(s.size(), [&](std::size_t j) {
    const double sign = (std::popcount(j & z) & 1) ? -1.0 : 1.0;
    return std::conj(s[j ^ x]) * (sign * s[j]);
  }) * global;
  if (std::abs(value.imag()) > 1e-10) throw numeric_error("pauli_expectation: imaginary residue");
  double re = value.real();
  if (re > 1.0) re = 1.0;
  if (re < -1.0) re = -1.0;
  return re;
}

double sum_z_expectation(const StateVector& state) {
  const auto& s = state.amplitudes();
  const int n = state.n_qubits();
  return blocked_sum<double>(s.size(), [&](std::size_t j) {
    return std::norm(s[j]) * static_cast<double>(n - 2 * std::popcount(j));
  });
}

cplx overlap(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) throw std::domain_error("overlap: size mismatch");
  const auto& pa = a.amplitudes();
  const auto& pb = b.amplitudes();
  return blocked_sum<cplx>(pa.size(), [&](std::size_t j) { return std::conj(pa[j]) * pb[j]; });
}

double marginal_prob(const StateVector& state, int qubit, int outcome) {
  if (qubit < 0 || qubit >= state.n_qubits()) throw std::domain_error("marginal_prob: qubit out of range");
  if (outcome != 0 && outcome != 1) throw std::domain_error("marginal_prob: outcome must be 0 or 1");
  const auto& s = state.amplitudes();
  const std::size_t bit = std::size_t{1} << qubit;
  const bool want = outcome == 1;
  return blocked_sum<double>(s.size(), [&](std::size_t j) {
    return ((j & bit) != 0) == want ? std::norm(s[j]) : 0.0;
  });
}

}  // namespace vql

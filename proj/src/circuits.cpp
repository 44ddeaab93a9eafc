#include "vql/circuits.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace vql {

namespace {

constexpr std::size_t kParallelDim = std::size_t{1} << 12;

// R_{rc} = sum_rest conj(lambda[r,rest]) psi[c,rest] over the (qa, qb)
// subspace; the per-parameter gradient is then 2 Re sum_{rc} D_k(r,c) R(r,c).
Matrix4c cross_matrix(const std::vector<cplx>& lambda, const std::vector<cplx>& psi, int qa, int qb) {
  const std::size_t dim = psi.size();
  const std::size_t bit_a = std::size_t{1} << qa;
  const std::size_t bit_b = std::size_t{1} << qb;
  const int q_lo = qa < qb ? qa : qb;
  const int q_hi = qa < qb ? qb : qa;
  const std::size_t mask_lo = (std::size_t{1} << q_lo) - 1;
  const std::size_t mask_mid = ((std::size_t{1} << q_hi) - 1) ^ ((std::size_t{1} << (q_lo + 1)) - 1);
  const std::size_t mask_hi = ~((std::size_t{2} << q_hi) - 1);
  const std::size_t groups = dim >> 2;

  struct Acc {
    cplx m[4][4]{};
    Acc& operator+=(const Acc& o) {
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m[r][c] += o.m[r][c];
      return *this;
    }
  };
  const Acc total = blocked_sum<Acc>(groups, [&](std::size_t u) {
    const std::size_t base = (u & mask_lo) | ((u << 1) & mask_mid) | ((u << 2) & mask_hi);
    const std::size_t idx[4] = {base, base | bit_b, base | bit_a, base | bit_a | bit_b};
    Acc acc;
    for (int r = 0; r < 4; ++r) {
      const cplx lr = std::conj(lambda[idx[r]]);
      for (int c = 0; c < 4; ++c) acc.m[r][c] = lr * psi[idx[c]];
    }
    return acc;
  });
  Matrix4c out;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out(r, c) = total.m[r][c];
  return out;
}

void apply_observable(std::vector<cplx>& amps, int n_qubits, const Observable& obs) {
  if (const auto* sz = std::get_if<SumZPlusShift>(&obs)) {
    const double shift = sz->shift;
    const std::size_t dim = amps.size();
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(dim); ++j) {
      const double w = static_cast<double>(n_qubits - 2 * std::popcount(static_cast<std::size_t>(j))) + shift;
      amps[static_cast<std::size_t>(j)] *= w;
    }
    return;
  }
  const auto& sum = std::get<PauliSum>(obs);
  std::vector<cplx> out(amps.size(), cplx{0.0, 0.0});
  for (const auto& [coeff, word] : sum.terms) {
    std::vector<cplx> term = amps;
    kernel::apply_pauli_inplace(term, n_qubits, word);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += coeff * term[j];
  }
  amps = std::move(out);
}

}  // namespace

CircuitLayout::CircuitLayout(int n_qubits, std::vector<Brick> bricks, std::vector<SlotKind> slots,
                             std::optional<int> readout)
    : n_qubits_(n_qubits), bricks_(std::move(bricks)), slots_(std::move(slots)), readout_(readout) {
  rebuild_offsets();
  validate();
}

void CircuitLayout::validate() const {
  // Layouts are symbolic up to the PauliString width; simulation enforces the
  // statevector cap separately.
  if (n_qubits_ < 1 || n_qubits_ > 64)
    throw std::domain_error("CircuitLayout: bad qubit count");
  for (const auto& b : bricks_) {
    if (b.qa == b.qb || b.qa < 0 || b.qb < 0 || b.qa >= n_qubits_ || b.qb >= n_qubits_)
      throw std::domain_error("CircuitLayout: bad brick qubits");
    const bool has_slot = b.param_slot >= 0;
    if (has_slot == b.fixed_gate.has_value())
      throw std::domain_error("CircuitLayout: brick needs exactly one of slot/fixed gate");
    if (has_slot && b.param_slot >= static_cast<int>(slots_.size()))
      throw std::domain_error("CircuitLayout: brick references missing slot");
  }
  if (readout_ && (*readout_ < 0 || *readout_ >= n_qubits_))
    throw std::domain_error("CircuitLayout: bad readout qubit");
}

void CircuitLayout::rebuild_offsets() {
  offsets_.assign(slots_.size(), 0);
  int off = 0;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    offsets_[i] = off;
    off += vql::param_count(slots_[i]);
  }
  total_params_ = off;
}

int CircuitLayout::layer_count() const {
  int max_layer = -1;
  for (const auto& b : bricks_) max_layer = std::max(max_layer, b.layer);
  return max_layer + 1;
}

void CircuitLayout::append_checkerboard_row(int layer_index) {
  const int offset = layer_index % 2;
  const int pairs = n_qubits_ / 2;
  for (int k = 0; k < pairs; ++k) {
    Brick b;
    b.layer = layer_index;
    b.qa = (2 * k + offset) % n_qubits_;
    b.qb = (2 * k + 1 + offset) % n_qubits_;
    b.param_slot = static_cast<int>(slots_.size());
    slots_.push_back(SlotKind::params32);
    bricks_.push_back(b);
  }
  rebuild_offsets();
  validate();
}

CircuitLayout build_checkerboard(int n_qubits, int layers) {
  if (n_qubits < 2) throw std::domain_error("build_checkerboard: need at least 2 qubits");
  if (layers < 1) throw std::domain_error("build_checkerboard: need at least 1 layer");
  CircuitLayout layout(n_qubits, {}, {});
  for (int r = 0; r < layers; ++r) layout.append_checkerboard_row(r);
  return layout;
}

CircuitLayout build_qcnn(int n_qubits) {
  if (n_qubits < 2) throw std::domain_error("build_qcnn: need at least 2 qubits");
  std::vector<int> active(static_cast<std::size_t>(n_qubits));
  for (int q = 0; q < n_qubits; ++q) active[static_cast<std::size_t>(q)] = q;

  std::vector<Brick> bricks;
  std::vector<SlotKind> slots;
  int layer = 0;
  while (active.size() > 1) {
    const int slot = static_cast<int>(slots.size());
    slots.push_back(SlotKind::params16);
    const std::size_t k = active.size();
    const std::size_t pair_count = k == 2 ? 1 : k;
    for (std::size_t i = 0; i < pair_count; ++i) {
      Brick b;
      b.layer = layer;
      b.qa = active[i];
      b.qb = active[(i + 1) % k];
      b.param_slot = slot;
      bricks.push_back(b);
    }
    // Pool: drop the odd positions of the active list.
    std::vector<int> kept;
    for (std::size_t i = 0; i < k; i += 2) kept.push_back(active[i]);
    active = std::move(kept);
    ++layer;
  }
  return CircuitLayout(n_qubits, std::move(bricks), std::move(slots), active[0]);
}

namespace detail {

std::vector<Gate2Q> slot_unitaries(const CircuitLayout& layout, std::span<const double> params) {
  if (static_cast<int>(params.size()) != layout.param_count())
    throw std::domain_error("parameter table shape mismatch");
  std::vector<Gate2Q> gates;
  gates.reserve(layout.slots().size());
  for (std::size_t s = 0; s < layout.slots().size(); ++s) {
    const SlotKind kind = layout.slots()[s];
    const int off = layout.slot_offset(static_cast<int>(s));
    gates.push_back(build_unitary(kind, params.subspan(static_cast<std::size_t>(off),
                                                       static_cast<std::size_t>(param_count(kind)))));
  }
  return gates;
}

void adjoint_accumulate(const CircuitLayout& layout, std::span<const double> params,
                        std::vector<cplx> psi, std::vector<cplx> lambda, double sign,
                        std::vector<double>& grad) {
  const int n = layout.n_qubits();
  // Per-slot Frechet pairs, built once (slots may be shared across bricks).
  std::vector<FrechetPair> pairs;
  pairs.reserve(layout.slots().size());
  for (std::size_t s = 0; s < layout.slots().size(); ++s) {
    const SlotKind kind = layout.slots()[s];
    const int off = layout.slot_offset(static_cast<int>(s));
    pairs.push_back(build_with_partials(kind, params.subspan(static_cast<std::size_t>(off),
                                                             static_cast<std::size_t>(param_count(kind)))));
  }
  const auto& bricks = layout.bricks();
  for (std::size_t bi = bricks.size(); bi-- > 0;) {
    const Brick& b = bricks[bi];
    const Matrix4c u = b.trainable() ? pairs[static_cast<std::size_t>(b.param_slot)].unitary
                                     : b.fixed_gate->matrix();
    const Matrix4c u_dag = u.adjoint();
    kernel::apply_gate2q_inplace(psi, n, u_dag, b.qa, b.qb);
    if (b.trainable()) {
      const Matrix4c r = cross_matrix(lambda, psi, b.qa, b.qb);
      const auto& partials = pairs[static_cast<std::size_t>(b.param_slot)].partials;
      const int off = layout.slot_offset(b.param_slot);
      for (std::size_t k = 0; k < partials.size(); ++k) {
        const cplx inner = (partials[k].array() * r.array()).sum();
        grad[static_cast<std::size_t>(off) + k] += sign * 2.0 * inner.real();
      }
    }
    kernel::apply_gate2q_inplace(lambda, n, u_dag, b.qa, b.qb);
  }
}

}  // namespace detail

StateVector forward(const CircuitLayout& layout, std::span<const double> params,
                    const StateVector& input) {
  if (input.n_qubits() != layout.n_qubits()) throw std::domain_error("forward: size mismatch");
  const auto gates = detail::slot_unitaries(layout, params);
  std::vector<cplx> amps = input.amplitudes();
  for (const auto& b : layout.bricks()) {
    const Matrix4c& u = b.trainable() ? gates[static_cast<std::size_t>(b.param_slot)].matrix()
                                      : b.fixed_gate->matrix();
    kernel::apply_gate2q_inplace(amps, layout.n_qubits(), u, b.qa, b.qb);
  }
  return StateVector(layout.n_qubits(), std::move(amps));
}

GradResult grad_expectation(const CircuitLayout& layout, std::span<const double> params,
                            const StateVector& input, const Observable& observable) {
  const StateVector psi = forward(layout, params, input);
  std::vector<cplx> lambda = psi.amplitudes();
  apply_observable(lambda, layout.n_qubits(), observable);
  const cplx value = blocked_sum<cplx>(lambda.size(), [&](std::size_t j) {
    return std::conj(psi.amplitude(j)) * lambda[j];
  });
  GradResult out;
  out.value = value.real();
  out.grad.assign(static_cast<std::size_t>(layout.param_count()), 0.0);
  detail::adjoint_accumulate(layout, params, psi.amplitudes(), std::move(lambda), 1.0, out.grad);
  return out;
}

GradResult grad_overlap(const CircuitLayout& layout, std::span<const double> params,
                        const StateVector& input, const StateVector& target) {
  if (target.n_qubits() != layout.n_qubits()) throw std::domain_error("grad_overlap: size mismatch");
  const StateVector psi = forward(layout, params, input);
  const cplx c = overlap(target, psi);
  GradResult out;
  out.value = 1.0 - std::norm(c);
  out.grad.assign(static_cast<std::size_t>(layout.param_count()), 0.0);
  // d value = -2 Re(conj(c) <target|dpsi>) = sign * 2 Re <lambda|dpsi>,
  // lambda = c*|target>, sign = -1.
  std::vector<cplx> lambda(target.amplitudes());
  for (auto& a : lambda) a *= c;
  detail::adjoint_accumulate(layout, params, psi.amplitudes(), std::move(lambda), -1.0, out.grad);
  return out;
}

GradResult grad_marginal(const CircuitLayout& layout, std::span<const double> params,
                         const StateVector& input) {
  if (!layout.readout()) throw std::domain_error("grad_marginal: layout has no readout qubit");
  const int qubit = *layout.readout();
  const StateVector psi = forward(layout, params, input);
  const std::size_t bit = std::size_t{1} << qubit;
  std::vector<cplx> lambda = psi.amplitudes();
  for (std::size_t j = 0; j < lambda.size(); ++j)
    if (!(j & bit)) lambda[j] = cplx{0.0, 0.0};
  GradResult out;
  out.value = marginal_prob(psi, qubit, 1);
  out.grad.assign(static_cast<std::size_t>(layout.param_count()), 0.0);
  detail::adjoint_accumulate(layout, params, psi.amplitudes(), std::move(lambda), 1.0, out.grad);
  return out;
}

std::vector<int> reverse_light_cone(const CircuitLayout& layout, int readout_qubit) {
  std::vector<bool> in_cone(static_cast<std::size_t>(layout.n_qubits()), false);
  in_cone[static_cast<std::size_t>(readout_qubit)] = true;
  const auto& bricks = layout.bricks();
  for (std::size_t bi = bricks.size(); bi-- > 0;) {
    const Brick& b = bricks[bi];
    if (in_cone[static_cast<std::size_t>(b.qa)] || in_cone[static_cast<std::size_t>(b.qb)]) {
      in_cone[static_cast<std::size_t>(b.qa)] = true;
      in_cone[static_cast<std::size_t>(b.qb)] = true;
    }
  }
  std::vector<int> cone;
  for (int q = 0; q < layout.n_qubits(); ++q)
    if (in_cone[static_cast<std::size_t>(q)]) cone.push_back(q);
  return cone;
}

}  // namespace vql

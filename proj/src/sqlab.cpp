#include "vql/sqlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vql {

namespace {

constexpr double kCliffordTol = 1e-10;
constexpr std::size_t kCertifyPairCap = 100'000'000;

Eigen::Matrix2cd hadamard() {
  Eigen::Matrix2cd h;
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return h;
}

Eigen::Matrix2cd letter_dense(PauliLetter letter) {
  Eigen::Matrix2cd m;
  switch (letter) {
    case PauliLetter::I: m << 1, 0, 0, 1; break;
    case PauliLetter::X: m << 0, 1, 1, 0; break;
    case PauliLetter::Y: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

// Maps the Z eigenbasis to the basis of `letter`, so that u† Z u = letter.
Eigen::Matrix2cd basis_change(PauliLetter letter) {
  switch (letter) {
    case PauliLetter::X: return hadamard();
    case PauliLetter::Y: {
      Eigen::Matrix2cd sz_dag;
      sz_dag << 1, 0, 0, cplx(0, -1);
      return hadamard() * sz_dag;
    }
    default: return Eigen::Matrix2cd::Identity();
  }
}

// Pairs up per-qubit basis changes into fixed two-qubit bricks on layer 0.
void emit_basis_layer(std::vector<Brick>& bricks, const PauliString& target,
                      const std::vector<int>& qubits) {
  std::vector<int> needy;
  for (const int q : qubits) {
    const PauliLetter letter = target.letter(q);
    if (letter == PauliLetter::X || letter == PauliLetter::Y) needy.push_back(q);
  }
  for (std::size_t i = 0; i < needy.size(); i += 2) {
    Brick b;
    b.layer = 0;
    b.qa = needy[i];
    if (i + 1 < needy.size()) {
      b.qb = needy[i + 1];
      b.fixed_gate = Gate2Q::kron(basis_change(target.letter(b.qa)), basis_change(target.letter(b.qb)));
    } else {
      // Odd count: partner with a neighboring qubit under an identity factor.
      b.qb = b.qa > 0 ? b.qa - 1 : b.qa + 1;
      b.fixed_gate = Gate2Q::kron(basis_change(target.letter(b.qa)), Eigen::Matrix2cd::Identity());
    }
    bricks.push_back(b);
  }
}

PauliString check_construction(const CircuitLayout& circuit, const PauliString& target,
                               int measured_qubit) {
  const PauliString z0 = PauliString::single(target.n_qubits(), measured_qubit, PauliLetter::Z);
  const PauliString got = conjugate_by_circuit(circuit, z0);
  if (!(got == target))
    throw numeric_error("pauli circuit construction failed symbolic verification");
  return got;
}

double inner_from_traces(const PauliString& a, const PauliString& b, double denom_scale) {
  // (Tr a Tr b + Tr(ab)) / (d (d + 1)) with d = 2^n; denom_scale = d(d+1).
  const double d = std::pow(2.0, a.n_qubits());
  cplx tr_a{0, 0}, tr_b{0, 0};
  if (a.is_identity_word()) tr_a = d * a.phase();
  if (b.is_identity_word()) tr_b = d * b.phase();
  const cplx value = (tr_a * tr_b + pauli_trace_product(a, b)) / denom_scale;
  if (std::abs(value.imag()) > 1e-10) throw numeric_error("qcsq inner product: imaginary residue");
  return value.real();
}

cplx trace_w_dag_v(const UnitaryConcept& u, const UnitaryConcept& v) {
  if (u.circuit.n_qubits() != v.circuit.n_qubits())
    throw std::domain_error("unitary concepts: size mismatch");
  if (u.pauli_word && v.pauli_word) {
    const PauliString w_dag(u.pauli_word->n_qubits(), u.pauli_word->x_mask(), u.pauli_word->z_mask(),
                            -u.pauli_word->phase_power());
    return pauli_trace_product(w_dag, *v.pauli_word);
  }
  const int n = u.circuit.n_qubits();
  if (n > 10)
    throw resource_error("qusq inner product: dense trace capped at n = 10 for non-Pauli circuits");
  const Eigen::MatrixXcd w = circuit_unitary_dense(u.circuit);
  const Eigen::MatrixXcd vm = circuit_unitary_dense(v.circuit);
  return (w.conjugate().cwiseProduct(vm)).sum();
}

struct AdversaryCore {
  std::vector<double> correlations(const SqClass& cls, const PauliString& query) const {
    std::vector<double> v(cls.observables.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = cls.kind == SqKind::qcsq_haar2
                 ? qcsq_inner_haar2(query, cls.observables[i].pauli)
                 : qcsq_inner_uniform_z(query, cls.observables[i].pauli);
    }
    return v;
  }
};

OracleTranscript run_adversary(const SqClass& cls, double tau,
                               const std::vector<std::vector<double>>& query_correlations) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::domain_error("adversary: tau must be in (0, 1]");
  const int d0 = static_cast<int>(cls.size());
  OracleTranscript t;
  t.tau = tau;
  t.c_max = cls.c_max;
  t.initial_concepts = d0;
  const double denom = d0 * tau * tau - 1.0;
  t.elimination_bound = denom > 0.0 ? 2.0 * d0 / denom : std::numeric_limits<double>::infinity();
  const double denom_paper = d0 * cls.c_max * cls.c_max * tau * tau - 1.0;
  t.elimination_bound_paper_form =
      denom_paper > 0.0 ? 2.0 * d0 / denom_paper : std::numeric_limits<double>::infinity();

  std::vector<int> alive(static_cast<std::size_t>(d0));
  for (int i = 0; i < d0; ++i) alive[static_cast<std::size_t>(i)] = i;
  const double tolerance = cls.c_max * tau;

  for (const auto& corr : query_correlations) {
    auto survivors_for = [&](double response) {
      int count = 0;
      for (const int i : alive)
        if (std::abs(corr[static_cast<std::size_t>(i)] - response) <= tolerance) ++count;
      return count;
    };
    // Candidate responses: 0 first, then each alive correlation value.
    double best_response = 0.0;
    int best_survivors = survivors_for(0.0);
    for (const int i : alive) {
      const double r = corr[static_cast<std::size_t>(i)];
      const int s = survivors_for(r);
      if (s > best_survivors) {
        best_survivors = s;
        best_response = r;
      }
    }
    OracleQueryRecord rec;
    rec.response = best_response;
    std::vector<int> next_alive;
    for (const int i : alive) {
      if (std::abs(corr[static_cast<std::size_t>(i)] - rec.response) <= tolerance)
        next_alive.push_back(i);
      else
        rec.eliminated_indices.push_back(i);
    }
    rec.eliminated = static_cast<int>(rec.eliminated_indices.size());
    if (std::isfinite(t.elimination_bound) && rec.eliminated > t.elimination_bound)
      throw numeric_error("adversary: elimination bound violated");
    alive = std::move(next_alive);
    t.records.push_back(std::move(rec));
    if (alive.empty()) break;
  }
  t.alive = std::move(alive);
  return t;
}

}  // namespace

double qcsq_inner_haar2(const PauliString& a, const PauliString& b) {
  if (a.n_qubits() != b.n_qubits()) throw std::domain_error("qcsq_inner_haar2: size mismatch");
  const double d = std::pow(2.0, a.n_qubits());
  return inner_from_traces(a, b, d * (d + 1.0));
}

double qcsq_inner_uniform_z(const PauliString& a, const PauliString& b) {
  if (a.n_qubits() != b.n_qubits()) throw std::domain_error("qcsq_inner_uniform_z: size mismatch");
  if (a.x_mask() != 0 || b.x_mask() != 0) return 0.0;
  if (a.z_mask() != b.z_mask()) return 0.0;
  static const double re_i_pow[4] = {1.0, 0.0, -1.0, 0.0};
  static const double im_i_pow[4] = {0.0, 1.0, 0.0, -1.0};
  const int k = (a.phase_power() + b.phase_power()) % 4;
  if (std::abs(im_i_pow[k]) > 0.0) throw numeric_error("qcsq_inner_uniform_z: imaginary residue");
  return re_i_pow[k];
}

double qusq_inner(const UnitaryConcept& u, const UnitaryConcept& v) {
  const double dim = std::pow(2.0, u.circuit.n_qubits());
  return trace_w_dag_v(u, v).real() / dim;
}

double avg_fidelity_2design(const UnitaryConcept& u, const UnitaryConcept& v) {
  const double m = std::pow(2.0, u.circuit.n_qubits());
  const cplx tr = trace_w_dag_v(v, u);  // Tr(V†U)
  return (std::norm(tr) / m + 1.0) / (m + 1.0);
}

PauliString conjugate_by_circuit(const CircuitLayout& circuit, const PauliString& p) {
  if (p.n_qubits() != circuit.n_qubits())
    throw std::domain_error("conjugate_by_circuit: size mismatch");
  PauliString word = p;
  const auto& basis = two_qubit_pauli_basis();
  const auto& bricks = circuit.bricks();
  for (std::size_t bi = bricks.size(); bi-- > 0;) {
    const Brick& b = bricks[bi];
    if (!b.fixed_gate) throw std::domain_error("conjugate_by_circuit: trainable brick");
    const PauliLetter la = word.letter(b.qa);
    const PauliLetter lb = word.letter(b.qb);
    if (la == PauliLetter::I && lb == PauliLetter::I) continue;
    // Local word with qa as the first tensor factor; basis index uses the
    // I,X,Y,Z order of two_qubit_pauli_basis.
    const Matrix4c local_word = basis[static_cast<std::size_t>(4 * static_cast<int>(la) +
                                                               static_cast<int>(lb))];
    const Matrix4c conj = b.fixed_gate->matrix().adjoint() * local_word * b.fixed_gate->matrix();
    int found = -1;
    cplx coeff{0, 0};
    for (int k = 0; k < 16; ++k) {
      const cplx c = (basis[static_cast<std::size_t>(k)].adjoint() * conj).trace() / 4.0;
      if (std::abs(c) > kCliffordTol) {
        if (found >= 0) throw numeric_error("conjugate_by_circuit: gate is not Clifford");
        found = k;
        coeff = c;
      }
    }
    if (found < 0) throw numeric_error("conjugate_by_circuit: degenerate conjugation");
    int phase_add = -1;
    if (std::abs(coeff - cplx(1, 0)) < kCliffordTol) phase_add = 0;
    if (std::abs(coeff - cplx(0, 1)) < kCliffordTol) phase_add = 1;
    if (std::abs(coeff - cplx(-1, 0)) < kCliffordTol) phase_add = 2;
    if (std::abs(coeff - cplx(0, -1)) < kCliffordTol) phase_add = 3;
    if (phase_add < 0) throw numeric_error("conjugate_by_circuit: gate is not Clifford");
    word.set_letter(b.qa, static_cast<PauliLetter>(found / 4));
    word.set_letter(b.qb, static_cast<PauliLetter>(found % 4));
    word = PauliString(word.n_qubits(), word.x_mask(), word.z_mask(),
                       word.phase_power() + phase_add);
  }
  return word;
}

Eigen::MatrixXcd circuit_unitary_dense(const CircuitLayout& circuit) {
  if (circuit.n_qubits() > 10) throw resource_error("circuit_unitary_dense: capped at n = 10");
  const std::size_t dim = std::size_t{1} << circuit.n_qubits();
  Eigen::MatrixXcd out(static_cast<long>(dim), static_cast<long>(dim));
  const std::vector<double> no_params;
  for (std::size_t col = 0; col < dim; ++col) {
    const StateVector psi = forward(circuit, no_params, basis_state(circuit.n_qubits(), col));
    for (std::size_t row = 0; row < dim; ++row)
      out(static_cast<long>(row), static_cast<long>(col)) = psi.amplitude(row);
  }
  return out;
}

std::pair<CircuitLayout, std::vector<int>> restrict_to_active(const CircuitLayout& circuit,
                                                              const std::vector<int>& extras) {
  std::vector<int> map(static_cast<std::size_t>(circuit.n_qubits()), -1);
  std::vector<int> active;
  auto touch = [&](int q) {
    if (map[static_cast<std::size_t>(q)] < 0) {
      map[static_cast<std::size_t>(q)] = static_cast<int>(active.size());
      active.push_back(q);
    }
  };
  for (const int q : extras) touch(q);
  for (const auto& b : circuit.bricks()) {
    touch(b.qa);
    touch(b.qb);
  }
  std::vector<Brick> bricks = circuit.bricks();
  for (auto& b : bricks) {
    b.qa = map[static_cast<std::size_t>(b.qa)];
    b.qb = map[static_cast<std::size_t>(b.qb)];
  }
  const int n_active = std::max<int>(2, static_cast<int>(active.size()));
  return {CircuitLayout(n_active, std::move(bricks), {}), map};
}

SqClass build_class_single_layer_global(int n) {
  if (n < 1 || n > 12) throw resource_error("build_class_single_layer_global: n capped at 12");
  SqClass cls;
  cls.kind = SqKind::qcsq_haar2;
  cls.n_qubits = n;
  cls.c_max = 1.0 / (std::pow(2.0, n) + 1.0);
  cls.name = "single-layer-global";
  std::vector<int> digits(static_cast<std::size_t>(n), 0);
  const std::size_t count = static_cast<std::size_t>(std::pow(3.0, n) + 0.5);
  cls.observables.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    PauliString p = PauliString::identity(n);
    for (int q = 0; q < n; ++q)
      p.set_letter(q, static_cast<PauliLetter>(1 + digits[static_cast<std::size_t>(q)]));
    cls.observables.push_back({p, std::nullopt});
    for (int q = 0; q < n; ++q) {
      if (++digits[static_cast<std::size_t>(q)] < 3) break;
      digits[static_cast<std::size_t>(q)] = 0;
    }
  }
  return cls;
}

CircuitLayout build_pauli_circuit_logdepth(const PauliString& target, int n) {
  if (n < 2) throw std::domain_error("build_pauli_circuit_logdepth: need at least 2 qubits");
  if (target.n_qubits() != n) throw std::domain_error("build_pauli_circuit_logdepth: size mismatch");
  if (target.is_identity_word()) throw std::domain_error("build_pauli_circuit_logdepth: trivial target");
  if (target.phase_power() != 0)
    throw std::domain_error("build_pauli_circuit_logdepth: target must have +1 phase");

  const std::uint64_t skeleton = target.x_mask() | target.z_mask();
  auto block_has = [&](int lo, int hi) {  // [lo, hi)
    if (lo >= hi || lo >= n) return false;
    hi = std::min(hi, n);
    const std::uint64_t width = static_cast<std::uint64_t>(hi - lo);
    const std::uint64_t mask =
        width >= 64 ? ~std::uint64_t{0} : (((std::uint64_t{1} << width) - 1) << lo);
    return (skeleton & mask) != 0;
  };

  std::vector<Brick> bricks;
  std::vector<int> all_qubits(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) all_qubits[static_cast<std::size_t>(q)] = q;
  emit_basis_layer(bricks, target, all_qubits);

  int layers = 0;
  while ((1 << layers) < n) ++layers;
  for (int l = 1; l <= layers; ++l) {
    const int block = 1 << (l - 1);
    for (int i = 0; i + block < n; i += 2 * block) {
      const int j = i + block;
      const bool left = block_has(i, j);
      const bool right = block_has(j, j + block);
      if (!right) continue;  // nothing to pull from the right sub-block
      Brick b;
      b.layer = l;
      b.qa = i;
      b.qb = j;
      b.fixed_gate = left ? Gate2Q::cnot_second_controls_first() : Gate2Q::swap();
      bricks.push_back(b);
    }
  }
  std::stable_sort(bricks.begin(), bricks.end(),
                   [](const Brick& a, const Brick& b) { return a.layer < b.layer; });
  CircuitLayout circuit(n, std::move(bricks), {});
  check_construction(circuit, target, 0);
  return circuit;
}

SqClass build_class_logdepth(int n) {
  if (n < 1 || n > 6) throw resource_error("build_class_logdepth: n capped at 6");
  SqClass cls;
  cls.kind = SqKind::qcsq_haar2;
  cls.n_qubits = n;
  cls.c_max = 1.0 / (std::pow(2.0, n) + 1.0);
  cls.name = "logdepth-single-measurement";
  const std::size_t count = std::size_t{1} << (2 * n);
  for (std::size_t code = 1; code < count; ++code) {
    PauliString p = PauliString::identity(n);
    for (int q = 0; q < n; ++q) {
      const int letter = static_cast<int>((code >> (2 * q)) & 3u);
      p.set_letter(q, static_cast<PauliLetter>(letter));
    }
    if (n == 1) {
      cls.observables.push_back({p, std::nullopt});
      continue;
    }
    cls.observables.push_back({p, build_pauli_circuit_logdepth(p, n)});
  }
  return cls;
}

CircuitLayout build_pauli_circuit_1d(const PauliString& target, int layers, int measured_qubit,
                                     int n) {
  if (target.n_qubits() != n) throw std::domain_error("build_pauli_circuit_1d: size mismatch");
  if (target.is_identity_word()) throw std::domain_error("build_pauli_circuit_1d: trivial target");
  if (target.phase_power() != 0)
    throw std::domain_error("build_pauli_circuit_1d: target must have +1 phase");
  if (layers < 1) throw std::domain_error("build_pauli_circuit_1d: need at least one layer");
  if (measured_qubit < 0 || measured_qubit >= n)
    throw std::domain_error("build_pauli_circuit_1d: bad measured qubit");

  const int m = measured_qubit;
  const int cone_lo = std::max(0, m - layers);
  const int cone_hi = std::min(n - 1, m + layers - 1);
  const std::uint64_t skeleton = target.x_mask() | target.z_mask();
  for (int q = 0; q < n; ++q) {
    if ((skeleton >> q) & 1u) {
      if (q < cone_lo || q > cone_hi)
        throw std::domain_error("build_pauli_circuit_1d: target outside the reverse light cone");
    }
  }
  auto has_in = [&](int lo, int hi) {  // inclusive range, clipped
    lo = std::max(lo, 0);
    hi = std::min(hi, n - 1);
    for (int q = lo; q <= hi; ++q)
      if ((skeleton >> q) & 1u) return true;
    return false;
  };
  const bool center = ((skeleton >> m) & 1u) != 0;
  const bool left_has = has_in(cone_lo, m - 1);
  const bool right_has = has_in(m + 1, cone_hi);

  std::vector<Brick> bricks;
  std::vector<int> cone;
  for (int q = cone_lo; q <= cone_hi; ++q) cone.push_back(q);
  emit_basis_layer(bricks, target, cone);

  // Propagation step t corresponds to circuit layer (layers - t + 1).
  auto layer_of = [&](int t) { return layers - t + 1; };

  bool left_active = left_has;
  bool right_active = right_has;
  if (left_has) {
    Brick b;
    b.layer = layer_of(1);
    b.qa = m - 1;
    b.qb = m;
    b.fixed_gate = (center || right_has) ? Gate2Q::cnot_first_controls_second() : Gate2Q::swap();
    bricks.push_back(b);
  }
  int left_pos = m - 1;   // current holder on the left walk
  int right_pos = m;      // current holder on the right walk
  for (int t = 2; t <= layers; ++t) {
    if (left_active) {
      const bool beyond = has_in(cone_lo, left_pos - 1);
      if (!beyond) {
        left_active = false;
      } else {
        Brick b;
        b.layer = layer_of(t);
        b.qa = left_pos - 1;
        b.qb = left_pos;
        const bool keep = ((skeleton >> left_pos) & 1u) != 0;
        b.fixed_gate = keep ? Gate2Q::cnot_first_controls_second() : Gate2Q::swap();
        bricks.push_back(b);
        --left_pos;
      }
    }
    if (right_active) {
      const bool beyond = has_in(right_pos + 1, cone_hi);
      if (!beyond) {
        right_active = false;
      } else {
        Brick b;
        b.layer = layer_of(t);
        b.qa = right_pos;
        b.qb = right_pos + 1;
        const bool keep = ((skeleton >> right_pos) & 1u) != 0;
        b.fixed_gate = keep ? Gate2Q::cnot_second_controls_first() : Gate2Q::swap();
        bricks.push_back(b);
        ++right_pos;
      }
    }
  }
  std::stable_sort(bricks.begin(), bricks.end(),
                   [](const Brick& a, const Brick& b) { return a.layer < b.layer; });
  CircuitLayout circuit(n, std::move(bricks), {});
  check_construction(circuit, target, m);
  return circuit;
}

std::vector<int> lattice2d_cone_cells(int layers, int measured_qubit, int side) {
  const int r0 = measured_qubit / side;
  const int c0 = measured_qubit % side;
  const int r_lo = std::max(0, r0 - (layers - 1));
  const int r_hi = std::min(side - 1, r0 + layers);
  const int c_lo = std::max(0, c0 - (layers - 1));
  const int c_hi = std::min(side - 1, c0 + layers);
  std::vector<int> cells;
  for (int r = r_lo; r <= r_hi; ++r)
    for (int c = c_lo; c <= c_hi; ++c) cells.push_back(r * side + c);
  return cells;
}

CircuitLayout build_pauli_circuit_lattice2d(const PauliString& target, int layers,
                                            int measured_qubit, int side) {
  if (side < 2) throw std::domain_error("build_pauli_circuit_lattice2d: side must be at least 2");
  const int n = side * side;
  if (target.n_qubits() != n) throw std::domain_error("build_pauli_circuit_lattice2d: size mismatch");
  if (n > 64) throw resource_error("build_pauli_circuit_lattice2d: side*side capped at 64");
  if (target.is_identity_word())
    throw std::domain_error("build_pauli_circuit_lattice2d: trivial target");
  if (target.phase_power() != 0)
    throw std::domain_error("build_pauli_circuit_lattice2d: target must have +1 phase");
  if (layers < 1) throw std::domain_error("build_pauli_circuit_lattice2d: need at least one layer");

  const std::uint64_t skeleton = target.x_mask() | target.z_mask();
  {
    const auto cone = lattice2d_cone_cells(layers, measured_qubit, side);
    std::uint64_t cone_mask = 0;
    for (const int cell : cone) cone_mask |= std::uint64_t{1} << cell;
    if (skeleton & ~cone_mask)
      throw std::domain_error("build_pauli_circuit_lattice2d: target outside the light cone");
  }

  const int r0 = measured_qubit / side;
  const int c0 = measured_qubit % side;
  struct Edge {
    int parent, child;
    int tree_layer;   // 1-based
    bool horizontal;  // sub-round within the layer
  };
  std::vector<Edge> edges;
  int pr_lo = r0, pr_hi = r0, pc_lo = c0, pc_hi = c0;  // previous cone box
  for (int t = 1; t <= layers; ++t) {
    const int r_lo = std::max(0, r0 - (t - 1));
    const int r_hi = std::min(side - 1, r0 + t);
    const int c_lo = std::max(0, c0 - (t - 1));
    const int c_hi = std::min(side - 1, c0 + t);
    // Horizontal sub-round: new columns over the previous row range.
    for (const int c_new : {c_lo, c_hi}) {
      if (c_new >= pc_lo && c_new <= pc_hi) continue;
      const int c_prev = c_new < pc_lo ? pc_lo : pc_hi;
      for (int r = pr_lo; r <= pr_hi; ++r)
        edges.push_back({r * side + c_prev, r * side + c_new, t, true});
    }
    // Vertical sub-round: new rows over the full new column range.
    for (const int r_new : {r_lo, r_hi}) {
      if (r_new >= pr_lo && r_new <= pr_hi) continue;
      const int r_prev = r_new < pr_lo ? pr_lo : pr_hi;
      for (int c = c_lo; c <= c_hi; ++c)
        edges.push_back({r_prev * side + c, r_new * side + c, t, false});
    }
    pr_lo = r_lo;
    pr_hi = r_hi;
    pc_lo = c_lo;
    pc_hi = c_hi;
  }

  // subtree_need: does the subtree rooted at `cell` touch the target skeleton?
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < edges.size(); ++e)
    children[static_cast<std::size_t>(edges[e].parent)].push_back(static_cast<int>(e));
  std::vector<char> need(static_cast<std::size_t>(n), 0);
  // Process edges in reverse creation order: children appear after parents.
  std::vector<char> self_need(static_cast<std::size_t>(n), 0);
  for (int q = 0; q < n; ++q) self_need[static_cast<std::size_t>(q)] = ((skeleton >> q) & 1u) != 0;
  for (int q = 0; q < n; ++q) need[static_cast<std::size_t>(q)] = self_need[static_cast<std::size_t>(q)];
  for (std::size_t e = edges.size(); e-- > 0;)
    if (need[static_cast<std::size_t>(edges[e].child)])
      need[static_cast<std::size_t>(edges[e].parent)] = 1;

  std::vector<Brick> bricks;
  {
    const auto cone = lattice2d_cone_cells(layers, measured_qubit, side);
    emit_basis_layer(bricks, target, cone);
  }

  // Walk edges in propagation order and pick gates; emit at circuit layer
  // 2*(layers - t) + {1,2} so that reversing the brick list reproduces the
  // propagation order (horizontal before vertical inside a layer).
  std::vector<char> pending_after(static_cast<std::size_t>(n), 0);
  // remaining_need[q]: number of future child edges of q whose subtree needs a Z.
  std::vector<int> remaining_need(static_cast<std::size_t>(n), 0);
  for (const auto& e : edges)
    if (need[static_cast<std::size_t>(e.child)]) ++remaining_need[static_cast<std::size_t>(e.parent)];

  for (const auto& e : edges) {
    if (!need[static_cast<std::size_t>(e.child)]) continue;
    --remaining_need[static_cast<std::size_t>(e.parent)];
    const bool retain = self_need[static_cast<std::size_t>(e.parent)] ||
                        remaining_need[static_cast<std::size_t>(e.parent)] > 0;
    Brick b;
    b.layer = 2 * (layers - e.tree_layer) + (e.horizontal ? 2 : 1);
    b.qa = e.parent;
    b.qb = e.child;
    b.fixed_gate = retain ? Gate2Q::cnot_second_controls_first() : Gate2Q::swap();
    bricks.push_back(b);
  }
  std::stable_sort(bricks.begin(), bricks.end(),
                   [](const Brick& a, const Brick& b) { return a.layer < b.layer; });
  // Compact to the basis layer at 0 followed by gate rows.
  CircuitLayout circuit(n, std::move(bricks), {});
  check_construction(circuit, target, measured_qubit);
  return circuit;
}

SqClass build_class_unitary_single_layer(int n) {
  if (n < 1 || n > 6) throw resource_error("build_class_unitary_single_layer: n capped at 6");
  SqClass cls;
  cls.kind = SqKind::qusq_1design;
  cls.n_qubits = n;
  cls.c_max = 1.0;
  cls.name = "unitary-single-layer";
  const std::size_t count = std::size_t{1} << (2 * n);
  const int width = std::max(2, n);
  for (std::size_t code = 0; code < count; ++code) {
    PauliString word = PauliString::identity(width);
    for (int q = 0; q < n; ++q)
      word.set_letter(q, static_cast<PauliLetter>((code >> (2 * q)) & 3u));
    std::vector<Brick> bricks;
    for (int q = 0; q + 1 < width; q += 2) {
      Brick b;
      b.layer = 0;
      b.qa = q;
      b.qb = q + 1;
      b.fixed_gate = Gate2Q::kron(letter_dense(word.letter(q)), letter_dense(word.letter(q + 1)));
      bricks.push_back(b);
    }
    if (width % 2 == 1) {
      Brick b;
      b.layer = 0;
      b.qa = width - 1;
      b.qb = 0;
      b.fixed_gate = Gate2Q::kron(letter_dense(word.letter(width - 1)), Eigen::Matrix2cd::Identity());
      bricks.push_back(b);
    }
    UnitaryConcept concept_entry{CircuitLayout(width, std::move(bricks), {}), word};
    cls.unitaries.push_back(std::move(concept_entry));
  }
  return cls;
}

double class_inner(const SqClass& cls, std::size_t i, std::size_t j) {
  switch (cls.kind) {
    case SqKind::qcsq_haar2:
      return qcsq_inner_haar2(cls.observables[i].pauli, cls.observables[j].pauli);
    case SqKind::qcsq_uniform_z:
      return qcsq_inner_uniform_z(cls.observables[i].pauli, cls.observables[j].pauli);
    case SqKind::qusq_1design: return qusq_inner(cls.unitaries[i], cls.unitaries[j]);
  }
  throw std::domain_error("class_inner: unknown kind");
}

SqCertificate certify_sq_dimension(const SqClass& cls) {
  const std::size_t d = cls.size();
  if (d == 0) throw std::domain_error("certify_sq_dimension: empty class");
  if (d * d > kCertifyPairCap) throw resource_error("certify_sq_dimension: too many pairs");
  SqCertificate cert;
  cert.d = static_cast<int>(d);
  // Recompute c_max from the self inner products and check the stored value.
  double c_max = 0.0;
  for (std::size_t i = 0; i < d; ++i) c_max = std::max(c_max, class_inner(cls, i, i));
  if (std::abs(c_max - cls.c_max) > 1e-12)
    throw numeric_error("certify_sq_dimension: stored c_max does not match recomputation");
  cert.c_max = c_max;
  const double threshold = c_max / static_cast<double>(d);
  double max_offdiag = 0.0;
  for (std::size_t i = 0; i < d && !cert.violating_pair; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = std::abs(class_inner(cls, i, j));
      max_offdiag = std::max(max_offdiag, v);
      if (v > threshold) {
        cert.violating_pair = {static_cast<int>(i), static_cast<int>(j)};
        break;
      }
    }
  }
  cert.max_offdiag = max_offdiag;
  cert.ok = !cert.violating_pair.has_value();
  return cert;
}

double query_lower_bound(double d, double tau) {
  if (d < 1.0 || tau <= 0.0 || tau > 1.0) throw std::domain_error("query_lower_bound: bad arguments");
  return std::max(0.0, (d * tau * tau - 1.0) / 2.0);
}

OracleTranscript simulate_adversarial_oracle(const SqClass& cls,
                                             const std::vector<PauliString>& queries, double tau) {
  if (cls.kind == SqKind::qusq_1design)
    throw std::domain_error("adversary: observable queries against a unitary class");
  AdversaryCore core;
  std::vector<std::vector<double>> corr;
  corr.reserve(queries.size());
  for (const auto& q : queries) corr.push_back(core.correlations(cls, q));
  return run_adversary(cls, tau, corr);
}

OracleTranscript simulate_adversarial_oracle(const SqClass& cls,
                                             const std::vector<UnitaryConcept>& queries,
                                             double tau) {
  if (cls.kind != SqKind::qusq_1design)
    throw std::domain_error("adversary: unitary queries against an observable class");
  std::vector<std::vector<double>> corr;
  corr.reserve(queries.size());
  for (const auto& q : queries) {
    std::vector<double> v(cls.unitaries.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = qusq_inner(q, cls.unitaries[i]);
    corr.push_back(std::move(v));
  }
  return run_adversary(cls, tau, corr);
}

}  // namespace vql

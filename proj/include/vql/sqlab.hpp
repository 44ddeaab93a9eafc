#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vql/circuits.hpp"
#include "vql/pauli.hpp"

namespace vql {

/// Observable concept M = U† Z U with ||M|| = 1; `circuit` is the realizing
/// construction when one was built.
struct ObservableConcept {
  PauliString pauli;
  std::optional<CircuitLayout> circuit;
};

/// Unitary concept for the compiling oracle; `pauli_word` is set when the
/// circuit is a phased Pauli word, enabling symbolic traces at any size.
struct UnitaryConcept {
  CircuitLayout circuit;
  std::optional<PauliString> pauli_word;
};

enum class SqKind { qcsq_haar2, qcsq_uniform_z, qusq_1design };

struct SqClass {
  SqKind kind = SqKind::qcsq_haar2;
  int n_qubits = 1;
  double c_max = 1.0;
  std::vector<ObservableConcept> observables;  // qcsq kinds
  std::vector<UnitaryConcept> unitaries;       // qusq kind
  std::string name;

  std::size_t size() const {
    return kind == SqKind::qusq_1design ? unitaries.size() : observables.size();
  }
};

/// E_{|psi> Haar}[<psi|A|psi><psi|B|psi>] = (Tr A Tr B + Tr(AB)) / (d(d+1)).
double qcsq_inner_haar2(const PauliString& a, const PauliString& b);

/// Same correlation under the uniform distribution over computational basis
/// states; nonzero only for Z/I words.
double qcsq_inner_uniform_z(const PauliString& a, const PauliString& b);

/// 2^-n Re Tr(W†V); symbolic for Pauli-word circuits, dense up to n = 10.
double qusq_inner(const UnitaryConcept& u, const UnitaryConcept& v);

/// Average fidelity over a 2-design: (|Tr(V†U)|^2 / m + 1) / (m + 1), m = 2^n.
double avg_fidelity_2design(const UnitaryConcept& u, const UnitaryConcept& v);

/// Heisenberg propagation of a Pauli word through a fixed-gate circuit:
/// returns U† p U. Throws if a gate fails to map the word to a single word
/// (non-Clifford).
PauliString conjugate_by_circuit(const CircuitLayout& circuit, const PauliString& p);

/// Dense 2^n x 2^n unitary of a fixed-gate circuit (n <= 10).
Eigen::MatrixXcd circuit_unitary_dense(const CircuitLayout& circuit);

/// Restriction of a circuit to the qubits it touches (plus `extras`),
/// relabeled compactly; second member maps old qubit -> new index.
std::pair<CircuitLayout, std::vector<int>> restrict_to_active(const CircuitLayout& circuit,
                                                              const std::vector<int>& extras);

// -- Constructions ----------------------------------------------------------

/// All 3^n sign-free words over {X,Y,Z}: the single-layer / global-measurement
/// class. c_max = 1/(2^n + 1).
SqClass build_class_single_layer_global(int n);

/// Circuit of <= ceil(log2 n) two-qubit merge layers plus a merged
/// basis-change layer with U† Z_0 U = target, verified symbolically.
CircuitLayout build_pauli_circuit_logdepth(const PauliString& target, int n);

/// All 4^n - 1 nontrivial words realized through build_pauli_circuit_logdepth.
SqClass build_class_logdepth(int n);

/// L layers of neighboring two-qubit gates on an open chain realizing any
/// Pauli supported in the reverse light cone [m-L, m+L-1] of qubit m.
CircuitLayout build_pauli_circuit_1d(const PauliString& target, int layers, int measured_qubit,
                                     int n);

/// Two-dimensional version on a side x side lattice; the light cone grows by
/// two cells per layer in each dimension.
CircuitLayout build_pauli_circuit_lattice2d(const PauliString& target, int layers,
                                            int measured_qubit, int side);

/// Cells of the depth-L reverse light cone on the lattice (row-major ids).
std::vector<int> lattice2d_cone_cells(int layers, int measured_qubit, int side);

/// The 4^n Pauli words as one layer of single-qubit gates. c_max = 1.
SqClass build_class_unitary_single_layer(int n);

// -- Certificates and the oracle --------------------------------------------

struct SqCertificate {
  bool ok = false;
  int d = 0;
  double c_max = 0.0;
  double max_offdiag = 0.0;
  std::optional<std::pair<int, int>> violating_pair;
};

double class_inner(const SqClass& cls, std::size_t i, std::size_t j);

/// Exhaustive pairwise check of |<M_i, M_j>| <= c_max / d with d = |class|.
SqCertificate certify_sq_dimension(const SqClass& cls);

/// max(0, (d tau^2 - 1) / 2).
double query_lower_bound(double d, double tau);

struct OracleQueryRecord {
  double response = 0.0;
  int eliminated = 0;
  std::vector<int> eliminated_indices;
};

struct OracleTranscript {
  double tau = 0.0;
  double c_max = 0.0;
  int initial_concepts = 0;
  /// Per-query elimination cap from the counting argument, with the C_max
  /// factors canceled: 2d / (d tau^2 - 1).
  double elimination_bound = 0.0;
  /// The same bound with the paper's literal C_max^2 placement, reported so
  /// the statement/proof discrepancy stays visible.
  double elimination_bound_paper_form = 0.0;
  std::vector<OracleQueryRecord> records;
  std::vector<int> alive;
};

/// Worst-case oracle from the elimination argument: answers 0 whenever 0 is
/// consistent with a plurality of the surviving concepts, otherwise the value
/// keeping the most survivors; eliminates exactly the concepts inconsistent
/// with the response at tolerance c_max * tau.
OracleTranscript simulate_adversarial_oracle(const SqClass& cls,
                                             const std::vector<PauliString>& queries, double tau);
OracleTranscript simulate_adversarial_oracle(const SqClass& cls,
                                             const std::vector<UnitaryConcept>& queries, double tau);

}  // namespace vql

#include <doctest.h>

#include "test_support.hpp"
#include "vql/sqlab.hpp"

using namespace vql;
using vql::testing::random_state;

namespace {

PauliString random_word(int n, Rng& rng, bool allow_identity = true) {
  while (true) {
    PauliString p = PauliString::identity(n);
    for (int q = 0; q < n; ++q) p.set_letter(q, static_cast<PauliLetter>(rng.uniform_index(4)));
    if (allow_identity || !p.is_identity_word()) return p;
  }
}

// Monte Carlo estimate of E[<psi|A|psi><psi|B|psi>] over Haar states with a
// standard-error estimate.
std::pair<double, double> mc_qcsq(const PauliString& a, const PauliString& b, int n, int samples,
                                  Rng& rng) {
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < samples; ++k) {
    const auto psi = random_state(n, rng);
    const double v = pauli_expectation(psi, a) * pauli_expectation(psi, b);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sum_sq / samples - mean * mean);
  return {mean, std::sqrt(var / samples)};
}

Eigen::Matrix2cd random_unitary2(Rng& rng) {
  Eigen::Matrix2cd a;
  a << cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal()),
      cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal());
  const Eigen::HouseholderQR<Eigen::Matrix2cd> qr(a);
  Eigen::Matrix2cd q = qr.householderQ();
  return q;
}

UnitaryConcept random_single_qubit_layer(int n, Rng& rng) {
  std::vector<Brick> bricks;
  for (int q = 0; q + 1 < n; q += 2) {
    Brick b;
    b.layer = 0;
    b.qa = q;
    b.qb = q + 1;
    b.fixed_gate = Gate2Q::kron(random_unitary2(rng), random_unitary2(rng));
    bricks.push_back(b);
  }
  if (n % 2 == 1) {
    Brick b;
    b.layer = 0;
    b.qa = n - 1;
    b.qb = 0;
    b.fixed_gate = Gate2Q::kron(random_unitary2(rng), Eigen::Matrix2cd::Identity());
    bricks.push_back(b);
  }
  return UnitaryConcept{CircuitLayout(n, std::move(bricks), {}), std::nullopt};
}

}  // namespace

TEST_CASE("haar second-moment inner product: exact values") {
  const int n = 3;
  const double d = 8.0;
  const auto a = PauliString::from_letters("XYZ");
  const auto b = PauliString::from_letters("ZIX");
  CHECK(qcsq_inner_haar2(a, b) == 0.0);
  CHECK(qcsq_inner_haar2(a, a) == doctest::Approx(1.0 / (d + 1.0)).epsilon(1e-14));
  const auto id = PauliString::identity(n);
  CHECK(qcsq_inner_haar2(id, id) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("haar second-moment inner product matches Monte Carlo") {
  Rng rng(3);
  const int n = 3;
  for (int pair = 0; pair < 4; ++pair) {
    const auto a = random_word(n, rng);
    const auto b = rng.uniform() < 0.5 ? a : random_word(n, rng);
    // Hermitian representatives only.
    const PauliString ah(n, a.x_mask(), a.z_mask(), 0);
    const PauliString bh(n, b.x_mask(), b.z_mask(), 0);
    const auto [mc, se] = mc_qcsq(ah, bh, n, 20000, rng);
    const double exact = qcsq_inner_haar2(ah, bh);
    CHECK(std::abs(mc - exact) < 3.0 * se + 1e-12);
  }
}

TEST_CASE("uniform-computational-basis inner product") {
  const auto zz = PauliString::from_letters("ZZ");
  const auto zi = PauliString::from_letters("ZI");
  const auto xz = PauliString::from_letters("XZ");
  CHECK(qcsq_inner_uniform_z(zz, zz) == 1.0);
  CHECK(qcsq_inner_uniform_z(zz, zi) == 0.0);
  CHECK(qcsq_inner_uniform_z(xz, zz) == 0.0);
  CHECK(qcsq_inner_uniform_z(xz, xz) == 0.0);

  // Monte Carlo over uniform basis states.
  Rng rng(5);
  const int n = 2;
  double acc = 0.0;
  const int samples = 4000;
  for (int k = 0; k < samples; ++k) {
    const auto idx = rng.uniform_index(4);
    const auto psi = basis_state(n, idx);
    acc += pauli_expectation(psi, zz) * pauli_expectation(psi, zz);
  }
  CHECK(acc / samples == doctest::Approx(1.0));
}

TEST_CASE("qusq inner product: identity, orthogonality, Monte Carlo") {
  const auto cls = build_class_unitary_single_layer(2);
  CHECK(qusq_inner(cls.unitaries[5], cls.unitaries[5]) == doctest::Approx(1.0));
  CHECK(qusq_inner(cls.unitaries[1], cls.unitaries[2]) == doctest::Approx(0.0));

  Rng rng(7);
  const int n = 2;
  const auto u = random_single_qubit_layer(n, rng);
  const auto v = random_single_qubit_layer(n, rng);
  const double exact = qusq_inner(u, v);
  const Eigen::MatrixXcd wd = circuit_unitary_dense(u.circuit);
  const Eigen::MatrixXcd vd = circuit_unitary_dense(v.circuit);
  const Eigen::MatrixXcd wv = wd.adjoint() * vd;
  double sum = 0.0, sum_sq = 0.0;
  const int samples = 20000;
  for (int k = 0; k < samples; ++k) {
    const auto psi = random_state(n, rng);
    Eigen::VectorXcd x(4);
    for (int i = 0; i < 4; ++i) x(i) = psi.amplitude(static_cast<std::size_t>(i));
    const double val = (x.adjoint() * wv * x)(0).real();
    sum += val;
    sum_sq += val * val;
  }
  const double mean = sum / samples;
  const double se = std::sqrt(std::max(0.0, sum_sq / samples - mean * mean) / samples);
  CHECK(std::abs(mean - exact) < 3.0 * se + 1e-12);
}

TEST_CASE("average fidelity over a 2-design matches Monte Carlo") {
  Rng rng(11);
  const int n = 2;
  const auto u = random_single_qubit_layer(n, rng);
  const auto v = random_single_qubit_layer(n, rng);
  CHECK(avg_fidelity_2design(u, u) == doctest::Approx(1.0).epsilon(1e-12));

  const double exact = avg_fidelity_2design(u, v);
  // Tr(V†U) = 0 pair: X⊗I vs I⊗I differ by a traceless word.
  const auto cls = build_class_unitary_single_layer(2);
  CHECK(avg_fidelity_2design(cls.unitaries[0], cls.unitaries[3]) ==
        doctest::Approx(1.0 / 5.0).epsilon(1e-12));

  const Eigen::MatrixXcd ud = circuit_unitary_dense(u.circuit);
  const Eigen::MatrixXcd vd = circuit_unitary_dense(v.circuit);
  double sum = 0.0, sum_sq = 0.0;
  const int samples = 20000;
  for (int k = 0; k < samples; ++k) {
    const auto psi = random_state(n, rng);
    Eigen::VectorXcd x(4);
    for (int i = 0; i < 4; ++i) x(i) = psi.amplitude(static_cast<std::size_t>(i));
    const cplx amp = (x.adjoint() * vd.adjoint() * ud * x)(0);
    const double val = std::norm(amp);
    sum += val;
    sum_sq += val * val;
  }
  const double mean = sum / samples;
  const double se = std::sqrt(std::max(0.0, sum_sq / samples - mean * mean) / samples);
  CHECK(std::abs(mean - exact) < 3.0 * se + 1e-12);
}

TEST_CASE("single-layer-global class: enumeration and certificate") {
  const auto c1 = build_class_single_layer_global(1);
  CHECK(c1.observables.size() == 3);

  const auto c4 = build_class_single_layer_global(4);
  CHECK(c4.observables.size() == 81);
  const auto cert = certify_sq_dimension(c4);
  CHECK(cert.ok);
  CHECK(cert.d == 81);
  CHECK(cert.max_offdiag == 0.0);
  CHECK(cert.c_max == doctest::Approx(1.0 / 17.0));

  const auto c3 = build_class_single_layer_global(3);
  CHECK(certify_sq_dimension(c3).d == 27);
}

TEST_CASE("a duplicated concept breaks the certificate") {
  auto cls = build_class_single_layer_global(2);
  cls.observables.push_back(cls.observables.front());
  const auto cert = certify_sq_dimension(cls);
  CHECK_FALSE(cert.ok);
  REQUIRE(cert.violating_pair.has_value());
  CHECK(cert.violating_pair->first == 0);
  CHECK(cert.violating_pair->second == static_cast<int>(cls.observables.size()) - 1);
}

TEST_CASE("log-depth construction: small cases") {
  // Z1 alone: identity circuit (no gates needed).
  const auto z0 = PauliString::single(2, 0, PauliLetter::Z);
  const auto c_id = build_pauli_circuit_logdepth(z0, 2);
  CHECK(c_id.bricks().empty());

  // Z⊗Z on 2 qubits: single conjugator gate, checked densely.
  const auto zz = PauliString::from_letters("ZZ");
  const auto c_zz = build_pauli_circuit_logdepth(zz, 2);
  CHECK(c_zz.bricks().size() == 1);
  const Eigen::MatrixXcd u = circuit_unitary_dense(c_zz);
  const Eigen::MatrixXcd lhs = u.adjoint() * testing::pauli_dense(z0) * u;
  CHECK((lhs - testing::pauli_dense(zz)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(build_pauli_circuit_logdepth(PauliString::identity(2), 2), std::domain_error);
}

TEST_CASE("log-depth construction: random targets verified densely") {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(7));  // up to 8
    const auto target = random_word(n, rng, false);
    const auto circuit = build_pauli_circuit_logdepth(target, n);
    // Depth bound: merged basis layer plus ceil(log2 n) merge layers.
    int logn = 0;
    while ((1 << logn) < n) ++logn;
    CHECK(circuit.layer_count() <= logn + 1);
    const Eigen::MatrixXcd u = circuit_unitary_dense(circuit);
    const auto z0 = PauliString::single(n, 0, PauliLetter::Z);
    const Eigen::MatrixXcd lhs = u.adjoint() * testing::pauli_dense(z0) * u;
    CHECK((lhs - testing::pauli_dense(target)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("log-depth class certifies 4^n - 1") {
  for (int n = 2; n <= 4; ++n) {
    const auto cls = build_class_logdepth(n);
    CHECK(cls.observables.size() == (std::size_t{1} << (2 * n)) - 1);
    const auto cert = certify_sq_dimension(cls);
    CHECK(cert.ok);
    CHECK(cert.d == (1 << (2 * n)) - 1);
    CHECK(cert.max_offdiag == 0.0);
  }
}

TEST_CASE("1d light-cone construction") {
  // L = 1, Z⊗Z on the gate's pair.
  const int n = 6;
  PauliString t = PauliString::identity(n);
  t.set_letter(2, PauliLetter::Z);
  t.set_letter(3, PauliLetter::Z);
  const auto c = build_pauli_circuit_1d(t, 1, 3, n);
  CHECK(c.bricks().size() == 1);

  // Out-of-cone targets are rejected (the theorem's content).
  PauliString far = PauliString::identity(n);
  far.set_letter(0, PauliLetter::X);
  CHECK_THROWS_AS(build_pauli_circuit_1d(far, 1, 3, n), std::domain_error);

  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int nn = 4 + static_cast<int>(rng.uniform_index(7));  // 4..10
    const int layers = 1 + static_cast<int>(rng.uniform_index(4));
    const int m = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(nn)));
    const int lo = std::max(0, m - layers);
    const int hi = std::min(nn - 1, m + layers - 1);
    PauliString target = PauliString::identity(nn);
    bool nontrivial = false;
    for (int q = lo; q <= hi; ++q) {
      const auto letter = static_cast<PauliLetter>(rng.uniform_index(4));
      target.set_letter(q, letter);
      nontrivial |= letter != PauliLetter::I;
    }
    if (!nontrivial) target.set_letter(m, PauliLetter::Z);
    const auto circuit = build_pauli_circuit_1d(target, layers, m, nn);
    // Support stays within min(2L, n) qubits.
    CHECK(target.weight() <= std::min(2 * layers, nn));
    // Symbolic conjugation (already asserted in the builder) cross-checked densely.
    if (nn <= 8) {
      const Eigen::MatrixXcd u = circuit_unitary_dense(circuit);
      const auto zm = PauliString::single(nn, m, PauliLetter::Z);
      const Eigen::MatrixXcd lhs = u.adjoint() * testing::pauli_dense(zm) * u;
      CHECK((lhs - testing::pauli_dense(target)).cwiseAbs().maxCoeff() < 1e-12);
    } else {
      CHECK(conjugate_by_circuit(circuit, PauliString::single(nn, m, PauliLetter::Z)) == target);
    }
  }
}

TEST_CASE("2d lattice cone sizes follow the tree growth") {
  // Root away from boundaries on a large lattice: 4, 16, 36 cells.
  const int side = 8;
  const int root = 3 * side + 3;
  CHECK(lattice2d_cone_cells(1, root, side).size() == 4);
  CHECK(lattice2d_cone_cells(2, root, side).size() == 16);
  CHECK(lattice2d_cone_cells(3, root, side).size() == 36);
}

TEST_CASE("2d lattice construction: random in-cone targets") {
  Rng rng(19);
  SUBCASE("L = 1 covers any Pauli on the 2x2 cone") {
    const int side = 4;
    const int root = 1 * side + 1;
    const auto cone = lattice2d_cone_cells(1, root, side);
    REQUIRE(cone.size() == 4);
    for (int code = 1; code < 256; code += 37) {
      PauliString target = PauliString::identity(side * side);
      int c = code;
      for (const int cell : cone) {
        target.set_letter(cell, static_cast<PauliLetter>(c & 3));
        c >>= 2;
      }
      if (target.is_identity_word()) continue;
      const auto circuit = build_pauli_circuit_lattice2d(target, 1, root, side);
      const auto got = conjugate_by_circuit(
          circuit, PauliString::single(side * side, root, PauliLetter::Z));
      CHECK(got == target);
    }
  }

  SUBCASE("side = 4, L = 2 random targets with dense cross-check on active qubits") {
    const int side = 4;
    const int root = 2 * side + 1;
    const auto cone = lattice2d_cone_cells(2, root, side);
    for (int trial = 0; trial < 25; ++trial) {
      PauliString target = PauliString::identity(side * side);
      bool nontrivial = false;
      for (const int cell : cone) {
        if (rng.uniform() < 0.6) continue;
        const auto letter = static_cast<PauliLetter>(1 + rng.uniform_index(3));
        target.set_letter(cell, letter);
        nontrivial = true;
      }
      if (!nontrivial) target.set_letter(root, PauliLetter::Z);
      const auto circuit = build_pauli_circuit_lattice2d(target, 2, root, side);
      const auto got =
          conjugate_by_circuit(circuit, PauliString::single(side * side, root, PauliLetter::Z));
      CHECK(got == target);

      // Dense cross-check when few enough qubits are touched.
      const auto [small, map] = restrict_to_active(circuit, {root});
      if (small.n_qubits() <= 8) {
        PauliString small_target = PauliString::identity(small.n_qubits());
        for (int q = 0; q < side * side; ++q)
          if (map[static_cast<std::size_t>(q)] >= 0)
            small_target.set_letter(map[static_cast<std::size_t>(q)], target.letter(q));
        const Eigen::MatrixXcd u = circuit_unitary_dense(small);
        const auto zm = PauliString::single(small.n_qubits(), map[static_cast<std::size_t>(root)],
                                            PauliLetter::Z);
        const Eigen::MatrixXcd lhs = u.adjoint() * testing::pauli_dense(zm) * u;
        CHECK((lhs - testing::pauli_dense(small_target)).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }

  SUBCASE("out-of-cone rejection") {
    const int side = 6;
    const int root = 0;
    PauliString target = PauliString::identity(side * side);
    target.set_letter(5 * side + 5, PauliLetter::Z);
    CHECK_THROWS_AS(build_pauli_circuit_lattice2d(target, 2, root, side), std::domain_error);
  }
}

TEST_CASE("unitary single-layer class certifies 4^n") {
  const auto c1 = build_class_unitary_single_layer(1);
  CHECK(c1.unitaries.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(qusq_inner(c1.unitaries[i], c1.unitaries[i]) == doctest::Approx(1.0));
    for (std::size_t j = i + 1; j < 4; ++j)
      CHECK(qusq_inner(c1.unitaries[i], c1.unitaries[j]) == doctest::Approx(0.0));
  }

  for (int n = 2; n <= 4; ++n) {
    const auto cls = build_class_unitary_single_layer(n);
    const auto cert = certify_sq_dimension(cls);
    CHECK(cert.ok);
    CHECK(cert.d == (1 << (2 * n)));
    CHECK(cert.max_offdiag == 0.0);
    CHECK(cert.c_max == doctest::Approx(1.0));
  }
}

TEST_CASE("query lower bound") {
  CHECK(query_lower_bound(255, 1.0) == doctest::Approx(127.0));
  CHECK(query_lower_bound(4, 0.5) == doctest::Approx(0.0));
  // 3^n concepts with tau = 3^{-n/4} at n = 8: the bound grows as 3^{n/2}/2.
  const double d = std::pow(3.0, 8);
  const double tau = std::pow(3.0, -0.25 * 8);
  CHECK(query_lower_bound(d, tau) == doctest::Approx((std::pow(3.0, 4) - 1.0) / 2.0));
}

TEST_CASE("adversarial oracle: orthogonal query eliminates nothing") {
  const auto cls = build_class_single_layer_global(3);
  // The all-identity word is orthogonal to every {X,Y,Z}-word concept.
  const std::vector<PauliString> queries = {PauliString::identity(3)};
  const auto t = simulate_adversarial_oracle(cls, queries, 0.5);
  CHECK(t.records.size() == 1);
  CHECK(t.records[0].eliminated == 0);
  CHECK(t.records[0].response == 0.0);
}

TEST_CASE("adversarial oracle: a concept query eliminates exactly that concept") {
  const auto cls = build_class_single_layer_global(3);
  const std::vector<PauliString> queries = {cls.observables[7].pauli};
  const auto t = simulate_adversarial_oracle(cls, queries, 0.5);
  CHECK(t.records[0].eliminated == 1);
  REQUIRE(t.records[0].eliminated_indices.size() == 1);
  CHECK(t.records[0].eliminated_indices[0] == 7);
}

TEST_CASE("adversarial oracle: random streams respect the counting argument") {
  Rng rng(23);
  const auto cls = build_class_single_layer_global(3);
  const double tau = 0.5;
  std::vector<PauliString> queries;
  for (int k = 0; k < 40; ++k) queries.push_back(random_word(3, rng, false));
  const auto t = simulate_adversarial_oracle(cls, queries, tau);
  const double bound = t.elimination_bound;
  int eliminated_total = 0;
  for (const auto& rec : t.records) {
    CHECK(rec.eliminated <= bound);
    eliminated_total += rec.eliminated;
  }
  CHECK(static_cast<int>(t.alive.size()) == t.initial_concepts - eliminated_total);
  // Soundness: every response stayed within c_max*tau of at least one concept
  // alive at response time (responses equal to a surviving correlation or 0).
  for (const auto& rec : t.records) CHECK(std::abs(rec.response) <= 1.0);
}

TEST_CASE("adversary responses are consistent with at least one surviving concept") {
  Rng rng(29);
  const auto cls = build_class_single_layer_global(2);
  std::vector<PauliString> queries;
  for (int k = 0; k < 15; ++k) queries.push_back(random_word(2, rng, false));
  const double tau = 0.4;
  const auto t = simulate_adversarial_oracle(cls, queries, tau);
  // Replay: after each query, the survivors must all be within tolerance of
  // the response, and eliminated exactly the complement.
  std::vector<int> alive(cls.observables.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = static_cast<int>(i);
  for (std::size_t qi = 0; qi < t.records.size(); ++qi) {
    const auto& rec = t.records[qi];
    std::vector<int> survivors;
    bool any_consistent = false;
    for (const int i : alive) {
      const double v = qcsq_inner_haar2(queries[qi], cls.observables[static_cast<std::size_t>(i)].pauli);
      const bool consistent = std::abs(v - rec.response) <= cls.c_max * tau;
      if (consistent) {
        survivors.push_back(i);
        any_consistent = true;
      }
    }
    CHECK(any_consistent);
    std::vector<int> expected_eliminated;
    for (const int i : alive)
      if (std::find(survivors.begin(), survivors.end(), i) == survivors.end())
        expected_eliminated.push_back(i);
    CHECK(expected_eliminated == rec.eliminated_indices);
    alive = survivors;
    if (alive.empty()) break;
  }
}

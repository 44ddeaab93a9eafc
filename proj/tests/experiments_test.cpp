#include <doctest.h>

#include <bit>

#include "test_support.hpp"
#include "vql/experiments.hpp"

using namespace vql;
using vql::testing::finite_difference_grad;
using vql::testing::max_rel_error;
using vql::testing::random_params;

TEST_CASE("basis dataset sampling") {
  Rng a(42), b(42);
  const auto d1 = sample_basis_dataset(1, 4, a);
  const auto d2 = sample_basis_dataset(1, 4, b);
  CHECK(d1 == d2);

  Rng rng(7);
  const auto big = sample_basis_dataset(6, 100000, rng);
  double bit0_mean = 0.0;
  for (const auto v : big) {
    CHECK(v < 64);
    bit0_mean += static_cast<double>(v & 1u);
  }
  bit0_mean /= static_cast<double>(big.size());
  CHECK(std::abs(bit0_mean - 0.5) < 0.01);

  const auto small = sample_basis_dataset(4, 512, rng);
  for (const auto v : small) CHECK(v < 16);
}

TEST_CASE("qcnn teacher-student: planted solution and reproducibility") {
  TeacherStudentConfig cfg;
  cfg.kind = TeacherStudentConfig::Kind::qcnn;
  cfg.n_qubits = 4;
  cfg.dataset_size = 64;
  cfg.batch_size = 32;
  cfg.steps = 3;
  cfg.lr = 0.001;
  cfg.seed = 11;
  cfg.log_every = 1;
  cfg.init_student_at_teacher = true;
  const auto planted = run_teacher_student_qcnn(cfg);
  CHECK(planted.log.front().step == 0);
  CHECK(planted.log.front().loss < 1e-9);
  CHECK(planted.log.front().metric == doctest::Approx(1.0));

  cfg.init_student_at_teacher = false;
  const auto r1 = run_teacher_student_qcnn(cfg);
  const auto r2 = run_teacher_student_qcnn(cfg);
  REQUIRE(r1.log.size() == r2.log.size());
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].loss == r2.log[i].loss);
    CHECK(r1.log[i].metric == r2.log[i].metric);
  }
  for (const auto& row : r1.log) {
    CHECK(row.metric >= 0.0);
    CHECK(row.metric <= 1.0);
  }
}

TEST_CASE("qcnn teacher-student training makes progress on a tiny instance") {
  TeacherStudentConfig cfg;
  cfg.kind = TeacherStudentConfig::Kind::qcnn;
  cfg.n_qubits = 4;
  cfg.dataset_size = 128;
  cfg.batch_size = 64;
  cfg.steps = 300;
  cfg.lr = 0.01;
  cfg.seed = 3;
  cfg.log_every = 299;
  const auto rec = run_teacher_student_qcnn(cfg);
  CHECK(rec.final.loss < rec.log.front().loss);
}

TEST_CASE("checkerboard teacher-student: planted solution, early stop") {
  TeacherStudentConfig cfg;
  cfg.kind = TeacherStudentConfig::Kind::checkerboard;
  cfg.n_qubits = 4;
  cfg.teacher_layers = 2;
  cfg.student_layers = 2;
  cfg.dataset_size = 32;
  cfg.batch_size = 16;
  cfg.steps = 50;
  cfg.lr = 0.001;
  cfg.seed = 5;
  cfg.log_every = 1;
  cfg.init_student_at_teacher = true;
  const auto planted = run_teacher_student_checkerboard(cfg);
  // Early stop fires immediately at the planted optimum.
  CHECK(planted.log.size() == 1);
  CHECK(planted.final.loss < 1e-9);

  cfg.init_student_at_teacher = false;
  const auto rec = run_teacher_student_checkerboard(cfg);
  for (const auto& row : rec.log) {
    CHECK(row.loss >= 0.0);
    CHECK(row.loss <= 1.0 + 1e-9);
  }
}

TEST_CASE("vqe target: shift makes the ground energy exactly zero") {
  Rng rng(13);
  // Degenerate test hook: no conjugation rows.
  const auto bare = build_vqe_target(4, 0, rng);
  CHECK(bare.conjugation.bricks().empty());
  const auto ansatz = build_checkerboard(4, 1);
  const std::vector<double> zeros(static_cast<std::size_t>(ansatz.param_count()), 0.0);
  // |0...0> is the top eigenstate: energy 2n.
  CHECK(vqe_energy_and_grad(bare, ansatz, zeros).value == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(trace_distance_to_ground(basis_state(4, 15), bare) == doctest::Approx(0.0));
  CHECK(trace_distance_to_ground(basis_state(4, 0), bare) == doctest::Approx(1.0));

  const auto target = build_vqe_target(4, 3, rng);
  const auto ground = vqe_ground_state(target);
  CHECK(trace_distance_to_ground(ground, target) == doctest::Approx(0.0));

  // Dense oracle: minimum eigenvalue of H_t is 0 (n = 4).
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(16, 16);
  for (std::size_t col = 0; col < 16; ++col) {
    std::vector<cplx> amps(16, cplx{0, 0});
    amps[col] = 1.0;
    for (const auto& b : target.conjugation.bricks())
      kernel::apply_gate2q_inplace(amps, 4, b.fixed_gate->matrix(), b.qa, b.qb);
    for (std::size_t j = 0; j < 16; ++j)
      amps[j] *= static_cast<double>(4 - 2 * std::popcount(j));
    for (std::size_t bi = target.conjugation.bricks().size(); bi-- > 0;) {
      const auto& b = target.conjugation.bricks()[bi];
      kernel::apply_gate2q_inplace(amps, 4, b.fixed_gate->matrix().adjoint(), b.qa, b.qb);
    }
    for (std::size_t row = 0; row < 16; ++row) h(static_cast<long>(row), static_cast<long>(col)) = amps[row];
  }
  h += 4.0 * Eigen::MatrixXcd::Identity(16, 16);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(0.0).epsilon(1e-9));

  // Pure-state trace distance vs dense trace-norm computation.
  Rng srng(17);
  const auto psi = vql::testing::random_state(4, srng);
  Eigen::VectorXcd pv(16), gv(16);
  for (int i = 0; i < 16; ++i) {
    pv(i) = psi.amplitude(static_cast<std::size_t>(i));
    gv(i) = ground.amplitude(static_cast<std::size_t>(i));
  }
  const Eigen::MatrixXcd diff = gv * gv.adjoint() - pv * pv.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es2(diff);
  const double dense_trace_distance = es2.eigenvalues().cwiseAbs().sum() / 2.0;
  CHECK(trace_distance_to_ground(psi, target) ==
        doctest::Approx(dense_trace_distance).epsilon(1e-10));
}

TEST_CASE("vqe energy and gradient: planted solution and finite differences") {
  Rng rng(19);
  const auto ansatz = build_checkerboard(4, 2);
  const auto params = random_params(ansatz, rng);

  const auto planted = build_vqe_target_planted(ansatz, params);
  const auto at_solution = vqe_energy_and_grad(planted, ansatz, params);
  CHECK(at_solution.value < 1e-9);
  for (const double g : at_solution.grad) CHECK(std::abs(g) < 1e-7);
  const auto psi = forward(ansatz, params, basis_state(4, 0));
  CHECK(trace_distance_to_ground(psi, planted) < 1e-7);

  const auto target = build_vqe_target(4, 2, rng);
  const auto res = vqe_energy_and_grad(target, ansatz, params);
  CHECK(res.value >= -1e-9);
  CHECK(res.value <= 8.0 + 1e-9);
  const auto fd = finite_difference_grad(
      [&](const std::vector<double>& p) { return vqe_energy_and_grad(target, ansatz, p).value; },
      params);
  CHECK(max_rel_error(res.grad, fd) < 1e-5);
}

TEST_CASE("vqe run: logging and determinism") {
  VqeConfig cfg;
  cfg.n_qubits = 4;
  cfg.target_rows = 2;
  cfg.ansatz_rows = 2;
  cfg.optimizer = VqeConfig::Optimizer::gd;
  cfg.steps = 40;
  cfg.lr = 0.01;
  cfg.seed = 23;
  cfg.log_every = 10;
  const auto r1 = run_vqe(cfg);
  const auto r2 = run_vqe(cfg);
  REQUIRE(!r1.log.empty());
  CHECK(r1.final.step == 39);
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].loss == r2.log[i].loss);
    CHECK(r1.log[i].metric == r2.log[i].metric);
  }
  for (std::size_t i = 1; i < r1.log.size(); ++i) CHECK(r1.log[i].step > r1.log[i - 1].step);
  // Energies in [0, 2n].
  for (const auto& row : r1.log) {
    CHECK(row.loss >= -1e-9);
    CHECK(row.loss <= 8.0 + 1e-9);
    CHECK(row.metric >= 0.0);
    CHECK(row.metric <= 1.0);
  }
  // Adam variant runs too.
  cfg.optimizer = VqeConfig::Optimizer::adam;
  cfg.lr = 0.003;
  const auto r3 = run_vqe(cfg);
  CHECK(r3.final.step == 39);
}

TEST_CASE("layer-wise vqe: growth continuity and parameter accounting") {
  VqeConfig cfg;
  cfg.n_qubits = 5;
  cfg.target_rows = 2;
  cfg.optimizer = VqeConfig::Optimizer::adam;
  cfg.steps = 130;
  cfg.lr = 0.002;
  cfg.seed = 29;
  cfg.log_every = 1;
  cfg.layerwise = LayerwiseSettings{.steps_per_layer = 40, .lr_decay = 0.95, .max_layers = 3};
  const auto rec = run_vqe_layerwise(cfg);
  REQUIRE(rec.growth_events.size() == 2);  // grown at steps 40 and 80; exhausted at 120
  for (const auto& ev : rec.growth_events) {
    CHECK(std::abs(ev.loss_before - ev.loss_after) < 1e-12);
    CHECK(ev.step % 40 == 0);
  }
  CHECK(rec.growth_events[0].rows_after == 2);
  CHECK(rec.growth_events[1].rows_after == 3);
}

TEST_CASE("landscape slice: center cell, row count, skipped slots") {
  Rng rng(31);
  const auto layout = build_qcnn(4);
  auto params0 = random_params(layout, rng);

  TeacherStudentConfig cfg;
  cfg.kind = TeacherStudentConfig::Kind::qcnn;
  cfg.n_qubits = 4;
  cfg.dataset_size = 32;
  cfg.batch_size = 32;
  cfg.seed = 37;
  const auto task = make_teacher_student_task(cfg);

  const auto loss = [&](std::span<const double> p) {
    return qcnn_batch_mse(task, p, 0, task.dataset.size());
  };

  Rng dir_rng(41);
  const auto slice = landscape_slice(layout, task.teacher_params, loss, dir_rng, 0.5, 11);
  CHECK(slice.losses.size() == 121);
  CHECK(slice.skipped_slots.empty());
  // Center cell: exact loss at params0, which is the teacher = global minimum.
  const double center = slice.losses[5 * 11 + 5];
  CHECK(center == loss(task.teacher_params));
  CHECK(center < 1e-12);
  for (const double v : slice.losses) CHECK(v >= center - 1e-12);

  // A zero slot block is reported and left unrescaled.
  std::vector<double> zero_params(params0.size(), 0.0);
  Rng dir_rng2(43);
  const auto slice2 = landscape_slice(layout, zero_params, loss, dir_rng2, 0.5, 3);
  CHECK(slice2.skipped_slots.size() == layout.slots().size());

  CHECK_THROWS_AS(landscape_slice(layout, params0, loss, dir_rng, 0.5, 4), std::domain_error);
}

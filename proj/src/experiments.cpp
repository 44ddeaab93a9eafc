#include "vql/experiments.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace vql {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> normal_params(int count, Rng& rng) {
  std::vector<double> p(static_cast<std::size_t>(count));
  for (auto& v : p) v = rng.normal();
  return p;
}

struct Chunk {
  std::vector<std::uint64_t> inputs;
  std::vector<double> labels;                   // qcnn
  std::optional<batch::BatchedStates> targets;  // checkerboard
};

std::vector<Chunk> chunk_dataset(const std::vector<std::uint64_t>& dataset, int batch_size) {
  std::vector<Chunk> chunks;
  for (std::size_t lo = 0; lo < dataset.size(); lo += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi = std::min(lo + static_cast<std::size_t>(batch_size), dataset.size());
    Chunk c;
    c.inputs.assign(dataset.begin() + static_cast<std::ptrdiff_t>(lo),
                    dataset.begin() + static_cast<std::ptrdiff_t>(hi));
    chunks.push_back(std::move(c));
  }
  return chunks;
}

void append_log(RunRecord& rec, long long step, double loss, double metric) {
  rec.log.push_back({step, loss, metric});
  rec.final = rec.log.back();
}

}  // namespace

std::vector<std::uint64_t> sample_basis_dataset(int n, int count, Rng& rng) {
  if (count < 1) throw std::domain_error("sample_basis_dataset: count must be positive");
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<std::uint64_t> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = rng.uniform_index(dim);
  return out;
}

TeacherStudentTask make_teacher_student_task(const TeacherStudentConfig& cfg) {
  TeacherStudentTask task{cfg.kind == TeacherStudentConfig::Kind::qcnn
                              ? build_qcnn(cfg.n_qubits)
                              : build_checkerboard(cfg.n_qubits, cfg.teacher_layers),
                          {},
                          {},
                          {},
                          std::nullopt};
  Rng teacher_rng(derive_seed(cfg.seed, 0, "ts-teacher"));
  task.teacher_params = normal_params(task.layout.param_count(), teacher_rng);
  Rng data_rng(derive_seed(cfg.seed, 0, "ts-data"));
  task.dataset = sample_basis_dataset(cfg.n_qubits, cfg.dataset_size, data_rng);

  auto states = batch::BatchedStates::from_basis_indices(cfg.n_qubits, task.dataset);
  batch::forward(task.layout, task.teacher_params, states);
  if (cfg.kind == TeacherStudentConfig::Kind::qcnn) {
    task.labels = batch::lane_marginals(states, *task.layout.readout());
  } else {
    task.targets = std::move(states);
  }
  return task;
}

double qcnn_batch_mse(const TeacherStudentTask& task, std::span<const double> student_params,
                      std::size_t lane_begin, std::size_t lane_end) {
  const std::vector<std::uint64_t> inputs(task.dataset.begin() + static_cast<std::ptrdiff_t>(lane_begin),
                                          task.dataset.begin() + static_cast<std::ptrdiff_t>(lane_end));
  auto psi = batch::BatchedStates::from_basis_indices(task.layout.n_qubits(), inputs);
  batch::forward(task.layout, student_params, psi);
  const auto probs = batch::lane_marginals(psi, *task.layout.readout());
  double acc = 0.0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    const double d = probs[s] - task.labels[lane_begin + s];
    acc += d * d;
  }
  return acc / static_cast<double>(probs.size());
}

RunRecord run_teacher_student_qcnn(const TeacherStudentConfig& cfg) {
  if (cfg.kind != TeacherStudentConfig::Kind::qcnn)
    throw std::domain_error("run_teacher_student_qcnn: wrong kind");
  if (cfg.dataset_size < cfg.batch_size || cfg.batch_size < 1)
    throw std::domain_error("teacher-student: need dataset_size >= batch_size >= 1");
  const auto t0 = Clock::now();
  const TeacherStudentTask task = make_teacher_student_task(cfg);
  const auto& layout = task.layout;
  const int readout = *layout.readout();

  auto chunks = chunk_dataset(task.dataset, cfg.batch_size);
  for (std::size_t ci = 0, lane = 0; ci < chunks.size(); ++ci) {
    chunks[ci].labels.assign(task.labels.begin() + static_cast<std::ptrdiff_t>(lane),
                             task.labels.begin() +
                                 static_cast<std::ptrdiff_t>(lane + chunks[ci].inputs.size()));
    lane += chunks[ci].inputs.size();
  }

  std::vector<double> params;
  if (cfg.init_student_at_teacher) {
    params = task.teacher_params;
  } else {
    Rng student_rng(derive_seed(cfg.seed, 0, "ts-student"));
    params = normal_params(layout.param_count(), student_rng);
  }
  AdamState adam = AdamState::init(params.size(), cfg.lr);

  // Training accuracy over the full dataset: agreement on whether P(1) > 1/2,
  // exact ties counting as correct.
  auto accuracy = [&] {
    auto all = batch::BatchedStates::from_basis_indices(cfg.n_qubits, task.dataset);
    batch::forward(layout, params, all);
    const auto probs = batch::lane_marginals(all, readout);
    int correct = 0;
    for (std::size_t s = 0; s < probs.size(); ++s) {
      const double p = probs[s];
      const double y = task.labels[s];
      if (p == 0.5 || y == 0.5 || ((p > 0.5) == (y > 0.5))) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.size());
  };

  RunRecord rec;
  rec.seed = cfg.seed;
  for (int step = 0; step < cfg.steps; ++step) {
    const Chunk& chunk = chunks[static_cast<std::size_t>(step) % chunks.size()];
    const double batch_n = static_cast<double>(chunk.inputs.size());
    auto psi = batch::BatchedStates::from_basis_indices(cfg.n_qubits, chunk.inputs);
    batch::forward(layout, params, psi);
    const auto probs = batch::lane_marginals(psi, readout);
    double loss = 0.0;
    std::vector<cplx> coeffs(chunk.inputs.size());
    for (std::size_t s = 0; s < probs.size(); ++s) {
      const double d = probs[s] - chunk.labels[s];
      loss += d * d;
      coeffs[s] = cplx(2.0 * d / batch_n, 0.0);
    }
    loss /= batch_n;
    auto lambda = batch::scaled_copy(psi, coeffs, readout);
    std::vector<double> grad(params.size(), 0.0);
    batch::adjoint_accumulate(layout, params, std::move(psi), std::move(lambda), 1.0, grad);

    if (step % cfg.log_every == 0 || step == cfg.steps - 1)
      append_log(rec, step, loss, accuracy());

    auto [next_adam, next_params] = adam_step(adam, params, grad);
    adam = std::move(next_adam);
    params = std::move(next_params);
  }
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

RunRecord run_teacher_student_checkerboard(const TeacherStudentConfig& cfg) {
  if (cfg.kind != TeacherStudentConfig::Kind::checkerboard)
    throw std::domain_error("run_teacher_student_checkerboard: wrong kind");
  if (cfg.dataset_size < cfg.batch_size || cfg.batch_size < 1)
    throw std::domain_error("teacher-student: need dataset_size >= batch_size >= 1");
  const auto t0 = Clock::now();
  const TeacherStudentTask task = make_teacher_student_task(cfg);
  const auto student = build_checkerboard(cfg.n_qubits, cfg.student_layers);

  // Per-chunk teacher target states, computed once.
  auto chunks = chunk_dataset(task.dataset, cfg.batch_size);
  for (auto& chunk : chunks) {
    auto t = batch::BatchedStates::from_basis_indices(cfg.n_qubits, chunk.inputs);
    batch::forward(task.layout, task.teacher_params, t);
    chunk.targets = std::move(t);
  }

  std::vector<double> params;
  if (cfg.init_student_at_teacher) {
    if (cfg.student_layers != cfg.teacher_layers)
      throw std::domain_error("init_student_at_teacher needs matching layer counts");
    params = task.teacher_params;
  } else {
    Rng student_rng(derive_seed(cfg.seed, 0, "ts-student"));
    params = normal_params(student.param_count(), student_rng);
  }
  AdamState adam = AdamState::init(params.size(), cfg.lr);

  RunRecord rec;
  rec.seed = cfg.seed;
  for (int step = 0; step < cfg.steps; ++step) {
    const Chunk& chunk = chunks[static_cast<std::size_t>(step) % chunks.size()];
    const double batch_n = static_cast<double>(chunk.inputs.size());
    auto psi = batch::BatchedStates::from_basis_indices(cfg.n_qubits, chunk.inputs);
    batch::forward(student, params, psi);
    const auto cs = batch::lane_overlaps(*chunk.targets, psi);
    double loss = 0.0;
    std::vector<cplx> coeffs(cs.size());
    for (std::size_t s = 0; s < cs.size(); ++s) {
      loss += 1.0 - std::norm(cs[s]);
      coeffs[s] = cs[s] / batch_n;
    }
    loss /= batch_n;
    const bool stop = loss < cfg.early_stop_loss;
    if (step % cfg.log_every == 0 || step == cfg.steps - 1 || stop)
      append_log(rec, step, loss, loss);
    if (stop) break;

    auto lambda = batch::scaled_copy(*chunk.targets, coeffs, -1);
    std::vector<double> grad(params.size(), 0.0);
    batch::adjoint_accumulate(student, params, std::move(psi), std::move(lambda), -1.0, grad);
    auto [next_adam, next_params] = adam_step(adam, params, grad);
    adam = std::move(next_adam);
    params = std::move(next_params);
  }
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

VqeTarget build_vqe_target(int n, int target_rows, Rng& rng) {
  if (target_rows < 0) throw std::domain_error("build_vqe_target: negative row count");
  std::vector<Brick> bricks;
  for (int r = 0; r < target_rows; ++r) {
    const int offset = r % 2;
    for (int k = 0; k < n / 2; ++k) {
      Brick b;
      b.layer = r;
      b.qa = (2 * k + offset) % n;
      b.qb = (2 * k + 1 + offset) % n;
      b.fixed_gate = build_unitary32(random_params32(rng));
      bricks.push_back(b);
    }
  }
  return VqeTarget{n, CircuitLayout(n, std::move(bricks), {}), static_cast<double>(n)};
}

VqeTarget build_vqe_target_planted(const CircuitLayout& ansatz, std::span<const double> params) {
  const int n = ansatz.n_qubits();
  if (n % 2 != 0) throw std::domain_error("build_vqe_target_planted: needs an even qubit count");
  const auto gates = detail::slot_unitaries(ansatz, params);
  std::vector<Brick> bricks;
  // A† : the ansatz bricks reversed with adjoint gates.
  const auto& src = ansatz.bricks();
  for (std::size_t bi = src.size(); bi-- > 0;) {
    Brick b = src[bi];
    const Matrix4c u = b.trainable() ? gates[static_cast<std::size_t>(b.param_slot)].matrix()
                                     : b.fixed_gate->matrix();
    b.param_slot = -1;
    b.fixed_gate = Gate2Q(u.adjoint());
    b.layer = static_cast<int>(src.size() - 1 - bi);
    bricks.push_back(b);
  }
  // X^⊗n row flips |0...0> to |1...1>.
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  const int x_layer = static_cast<int>(bricks.size());
  for (int k = 0; k < n / 2; ++k) {
    Brick b;
    b.layer = x_layer;
    b.qa = 2 * k;
    b.qb = 2 * k + 1;
    b.fixed_gate = Gate2Q::kron(x, x);
    bricks.push_back(b);
  }
  return VqeTarget{n, CircuitLayout(n, std::move(bricks), {}), static_cast<double>(n)};
}

namespace {

CircuitLayout ansatz_plus_conjugation(const VqeTarget& target, const CircuitLayout& ansatz) {
  if (ansatz.n_qubits() != target.n_qubits)
    throw std::domain_error("vqe: ansatz and target size mismatch");
  std::vector<Brick> bricks = ansatz.bricks();
  const int shift_layers = ansatz.layer_count();
  for (Brick b : target.conjugation.bricks()) {
    b.layer += shift_layers;
    bricks.push_back(b);
  }
  return CircuitLayout(target.n_qubits, std::move(bricks), ansatz.slots());
}

}  // namespace

GradResult vqe_energy_and_grad(const VqeTarget& target, const CircuitLayout& ansatz,
                               std::span<const double> params) {
  const CircuitLayout combined = ansatz_plus_conjugation(target, ansatz);
  return grad_expectation(combined, params, basis_state(target.n_qubits, 0),
                          SumZPlusShift{target.shift});
}

StateVector vqe_ground_state(const VqeTarget& target) {
  // C† |1...1>
  std::vector<cplx> amps(std::size_t{1} << target.n_qubits, cplx{0, 0});
  amps.back() = cplx{1, 0};
  const auto& bricks = target.conjugation.bricks();
  for (std::size_t bi = bricks.size(); bi-- > 0;) {
    const Brick& b = bricks[bi];
    kernel::apply_gate2q_inplace(amps, target.n_qubits, b.fixed_gate->matrix().adjoint(), b.qa, b.qb);
  }
  return StateVector(target.n_qubits, std::move(amps));
}

double trace_distance_to_ground(const StateVector& state, const VqeTarget& target) {
  const StateVector ground = vqe_ground_state(target);
  const double fidelity = std::norm(overlap(ground, state));
  return std::sqrt(std::max(0.0, 1.0 - fidelity));
}

namespace {

RunRecord run_vqe_impl(const VqeConfig& cfg, bool layerwise) {
  const auto t0 = Clock::now();
  Rng target_rng(derive_seed(cfg.seed, 0, "vqe-target"));
  const VqeTarget target = build_vqe_target(cfg.n_qubits, cfg.target_rows, target_rng);
  const StateVector ground = vqe_ground_state(target);
  const StateVector input = basis_state(cfg.n_qubits, 0);

  CircuitLayout ansatz = build_checkerboard(cfg.n_qubits, layerwise ? 1 : cfg.ansatz_rows);
  Rng init_rng(derive_seed(cfg.seed, 0, "vqe-init"));
  std::vector<double> params = normal_params(ansatz.param_count(), init_rng);

  AdamState adam = AdamState::init(params.size(), cfg.lr);
  double gd_lr = cfg.lr;
  LayerwiseSchedule schedule;
  if (layerwise) {
    if (!cfg.layerwise) throw std::domain_error("run_vqe_layerwise: missing schedule");
    schedule.steps_per_layer = cfg.layerwise->steps_per_layer;
    schedule.lr_decay = cfg.layerwise->lr_decay;
    schedule.max_layers = cfg.layerwise->max_layers;
    schedule.current_layer = 1;
  }

  RunRecord rec;
  rec.seed = cfg.seed;
  auto metric_now = [&] {
    const StateVector psi = forward(ansatz, params, input);
    return trace_distance_to_ground(psi, target);
  };
  for (int step = 0; step < cfg.steps; ++step) {
    if (layerwise && step > 0 && step % schedule.steps_per_layer == 0) {
      const double before = vqe_energy_and_grad(target, ansatz, params).value;
      const auto growth = maybe_grow(schedule, step, ansatz, params);
      if (growth.grew) {
        adam.resize(params.size());
        adam.lr *= growth.lr_multiplier;
        gd_lr *= growth.lr_multiplier;
        const double after = vqe_energy_and_grad(target, ansatz, params).value;
        rec.growth_events.push_back({step, before, after, ansatz.layer_count()});
      }
    }
    const GradResult res = vqe_energy_and_grad(target, ansatz, params);
    if (step % cfg.log_every == 0 || step == cfg.steps - 1)
      append_log(rec, step, res.value, metric_now());
    if (cfg.optimizer == VqeConfig::Optimizer::gd) {
      params = gd_step(params, res.grad, gd_lr);
    } else {
      auto [next_adam, next_params] = adam_step(adam, params, res.grad);
      adam = std::move(next_adam);
      params = std::move(next_params);
    }
  }
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

}  // namespace

RunRecord run_vqe(const VqeConfig& cfg) { return run_vqe_impl(cfg, false); }

RunRecord run_vqe_layerwise(const VqeConfig& cfg) { return run_vqe_impl(cfg, true); }

LandscapeResult landscape_slice(const CircuitLayout& layout, std::span<const double> params0,
                                const std::function<double(std::span<const double>)>& loss,
                                Rng& rng, double grid_half_width, int grid_points) {
  if (grid_points < 1 || grid_points % 2 == 0)
    throw std::domain_error("landscape_slice: grid_points must be odd");
  if (static_cast<int>(params0.size()) != layout.param_count())
    throw std::domain_error("landscape_slice: parameter shape mismatch");

  const std::size_t dim = params0.size();
  std::vector<double> dir1(dim), dir2(dim);
  for (auto& v : dir1) v = rng.normal();
  for (auto& v : dir2) v = rng.normal();

  LandscapeResult out;
  // Filter-wise normalization: rescale each slot block of the direction to the
  // parameter block's Frobenius norm.
  const int slot_count = static_cast<int>(layout.slots().size());
  for (int s = 0; s < slot_count; ++s) {
    const std::size_t off = static_cast<std::size_t>(layout.slot_offset(s));
    const std::size_t len = static_cast<std::size_t>(param_count(layout.slot_kind(s)));
    double param_norm = 0.0;
    for (std::size_t k = off; k < off + len; ++k) param_norm += params0[k] * params0[k];
    param_norm = std::sqrt(param_norm);
    if (param_norm == 0.0) {
      out.skipped_slots.push_back(s);
      continue;
    }
    for (auto* dir : {&dir1, &dir2}) {
      double dir_norm = 0.0;
      for (std::size_t k = off; k < off + len; ++k) dir_norm += (*dir)[k] * (*dir)[k];
      dir_norm = std::sqrt(dir_norm);
      const double scale = param_norm / dir_norm;
      for (std::size_t k = off; k < off + len; ++k) (*dir)[k] *= scale;
    }
  }

  out.xs.resize(static_cast<std::size_t>(grid_points));
  out.ys.resize(static_cast<std::size_t>(grid_points));
  const int half = grid_points / 2;
  for (int i = 0; i < grid_points; ++i) {
    const double t = static_cast<double>(i - half) / std::max(1, half);
    out.xs[static_cast<std::size_t>(i)] = t * grid_half_width;
    out.ys[static_cast<std::size_t>(i)] = t * grid_half_width;
  }
  out.losses.resize(static_cast<std::size_t>(grid_points) * static_cast<std::size_t>(grid_points));
  std::vector<double> probe(dim);
  for (int i = 0; i < grid_points; ++i) {
    for (int j = 0; j < grid_points; ++j) {
      const double x = out.xs[static_cast<std::size_t>(i)];
      const double y = out.ys[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < dim; ++k) probe[k] = params0[k] + x * dir1[k] + y * dir2[k];
      out.losses[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_points) +
                 static_cast<std::size_t>(j)] = loss(probe);
    }
  }
  return out;
}

}  // namespace vql

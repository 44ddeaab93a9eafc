#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vql/batch.hpp"
#include "vql/optim.hpp"
#include "vql/rng.hpp"

namespace vql {

struct TeacherStudentConfig {
  enum class Kind { qcnn, checkerboard };
  Kind kind = Kind::qcnn;
  int n_qubits = 4;
  int teacher_layers = 4;  // checkerboard
  int student_layers = 4;  // checkerboard
  int dataset_size = 512;
  int batch_size = 128;
  int steps = 5000;  // optimizer steps, one mini-batch each
  double lr = 0.001;
  std::uint64_t seed = 0;
  double early_stop_loss = 0.001;  // checkerboard
  int log_every = 50;
  bool init_student_at_teacher = false;  // planted-solution hook
};

struct LayerwiseSettings {
  int steps_per_layer = 5000;
  double lr_decay = 0.95;
  int max_layers = 12;
};

struct VqeConfig {
  enum class Optimizer { gd, adam };
  int n_qubits = 4;
  int target_rows = 4;
  int ansatz_rows = 4;
  Optimizer optimizer = Optimizer::gd;
  int steps = 30000;
  double lr = 0.01;
  std::uint64_t seed = 0;
  std::optional<LayerwiseSettings> layerwise;
  int log_every = 10;
};

struct LogRow {
  long long step = 0;
  double loss = 0.0;
  double metric = 0.0;
};

struct GrowthEvent {
  long long step = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  int rows_after = 0;
};

struct RunRecord {
  std::string run_id;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<LogRow> log;
  LogRow final;
  double wall_time_s = 0.0;
  std::vector<GrowthEvent> growth_events;  // layer-wise runs only
};

/// count i.i.d. uniform draws (with replacement) from {0, ..., 2^n - 1}.
std::vector<std::uint64_t> sample_basis_dataset(int n, int count, Rng& rng);

RunRecord run_teacher_student_qcnn(const TeacherStudentConfig& cfg);
RunRecord run_teacher_student_checkerboard(const TeacherStudentConfig& cfg);

/// H_t = C† (Sum Z_i) C + n I with C a fixed random brick circuit; the ground
/// state C†|1...1> has energy exactly 0.
struct VqeTarget {
  int n_qubits = 2;
  CircuitLayout conjugation;
  double shift = 0.0;
};

VqeTarget build_vqe_target(int n, int target_rows, Rng& rng);

/// Planted instance: conjugation C = (X^⊗n) ∘ A†(params), so the ground state
/// C†|1...1> equals the ansatz output at exactly these parameters. n even.
VqeTarget build_vqe_target_planted(const CircuitLayout& ansatz, std::span<const double> params);

/// Energy <psi|H_t|psi> in [0, 2n] for psi = ansatz|0...0>, with the adjoint
/// gradient through the trainable ansatz bricks only.
GradResult vqe_energy_and_grad(const VqeTarget& target, const CircuitLayout& ansatz,
                               std::span<const double> params);

StateVector vqe_ground_state(const VqeTarget& target);

/// Pure-state trace distance sqrt(1 - |<phi_g|psi>|^2).
double trace_distance_to_ground(const StateVector& state, const VqeTarget& target);

RunRecord run_vqe(const VqeConfig& cfg);
RunRecord run_vqe_layerwise(const VqeConfig& cfg);

struct LandscapeResult {
  std::vector<double> xs;  // row-major grid: rows[i * points + j] at (xs[i], ys[j])
  std::vector<double> ys;
  std::vector<double> losses;
  std::vector<int> skipped_slots;  // zero-norm slots left unrescaled
};

/// Loss surface along two random filter-normalized directions: each direction
/// is i.i.d. standard normal, then per parameter slot rescaled to the slot's
/// parameter Frobenius norm (slots with zero norm are left as drawn and
/// reported). The center cell is evaluated exactly at params0.
LandscapeResult landscape_slice(const CircuitLayout& layout, std::span<const double> params0,
                                const std::function<double(std::span<const double>)>& loss,
                                Rng& rng, double grid_half_width, int grid_points);

/// Teacher-student losses used by the landscape tool and the harness.
struct TeacherStudentTask {
  CircuitLayout layout;
  std::vector<double> teacher_params;
  std::vector<std::uint64_t> dataset;
  std::vector<double> labels;                     // qcnn: teacher marginals
  std::optional<batch::BatchedStates> targets;    // checkerboard: teacher outputs
};

TeacherStudentTask make_teacher_student_task(const TeacherStudentConfig& cfg);

/// Mean squared error between student and teacher readout marginals over the
/// given dataset lanes.
double qcnn_batch_mse(const TeacherStudentTask& task, std::span<const double> student_params,
                      std::size_t lane_begin, std::size_t lane_end);

}  // namespace vql

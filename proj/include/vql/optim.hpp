#pragma once

#include <vector>

#include "vql/circuits.hpp"

namespace vql {

std::vector<double> gd_step(const std::vector<double>& params, const std::vector<double>& grad,
                            double lr);

struct AdamState {
  long long step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(std::size_t dim, double lr);
  /// Extends the moment vectors with zeros when parameters are appended
  /// (layer-wise growth); existing moments are preserved.
  void resize(std::size_t dim);
};

/// Standard bias-corrected Adam update; returns the new state and parameters.
std::pair<AdamState, std::vector<double>> adam_step(const AdamState& state,
                                                    const std::vector<double>& params,
                                                    const std::vector<double>& grad);

struct LayerwiseSchedule {
  int steps_per_layer = 5000;
  double lr_decay = 0.95;
  int max_layers = 12;
  int current_layer = 1;
};

struct GrowthResult {
  bool grew = false;
  bool exhausted = false;
  double lr_multiplier = 1.0;
};

/// At multiples of steps_per_layer appends one identity-initialized brick row
/// (all-zero params32, so the loss value is unchanged) and reports the 0.95
/// learning-rate multiplier. Outside boundaries, or once max_layers is
/// reached, everything is left untouched.
GrowthResult maybe_grow(LayerwiseSchedule& schedule, long long global_step, CircuitLayout& layout,
                        std::vector<double>& params);

}  // namespace vql

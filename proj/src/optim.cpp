#include "vql/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace vql {

std::vector<double> gd_step(const std::vector<double>& params, const std::vector<double>& grad,
                            double lr) {
  if (params.size() != grad.size()) throw std::domain_error("gd_step: length mismatch");
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
  return out;
}

AdamState AdamState::init(std::size_t dim, double lr) {
  AdamState s;
  s.lr = lr;
  s.first_moment.assign(dim, 0.0);
  s.second_moment.assign(dim, 0.0);
  return s;
}

void AdamState::resize(std::size_t dim) {
  if (dim < first_moment.size()) throw std::domain_error("AdamState: cannot shrink");
  first_moment.resize(dim, 0.0);
  second_moment.resize(dim, 0.0);
}

std::pair<AdamState, std::vector<double>> adam_step(const AdamState& state,
                                                    const std::vector<double>& params,
                                                    const std::vector<double>& grad) {
  if (params.size() != grad.size() || params.size() != state.first_moment.size())
    throw std::domain_error("adam_step: dimension mismatch");
  AdamState next = state;
  next.step = state.step + 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(next.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(next.step));
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    next.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * grad[i];
    next.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = next.first_moment[i] / bc1;
    const double vhat = next.second_moment[i] / bc2;
    out[i] = params[i] - state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  return {std::move(next), std::move(out)};
}

GrowthResult maybe_grow(LayerwiseSchedule& schedule, long long global_step, CircuitLayout& layout,
                        std::vector<double>& params) {
  GrowthResult result;
  if (global_step <= 0 || global_step % schedule.steps_per_layer != 0) return result;
  if (schedule.current_layer >= schedule.max_layers) {
    result.exhausted = true;
    return result;
  }
  layout.append_checkerboard_row(schedule.current_layer);
  params.resize(static_cast<std::size_t>(layout.param_count()), 0.0);
  schedule.current_layer += 1;
  result.grew = true;
  result.lr_multiplier = schedule.lr_decay;
  return result;
}

}  // namespace vql

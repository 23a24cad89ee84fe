#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "iqaforge/error.hpp"
#include "iqaforge/optim.hpp"

namespace iqaforge {

AdamW::AdamW(std::size_t parameter_count, AdamWConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    fail(ErrorCode::ShapeMismatch, "optimizer state holds " + std::to_string(m_.size()) + " parameters, got " +
                                       std::to_string(params.size()) + " params / " + std::to_string(grads.size()) +
                                       " grads");
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double decay = 1.0 - lr * config_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] *= decay;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

long long onecycle_peak_step(long long total_steps, OneCycleConfig config) {
  if (total_steps < 1) fail(ErrorCode::StepOutOfRange, "total_steps must be >= 1");
  const auto peak = static_cast<long long>(std::llround(config.warmup_fraction * static_cast<double>(total_steps)));
  return std::clamp<long long>(peak, 0, total_steps - 1);
}

double onecycle_lr(long long step, long long total_steps, double max_lr, OneCycleConfig config) {
  if (total_steps < 1 || step < 0 || step >= total_steps) {
    fail(ErrorCode::StepOutOfRange,
         "step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + ")");
  }
  const long long peak = onecycle_peak_step(total_steps, config);
  const double initial = max_lr / config.start_div;
  const double final_lr = max_lr / config.final_div;
  constexpr double pi = std::numbers::pi;
  if (step == peak) return max_lr;
  if (step == 0) return initial;
  if (step < peak) {
    const double t = static_cast<double>(step) / static_cast<double>(peak);
    return max_lr - (max_lr - initial) * 0.5 * (1.0 + std::cos(pi * t));
  }
  const double t = static_cast<double>(step - peak) / static_cast<double>(total_steps - 1 - peak);
  return final_lr + (max_lr - final_lr) * 0.5 * (1.0 + std::cos(pi * t));
}

}  // namespace iqaforge

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iqaforge {

inline constexpr double kMaxLearningRate = 2e-4;
inline constexpr double kWeightDecay = 1e-5;

struct AdamWConfig {
  double weight_decay = kWeightDecay;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive moments with bias correction; weight decay is applied to the
// parameters directly (param *= 1 - lr * decay) rather than through the
// gradient.
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::size_t parameter_count, AdamWConfig config = {});

  void step(std::span<double> params, std::span<const double> grads, double lr);

  const AdamWConfig& config() const noexcept { return config_; }
  long long step_count() const noexcept { return t_; }
  std::span<const double> first_moment() const noexcept { return m_; }
  std::span<const double> second_moment() const noexcept { return v_; }

 private:
  AdamWConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long long t_ = 0;
};

struct OneCycleConfig {
  double warmup_fraction = 0.3;
  double start_div = 25.0;
  double final_div = 1e4;
};

// Cosine warmup from max_lr/25 to max_lr over the first 30% of steps, then
// cosine annealing to max_lr/1e4 at the last step.
double onecycle_lr(long long step, long long total_steps, double max_lr = kMaxLearningRate,
                   OneCycleConfig config = {});

// Step index at which onecycle_lr peaks.
long long onecycle_peak_step(long long total_steps, OneCycleConfig config = {});

}  // namespace iqaforge

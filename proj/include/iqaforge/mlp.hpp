#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "iqaforge/rng.hpp"

namespace iqaforge {

inline constexpr double kDropoutRate = 0.5;

enum class Mode { Train, Eval };

// Activations and dropout multipliers recorded by a train-mode forward pass.
struct ForwardTrace {
  std::vector<std::vector<double>> inputs;  // input to each affine layer
  std::vector<std::vector<double>> pre;     // pre-activation of each hidden layer
  std::vector<std::vector<double>> masks;   // per hidden layer: 0 or 1/(1-p)
  bool empty() const noexcept { return inputs.empty(); }
};

// Fully connected regressor: affine -> ReLU -> dropout per hidden layer,
// final affine to a scalar. Parameters live in one flat buffer, each layer
// stored as a row-major (out x in) weight block followed by its bias.
class MlpRegressor {
 public:
  MlpRegressor() = default;
  explicit MlpRegressor(std::vector<int> widths);  // zero parameters

  // Glorot-uniform weights, zero biases.
  static MlpRegressor initialized(std::vector<int> widths, Rng& rng);

  const std::vector<int>& widths() const noexcept { return widths_; }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(widths_.front()); }
  std::size_t layer_count() const noexcept { return widths_.size() - 1; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1];
  }

  double& weight(std::size_t layer, int out, int in) {
    return params_[weight_offset(layer) + static_cast<std::size_t>(out) * widths_[layer] + in];
  }
  double& bias(std::size_t layer, int out) { return params_[bias_offset(layer) + out]; }

  // Eval mode ignores rng and trace may be null. Train mode requires rng.
  double forward(std::span<const double> features, Mode mode, Rng* rng = nullptr,
                 ForwardTrace* trace = nullptr) const;

  // Train-mode forward with caller-supplied dropout multipliers.
  double forward_masked(std::span<const double> features, const std::vector<std::vector<double>>& masks,
                        ForwardTrace* trace) const;

  // d(loss)/d(parameters) given d(loss)/d(output); accumulates into grads.
  void backward(const ForwardTrace& trace, double upstream, std::span<double> grads) const;

  friend bool operator==(const MlpRegressor&, const MlpRegressor&) = default;

 private:
  double run(std::span<const double> features, const std::vector<std::vector<double>>* masks, Rng* rng,
             ForwardTrace* trace) const;

  std::vector<int> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

inline constexpr int kQualityLevels = 10;

// Rounded MOS clamped to 1..10.
int quality_level(double mos);

// w_l = |D| / (N * count_l) for every populated level.
std::map<int, double> class_weights(std::span<const int> levels, int n_levels = kQualityLevels);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d prediction
};

LossResult weighted_mse_loss(std::span<const double> preds, std::span<const double> targets,
                             std::span<const double> weights);

}  // namespace iqaforge

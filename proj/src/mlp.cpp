#include <algorithm>
#include <cmath>
#include <string>

#include "iqaforge/error.hpp"
#include "iqaforge/mlp.hpp"

namespace iqaforge {

MlpRegressor::MlpRegressor(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2 || widths_.back() != 1) {
    fail(ErrorCode::InvalidArgument, "regressor needs >= 2 widths ending in a scalar output");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1) fail(ErrorCode::InvalidArgument, "layer widths must be >= 1");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

MlpRegressor MlpRegressor::initialized(std::vector<int> widths, Rng& rng) {
  MlpRegressor m(std::move(widths));
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const int fan_in = m.widths_[l];
    const int fan_out = m.widths_[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t off = m.weight_offset(l);
    for (std::size_t i = 0; i < static_cast<std::size_t>(fan_in) * fan_out; ++i) {
      m.params_[off + i] = (2.0 * rng.uniform() - 1.0) * limit;
    }
  }
  return m;
}

double MlpRegressor::run(std::span<const double> features, const std::vector<std::vector<double>>* masks, Rng* rng,
                         ForwardTrace* trace) const {
  if (widths_.empty()) fail(ErrorCode::InvalidArgument, "regressor has no layers");
  if (features.size() != input_dim()) {
    fail(ErrorCode::DimensionMismatch,
         "expected " + std::to_string(input_dim()) + " features, got " + std::to_string(features.size()));
  }
  const bool train = masks != nullptr || rng != nullptr;
  if (trace) *trace = ForwardTrace{};
  std::vector<double> x(features.begin(), features.end());
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    std::vector<double> z(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = acc;
    }
    if (trace) trace->inputs.push_back(x);
    if (l + 1 == layer_count()) return z[0];

    std::vector<double> a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
    if (train) {
      std::vector<double> mask(z.size());
      if (masks) {
        if (l >= masks->size() || (*masks)[l].size() != z.size()) {
          fail(ErrorCode::ShapeMismatch, "dropout mask shape does not match hidden layer " + std::to_string(l));
        }
        mask = (*masks)[l];
      } else {
        const double keep_scale = 1.0 / (1.0 - kDropoutRate);
        for (double& m : mask) m = rng->bernoulli(kDropoutRate) ? 0.0 : keep_scale;
      }
      for (std::size_t i = 0; i < a.size(); ++i) a[i] *= mask[i];
      if (trace) trace->masks.push_back(std::move(mask));
    }
    if (trace) trace->pre.push_back(std::move(z));
    x = std::move(a);
  }
  return 0.0;
}

double MlpRegressor::forward(std::span<const double> features, Mode mode, Rng* rng, ForwardTrace* trace) const {
  if (mode == Mode::Train) {
    if (!rng) fail(ErrorCode::InvalidArgument, "train-mode forward needs an rng");
    return run(features, nullptr, rng, trace);
  }
  return run(features, nullptr, nullptr, trace);
}

double MlpRegressor::forward_masked(std::span<const double> features, const std::vector<std::vector<double>>& masks,
                                    ForwardTrace* trace) const {
  return run(features, &masks, nullptr, trace);
}

void MlpRegressor::backward(const ForwardTrace& trace, double upstream, std::span<double> grads) const {
  if (trace.empty() || trace.inputs.size() != layer_count() || trace.masks.size() + 1 != layer_count()) {
    fail(ErrorCode::NoForwardState, "backward requires a recorded train-mode forward pass");
  }
  if (grads.size() != params_.size()) fail(ErrorCode::ShapeMismatch, "gradient buffer size mismatch");

  std::vector<double> delta{upstream};  // d loss / d z for the current layer
  for (std::size_t l = layer_count(); l-- > 0;) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const auto& x = trace.inputs[l];
    double* gw = grads.data() + weight_offset(l);
    double* gb = grads.data() + bias_offset(l);
    for (int o = 0; o < out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += d * x[static_cast<std::size_t>(i)];
    }
    if (l == 0) break;
    // through dropout and ReLU of hidden layer l-1
    const double* w = params_.data() + weight_offset(l);
    const auto& z = trace.pre[l - 1];
    const auto& mask = trace.masks[l - 1];
    std::vector<double> next(static_cast<std::size_t>(in), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) next[static_cast<std::size_t>(i)] += d * row[i];
    }
    for (int i = 0; i < in; ++i) {
      const auto k = static_cast<std::size_t>(i);
      next[k] = z[k] > 0.0 ? next[k] * mask[k] : 0.0;
    }
    delta = std::move(next);
  }
}

int quality_level(double mos) {
  const long l = std::lround(mos);
  return static_cast<int>(std::clamp<long>(l, 1, kQualityLevels));
}

std::map<int, double> class_weights(std::span<const int> levels, int n_levels) {
  if (levels.empty()) fail(ErrorCode::EmptyCorpus, "class weights need a non-empty training corpus");
  std::map<int, std::size_t> counts;
  for (int l : levels) {
    if (l < 1 || l > n_levels) fail(ErrorCode::InvalidArgument, "quality level out of range: " + std::to_string(l));
    ++counts[l];
  }
  std::map<int, double> weights;
  const double total = static_cast<double>(levels.size());
  for (const auto& [level, count] : counts) {
    weights[level] = total / (static_cast<double>(n_levels) * static_cast<double>(count));
  }
  return weights;
}

LossResult weighted_mse_loss(std::span<const double> preds, std::span<const double> targets,
                             std::span<const double> weights) {
  if (preds.size() != targets.size() || preds.size() != weights.size()) {
    fail(ErrorCode::LengthMismatch, "predictions, targets and weights differ in length");
  }
  if (preds.empty()) fail(ErrorCode::LengthMismatch, "empty batch");
  LossResult r;
  r.grad.resize(preds.size());
  const double n = static_cast<double>(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double diff = targets[i] - preds[i];
    r.loss += weights[i] * diff * diff;
    r.grad[i] = -2.0 / n * weights[i] * diff;
  }
  r.loss /= n;
  return r;
}

}  // namespace iqaforge

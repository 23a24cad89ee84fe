#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "iqaforge/error.hpp"
#include "iqaforge/metrics.hpp"

namespace iqaforge {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t min_n) {
  if (a != b) fail(ErrorCode::LengthMismatch, std::to_string(a) + " vs " + std::to_string(b));
  if (a < min_n) fail(ErrorCode::LengthMismatch, "need at least " + std::to_string(min_n) + " values");
}

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorCode::InvalidArgument, "non-finite score");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double mse(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y.size(), yhat.size(), 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    sum += d * d;
  }
  return sum / static_cast<double>(y.size());
}

double plcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), 2);
  check_finite(x);
  check_finite(y);
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::DegenerateVector, "zero-variance input to PLCC");
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

bool has_ties(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

double spearman_tie_free(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), 2);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  double sum_d2 = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double d = rx[i] - ry[i];
    sum_d2 += d * d;
  }
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

double srocc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), 2);
  check_finite(x);
  check_finite(y);
  const bool tx = has_ties(x);
  const bool ty = has_ties(y);
  if (!tx && !ty) return std::clamp(spearman_tie_free(x, y), -1.0, 1.0);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return plcc(rx, ry);
}

MeanStd aggregate(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "cannot aggregate zero values");
  MeanStd out;
  out.mean = mean_of(values);
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace iqaforge

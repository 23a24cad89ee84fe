#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iqaforge {

double mse(std::span<const double> y, std::span<const double> yhat);

// Pearson linear correlation. Throws DegenerateVector on zero variance.
double plcc(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation with average ranks for ties.
double srocc(std::span<const double> x, std::span<const double> y);

// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

// 1 - 6 sum d^2 / (n (n^2 - 1)); valid only when neither input has ties.
double spearman_tie_free(std::span<const double> x, std::span<const double> y);

bool has_ties(std::span<const double> values);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

MeanStd aggregate(std::span<const double> values);

// --- report --------------------------------------------------------------

struct EvalRow {
  std::string model;
  std::string train_corpus;
  std::string test_dataset;
  int repetition = 0;
  std::optional<double> plcc;
  std::optional<double> srocc;
  std::string error;  // set when the cell failed (plcc/srocc absent)
};

struct AggregateRow {
  std::string model;
  std::string train_corpus;
  std::string test_dataset;
  int n = 0;
  MeanStd plcc;
  MeanStd srocc;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<AggregateRow> aggregates;
};

inline constexpr const char* kEvalHeader = "model,train_corpus,test_dataset,repetition,plcc,srocc";
inline constexpr const char* kAggregateHeader =
    "model,train_corpus,test_dataset,n,plcc_mean,plcc_std,srocc_mean,srocc_std";

// Groups by (model, train corpus, test dataset) in first-appearance order;
// failed cells are excluded from the statistics.
std::vector<AggregateRow> aggregate_rows(std::span<const EvalRow> rows);

std::string format_eval_csv(std::span<const EvalRow> rows);
std::vector<EvalRow> parse_eval_csv(std::string_view text, std::string_view origin = "<memory>");
std::string format_aggregate_csv(std::span<const AggregateRow> rows);

// Monospaced matrix: one line per training corpus, one column per test
// dataset, cells "mean ± std". metric is "plcc" or "srocc".
std::string format_matrix_table(std::span<const AggregateRow> rows, const std::string& metric);

// Ten equal-width bins over [1, 10] per dataset, CSV
// `dataset,bin,lower,upper,count`.
struct MosSample {
  std::string dataset;
  double mos;
};
std::string format_mos_histograms(std::span<const MosSample> samples);

}  // namespace iqaforge

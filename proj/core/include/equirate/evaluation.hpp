#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "equirate/dates.hpp"
#include "equirate/labeler.hpp"
#include "equirate/ratings.hpp"

namespace equirate {

struct MaeStat {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1); 0 when n == 1
  std::size_t n = 0;
};

// Mean and sample std of |pred - truth|. Throws Error(kLengthMismatch) or
// Error(kEmptyInput).
MaeStat mae(std::span<const int> predictions, std::span<const int> truths);
MaeStat mae(std::span<const OrdinalRating> predictions, std::span<const OrdinalRating> truths);

inline constexpr std::array<int, 3> kCompositeHorizons = {3, 6, 12};

// Mean of the 3-, 6- and 12-month values; other horizons are ignored.
// Throws Error(kMissingHorizon).
double composite_error(const std::map<int, double>& mae_by_horizon);

struct RatingDistribution {
  std::array<std::size_t, 5> counts{};  // index = rating + 2
  std::size_t total = 0;

  std::size_t count(int rating) const { return counts.at(static_cast<std::size_t>(rating + 2)); }
  // All zeros when total == 0.
  std::array<double, 5> proportions() const;
};

RatingDistribution rating_distribution(std::span<const OrdinalRating> ratings);

// 1-based ranks, ties get the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks. Throws Error(kLengthMismatch),
// Error(kEmptyInput) for n < 2 and Error(kDegenerate) when either input is
// constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct MonthlyKey {
  YearMonth month;
  int horizon_months = 0;
  LabelMode mode = LabelMode::kAbsolute;

  auto operator<=>(const MonthlyKey&) const = default;
};

using MonthlyTable = std::map<MonthlyKey, MaeStat>;

// MAE per (rating month, horizon, mode) over cells that have a label; months
// without any label for a (horizon, mode) do not appear.
MonthlyTable monthly_breakdown(std::span<const RatingCell> cells, std::span<const QuantileLabel> labels);

struct MethodCells {
  std::string method;
  std::vector<RatingCell> cells;
};

// Sentiment scores a prediction was conditioned on.
struct SentimentObservation {
  std::string company;
  Date rating_date;
  int company_score = 0;
  int sector_score = 0;
};

struct CorrelationEntry {
  std::string method;
  std::string pair;  // e.g. "company-sentiment~rating"
  int horizon_months = 0;  // 0 when the pair does not involve a horizon
  std::optional<double> rho;  // empty when degenerate
  std::size_t n = 0;
};

struct MethodEvaluation {
  std::string method;
  std::size_t predictions = 0;
  std::size_t unlabeled = 0;  // cells with no matching label
  std::map<std::pair<int, LabelMode>, MaeStat> mae;
  std::map<LabelMode, double> composite;  // absent when a composite horizon is missing
  MonthlyTable monthly;
  RatingDistribution distribution;
};

struct EvaluationReport {
  std::vector<MethodEvaluation> methods;
  std::vector<CorrelationEntry> correlations;
  std::map<std::string, std::size_t> exclusions;  // reason -> count
};

// Joins every method's cells to the labels on (company, rating date,
// horizon) for each label mode and aggregates.
EvaluationReport build_report(std::span<const MethodCells> methods, std::span<const QuantileLabel> labels,
                              const std::map<std::string, std::vector<SentimentObservation>>& sentiment = {});

// Spearman pairs for one method: company and sector sentiment against the
// rating at each horizon, and company against sector sentiment.
std::vector<CorrelationEntry> sentiment_rating_correlations(std::string_view method,
                                                            std::span<const RatingCell> cells,
                                                            std::span<const SentimentObservation> sentiment);

}  // namespace equirate

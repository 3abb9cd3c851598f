#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "equirate/dates.hpp"
#include "equirate/error.hpp"
#include "equirate/ratings.hpp"

namespace equirate {

inline constexpr std::array<int, 5> kDefaultHorizons = {1, 3, 6, 12, 18};

struct HorizonTarget {
  int horizon_months = 0;
  Date target_date;
};

// rating_date advanced by each horizon in calendar months.
std::vector<HorizonTarget> expected_horizon_targets(Date rating_date,
                                                    std::span<const int> horizons = kDefaultHorizons);

enum class NewsSentimentLabel { kPositive, kNegative, kNeutral, kMixed };

std::string_view to_string(NewsSentimentLabel label);
std::optional<NewsSentimentLabel> parse_news_sentiment(std::string_view text);

struct HorizonPrediction {
  int horizon_months = 0;
  Date target_date;
  OrdinalRating rating;
  std::optional<double> price_target;
};

struct PredictionRecord {
  std::string company;
  Date rating_date;
  std::vector<HorizonPrediction> entries;  // ascending horizon
  std::string explanation;
  std::optional<NewsSentimentLabel> news_sentiment;
  std::string response_digest;
  bool from_free_text = false;

  const HorizonPrediction* entry(int horizon_months) const;
};

// Error(kMalformedResponse) that keeps the offending reply for audit.
class MalformedResponse : public Error {
 public:
  MalformedResponse(const std::string& message, std::string raw_response);
  const std::string& raw_response() const { return raw_; }

 private:
  std::string raw_;
};

// Parses the fenced ```json answer block; falls back to scanning free text
// for rating terms next to horizon or date mentions. Every expected horizon
// must be present. Throws MalformedResponse.
PredictionRecord parse_prediction(std::string_view response, std::string_view company, Date rating_date,
                                  std::span<const HorizonTarget> expected,
                                  const RatingVocabulary& vocabulary = default_vocabulary());

// The fenced block parse_prediction reads, for a given record.
std::string render_prediction_block(const PredictionRecord& record);

struct CoveResult {
  std::vector<int> mismatched_horizons;
  bool ok() const { return mismatched_horizons.empty(); }
};

// Each entry's target date must equal rating_date + horizon calendar months.
CoveResult verify_dates_cove(const PredictionRecord& record, Date rating_date);

}  // namespace equirate

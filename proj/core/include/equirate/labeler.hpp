#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "equirate/dates.hpp"
#include "equirate/market_data.hpp"
#include "equirate/ratings.hpp"

namespace equirate {

enum class LabelMode { kAbsolute, kSectorRelative };

std::string_view to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view text);

inline constexpr int kQuintiles = 5;

struct QuantileLabel {
  std::string company;
  Date rating_date;
  int horizon_months = 0;
  LabelMode mode = LabelMode::kAbsolute;
  int quintile = 0;
  OrdinalRating truth;
  double forward_return = 0.0;  // the ranked quantity (absolute or sector-relative)
};

struct ExcludedCompany {
  std::string company;
  std::string reason;
};

struct LabelSet {
  std::vector<QuantileLabel> labels;  // ordered by company id
  std::vector<ExcludedCompany> excluded;
};

// Rank bucketing: sort ascending by (return, id); rank r of n -> floor(r*k/n).
// Throws Error(kTooFewCompanies) when n < k, Error(kInvalidArgument) on a
// non-finite return or k < 1.
std::map<std::string, int> assign_quantiles(const std::map<std::string, double>& returns,
                                            int buckets = kQuintiles);

// 0 -> -2 ... 4 -> 2. Throws Error(kOutOfRange).
OrdinalRating quantile_to_rating(int quintile);
int rating_to_quantile(OrdinalRating rating);

// Forward returns over [t, t+p] for every constituent, ranked into quintiles.
// Companies without data at either endpoint (or without a sector series in
// sector-relative mode) are excluded and reported.
LabelSet label_universe(const PriceStore& prices, const Universe& universe, Date rating_date,
                        int horizon_months, LabelMode mode, int buckets = kQuintiles);

struct RatingCell {
  std::string company;
  Date rating_date;
  int horizon_months = 0;
  OrdinalRating rating;
};

// Indicator of an exact match with the ground-truth rating. Throws
// Error(kKeyMismatch) when the cell and label describe different keys.
bool rating_correct(const RatingCell& rating, const QuantileLabel& label);

// `company,rating_date,horizon_months,mode,quintile,truth_rating`
void write_labels_csv(std::ostream& out, const std::vector<QuantileLabel>& labels);

}  // namespace equirate

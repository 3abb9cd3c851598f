#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equirate/dates.hpp"

namespace equirate {

inline constexpr int kDefaultMaxRollDays = 7;

struct PriceObservation {
  Date date;
  double adj_close = 0.0;
};

// Adjusted close prices for one instrument, strictly increasing by date.
class PriceSeries {
 public:
  PriceSeries() = default;
  // Throws Error(kInvalidArgument) on unsorted/duplicate dates or a
  // non-positive price.
  PriceSeries(std::string instrument_id, std::vector<PriceObservation> observations);

  const std::string& id() const { return id_; }
  std::span<const PriceObservation> observations() const { return obs_; }
  bool empty() const { return obs_.empty(); }
  std::size_t size() const { return obs_.size(); }
  Date first_date() const;
  Date last_date() const;

  // Latest observation dated on or before `d`, or nullptr.
  const PriceObservation* at_or_before(Date d) const;
  // Earliest observation dated on or after `d`, or nullptr.
  const PriceObservation* at_or_after(Date d) const;

 private:
  std::string id_;
  std::vector<PriceObservation> obs_;
};

using PriceStore = std::map<std::string, PriceSeries, std::less<>>;

struct UniverseEntry {
  std::string ticker;
  std::string name;
  std::vector<std::string> aliases;
  std::string sector;
};

struct Universe {
  std::vector<UniverseEntry> entries;
  // Empty when the universe declares no market index; the market benchmark
  // then falls back to the equal-weighted mean of constituent returns.
  std::string market_index;
  std::map<std::string, std::string, std::less<>> sector_indices;

  // Unique tickers, every sector mapped. Throws Error(kInvalidArgument).
  void validate() const;
  const UniverseEntry* find(std::string_view ticker) const;
  std::vector<std::string> tickers() const;
  std::vector<std::string> sectors() const;
  std::vector<const UniverseEntry*> members_of(std::string_view sector) const;
};

// Roll-forward alignment of a calendar date onto the series' trading days.
// Dates past the series end resolve to the last observation while within
// `max_roll_days`; otherwise Error(kNoTradingDate).
Date resolve_trading_date(Date calendar_date, const PriceSeries& series,
                          int max_roll_days = kDefaultMaxRollDays);

// (P(t+p) - P(t)) / P(t) with t and t+p each resolved by
// resolve_trading_date; t+p is calendar-month addition from the unresolved t.
double compute_return(const PriceSeries& series, Date t, int horizon_months,
                      int max_roll_days = kDefaultMaxRollDays);

constexpr double compute_relative_return(double company_return, double benchmark_return) {
  return company_return - benchmark_return;
}

// Return over the `months` calendar months ending at `as_of`, using only
// observations dated on or before `as_of`. Each endpoint is the latest close
// on or before its date and must lie within `max_roll_days` of it.
// Throws Error(kInsufficientHistory).
double trailing_return(const PriceSeries& series, Date as_of, int months,
                       int max_roll_days = kDefaultMaxRollDays);

// A market or sector reference: either an index series or the equal-weighted
// mean of member returns.
class Benchmark {
 public:
  static Benchmark from_series(const PriceSeries& series);
  static Benchmark equal_weighted(std::string id, std::vector<const PriceSeries*> members);

  const std::string& id() const { return id_; }
  bool is_composite() const { return series_ == nullptr; }

  double trailing_return(Date as_of, int months, int max_roll_days = kDefaultMaxRollDays) const;
  double forward_return(Date t, int horizon_months, int max_roll_days = kDefaultMaxRollDays) const;

 private:
  std::string id_;
  const PriceSeries* series_ = nullptr;
  std::vector<const PriceSeries*> members_;
};

struct TechnicalSnapshot {
  static constexpr std::size_t kFieldCount = 13;

  Date as_of;
  Date price_date;  // date of the close used as current price
  double current_price = 0.0;
  double week52_min = 0.0;
  double week52_max = 0.0;
  double volatility_90d = 0.0;
  double return_1m = 0.0;
  double return_3m = 0.0;
  double return_12m = 0.0;
  double market_relative_1m = 0.0;
  double market_relative_3m = 0.0;
  double market_relative_12m = 0.0;
  double sector_relative_1m = 0.0;
  double sector_relative_3m = 0.0;
  double sector_relative_12m = 0.0;

  std::array<double, kFieldCount> values() const;
  static const std::array<std::string_view, kFieldCount>& labels();
};

// Trailing windows are 1/3/12 calendar months ending at `as_of`; the 52-week
// range covers the trailing 365 calendar days; volatility is the sample
// standard deviation (n-1) of daily simple returns over the trailing 90
// calendar days, unannualized. Nothing dated after `as_of` is read.
// Throws Error(kInsufficientHistory) listing every window that failed.
TechnicalSnapshot build_technical_snapshot(const PriceSeries& company, const Benchmark& market,
                                           const Benchmark& sector, Date as_of,
                                           int max_roll_days = kDefaultMaxRollDays);
TechnicalSnapshot build_technical_snapshot(const PriceSeries& company, const PriceSeries& market,
                                           const PriceSeries& sector, Date as_of,
                                           int max_roll_days = kDefaultMaxRollDays);

// CSV with header `date,ticker,adj_close`; rows in any order.
PriceStore load_prices_csv(const std::filesystem::path& path);
PriceStore parse_prices_csv(std::istream& in);

// JSON: {"market_index": "...", "sector_indices": {sector: id},
//        "companies": [{"ticker","name","aliases":[...],"sector"}]}
Universe load_universe(const std::filesystem::path& path);
Universe parse_universe(std::string_view json_text);

// Market benchmark for a universe: the declared index when present in
// `prices`, else the equal-weighted composite of constituents.
Benchmark market_benchmark(const Universe& universe, const PriceStore& prices);
// Throws Error(kInvalidArgument) when the sector index series is missing.
Benchmark sector_benchmark(const Universe& universe, const PriceStore& prices, std::string_view sector);

}  // namespace equirate

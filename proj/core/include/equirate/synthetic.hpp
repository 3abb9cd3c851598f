#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "equirate/dates.hpp"

namespace equirate {

// Parameters of a generated dataset. Prices follow per-company drifts that
// persist through the whole history, so trailing and forward returns agree
// more often than not.
struct SyntheticOptions {
  std::size_t companies = 10;
  std::size_t sectors = 2;
  YearMonth start_month{std::chrono::year{2022}, std::chrono::month{1}};
  YearMonth end_month{std::chrono::year{2022}, std::chrono::month{6}};
  std::uint64_t seed = 7;
  int articles_per_month = 3;
  bool market_index = true;
  // Adds a relevant article published on the last rating date and a
  // fundamentals filing dated on it. No planned prompt may contain either;
  // they carry the marker text kPoisonMarker / value kPoisonValue.
  bool poison = false;
  // Drops this many trailing companies' early history so their 12-month
  // windows fail at the first rating date.
  std::size_t short_history = 0;
  std::string method = "vanilla";
};

inline constexpr std::string_view kPoisonMarker = "LATE-BREAKING-POISON";
inline constexpr double kPoisonValue = 987654321.0;

// Writes universe.json, prices.csv, news.jsonl, fundamentals.csv,
// analyst_ratings.csv and config.json (relative paths, output_dir "out").
void write_synthetic_dataset(const SyntheticOptions& options, const std::filesystem::path& dir);

}  // namespace equirate

#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "equirate/dates.hpp"

namespace equirate {

// Five-level ordinal rating: -2 Strong Sell, -1 Moderate Sell, 0 Hold,
// 1 Moderate Buy, 2 Strong Buy.
class OrdinalRating {
 public:
  static constexpr int kMin = -2;
  static constexpr int kMax = 2;

  constexpr OrdinalRating() = default;
  // Throws Error(kOutOfRange) outside [-2, 2].
  static OrdinalRating from_int(int value);

  constexpr int value() const { return value_; }
  std::string_view name() const;

  friend constexpr auto operator<=>(OrdinalRating, OrdinalRating) = default;

 private:
  constexpr explicit OrdinalRating(int v) : value_(v) {}
  int value_ = 0;
};

inline constexpr std::array<int, 5> kAllRatingValues = {-2, -1, 0, 1, 2};

// Case-, whitespace- and hyphen-insensitive term -> rating table.
class RatingVocabulary {
 public:
  // Default synonym table.
  RatingVocabulary();

  static RatingVocabulary empty();
  // JSON object {"term": ordinal, ...} merged over the defaults.
  static RatingVocabulary with_overrides(const std::filesystem::path& path);

  void add(std::string_view term, OrdinalRating rating);
  // Throws Error(kUnknownTerm) for anything not in the table.
  OrdinalRating normalize(std::string_view term) const;
  bool contains(std::string_view term) const;

  // Normalized keys, longest first (free-text scanning order).
  std::vector<std::string> terms_longest_first() const;

  static std::string canonical_key(std::string_view term);

 private:
  struct Tag {};
  explicit RatingVocabulary(Tag) {}
  std::map<std::string, OrdinalRating, std::less<>> table_;
};

const RatingVocabulary& default_vocabulary();

// Uses the default vocabulary.
OrdinalRating normalize_rating_term(std::string_view term);

enum class RatingAction { kMaintain, kReiterate, kUpgrade, kDowngrade, kInitiate };

std::string_view to_string(RatingAction action);
// Accepts full names and the short vendor forms (main, reit, up, down, init).
// Returns false when unrecognized.
bool parse_rating_action(std::string_view text, RatingAction& out);

struct RawRatingRow {
  std::string firm;
  std::string ticker;
  std::string date;
  std::string action;
  std::string term;
};

struct AnalystRatingEvent {
  std::string firm;
  std::string company;
  Date date;
  RatingAction action = RatingAction::kMaintain;
  std::string term;
  OrdinalRating rating;
};

struct RejectedRatingRow {
  RawRatingRow row;
  std::string reason;
};

struct ActionDistribution {
  std::size_t accepted = 0;
  std::map<RatingAction, std::size_t> action_counts;
  std::map<RatingAction, double> action_share;     // fraction of accepted
  std::map<std::string, std::size_t> firm_counts;
  std::map<std::string, double> firm_share;        // fraction of accepted
};

struct RatingIngestResult {
  std::vector<AnalystRatingEvent> events;
  std::vector<RejectedRatingRow> quarantined;  // unknown rating term
  std::vector<RejectedRatingRow> rejected;     // malformed rows
  ActionDistribution summary;
};

// Conserves rows: events + quarantined + rejected == rows.size().
RatingIngestResult ingest_analyst_ratings(const std::vector<RawRatingRow>& rows,
                                          const RatingVocabulary& vocabulary = default_vocabulary());

// CSV `firm,ticker,date,action,term`.
std::vector<RawRatingRow> read_rating_rows(std::istream& in);
std::vector<RawRatingRow> load_rating_rows(const std::filesystem::path& path);

// Same columns as the input plus `reason`.
void write_quarantine_csv(std::ostream& out, const std::vector<RejectedRatingRow>& rows);

}  // namespace equirate

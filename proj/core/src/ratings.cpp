#include "equirate/ratings.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "equirate/csv.hpp"
#include "equirate/error.hpp"

namespace equirate {

OrdinalRating OrdinalRating::from_int(int value) {
  if (value < kMin || value > kMax) {
    throw Error(ErrorKind::kOutOfRange, fmt::format("rating {} outside [-2, 2]", value));
  }
  return OrdinalRating(value);
}

std::string_view OrdinalRating::name() const {
  switch (value_) {
    case -2: return "Strong Sell";
    case -1: return "Moderate Sell";
    case 0: return "Hold";
    case 1: return "Moderate Buy";
    default: return "Strong Buy";
  }
}

// ---------------------------------------------------------------------------

std::string RatingVocabulary::canonical_key(std::string_view term) {
  std::string out;
  bool pending_space = false;
  for (char raw : term) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c) || raw == '-' || raw == '_') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

RatingVocabulary::RatingVocabulary() {
  const std::pair<std::string_view, int> defaults[] = {
      {"strong buy", 2},     {"buy", 2},
      {"moderate buy", 1},   {"outperform", 1},     {"overweight", 1},  {"accumulate", 1},
      {"hold", 0},           {"neutral", 0},        {"equal-weight", 0}, {"market perform", 0},
      {"moderate sell", -1}, {"underperform", -1},  {"underweight", -1}, {"reduce", -1},
      {"strong sell", -2},   {"sell", -2},
  };
  for (const auto& [term, v] : defaults) add(term, OrdinalRating::from_int(v));
}

RatingVocabulary RatingVocabulary::empty() { return RatingVocabulary(Tag{}); }

RatingVocabulary RatingVocabulary::with_overrides(const std::filesystem::path& path) {
  RatingVocabulary vocab;
  auto in = csv::open_input(path);
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [term, value] : j.items()) {
      vocab.add(term, OrdinalRating::from_int(value.get<int>()));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::kParse, fmt::format("{}: {}", path.string(), ex.what()));
  }
  return vocab;
}

void RatingVocabulary::add(std::string_view term, OrdinalRating rating) {
  auto key = canonical_key(term);
  if (key.empty()) throw Error(ErrorKind::kInvalidArgument, "empty rating term");
  table_.insert_or_assign(std::move(key), rating);
}

OrdinalRating RatingVocabulary::normalize(std::string_view term) const {
  auto it = table_.find(canonical_key(term));
  if (it == table_.end()) {
    throw Error(ErrorKind::kUnknownTerm, fmt::format("unrecognized rating term '{}'", term));
  }
  return it->second;
}

bool RatingVocabulary::contains(std::string_view term) const {
  return table_.find(canonical_key(term)) != table_.end();
}

std::vector<std::string> RatingVocabulary::terms_longest_first() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : table_) out.push_back(k);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

const RatingVocabulary& default_vocabulary() {
  static const RatingVocabulary kVocab;
  return kVocab;
}

OrdinalRating normalize_rating_term(std::string_view term) { return default_vocabulary().normalize(term); }

// ---------------------------------------------------------------------------

std::string_view to_string(RatingAction action) {
  switch (action) {
    case RatingAction::kMaintain: return "maintain";
    case RatingAction::kReiterate: return "reiterate";
    case RatingAction::kUpgrade: return "upgrade";
    case RatingAction::kDowngrade: return "downgrade";
    case RatingAction::kInitiate: return "initiate";
  }
  return "maintain";
}

bool parse_rating_action(std::string_view text, RatingAction& out) {
  const auto key = RatingVocabulary::canonical_key(text);
  static const std::pair<std::string_view, RatingAction> kForms[] = {
      {"maintain", RatingAction::kMaintain},   {"main", RatingAction::kMaintain},
      {"maintained", RatingAction::kMaintain}, {"reiterate", RatingAction::kReiterate},
      {"reit", RatingAction::kReiterate},      {"reiterated", RatingAction::kReiterate},
      {"upgrade", RatingAction::kUpgrade},     {"up", RatingAction::kUpgrade},
      {"downgrade", RatingAction::kDowngrade}, {"down", RatingAction::kDowngrade},
      {"initiate", RatingAction::kInitiate},   {"init", RatingAction::kInitiate},
      {"initiated", RatingAction::kInitiate},
  };
  for (const auto& [form, action] : kForms) {
    if (key == form) {
      out = action;
      return true;
    }
  }
  return false;
}

RatingIngestResult ingest_analyst_ratings(const std::vector<RawRatingRow>& rows,
                                          const RatingVocabulary& vocabulary) {
  RatingIngestResult result;
  for (const auto& row : rows) {
    if (row.firm.empty() || row.ticker.empty() || row.date.empty() || row.action.empty()) {
      result.rejected.push_back({row, "missing required field"});
      continue;
    }
    Date date;
    try {
      date = parse_date(row.date);
    } catch (const Error& e) {
      result.rejected.push_back({row, e.what()});
      continue;
    }
    RatingAction action{};
    if (!parse_rating_action(row.action, action)) {
      result.rejected.push_back({row, fmt::format("unknown action '{}'", row.action)});
      continue;
    }
    OrdinalRating rating;
    try {
      rating = vocabulary.normalize(row.term);
    } catch (const Error& e) {
      result.quarantined.push_back({row, e.what()});
      continue;
    }
    result.events.push_back({row.firm, row.ticker, date, action, row.term, rating});
  }

  auto& s = result.summary;
  s.accepted = result.events.size();
  for (const auto& e : result.events) {
    ++s.action_counts[e.action];
    ++s.firm_counts[e.firm];
  }
  if (s.accepted > 0) {
    const auto n = static_cast<double>(s.accepted);
    for (const auto& [a, c] : s.action_counts) s.action_share[a] = static_cast<double>(c) / n;
    for (const auto& [f, c] : s.firm_counts) s.firm_share[f] = static_cast<double>(c) / n;
  }
  return result;
}

std::vector<RawRatingRow> read_rating_rows(std::istream& in) {
  csv::Reader reader(in);
  reader.read_header();
  reader.require_columns({"firm", "ticker", "date", "action", "term"});
  const std::size_t cols[] = {*reader.column("firm"), *reader.column("ticker"), *reader.column("date"),
                              *reader.column("action"), *reader.column("term")};
  std::vector<RawRatingRow> rows;
  while (auto r = reader.next_row()) {
    auto get = [&](std::size_t i) { return cols[i] < r->size() ? (*r)[cols[i]] : std::string{}; };
    rows.push_back({get(0), get(1), get(2), get(3), get(4)});
  }
  return rows;
}

std::vector<RawRatingRow> load_rating_rows(const std::filesystem::path& path) {
  auto in = csv::open_input(path);
  return read_rating_rows(in);
}

void write_quarantine_csv(std::ostream& out, const std::vector<RejectedRatingRow>& rows) {
  out << "firm,ticker,date,action,term,reason\n";
  for (const auto& q : rows) {
    out << csv::join_row({q.row.firm, q.row.ticker, q.row.date, q.row.action, q.row.term, q.reason}) << '\n';
  }
}

}  // namespace equirate

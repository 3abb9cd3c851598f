#include "equirate/prediction.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>

#include <fmt/format.h>

#include "equirate/digest.hpp"

namespace equirate {

std::vector<HorizonTarget> expected_horizon_targets(Date rating_date, std::span<const int> horizons) {
  std::vector<HorizonTarget> out;
  out.reserve(horizons.size());
  for (int h : horizons) out.push_back({h, add_months(rating_date, h)});
  return out;
}

std::string_view to_string(NewsSentimentLabel label) {
  switch (label) {
    case NewsSentimentLabel::kPositive: return "positive";
    case NewsSentimentLabel::kNegative: return "negative";
    case NewsSentimentLabel::kNeutral: return "neutral";
    case NewsSentimentLabel::kMixed: return "mixed";
  }
  return "neutral";
}

std::optional<NewsSentimentLabel> parse_news_sentiment(std::string_view text) {
  const auto key = RatingVocabulary::canonical_key(text);
  if (key == "positive") return NewsSentimentLabel::kPositive;
  if (key == "negative") return NewsSentimentLabel::kNegative;
  if (key == "neutral") return NewsSentimentLabel::kNeutral;
  if (key == "mixed") return NewsSentimentLabel::kMixed;
  return std::nullopt;
}

const HorizonPrediction* PredictionRecord::entry(int horizon_months) const {
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const auto& e) { return e.horizon_months == horizon_months; });
  return it == entries.end() ? nullptr : &*it;
}

MalformedResponse::MalformedResponse(const std::string& message, std::string raw_response)
    : Error(ErrorKind::kMalformedResponse, message), raw_(std::move(raw_response)) {}

namespace {

std::optional<std::string> find_fenced_block(std::string_view text) {
  auto open = text.find("```json");
  std::size_t body_start = 0;
  if (open != std::string_view::npos) {
    body_start = open + 7;
  } else {
    open = text.find("```");
    while (open != std::string_view::npos) {
      auto line_end = text.find('\n', open);
      if (line_end == std::string_view::npos) return std::nullopt;
      auto first = text.find_first_not_of(" \t\r\n", line_end);
      if (first != std::string_view::npos && text[first] == '{') {
        body_start = line_end;
        break;
      }
      auto close = text.find("```", line_end);
      if (close == std::string_view::npos) return std::nullopt;
      open = text.find("```", close + 3);
    }
    if (open == std::string_view::npos) return std::nullopt;
  }
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(body_start, close - body_start));
}

std::optional<double> read_price(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s;
    for (char c : v.get<std::string>()) {
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-') s += c;
    }
    if (s.empty()) return std::nullopt;
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

PredictionRecord parse_structured(const std::string& block, std::string_view response,
                                  const RatingVocabulary& vocabulary) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(block);
  } catch (const nlohmann::json::exception& ex) {
    throw MalformedResponse(fmt::format("answer block is not valid JSON: {}", ex.what()), std::string(response));
  }
  if (!j.is_object() || !j.contains("ratings") || !j["ratings"].is_array()) {
    throw MalformedResponse("answer block has no 'ratings' array", std::string(response));
  }
  PredictionRecord rec;
  for (const auto& item : j["ratings"]) {
    HorizonPrediction e;
    try {
      e.horizon_months = item.contains("horizon_months") ? item.at("horizon_months").get<int>()
                                                         : item.at("horizon").get<int>();
      e.target_date = parse_date(item.at("target_date").get<std::string>());
    } catch (const std::exception& ex) {
      throw MalformedResponse(fmt::format("bad rating entry {}: {}", item.dump(), ex.what()), std::string(response));
    }
    const auto& r = item.contains("rating") ? item["rating"] : nlohmann::json();
    try {
      if (r.is_number_integer()) {
        e.rating = OrdinalRating::from_int(r.get<int>());
      } else if (r.is_string()) {
        e.rating = vocabulary.normalize(r.get<std::string>());
      } else {
        throw Error(ErrorKind::kUnknownTerm, "missing rating");
      }
    } catch (const Error& ex) {
      throw MalformedResponse(fmt::format("horizon {}: {}", e.horizon_months, ex.what()), std::string(response));
    }
    if (item.contains("price_target")) e.price_target = read_price(item["price_target"]);
    rec.entries.push_back(e);
  }
  if (j.contains("explanation") && j["explanation"].is_string()) {
    rec.explanation = j["explanation"].get<std::string>();
  }
  if (j.contains("news_sentiment") && j["news_sentiment"].is_string()) {
    rec.news_sentiment = parse_news_sentiment(j["news_sentiment"].get<std::string>());
  }
  return rec;
}

// Lowercases and maps separators to spaces so vocabulary keys can be found
// with plain substring search on token boundaries.
std::string canonical_line(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  for (char raw : line) {
    const auto c = static_cast<unsigned char>(raw);
    out += (raw == '-' || raw == '_') ? ' ' : static_cast<char>(std::tolower(c));
  }
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::optional<std::string> find_rating_term(const std::string& canon, const std::vector<std::string>& terms) {
  std::optional<std::pair<std::size_t, std::string>> best;
  for (const auto& term : terms) {
    std::size_t pos = 0;
    while ((pos = canon.find(term, pos)) != std::string::npos) {
      const bool left_ok = pos == 0 || !is_word_char(canon[pos - 1]);
      const auto end = pos + term.size();
      const bool right_ok = end >= canon.size() || !is_word_char(canon[end]);
      if (left_ok && right_ok) {
        if (!best || pos < best->first || (pos == best->first && term.size() > best->second.size())) {
          best = {pos, term};
        }
        break;
      }
      ++pos;
    }
  }
  if (!best) return std::nullopt;
  return best->second;
}

PredictionRecord parse_free_text(std::string_view response, std::span<const HorizonTarget> expected,
                                 const RatingVocabulary& vocabulary) {
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start <= response.size()) {
      auto end = response.find('\n', start);
      if (end == std::string_view::npos) end = response.size();
      lines.emplace_back(response.substr(start, end - start));
      start = end + 1;
    }
  }
  const auto terms = vocabulary.terms_longest_first();
  static const std::regex kIsoDate(R"((\d{4}-\d{2}-\d{2}))");
  static const std::regex kPrice(R"(\$\s?([0-9][0-9,]*(?:\.[0-9]+)?))");

  PredictionRecord rec;
  for (const auto& target : expected) {
    const std::string iso = format_date(target.target_date);
    const std::string month_text = canonical_line(month_name_year(month_of(target.target_date)));
    const std::regex horizon_re(fmt::format(R"((^|[^0-9]){}[ ]?months?\b)", target.horizon_months));

    bool found = false;
    for (const auto& line : lines) {
      const auto canon = canonical_line(line);
      std::string lower(line);
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      const bool names_month = lower.find(month_text) != std::string::npos;
      const bool mentions = lower.find(iso) != std::string::npos || names_month ||
                            std::regex_search(canon, horizon_re);
      if (!mentions) continue;
      const auto term = find_rating_term(canon, terms);
      if (!term) continue;

      HorizonPrediction e;
      e.horizon_months = target.horizon_months;
      e.rating = vocabulary.normalize(*term);
      std::smatch m;
      if (std::regex_search(line, m, kIsoDate)) {
        try {
          e.target_date = parse_date(m[1].str());
        } catch (const Error&) {
          continue;
        }
      } else if (names_month) {
        e.target_date = target.target_date;
      } else {
        continue;  // no restated date on this line
      }
      if (std::regex_search(line, m, kPrice)) {
        std::string digits = m[1].str();
        digits.erase(std::remove(digits.begin(), digits.end(), ','), digits.end());
        e.price_target = std::stod(digits);
      }
      rec.entries.push_back(e);
      found = true;
      break;
    }
    if (!found) {
      throw MalformedResponse(fmt::format("missing horizon {}", target.horizon_months), std::string(response));
    }
  }

  static const std::regex kSentiment(R"(sentiment[^a-z\n]{0,20}(positive|negative|neutral|mixed))",
                                     std::regex::icase);
  std::string text(response);
  std::smatch m;
  if (std::regex_search(text, m, kSentiment)) rec.news_sentiment = parse_news_sentiment(m[1].str());
  for (const auto& line : lines) {
    const auto canon = canonical_line(line);
    if (canon.rfind("explanation:", 0) == 0) {
      rec.explanation = line.substr(line.find(':') + 1);
      rec.explanation.erase(0, rec.explanation.find_first_not_of(' '));
      break;
    }
  }
  if (rec.explanation.empty()) rec.explanation = text.substr(0, std::min<std::size_t>(text.size(), 1000));
  rec.from_free_text = true;
  return rec;
}

}  // namespace

PredictionRecord parse_prediction(std::string_view response, std::string_view company, Date rating_date,
                                  std::span<const HorizonTarget> expected, const RatingVocabulary& vocabulary) {
  PredictionRecord rec;
  if (auto block = find_fenced_block(response)) {
    rec = parse_structured(*block, response, vocabulary);
  } else {
    rec = parse_free_text(response, expected, vocabulary);
  }

  std::map<int, HorizonPrediction> by_horizon;
  for (const auto& e : rec.entries) {
    if (!by_horizon.emplace(e.horizon_months, e).second) {
      throw MalformedResponse(fmt::format("horizon {} given twice", e.horizon_months), std::string(response));
    }
  }
  std::vector<HorizonPrediction> ordered;
  for (const auto& target : expected) {
    auto it = by_horizon.find(target.horizon_months);
    if (it == by_horizon.end()) {
      throw MalformedResponse(fmt::format("missing horizon {}", target.horizon_months), std::string(response));
    }
    ordered.push_back(it->second);
  }
  rec.entries = std::move(ordered);
  rec.company = std::string(company);
  rec.rating_date = rating_date;
  rec.response_digest = sha256_hex(response);
  return rec;
}

std::string render_prediction_block(const PredictionRecord& record) {
  nlohmann::ordered_json j;
  j["ratings"] = nlohmann::ordered_json::array();
  for (const auto& e : record.entries) {
    nlohmann::ordered_json item;
    item["horizon_months"] = e.horizon_months;
    item["target_date"] = format_date(e.target_date);
    item["rating"] = e.rating.name();
    if (e.price_target) {
      item["price_target"] = *e.price_target;
    }
    j["ratings"].push_back(std::move(item));
  }
  j["explanation"] = record.explanation;
  if (record.news_sentiment) j["news_sentiment"] = to_string(*record.news_sentiment);
  return "```json\n" + j.dump(2) + "\n```\n";
}

CoveResult verify_dates_cove(const PredictionRecord& record, Date rating_date) {
  CoveResult result;
  for (const auto& e : record.entries) {
    if (e.target_date != add_months(rating_date, e.horizon_months)) {
      result.mismatched_horizons.push_back(e.horizon_months);
    }
  }
  return result;
}

}  // namespace equirate

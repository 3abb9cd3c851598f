#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "equirate/digest.hpp"
#include "equirate/error.hpp"
#include "equirate/gateway.hpp"
#include "equirate/prediction.hpp"

namespace equirate {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_prefix(const std::string& hex_digest) {
  return std::stoull(hex_digest.substr(0, 16), nullptr, 16);
}

double unit_draw(std::uint64_t seed, std::uint64_t key, std::uint64_t salt) {
  const auto h = splitmix64(seed ^ splitmix64(key ^ splitmix64(salt)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::string strip_examples(std::string text) {
  for (;;) {
    const auto open = text.find("<example>");
    if (open == std::string::npos) break;
    const auto close = text.find("</example>", open);
    if (close == std::string::npos) {
      text.erase(open);
      break;
    }
    text.erase(open, close + 10 - open);
  }
  return text;
}

std::optional<double> table_value(const std::string& text, std::string_view label) {
  const std::regex re(fmt::format(R"(<td>{}</td><td>(-?[0-9.]+)(%?)</td>)", label));
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  double v = std::stod(m[1].str());
  if (m[2].matched && m[2].length() > 0) v /= 100.0;
  return v;
}

int lexical_tone(std::string_view text) {
  static const std::set<std::string, std::less<>> kUp = {"beat",   "beats", "growth",  "record", "surge",
                                                          "surges", "gains", "rally",  "profit", "upgrade"};
  static const std::set<std::string, std::less<>> kDown = {"miss", "misses", "decline", "lawsuit", "drop",
                                                            "drops", "loss",  "losses",  "recall", "probe"};
  int score = 0;
  std::string word;
  auto flush = [&] {
    if (kUp.contains(word)) ++score;
    if (kDown.contains(word)) --score;
    word.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return score;
}

}  // namespace

MomentumMockBackend::MomentumMockBackend(std::uint64_t seed, MomentumMockOptions options)
    : seed_(seed), options_(options) {}

std::string MomentumMockBackend::complete(const ChatRequest& request) {
  const auto& system = request.system_text();
  if (system.find("news summarizer") != std::string::npos) return answer_summary(request);
  if (system.find("sentiment scoring") != std::string::npos) return answer_sentiment(request);
  return answer_rating(request);
}

std::string MomentumMockBackend::answer_rating(const ChatRequest& request) const {
  const std::string user = strip_examples(request.user_text());
  const auto key = hash_prefix(request.digest());

  static const std::regex kCompany(R"(Company: [^\n]*\(([^)\n]+)\))");
  static const std::regex kRatingDate(R"(Rating date: (\d{4}-\d{2}-\d{2}))");
  static const std::regex kTarget(R"(- (\d+) months?: (\d{4}-\d{2}-\d{2}))");

  std::smatch m;
  PredictionRecord rec;
  if (std::regex_search(user, m, kCompany)) rec.company = m[1].str();
  if (std::regex_search(user, m, kRatingDate)) rec.rating_date = parse_date(m[1].str());

  const double r3 = table_value(user, "3-month return").value_or(0.0);
  const double price = table_value(user, "Current price").value_or(0.0);
  int direction = 0;
  if (r3 > options_.strong_threshold) direction = 2;
  else if (r3 > 0.0) direction = 1;
  else if (r3 < -options_.strong_threshold) direction = -2;
  else if (r3 < 0.0) direction = -1;

  for (auto it = std::sregex_iterator(user.begin(), user.end(), kTarget); it != std::sregex_iterator(); ++it) {
    HorizonPrediction e;
    e.horizon_months = std::stoi((*it)[1].str());
    e.target_date = parse_date((*it)[2].str());
    int rating = direction;
    const auto salt = static_cast<std::uint64_t>(e.horizon_months);
    if (options_.noise > 0.0 && unit_draw(seed_, key, salt) < options_.noise) {
      rating = static_cast<int>(unit_draw(seed_, key, salt + 1000) * 5.0) - 2;
    }
    e.rating = OrdinalRating::from_int(rating);
    if (price > 0.0) {
      const double drift = 0.5 * r3 * (static_cast<double>(e.horizon_months) / 3.0);
      const double jitter = (unit_draw(seed_, key, salt + 2000) - 0.5) * 0.02;
      e.price_target = std::round(price * (1.0 + drift + jitter) * 100.0) / 100.0;
    }
    rec.entries.push_back(e);
  }

  if (user.find("News summaries") != std::string::npos) {
    const int tone = lexical_tone(user);
    rec.news_sentiment = tone > 0   ? NewsSentimentLabel::kPositive
                         : tone < 0 ? NewsSentimentLabel::kNegative
                                    : NewsSentimentLabel::kNeutral;
  }
  rec.explanation = fmt::format("Trailing 3-month return of {:.2f}% sets the direction for every horizon.", r3 * 100.0);

  return fmt::format("Reasoning: the recent trend is the dominant signal in the data provided.\n\n{}",
                     render_prediction_block(rec));
}

std::string MomentumMockBackend::answer_summary(const ChatRequest& request) const {
  const std::string user = request.user_text();
  std::vector<std::string> items;
  std::istringstream lines(user);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("Title: ", 0) == 0) {
      items.push_back(line.substr(7));
    } else if (line.rfind("- Key events: ", 0) == 0) {
      items.push_back(line.substr(14));
    }
  }
  if (items.empty()) return "Key events: no notable developments.";
  std::string text = "Key events: ";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) text += "; ";
    text += items[i];
  }
  if (text.size() > 2000) text.resize(2000);
  return text;
}

std::string MomentumMockBackend::answer_sentiment(const ChatRequest& request) const {
  const std::string user = request.user_text();
  const auto at = user.find("Summary:");
  const int tone = lexical_tone(at == std::string::npos ? std::string_view(user) : std::string_view(user).substr(at));
  return fmt::format("Sentiment: {}", std::clamp(tone, -5, 5));
}

}  // namespace equirate

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equirate/dates.hpp"
#include "equirate/fundamentals.hpp"
#include "equirate/market_data.hpp"
#include "equirate/prediction.hpp"
#include "equirate/templates.hpp"

namespace equirate {

enum class MethodKind { kVanilla, kNews, kSentiment, kFundamentals, kFundamentalsSentiment };

inline constexpr std::array<MethodKind, 5> kAllMethods = {MethodKind::kVanilla, MethodKind::kNews,
                                                          MethodKind::kSentiment, MethodKind::kFundamentals,
                                                          MethodKind::kFundamentalsSentiment};

// "vanilla", "news", "sentiment", "fundamentals", "fundamentals-sentiment"
std::string_view to_string(MethodKind method);
MethodKind parse_method(std::string_view text);

bool uses_news(MethodKind method);
bool uses_sentiment(MethodKind method);
bool uses_fundamentals(MethodKind method);

struct NewsSummaries {
  YearMonth month;
  std::string company_summary;
  std::string sector_summary;
};

struct SentimentPair {
  YearMonth month;
  int company_score = 0;
  int sector_score = 0;
};

struct PromptInputs {
  std::string ticker;
  std::string company_name;
  std::string sector;
  Date rating_date;
  std::optional<TechnicalSnapshot> snapshot;
  std::optional<NewsSummaries> news;
  std::optional<SentimentPair> sentiment;
  std::optional<FundamentalsTable> fundamentals;
  // Worked example placed before the data blocks; empty -> none.
  std::optional<std::string> few_shot_example;
};

struct PromptOptions {
  std::vector<int> horizons{kDefaultHorizons.begin(), kDefaultHorizons.end()};
  MetricCatalog metrics = MetricCatalog::defaults();
  TemplateSet templates = TemplateSet::defaults();
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::vector<HorizonTarget> expected_targets;
  std::size_t token_estimate = 0;  // ceil(chars / 4)
  std::string input_digest;
};

// Analyst persona and rating scale; the sentiment scale for sentiment methods
// and the metric definitions for fundamentals methods.
std::string build_system_prompt(MethodKind method, const PromptOptions& options = {});

// Block order: task statement with target dates, few-shot example, news
// summaries or sentiment scores, fundamentals HTML, technical snapshot.
// Throws Error(kMissingInput) / Error(kExtraInput) when the inputs do not
// match the method.
PromptBundle build_user_prompt(MethodKind method, const PromptInputs& inputs, const PromptOptions& options = {});

// The 13-value technical table (HTML) embedded in every rating prompt.
std::string render_technical_table(const TechnicalSnapshot& snapshot);

// ceil(chars / 4)
std::size_t estimate_tokens(std::size_t chars);

}  // namespace equirate

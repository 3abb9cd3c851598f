#include "equirate/templates.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "equirate/error.hpp"

namespace equirate {
namespace {

constexpr std::string_view kAnalystSystem = R"(You are a financial analyst covering US equities. You publish stock ratings that tell investors how a stock is likely to perform against the market and its sector.

Ratings use a five-level scale:
- Strong Buy (also called Buy): expected to beat the market or its sector by a wide margin.
- Moderate Buy (also called Outperform or Overweight): expected to do somewhat better than the market or its sector.
- Hold (also called Neutral, Equal-Weight or Market Perform): expected to move in line with the market or its sector.
- Moderate Sell (also called Underperform or Underweight): expected to do somewhat worse than the market or its sector.
- Strong Sell (also called Sell): expected to trail the market or its sector by a wide margin.
{{sentiment_scale}}{{metric_definitions}})";

constexpr std::string_view kSentimentScale = R"(
News sentiment scores are integers from -5 to 5: -5 is extremely negative, 0 is neutral and 5 is extremely positive.
)";

constexpr std::string_view kMetricDefinitions = R"(
Definitions of the quarterly fundamental metrics you will see:
{{definitions}}
)";

constexpr std::string_view kRatingTask = R"(Company: {{company_name}} ({{ticker}})
Sector: {{sector}}
Rating date: {{rating_date}}

Issue the ratings you would publish on the rating date for this company, one for each horizon below.
Target dates:
{{target_dates}}

Work through the data step by step before deciding. Then, for every horizon, restate its target date and give a rating (Strong Sell, Moderate Sell, Hold, Moderate Buy or Strong Buy) and a price target, followed by a short explanation.{{news_instruction}}

Finish with exactly one fenced block in this format:
```json
{{answer_schema}}
```)";

constexpr std::string_view kNewsInstruction =
    R"( Also assess whether the news summaries are positive, negative, neutral, or mixed, and take that assessment into account in your ratings.)";

constexpr std::string_view kFewShot = R"(Here is an example of the input you receive and the answer expected:
<example>
{{example}}
</example>)";

constexpr std::string_view kFewShotExample = R"(Company: Example Industries (EXMP)
Sector: Industrials
Rating date: 2021-06-01
Target dates:
- 1 month: 2021-07-01
- 3 months: 2021-09-01
- 6 months: 2021-12-01
- 12 months: 2022-06-01
- 18 months: 2022-12-01
Technical data as of 2021-05-28: current price 52.40; 52-week low 38.10; 52-week high 55.00; 90-day volatility 1.45%; returns 1m 3.10%, 3m 8.25%, 12m 27.40%; market-relative 1m 1.20%, 3m 2.05%, 12m -8.60%; sector-relative 1m 0.40%, 3m 1.10%, 12m -2.30%.

Answer:
The stock has risen steadily over three and twelve months and trades near its 52-week high, yet it lagged the market over the year and volatility is modest. Near-term momentum supports a positive view that should fade as the year-long underperformance against the market weighs on longer horizons.
```json
{
  "ratings": [
    {"horizon_months": 1, "target_date": "2021-07-01", "rating": "Moderate Buy", "price_target": 53.90},
    {"horizon_months": 3, "target_date": "2021-09-01", "rating": "Moderate Buy", "price_target": 55.20},
    {"horizon_months": 6, "target_date": "2021-12-01", "rating": "Hold", "price_target": 54.80},
    {"horizon_months": 12, "target_date": "2022-06-01", "rating": "Hold", "price_target": 55.50},
    {"horizon_months": 18, "target_date": "2022-12-01", "rating": "Moderate Sell", "price_target": 51.00}
  ],
  "explanation": "Positive short-term momentum near the 52-week high, offset over longer horizons by a year of underperformance against the market."
}
```)";

constexpr std::string_view kNewsBlock = R"(News summaries for {{month}}:
Company news ({{ticker}}): {{company_summary}}
Sector news ({{sector}}): {{sector_summary}})";

constexpr std::string_view kSentimentBlock = R"(News sentiment scores for {{month}} (scale -5 to 5):
Company news sentiment ({{ticker}}): {{company_score}}
Sector news sentiment ({{sector}}): {{sector_score}})";

constexpr std::string_view kFundamentalsBlock = R"(Quarterly fundamentals from the latest filings before {{rating_date}}:
{{table}})";

constexpr std::string_view kTechnicalBlock = R"(Technical data as of {{price_date}}:
{{table}})";

constexpr std::string_view kSummarizerSystem =
    R"(You are an expert news summarizer for financial markets. Condense the articles you are given into a concise summary of the key events and material information. Leave out anything that is not relevant to the company or sector named in the request.)";

constexpr std::string_view kSummarizerCompany = R"(Summarize the following news about {{name}} ({{id}}) published in {{month}}.

{{articles}})";

constexpr std::string_view kSummarizerSector = R"(Summarize the following news about companies in the {{id}} sector published in {{month}}. Identify the general themes and trends across the sector rather than single-company details.

{{articles}})";

constexpr std::string_view kSummarizerReduce = R"(The following are partial summaries of news about {{subject}} from {{month}}. Merge them into one concise summary of the key events.

{{summaries}})";

constexpr std::string_view kSentimentSystem =
    R"(You are an expert in news sentiment scoring for financial markets. You score the sentiment of a news summary as an integer from -5 (extremely negative) to 5 (extremely positive), with 0 meaning neutral. Reply with the integer only.)";

constexpr std::string_view kSentimentCompany = R"(Score the sentiment of this summary of {{month}} news about {{name}} ({{id}}).
For example, a summary dominated by an earnings miss and a product recall deserves a clearly negative score, while record results with raised guidance deserve a clearly positive one.

Summary:
{{summary}})";

constexpr std::string_view kSentimentSector = R"(Score the sentiment of this summary of {{month}} news about the {{id}} sector as a whole.
For example, broad demand weakness across the sector deserves a negative score, while sector-wide growth deserves a positive one.

Summary:
{{summary}})";

}  // namespace

TemplateSet TemplateSet::defaults() {
  TemplateSet t;
  t.templates_ = {
      {"analyst_system", std::string(kAnalystSystem)},
      {"sentiment_scale", std::string(kSentimentScale)},
      {"metric_definitions", std::string(kMetricDefinitions)},
      {"rating_task", std::string(kRatingTask)},
      {"news_instruction", std::string(kNewsInstruction)},
      {"few_shot", std::string(kFewShot)},
      {"few_shot_example", std::string(kFewShotExample)},
      {"news_block", std::string(kNewsBlock)},
      {"sentiment_block", std::string(kSentimentBlock)},
      {"fundamentals_block", std::string(kFundamentalsBlock)},
      {"technical_block", std::string(kTechnicalBlock)},
      {"summarizer_system", std::string(kSummarizerSystem)},
      {"summarizer_company", std::string(kSummarizerCompany)},
      {"summarizer_sector", std::string(kSummarizerSector)},
      {"summarizer_reduce", std::string(kSummarizerReduce)},
      {"sentiment_system", std::string(kSentimentSystem)},
      {"sentiment_company", std::string(kSentimentCompany)},
      {"sentiment_sector", std::string(kSentimentSector)},
  };
  return t;
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& dir) {
  TemplateSet t = defaults();
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kIo, fmt::format("template directory '{}' not found", dir.string()));
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const auto name = entry.path().stem().string();
    auto it = t.templates_.find(name);
    if (it == t.templates_.end()) {
      throw Error(ErrorKind::kTemplate, fmt::format("unknown template override '{}'", entry.path().string()));
    }
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    it->second = ss.str();
    // Editors add a trailing newline; templates are compared without it.
    while (!it->second.empty() && it->second.back() == '\n') it->second.pop_back();
  }
  return t;
}

const std::string& TemplateSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error(ErrorKind::kTemplate, fmt::format("no template '{}'", name));
  return it->second;
}

std::string TemplateSet::render(std::string_view name,
                                const std::map<std::string, std::string, std::less<>>& vars) const {
  return render_template(get(name), vars);
}

void TemplateSet::write_all(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : templates_) {
    std::ofstream out(dir / (name + ".txt"), std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write template '{}'", name));
    out << text << '\n';
  }
}

std::string render_template(std::string_view text, const std::map<std::string, std::string, std::less<>>& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorKind::kTemplate, "unterminated placeholder");
    }
    out.append(text.substr(pos, open - pos));
    const auto name = text.substr(open + 2, close - open - 2);
    auto it = vars.find(name);
    if (it == vars.end()) {
      throw Error(ErrorKind::kTemplate, fmt::format("no value for placeholder '{{{{{}}}}}'", name));
    }
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace equirate

#include "equirate/prompting.hpp"

#include <fmt/format.h>

#include "equirate/digest.hpp"
#include "equirate/error.hpp"

namespace equirate {

std::string_view to_string(MethodKind method) {
  switch (method) {
    case MethodKind::kVanilla: return "vanilla";
    case MethodKind::kNews: return "news";
    case MethodKind::kSentiment: return "sentiment";
    case MethodKind::kFundamentals: return "fundamentals";
    case MethodKind::kFundamentalsSentiment: return "fundamentals-sentiment";
  }
  return "vanilla";
}

MethodKind parse_method(std::string_view text) {
  for (auto m : kAllMethods) {
    if (text == to_string(m)) return m;
  }
  if (text == "fundamentals+sentiment" || text == "fundamentals_sentiment") return MethodKind::kFundamentalsSentiment;
  throw Error(ErrorKind::kParse, fmt::format("unknown method '{}'", text));
}

bool uses_news(MethodKind method) { return method == MethodKind::kNews; }

bool uses_sentiment(MethodKind method) {
  return method == MethodKind::kSentiment || method == MethodKind::kFundamentalsSentiment;
}

bool uses_fundamentals(MethodKind method) {
  return method == MethodKind::kFundamentals || method == MethodKind::kFundamentalsSentiment;
}

std::size_t estimate_tokens(std::size_t chars) { return (chars + 3) / 4; }

std::string build_system_prompt(MethodKind method, const PromptOptions& options) {
  const auto& t = options.templates;
  std::string sentiment_scale;
  if (uses_sentiment(method)) sentiment_scale = t.get("sentiment_scale");
  std::string metric_definitions;
  if (uses_fundamentals(method)) {
    std::string defs;
    for (const auto& d : options.metrics.definitions()) {
      defs += fmt::format("- {}: {}\n", d.name, d.description);
    }
    if (!defs.empty()) defs.pop_back();
    metric_definitions = t.render("metric_definitions", {{"definitions", defs}});
  }
  return t.render("analyst_system", {{"sentiment_scale", sentiment_scale}, {"metric_definitions", metric_definitions}});
}

std::string render_technical_table(const TechnicalSnapshot& s) {
  const auto pct = [](double v) { return fmt::format("{:.2f}%", v * 100.0); };
  const std::pair<std::string_view, std::string> rows[] = {
      {"Current price", fmt::format("{:.2f}", s.current_price)},
      {"52-week low", fmt::format("{:.2f}", s.week52_min)},
      {"52-week high", fmt::format("{:.2f}", s.week52_max)},
      {"90-day volatility", pct(s.volatility_90d)},
      {"1-month return", pct(s.return_1m)},
      {"3-month return", pct(s.return_3m)},
      {"12-month return", pct(s.return_12m)},
      {"1-month market-relative return", pct(s.market_relative_1m)},
      {"3-month market-relative return", pct(s.market_relative_3m)},
      {"12-month market-relative return", pct(s.market_relative_12m)},
      {"1-month sector-relative return", pct(s.sector_relative_1m)},
      {"3-month sector-relative return", pct(s.sector_relative_3m)},
      {"12-month sector-relative return", pct(s.sector_relative_12m)},
  };
  std::string html = "<table class=\"technical\">\n<tr><th>Metric</th><th>Value</th></tr>\n";
  for (const auto& [label, value] : rows) html += fmt::format("<tr><td>{}</td><td>{}</td></tr>\n", label, value);
  html += "</table>";
  return html;
}

namespace {

void check_inputs(MethodKind method, const PromptInputs& in) {
  const auto need = [&](bool required, bool present, std::string_view block) {
    if (required && !present) {
      throw Error(ErrorKind::kMissingInput, fmt::format("method {} requires {}", to_string(method), block));
    }
    if (!required && present) {
      throw Error(ErrorKind::kExtraInput, fmt::format("method {} does not take {}", to_string(method), block));
    }
  };
  need(true, in.snapshot.has_value(), "a technical snapshot");
  need(uses_news(method), in.news.has_value(), "news summaries");
  need(uses_sentiment(method), in.sentiment.has_value(), "sentiment scores");
  need(uses_fundamentals(method), in.fundamentals.has_value(), "a fundamentals table");
  if (in.news && (in.news->company_summary.empty() || in.news->sector_summary.empty())) {
    throw Error(ErrorKind::kMissingInput, "news summaries need both a company and a sector summary");
  }
}

std::string input_digest(MethodKind method, const PromptInputs& in, std::string_view fundamentals_html) {
  DigestBuilder d;
  d.add(to_string(method)).add(in.ticker).add(in.company_name).add(in.sector).add(format_date(in.rating_date));
  if (in.snapshot) {
    d.add(format_date(in.snapshot->price_date));
    for (double v : in.snapshot->values()) d.add(fmt::format("{:.17g}", v));
  }
  if (in.news) d.add(format_year_month(in.news->month)).add(in.news->company_summary).add(in.news->sector_summary);
  if (in.sentiment) {
    d.add(format_year_month(in.sentiment->month))
        .add(std::to_string(in.sentiment->company_score))
        .add(std::to_string(in.sentiment->sector_score));
  }
  d.add(fundamentals_html);
  d.add(in.few_shot_example.value_or(""));
  return d.hex();
}

std::string answer_schema(MethodKind method, std::span<const HorizonTarget> targets) {
  std::string s = "{\n  \"ratings\": [\n";
  for (std::size_t i = 0; i < targets.size(); ++i) {
    s += fmt::format(
        "    {{\"horizon_months\": {}, \"target_date\": \"YYYY-MM-DD\", \"rating\": \"<rating>\", "
        "\"price_target\": <number>}}{}\n",
        targets[i].horizon_months, i + 1 < targets.size() ? "," : "");
  }
  s += "  ],\n  \"explanation\": \"<short explanation>\"";
  if (uses_news(method)) s += ",\n  \"news_sentiment\": \"positive | negative | neutral | mixed\"";
  s += "\n}";
  return s;
}

}  // namespace

PromptBundle build_user_prompt(MethodKind method, const PromptInputs& in, const PromptOptions& options) {
  check_inputs(method, in);
  const auto& t = options.templates;

  PromptBundle bundle;
  bundle.expected_targets = expected_horizon_targets(in.rating_date, options.horizons);

  std::string target_lines;
  for (const auto& target : bundle.expected_targets) {
    target_lines += fmt::format("- {} month{}: {}\n", target.horizon_months, target.horizon_months == 1 ? "" : "s",
                                target.target_date);
  }
  if (!target_lines.empty()) target_lines.pop_back();

  std::vector<std::string> blocks;
  blocks.push_back(t.render("rating_task",
                            {{"company_name", in.company_name},
                             {"ticker", in.ticker},
                             {"sector", in.sector},
                             {"rating_date", format_date(in.rating_date)},
                             {"target_dates", target_lines},
                             {"news_instruction", uses_news(method) ? t.get("news_instruction") : std::string{}},
                             {"answer_schema", answer_schema(method, bundle.expected_targets)}}));
  if (in.few_shot_example && !in.few_shot_example->empty()) {
    blocks.push_back(t.render("few_shot", {{"example", *in.few_shot_example}}));
  }
  if (in.news) {
    blocks.push_back(t.render("news_block", {{"month", month_name_year(in.news->month)},
                                             {"ticker", in.ticker},
                                             {"sector", in.sector},
                                             {"company_summary", in.news->company_summary},
                                             {"sector_summary", in.news->sector_summary}}));
  }
  if (in.sentiment) {
    blocks.push_back(t.render("sentiment_block", {{"month", month_name_year(in.sentiment->month)},
                                                  {"ticker", in.ticker},
                                                  {"sector", in.sector},
                                                  {"company_score", std::to_string(in.sentiment->company_score)},
                                                  {"sector_score", std::to_string(in.sentiment->sector_score)}}));
  }
  std::string fundamentals_html;
  if (in.fundamentals) {
    fundamentals_html = render_fundamentals_html(*in.fundamentals);
    if (!fundamentals_html.empty() && fundamentals_html.back() == '\n') fundamentals_html.pop_back();
    blocks.push_back(t.render("fundamentals_block",
                              {{"rating_date", format_date(in.rating_date)}, {"table", fundamentals_html}}));
  }
  blocks.push_back(t.render("technical_block", {{"price_date", format_date(in.snapshot->price_date)},
                                                {"table", render_technical_table(*in.snapshot)}}));

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) bundle.user_text += "\n\n";
    bundle.user_text += blocks[i];
  }
  bundle.system_text = build_system_prompt(method, options);
  bundle.token_estimate = estimate_tokens(bundle.system_text.size() + bundle.user_text.size());
  bundle.input_digest = input_digest(method, in, fundamentals_html);
  return bundle;
}

}  // namespace equirate

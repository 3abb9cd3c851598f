#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equirate/dates.hpp"
#include "equirate/evaluation.hpp"
#include "equirate/fundamentals.hpp"
#include "equirate/gateway.hpp"
#include "equirate/market_data.hpp"
#include "equirate/news.hpp"
#include "equirate/prediction.hpp"
#include "equirate/prompting.hpp"
#include "equirate/ratings.hpp"
#include "equirate/templates.hpp"

namespace equirate {

struct MockConfig {
  std::string mode = "momentum";  // "momentum" | "scripted"
  double noise = 0.0;
  double strong_threshold = 0.10;
  std::vector<std::string> script;  // scripted replies, in call order
};

struct GatewayConfig {
  std::string backend = "mock";  // "mock" | "http"
  std::string base_url = "https://api.openai.com/v1";
  std::string path = "/chat/completions";
  std::string model_id = "gpt-4-32k";
  double temperature = 0.0;
  int max_output_tokens = 1024;
  int max_retries = 5;
  int concurrency = 4;
  int timeout_seconds = 120;
  std::size_t context_token_budget = 24000;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string auth_style = "bearer";
  MockConfig mock;
};

// Paths are resolved against the directory of the config file.
struct ExperimentConfig {
  std::filesystem::path universe;
  std::filesystem::path prices;
  std::optional<std::filesystem::path> news;
  std::optional<std::filesystem::path> analyst_ratings;
  std::optional<std::filesystem::path> fundamentals;
  std::optional<std::filesystem::path> metric_definitions;
  std::optional<std::filesystem::path> rating_synonyms;
  std::optional<std::filesystem::path> prompt_templates;
  MethodKind method = MethodKind::kVanilla;
  YearMonth start_month;
  YearMonth end_month;
  std::vector<int> horizons{kDefaultHorizons.begin(), kDefaultHorizons.end()};
  bool few_shot = false;
  // One extra attempt after a date mismatch or an unparsable answer.
  bool retry_once = true;
  GatewayConfig gateway;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig from_json(const nlohmann::json& json, const std::filesystem::path& base_dir);
  nlohmann::ordered_json to_json() const;

  // start <= end, horizons a non-empty subset of {1, 3, 6, 12, 18}, known
  // backend. Throws Error(kInvalidArgument) / Error(kEmptyDateRange).
  void validate() const;
  // Digest of everything except output_dir.
  std::string digest() const;
};

// Inputs shared by every stage of a run.
struct ExperimentData {
  Universe universe;
  PriceStore prices;
  std::vector<Article> articles;
  std::vector<FilingRow> filings;
  std::vector<RawRatingRow> analyst_rows;
  RatingVocabulary vocabulary;
  MetricCatalog metrics = MetricCatalog::defaults();
  TemplateSet templates = TemplateSet::defaults();
};

// Throws Error(kIo) / Error(kParse) when a referenced file is unreadable.
ExperimentData load_experiment_data(const ExperimentConfig& config);

// Trading days of the market index, or the union of all series when the
// universe has no index series.
class TradingCalendar {
 public:
  TradingCalendar() = default;
  explicit TradingCalendar(std::vector<Date> days);
  static TradingCalendar from_prices(const Universe& universe, const PriceStore& prices);

  // First trading day on or after the first of the month (within a week);
  // the first weekday of the month when the calendar has no such day.
  Date first_trading_day(YearMonth month) const;

 private:
  std::vector<Date> days_;
};

struct PlannedCell {
  std::string company;
  Date rating_date;
};

struct ExperimentPlan {
  std::vector<YearMonth> months;
  std::vector<Date> rating_dates;  // one per month
  std::vector<PlannedCell> cells;  // month-major, then universe order
  std::size_t expected_ratings = 0;  // companies * months * horizons
};

// companies * months * horizons
constexpr std::size_t planned_rating_count(std::size_t companies, std::size_t months, std::size_t horizons) {
  return companies * months * horizons;
}

// Cartesian product of tickers and months in [start, end]. Throws
// Error(kEmptyUniverse) / Error(kEmptyDateRange).
ExperimentPlan plan_grid(const std::vector<std::string>& tickers, YearMonth start, YearMonth end,
                         std::size_t horizon_count, const TradingCalendar& calendar = {});
ExperimentPlan plan_experiment(const ExperimentConfig& config, const ExperimentData& data);

std::shared_ptr<ChatBackend> make_backend(const GatewayConfig& config, std::uint64_t seed);
GatewaySettings make_gateway_settings(const GatewayConfig& config);

// ---------------------------------------------------------------------------
// News summaries and sentiment, cached under <output_dir>/news/.

class NewsPipeline {
 public:
  NewsPipeline(const ExperimentConfig& config, const ExperimentData& data, Gateway& gateway);

  // Company and sector bundles for the month before each rating date.
  std::vector<std::pair<NewsScope, YearMonth>> required_keys(const ExperimentPlan& plan) const;

  NewsBundle bundle(const NewsScope& scope, YearMonth month) const;

  struct Stats {
    std::size_t computed = 0;
    std::size_t cached = 0;
    std::size_t empty = 0;
    std::map<std::string, std::size_t> failures;  // error kind -> count
  };

  // Fills the summary cache for every key, in key order.
  Stats summarize_all(const std::vector<std::pair<NewsScope, YearMonth>>& keys);
  // Fills the sentiment cache; summarizes first where needed.
  Stats score_all(const std::vector<std::pair<NewsScope, YearMonth>>& keys);

  // Cached or freshly computed. An empty bundle yields a fixed no-news
  // summary and a neutral score without a model call.
  Summary summary(const NewsScope& scope, YearMonth month);
  SentimentScore sentiment(const NewsScope& scope, YearMonth month);

  // Latest publication date among the bundle's articles.
  std::optional<Date> latest_article_date(const NewsScope& scope, YearMonth month) const;

 private:
  std::string subject_name(const NewsScope& scope) const;

  const ExperimentConfig& config_;
  const ExperimentData& data_;
  Gateway& gateway_;
  SummaryStore summaries_;
  SentimentStore sentiments_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Prediction store

inline constexpr int kPredictionSchemaVersion = 1;

enum class RecordStatus { kOk, kDateMismatch, kMalformed };
std::string_view to_string(RecordStatus status);
RecordStatus parse_record_status(std::string_view text);

struct StoredPrediction {
  int schema_version = kPredictionSchemaVersion;
  std::string key;  // digest(config without output_dir, company, rating date)
  std::string config_digest;
  std::string method;
  RecordStatus status = RecordStatus::kOk;
  std::string company;
  Date rating_date;
  Date max_input_date;  // latest date of any data placed in the prompt
  std::string prompt_digest;
  int attempts = 1;
  std::optional<PredictionRecord> prediction;  // empty when malformed
  std::optional<SentimentPair> sentiment;
  std::string error;
};

std::string cell_key(const std::string& config_digest, std::string_view company, Date rating_date);

nlohmann::ordered_json to_json(const StoredPrediction& record);
StoredPrediction stored_prediction_from_json(const nlohmann::json& json);

// JSONL, one record per line, appended in plan order.
std::vector<StoredPrediction> load_prediction_store(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Runs

struct CellFailure {
  std::string company;
  Date rating_date;
  ErrorKind kind = ErrorKind::kInvalidArgument;
  std::string message;
};

struct RunManifest {
  std::string config_digest;
  std::string method;
  std::size_t planned_cells = 0;
  std::size_t expected_ratings = 0;
  std::size_t records = 0;  // store records for this config
  std::size_t new_records = 0;
  std::size_t resumed = 0;  // cells skipped because already stored
  std::size_t ok = 0;
  std::size_t date_mismatch = 0;
  std::size_t malformed = 0;
  std::vector<CellFailure> failures;
  std::uint64_t gateway_calls = 0;
  std::size_t temporal_violations = 0;  // records with max_input_date >= rating_date

  bool partial() const { return !failures.empty() || date_mismatch > 0 || malformed > 0; }
};

nlohmann::ordered_json to_json(const RunManifest& manifest);

struct RunOptions {
  // Replaces the backend named in the config (tests, custom clients).
  std::shared_ptr<ChatBackend> backend;
};

struct OutputLayout {
  std::filesystem::path root;
  std::filesystem::path predictions() const { return root / "predictions.jsonl"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path transcript() const { return root / "transcripts.jsonl"; }
  std::filesystem::path summaries() const { return root / "news" / "summaries.jsonl"; }
  std::filesystem::path sentiment() const { return root / "news" / "sentiment.jsonl"; }
  std::filesystem::path evaluation() const { return root / "evaluation"; }
  std::filesystem::path ingest() const { return root / "ingest"; }
};

// Assembles inputs for one cell with nothing dated on or after the rating
// date: snapshot as of the previous day, the previous month's news and
// fundamentals filed before the rating date. Returns the inputs and the
// latest data date used.
std::pair<PromptInputs, Date> assemble_inputs(const ExperimentConfig& config, const ExperimentData& data,
                                              NewsPipeline* news, const std::string& company, Date rating_date);

RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
RunManifest run_experiment(const ExperimentConfig& config, const ExperimentData& data,
                           const RunOptions& options = {});

struct NewsRunSummary {
  NewsPipeline::Stats summaries;
  NewsPipeline::Stats sentiment;
};

// The `summarize` / `score-sentiment` stages on their own.
NewsRunSummary run_news_stage(const ExperimentConfig& config, const ExperimentData& data, bool score,
                              const RunOptions& options = {});

// Scores the stored predictions of this config (and analyst ratings when
// configured) against quantile labels.
EvaluationReport evaluate_experiment(const ExperimentConfig& config, const ExperimentData& data);

struct IngestSummary {
  std::size_t companies = 0;
  std::size_t price_series = 0;
  std::size_t price_observations = 0;
  std::size_t articles = 0;
  std::size_t filing_rows = 0;
  std::optional<RatingIngestResult> ratings;
};

// Validates inputs and writes ingest/summary.json (+ quarantined ratings).
IngestSummary run_ingest(const ExperimentConfig& config, const ExperimentData& data);

}  // namespace equirate

#include "equirate/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "equirate/csv.hpp"
#include "equirate/digest.hpp"
#include "equirate/error.hpp"
#include "equirate/labeler.hpp"
#include "equirate/report.hpp"

namespace equirate {
namespace {

constexpr std::array<int, 5> kSupportedHorizons = {1, 3, 6, 12, 18};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::optional<std::filesystem::path> optional_path(const nlohmann::json& j, const char* key,
                                                   const std::filesystem::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  const auto s = j[key].get<std::string>();
  if (s.empty()) return std::nullopt;
  return resolve(base, s);
}

std::string file_digest(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    DigestBuilder d;
    for (const auto& f : files) d.add(f.filename().string()).add(file_digest(f));
    return d.hex();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

CellFailure failure_from(const std::string& company, Date date, const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return {company, date, err->kind(), err->what()};
  return {company, date, ErrorKind::kInvalidArgument, e.what()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot open config '{}'", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j, std::filesystem::absolute(path).parent_path());
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  ExperimentConfig c;
  try {
    c.universe = resolve(base, j.at("universe").get<std::string>());
    c.prices = resolve(base, j.at("prices").get<std::string>());
    c.news = optional_path(j, "news", base);
    c.analyst_ratings = optional_path(j, "analyst_ratings", base);
    c.fundamentals = optional_path(j, "fundamentals", base);
    c.metric_definitions = optional_path(j, "metric_definitions", base);
    c.rating_synonyms = optional_path(j, "rating_synonyms", base);
    c.prompt_templates = optional_path(j, "prompt_templates", base);
    c.method = parse_method(j.value("method", std::string("vanilla")));
    c.start_month = parse_year_month(j.at("start_month").get<std::string>());
    c.end_month = parse_year_month(j.at("end_month").get<std::string>());
    if (j.contains("horizons")) c.horizons = j["horizons"].get<std::vector<int>>();
    c.few_shot = j.value("few_shot", false);
    c.retry_once = j.value("retry_once", true);
    c.output_dir = resolve(base, j.value("output_dir", std::string("out")));
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("gateway")) {
      const auto& g = j["gateway"];
      auto& o = c.gateway;
      o.backend = g.value("backend", o.backend);
      o.base_url = g.value("base_url", o.base_url);
      o.path = g.value("path", o.path);
      o.model_id = g.value("model_id", o.model_id);
      o.temperature = g.value("temperature", o.temperature);
      o.max_output_tokens = g.value("max_output_tokens", o.max_output_tokens);
      o.max_retries = g.value("max_retries", o.max_retries);
      o.concurrency = g.value("concurrency", o.concurrency);
      o.timeout_seconds = g.value("timeout_seconds", o.timeout_seconds);
      o.context_token_budget = g.value("context_token_budget", o.context_token_budget);
      o.api_key_env = g.value("api_key_env", o.api_key_env);
      o.auth_style = g.value("auth_style", o.auth_style);
      if (g.contains("mock")) {
        const auto& m = g["mock"];
        o.mock.mode = m.value("mode", o.mock.mode);
        o.mock.noise = m.value("noise", o.mock.noise);
        o.mock.strong_threshold = m.value("strong_threshold", o.mock.strong_threshold);
        if (m.contains("script")) o.mock.script = m["script"].get<std::vector<std::string>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, fmt::format("config: {}", e.what()));
  }
  return c;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  const auto opt = [](const std::optional<std::filesystem::path>& p) {
    return p ? nlohmann::ordered_json(p->string()) : nlohmann::ordered_json(nullptr);
  };
  const auto& g = gateway;
  return {{"universe", universe.string()},
          {"prices", prices.string()},
          {"news", opt(news)},
          {"analyst_ratings", opt(analyst_ratings)},
          {"fundamentals", opt(fundamentals)},
          {"metric_definitions", opt(metric_definitions)},
          {"rating_synonyms", opt(rating_synonyms)},
          {"prompt_templates", opt(prompt_templates)},
          {"method", to_string(method)},
          {"start_month", format_year_month(start_month)},
          {"end_month", format_year_month(end_month)},
          {"horizons", horizons},
          {"few_shot", few_shot},
          {"retry_once", retry_once},
          {"gateway",
           {{"backend", g.backend},
            {"base_url", g.base_url},
            {"path", g.path},
            {"model_id", g.model_id},
            {"temperature", g.temperature},
            {"max_output_tokens", g.max_output_tokens},
            {"max_retries", g.max_retries},
            {"concurrency", g.concurrency},
            {"timeout_seconds", g.timeout_seconds},
            {"context_token_budget", g.context_token_budget},
            {"api_key_env", g.api_key_env},
            {"auth_style", g.auth_style},
            {"mock",
             {{"mode", g.mock.mode},
              {"noise", g.mock.noise},
              {"strong_threshold", g.mock.strong_threshold},
              {"script", g.mock.script}}}}},
          {"output_dir", output_dir.string()},
          {"seed", seed}};
}

void ExperimentConfig::validate() const {
  if (!start_month.ok() || !end_month.ok() || end_month < start_month) {
    throw Error(ErrorKind::kEmptyDateRange,
                fmt::format("start month {} is after end month {}", format_year_month(start_month),
                            format_year_month(end_month)));
  }
  if (horizons.empty()) throw Error(ErrorKind::kInvalidArgument, "no horizons configured");
  std::set<int> seen;
  for (int h : horizons) {
    if (std::find(kSupportedHorizons.begin(), kSupportedHorizons.end(), h) == kSupportedHorizons.end()) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("unsupported horizon {} months", h));
    }
    if (!seen.insert(h).second) throw Error(ErrorKind::kInvalidArgument, fmt::format("horizon {} repeated", h));
  }
  if (gateway.backend != "mock" && gateway.backend != "http") {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown backend '{}'", gateway.backend));
  }
  if (gateway.backend == "mock" && gateway.mock.mode != "momentum" && gateway.mock.mode != "scripted") {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown mock mode '{}'", gateway.mock.mode));
  }
  if (gateway.concurrency < 1) throw Error(ErrorKind::kInvalidArgument, "concurrency must be at least 1");
}

std::string ExperimentConfig::digest() const {
  // Inputs are bound by content so moving the data or the output directory
  // keeps the resume keys.
  auto j = to_json();
  j.erase("output_dir");
  for (const char* key : {"universe", "prices", "news", "analyst_ratings", "fundamentals", "metric_definitions",
                          "rating_synonyms", "prompt_templates"}) {
    if (!j[key].is_null()) j[key] = file_digest(j[key].get<std::string>());
  }
  // Concurrency and timeouts do not change answers.
  j["gateway"].erase("concurrency");
  j["gateway"].erase("timeout_seconds");
  j["gateway"].erase("max_retries");
  return sha256_hex(j.dump());
}

ExperimentData load_experiment_data(const ExperimentConfig& c) {
  ExperimentData d;
  d.universe = load_universe(c.universe);
  d.universe.validate();
  d.prices = load_prices_csv(c.prices);
  if (c.news) d.articles = load_articles_jsonl(*c.news);
  if (c.fundamentals) d.filings = load_filing_rows(*c.fundamentals);
  if (c.analyst_ratings) d.analyst_rows = load_rating_rows(*c.analyst_ratings);
  if (c.rating_synonyms) d.vocabulary = RatingVocabulary::with_overrides(*c.rating_synonyms);
  if (c.metric_definitions) d.metrics = MetricCatalog::load(*c.metric_definitions);
  if (c.prompt_templates) d.templates = TemplateSet::with_overrides(*c.prompt_templates);
  return d;
}

// ---------------------------------------------------------------------------
// Planning

TradingCalendar::TradingCalendar(std::vector<Date> days) : days_(std::move(days)) {
  std::sort(days_.begin(), days_.end());
  days_.erase(std::unique(days_.begin(), days_.end()), days_.end());
}

TradingCalendar TradingCalendar::from_prices(const Universe& universe, const PriceStore& prices) {
  std::vector<Date> days;
  if (!universe.market_index.empty()) {
    if (auto it = prices.find(universe.market_index); it != prices.end()) {
      for (const auto& o : it->second.observations()) days.push_back(o.date);
      return TradingCalendar(std::move(days));
    }
  }
  for (const auto& [_, series] : prices) {
    for (const auto& o : series.observations()) days.push_back(o.date);
  }
  return TradingCalendar(std::move(days));
}

Date TradingCalendar::first_trading_day(YearMonth month) const {
  const Date first = first_of_month(month);
  auto it = std::lower_bound(days_.begin(), days_.end(), first);
  if (it != days_.end() && days_between(first, *it) <= kDefaultMaxRollDays) return *it;
  std::chrono::sys_days d{first};
  while (std::chrono::weekday{d} == std::chrono::Saturday || std::chrono::weekday{d} == std::chrono::Sunday) {
    d += std::chrono::days{1};
  }
  return Date{d};
}

ExperimentPlan plan_grid(const std::vector<std::string>& tickers, YearMonth start, YearMonth end,
                         std::size_t horizon_count, const TradingCalendar& calendar) {
  if (tickers.empty()) throw Error(ErrorKind::kEmptyUniverse, "universe has no companies");
  if (!start.ok() || !end.ok() || end < start) {
    throw Error(ErrorKind::kEmptyDateRange,
                fmt::format("no months between {} and {}", format_year_month(start), format_year_month(end)));
  }
  ExperimentPlan plan;
  for (auto m = start; m <= end; m = add_months(m, 1)) {
    plan.months.push_back(m);
    plan.rating_dates.push_back(calendar.first_trading_day(m));
  }
  plan.cells.reserve(tickers.size() * plan.months.size());
  for (const auto& date : plan.rating_dates) {
    for (const auto& t : tickers) plan.cells.push_back({t, date});
  }
  plan.expected_ratings = planned_rating_count(tickers.size(), plan.months.size(), horizon_count);
  return plan;
}

ExperimentPlan plan_experiment(const ExperimentConfig& config, const ExperimentData& data) {
  config.validate();
  return plan_grid(data.universe.tickers(), config.start_month, config.end_month, config.horizons.size(),
                   TradingCalendar::from_prices(data.universe, data.prices));
}

std::shared_ptr<ChatBackend> make_backend(const GatewayConfig& g, std::uint64_t seed) {
  if (g.backend == "mock") {
    if (g.mock.mode == "scripted") return std::make_shared<ScriptedBackend>(g.mock.script);
    return std::make_shared<MomentumMockBackend>(seed, MomentumMockOptions{g.mock.strong_threshold, g.mock.noise});
  }
  if (g.backend != "http") throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown backend '{}'", g.backend));
  HttpBackendConfig h;
  h.base_url = g.base_url;
  h.path = g.path;
  h.auth_style = g.auth_style;
  h.timeout = std::chrono::seconds(g.timeout_seconds);
  h.retry.max_retries = g.max_retries;
  if (!g.api_key_env.empty()) {
    const char* key = std::getenv(g.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorKind::kBackendUnavailable, fmt::format("environment variable {} is not set", g.api_key_env));
    }
    h.api_key = key;
  }
  return std::make_shared<HttpChatBackend>(std::move(h));
}

GatewaySettings make_gateway_settings(const GatewayConfig& g) {
  GatewaySettings s;
  s.model_id = g.model_id;
  s.temperature = g.temperature;
  s.max_output_tokens = g.max_output_tokens;
  s.concurrency = g.concurrency;
  s.context_token_budget = g.context_token_budget;
  return s;
}

// ---------------------------------------------------------------------------
// News

NewsPipeline::NewsPipeline(const ExperimentConfig& config, const ExperimentData& data, Gateway& gateway)
    : config_(config),
      data_(data),
      gateway_(gateway),
      summaries_(OutputLayout{config.output_dir}.summaries()),
      sentiments_(OutputLayout{config.output_dir}.sentiment()) {}

std::vector<std::pair<NewsScope, YearMonth>> NewsPipeline::required_keys(const ExperimentPlan& plan) const {
  std::set<std::pair<std::string, YearMonth>> seen;
  std::vector<std::pair<NewsScope, YearMonth>> keys;
  const auto add = [&](NewsScope scope, YearMonth month) {
    if (seen.insert({scope.key(), month}).second) keys.emplace_back(std::move(scope), month);
  };
  for (const auto& cell : plan.cells) {
    const auto month = add_months(month_of(cell.rating_date), -1);
    const auto* entry = data_.universe.find(cell.company);
    if (entry == nullptr) continue;
    add(NewsScope::company(entry->ticker), month);
    add(NewsScope::sector(entry->sector), month);
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second, a.first) < std::tie(b.second, b.first);
  });
  return keys;
}

NewsBundle NewsPipeline::bundle(const NewsScope& scope, YearMonth month) const {
  const LexicalMatcher matcher;
  if (scope.kind == ScopeKind::kCompany) {
    const auto* e = data_.universe.find(scope.id);
    if (e == nullptr) throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown company '{}'", scope.id));
    const CompanyIdentity id{e->ticker, e->name, e->aliases};
    return aggregate_monthly(filter_relevant_articles(data_.articles, id, matcher), scope, month);
  }
  std::vector<CompanyIdentity> members;
  for (const auto* e : data_.universe.members_of(scope.id)) members.push_back({e->ticker, e->name, e->aliases});
  return aggregate_sector(data_.articles, scope.id, members, month, matcher);
}

std::string NewsPipeline::subject_name(const NewsScope& scope) const {
  if (scope.kind == ScopeKind::kCompany) {
    if (const auto* e = data_.universe.find(scope.id)) return e->name;
  }
  return scope.id;
}

std::optional<Date> NewsPipeline::latest_article_date(const NewsScope& scope, YearMonth month) const {
  const auto b = bundle(scope, month);
  if (b.articles.empty()) return std::nullopt;
  return b.articles.back().published;
}

Summary NewsPipeline::summary(const NewsScope& scope, YearMonth month) {
  const auto b = bundle(scope, month);
  const auto digest = b.digest();
  if (b.empty()) {
    return Summary{scope, month, fmt::format("No relevant news was published in {}.", month_name_year(month)), digest};
  }
  {
    std::lock_guard lock(mutex_);
    if (auto cached = summaries_.find(scope, month, digest)) return *cached;
  }
  SummarizeOptions options;
  options.subject_name = subject_name(scope);
  auto s = equirate::summarize(b, gateway_, options, data_.templates);
  std::lock_guard lock(mutex_);
  summaries_.put(s);
  return s;
}

SentimentScore NewsPipeline::sentiment(const NewsScope& scope, YearMonth month) {
  const auto b = bundle(scope, month);
  const auto digest = b.digest();
  if (b.empty()) return SentimentScore{scope, month, 0, digest};
  {
    std::lock_guard lock(mutex_);
    if (auto cached = sentiments_.find(scope, month, digest)) return *cached;
  }
  const auto s = summary(scope, month);
  auto score = equirate::score_sentiment(s, gateway_, subject_name(scope), data_.templates);
  std::lock_guard lock(mutex_);
  sentiments_.put(score);
  return score;
}

namespace {

NewsPipeline::Stats run_news_keys(NewsPipeline& pipeline, const std::vector<std::pair<NewsScope, YearMonth>>& keys,
                                  int concurrency, bool score, SummaryStore* summaries_probe,
                                  SentimentStore* sentiment_probe) {
  NewsPipeline::Stats stats;
  enum class Outcome { kComputed, kCached, kEmpty, kFailed };
  std::vector<Outcome> outcome(keys.size(), Outcome::kFailed);
  std::vector<std::string> error_kind(keys.size());
  std::vector<std::optional<Summary>> summaries(keys.size());
  std::vector<std::optional<SentimentScore>> scores(keys.size());

  // Compute concurrently without touching the caches, then store in key
  // order so the cache files do not depend on scheduling.
  parallel_for(keys.size(), concurrency, [&](std::size_t i) {
    const auto& [scope, month] = keys[i];
    try {
      const auto b = pipeline.bundle(scope, month);
      if (b.empty()) {
        outcome[i] = Outcome::kEmpty;
        return;
      }
      const auto digest = b.digest();
      const bool have_summary = summaries_probe->find(scope, month, digest).has_value();
      const bool have_score = sentiment_probe->find(scope, month, digest).has_value();
      if (have_summary && (!score || have_score)) {
        outcome[i] = Outcome::kCached;
        return;
      }
      outcome[i] = Outcome::kComputed;
      if (!score) {
        summaries[i] = pipeline.summary(scope, month);
      } else {
        scores[i] = pipeline.sentiment(scope, month);
      }
    } catch (const Error& e) {
      outcome[i] = Outcome::kFailed;
      error_kind[i] = std::string(to_string(e.kind()));
    }
  });
  for (std::size_t i = 0; i < keys.size(); ++i) {
    switch (outcome[i]) {
      case Outcome::kComputed: ++stats.computed; break;
      case Outcome::kCached: ++stats.cached; break;
      case Outcome::kEmpty: ++stats.empty; break;
      case Outcome::kFailed: ++stats.failures[error_kind[i]]; break;
    }
  }
  return stats;
}

}  // namespace

NewsPipeline::Stats NewsPipeline::summarize_all(const std::vector<std::pair<NewsScope, YearMonth>>& keys) {
  return run_news_keys(*this, keys, 1, false, &summaries_, &sentiments_);
}

NewsPipeline::Stats NewsPipeline::score_all(const std::vector<std::pair<NewsScope, YearMonth>>& keys) {
  summarize_all(keys);
  return run_news_keys(*this, keys, 1, true, &summaries_, &sentiments_);
}

// ---------------------------------------------------------------------------
// Store

std::string_view to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::kOk: return "ok";
    case RecordStatus::kDateMismatch: return "date_mismatch";
    case RecordStatus::kMalformed: return "malformed";
  }
  return "ok";
}

RecordStatus parse_record_status(std::string_view text) {
  if (text == "ok") return RecordStatus::kOk;
  if (text == "date_mismatch") return RecordStatus::kDateMismatch;
  if (text == "malformed") return RecordStatus::kMalformed;
  throw Error(ErrorKind::kParse, fmt::format("unknown record status '{}'", text));
}

std::string cell_key(const std::string& config_digest, std::string_view company, Date rating_date) {
  return DigestBuilder{}.add(config_digest).add(company).add(format_date(rating_date)).hex();
}

nlohmann::ordered_json to_json(const StoredPrediction& r) {
  nlohmann::ordered_json j = {{"schema_version", r.schema_version},
                              {"key", r.key},
                              {"config_digest", r.config_digest},
                              {"method", r.method},
                              {"status", to_string(r.status)},
                              {"company", r.company},
                              {"rating_date", format_date(r.rating_date)},
                              {"max_input_date", format_date(r.max_input_date)},
                              {"prompt_digest", r.prompt_digest},
                              {"attempts", r.attempts}};
  if (r.prediction) {
    nlohmann::ordered_json ratings = nlohmann::ordered_json::array();
    for (const auto& e : r.prediction->entries) {
      ratings.push_back({{"horizon_months", e.horizon_months},
                         {"target_date", format_date(e.target_date)},
                         {"rating", e.rating.value()},
                         {"price_target", e.price_target ? nlohmann::ordered_json(*e.price_target)
                                                         : nlohmann::ordered_json(nullptr)}});
    }
    j["ratings"] = std::move(ratings);
    j["explanation"] = r.prediction->explanation;
    j["news_sentiment"] = r.prediction->news_sentiment ? nlohmann::ordered_json(to_string(*r.prediction->news_sentiment))
                                                       : nlohmann::ordered_json(nullptr);
    j["from_free_text"] = r.prediction->from_free_text;
    j["response_digest"] = r.prediction->response_digest;
  } else {
    j["ratings"] = nullptr;
  }
  if (r.sentiment) {
    j["sentiment"] = {{"month", format_year_month(r.sentiment->month)},
                      {"company_score", r.sentiment->company_score},
                      {"sector_score", r.sentiment->sector_score}};
  } else {
    j["sentiment"] = nullptr;
  }
  j["error"] = r.error;
  return j;
}

StoredPrediction stored_prediction_from_json(const nlohmann::json& j) {
  StoredPrediction r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kPredictionSchemaVersion) {
      throw Error(ErrorKind::kParse, fmt::format("unsupported prediction schema version {}", r.schema_version));
    }
    r.key = j.at("key").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.status = parse_record_status(j.at("status").get<std::string>());
    r.company = j.at("company").get<std::string>();
    r.rating_date = parse_date(j.at("rating_date").get<std::string>());
    r.max_input_date = parse_date(j.at("max_input_date").get<std::string>());
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.attempts = j.at("attempts").get<int>();
    r.error = j.value("error", "");
    if (!j.at("ratings").is_null()) {
      PredictionRecord p;
      p.company = r.company;
      p.rating_date = r.rating_date;
      for (const auto& e : j["ratings"]) {
        HorizonPrediction h;
        h.horizon_months = e.at("horizon_months").get<int>();
        h.target_date = parse_date(e.at("target_date").get<std::string>());
        h.rating = OrdinalRating::from_int(e.at("rating").get<int>());
        if (!e.at("price_target").is_null()) h.price_target = e["price_target"].get<double>();
        p.entries.push_back(h);
      }
      p.explanation = j.value("explanation", "");
      if (j.contains("news_sentiment") && j["news_sentiment"].is_string()) {
        p.news_sentiment = parse_news_sentiment(j["news_sentiment"].get<std::string>());
      }
      p.from_free_text = j.value("from_free_text", false);
      p.response_digest = j.value("response_digest", "");
      r.prediction = std::move(p);
    }
    if (j.contains("sentiment") && !j["sentiment"].is_null()) {
      const auto& s = j["sentiment"];
      r.sentiment = SentimentPair{parse_year_month(s.at("month").get<std::string>()), s.at("company_score").get<int>(),
                                  s.at("sector_score").get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, fmt::format("prediction record: {}", e.what()));
  }
  return r;
}

std::vector<StoredPrediction> load_prediction_store(const std::filesystem::path& path) {
  std::vector<StoredPrediction> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(stored_prediction_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  std::map<std::string, std::size_t> by_kind;
  for (const auto& f : m.failures) {
    failures.push_back({{"company", f.company},
                        {"rating_date", format_date(f.rating_date)},
                        {"kind", to_string(f.kind)},
                        {"message", f.message}});
    ++by_kind[std::string(to_string(f.kind))];
  }
  return {{"schema_version", 1},
          {"config_digest", m.config_digest},
          {"method", m.method},
          {"planned_cells", m.planned_cells},
          {"expected_ratings", m.expected_ratings},
          {"records", m.records},
          {"new_records", m.new_records},
          {"resumed", m.resumed},
          {"ok", m.ok},
          {"excluded", {{"date_mismatch", m.date_mismatch}, {"malformed", m.malformed}}},
          {"failure_counts", by_kind},
          {"failures", std::move(failures)},
          {"gateway_calls", m.gateway_calls},
          {"temporal_violations", m.temporal_violations}};
}

// ---------------------------------------------------------------------------
// Cells

std::pair<PromptInputs, Date> assemble_inputs(const ExperimentConfig& config, const ExperimentData& data,
                                              NewsPipeline* news, const std::string& company, Date rating_date) {
  const auto* entry = data.universe.find(company);
  if (entry == nullptr) throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown company '{}'", company));
  const auto series = data.prices.find(company);
  if (series == data.prices.end()) {
    throw Error(ErrorKind::kInsufficientHistory, fmt::format("no price series for {}", company));
  }

  PromptInputs in;
  in.ticker = entry->ticker;
  in.company_name = entry->name;
  in.sector = entry->sector;
  in.rating_date = rating_date;

  const Date as_of = add_days(rating_date, -1);
  const auto market = market_benchmark(data.universe, data.prices);
  const auto sector = sector_benchmark(data.universe, data.prices, entry->sector);
  in.snapshot = build_technical_snapshot(series->second, market, sector, as_of);
  Date max_date = in.snapshot->price_date;

  const auto news_month = add_months(month_of(rating_date), -1);
  const auto company_scope = NewsScope::company(entry->ticker);
  const auto sector_scope = NewsScope::sector(entry->sector);
  const auto note_news = [&] {
    for (const auto& scope : {company_scope, sector_scope}) {
      if (auto d = news->latest_article_date(scope, news_month)) max_date = std::max(max_date, *d);
    }
  };
  if (uses_news(config.method)) {
    if (news == nullptr) throw Error(ErrorKind::kMissingInput, "news pipeline not available");
    in.news = NewsSummaries{news_month, news->summary(company_scope, news_month).text,
                            news->summary(sector_scope, news_month).text};
    note_news();
  }
  if (uses_sentiment(config.method)) {
    if (news == nullptr) throw Error(ErrorKind::kMissingInput, "news pipeline not available");
    in.sentiment = SentimentPair{news_month, news->sentiment(company_scope, news_month).score,
                                 news->sentiment(sector_scope, news_month).score};
    note_news();
  }
  if (uses_fundamentals(config.method)) {
    in.fundamentals = ingest_fundamentals(data.filings, entry->ticker, rating_date, data.metrics);
    max_date = std::max(max_date, in.fundamentals->latest_filing_date());
    for (const auto& q : in.fundamentals->quarters) max_date = std::max(max_date, q.period_end);
  }
  if (config.few_shot) in.few_shot_example = data.templates.get("few_shot_example");
  return {std::move(in), max_date};
}

namespace {

struct CellOutcome {
  std::optional<StoredPrediction> record;
  std::optional<CellFailure> failure;
};

CellOutcome run_cell(const ExperimentConfig& config, const ExperimentData& data, NewsPipeline* news,
                     Gateway& gateway, const PromptOptions& prompt_options, const std::string& config_digest,
                     const PlannedCell& cell) {
  CellOutcome out;
  try {
    auto [inputs, max_date] = assemble_inputs(config, data, news, cell.company, cell.rating_date);
    const auto bundle = build_user_prompt(config.method, inputs, prompt_options);

    StoredPrediction rec;
    rec.key = cell_key(config_digest, cell.company, cell.rating_date);
    rec.config_digest = config_digest;
    rec.method = std::string(to_string(config.method));
    rec.company = cell.company;
    rec.rating_date = cell.rating_date;
    rec.max_input_date = max_date;
    rec.prompt_digest = bundle.input_digest;
    rec.sentiment = inputs.sentiment;
    rec.attempts = 0;

    auto request = gateway.make_request(bundle.system_text, bundle.user_text);
    const int max_attempts = config.retry_once ? 2 : 1;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      const auto reply = gateway.complete(request);
      ++rec.attempts;
      std::string problem;
      try {
        auto parsed = parse_prediction(reply, cell.company, cell.rating_date, bundle.expected_targets, data.vocabulary);
        const auto cove = verify_dates_cove(parsed, cell.rating_date);
        rec.prediction = std::move(parsed);
        if (cove.ok()) {
          rec.status = RecordStatus::kOk;
          rec.error.clear();
          break;
        }
        rec.status = RecordStatus::kDateMismatch;
        std::string horizons;
        for (int h : cove.mismatched_horizons) horizons += fmt::format("{}{}", horizons.empty() ? "" : ", ", h);
        rec.error = fmt::format("DateMismatch: target date wrong for horizon(s) {}", horizons);
        problem = fmt::format(
            "The target dates you gave for the {}-month horizon(s) are not the rating date plus the horizon. "
            "Recompute every target date from the rating date {} and answer again with the full fenced json block.",
            horizons, format_date(cell.rating_date));
      } catch (const MalformedResponse& e) {
        rec.status = RecordStatus::kMalformed;
        rec.prediction.reset();
        rec.error = e.what();
        problem = fmt::format("Your answer could not be read ({}). Answer again, ending with the fenced json block.",
                              e.what());
      }
      request.messages.push_back({ChatRole::kAssistant, reply});
      request.messages.push_back({ChatRole::kUser, problem});
    }
    out.record = std::move(rec);
  } catch (const std::exception& e) {
    out.failure = failure_from(cell.company, cell.rating_date, e);
  }
  return out;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto data = load_experiment_data(config);
  return run_experiment(config, data, options);
}

RunManifest run_experiment(const ExperimentConfig& config, const ExperimentData& data, const RunOptions& options) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  std::filesystem::create_directories(layout.root);

  const auto plan = plan_experiment(config, data);
  const auto digest = config.digest();

  auto backend = options.backend ? options.backend : make_backend(config.gateway, config.seed);
  Gateway gateway(backend, make_gateway_settings(config.gateway));
  gateway.set_transcript(layout.transcript());

  RunManifest manifest;
  manifest.config_digest = digest;
  manifest.method = std::string(to_string(config.method));
  manifest.planned_cells = plan.cells.size();
  manifest.expected_ratings = plan.expected_ratings;

  std::set<std::string> stored;
  for (const auto& r : load_prediction_store(layout.predictions())) {
    if (r.config_digest == digest) stored.insert(r.key);
  }
  std::vector<PlannedCell> pending;
  for (const auto& cell : plan.cells) {
    if (stored.contains(cell_key(digest, cell.company, cell.rating_date))) {
      ++manifest.resumed;
    } else {
      pending.push_back(cell);
    }
  }

  std::unique_ptr<NewsPipeline> news;
  if (uses_news(config.method) || uses_sentiment(config.method)) {
    news = std::make_unique<NewsPipeline>(config, data, gateway);
    ExperimentPlan pending_plan;
    pending_plan.cells = pending;
    const auto keys = news->required_keys(pending_plan);
    if (uses_sentiment(config.method)) {
      news->score_all(keys);
    } else {
      news->summarize_all(keys);
    }
  }

  PromptOptions prompt_options;
  prompt_options.horizons = config.horizons;
  prompt_options.metrics = data.metrics;
  prompt_options.templates = data.templates;

  std::vector<CellOutcome> outcomes(pending.size());
  parallel_for(pending.size(), config.gateway.concurrency, [&](std::size_t i) {
    outcomes[i] = run_cell(config, data, news.get(), gateway, prompt_options, digest, pending[i]);
  });

  {
    std::ofstream store(layout.predictions(), std::ios::app | std::ios::binary);
    if (!store) throw Error(ErrorKind::kIo, fmt::format("cannot append to '{}'", layout.predictions().string()));
    for (auto& o : outcomes) {
      if (o.record) {
        store << to_json(*o.record).dump() << '\n';
        ++manifest.new_records;
      }
      if (o.failure) manifest.failures.push_back(std::move(*o.failure));
    }
  }

  for (const auto& r : load_prediction_store(layout.predictions())) {
    if (r.config_digest != digest) continue;
    ++manifest.records;
    switch (r.status) {
      case RecordStatus::kOk: ++manifest.ok; break;
      case RecordStatus::kDateMismatch: ++manifest.date_mismatch; break;
      case RecordStatus::kMalformed: ++manifest.malformed; break;
    }
    if (r.max_input_date >= r.rating_date) ++manifest.temporal_violations;
  }
  manifest.gateway_calls = gateway.calls();
  write_text(layout.manifest(), to_json(manifest).dump(2) + "\n");
  return manifest;
}

NewsRunSummary run_news_stage(const ExperimentConfig& config, const ExperimentData& data, bool score,
                              const RunOptions& options) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  std::filesystem::create_directories(layout.root);
  auto backend = options.backend ? options.backend : make_backend(config.gateway, config.seed);
  Gateway gateway(backend, make_gateway_settings(config.gateway));
  gateway.set_transcript(layout.transcript());
  NewsPipeline news(config, data, gateway);
  const auto keys = news.required_keys(plan_experiment(config, data));
  NewsRunSummary out;
  out.summaries = news.summarize_all(keys);
  if (score) out.sentiment = news.score_all(keys);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

EvaluationReport evaluate_experiment(const ExperimentConfig& config, const ExperimentData& data) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  const auto digest = config.digest();
  const std::string method(to_string(config.method));
  std::map<std::string, std::size_t> exclusions;

  std::vector<MethodCells> methods;
  MethodCells llm{method, {}};
  std::vector<SentimentObservation> sentiment;
  for (const auto& r : load_prediction_store(layout.predictions())) {
    if (r.config_digest != digest) continue;
    if (r.status != RecordStatus::kOk) {
      ++exclusions[std::string(to_string(r.status))];
      continue;
    }
    for (const auto& e : r.prediction->entries) {
      if (std::find(config.horizons.begin(), config.horizons.end(), e.horizon_months) == config.horizons.end()) continue;
      llm.cells.push_back({r.company, r.rating_date, e.horizon_months, e.rating});
    }
    if (r.sentiment) {
      sentiment.push_back({r.company, r.rating_date, r.sentiment->company_score, r.sentiment->sector_score});
    }
  }
  methods.push_back(std::move(llm));

  if (!data.analyst_rows.empty()) {
    const auto ingest = ingest_analyst_ratings(data.analyst_rows, data.vocabulary);
    exclusions["analyst_quarantined"] = ingest.quarantined.size();
    exclusions["analyst_rejected"] = ingest.rejected.size();
    const Date from = first_of_month(config.start_month);
    const Date to = first_of_month(add_months(config.end_month, 1));
    MethodCells analyst{"analyst", {}};
    for (const auto& ev : ingest.events) {
      if (data.universe.find(ev.company) == nullptr || ev.date < from || ev.date >= to) continue;
      for (int h : config.horizons) analyst.cells.push_back({ev.company, ev.date, h, ev.rating});
    }
    methods.push_back(std::move(analyst));
  }

  std::set<std::pair<Date, int>> needed;
  for (const auto& m : methods) {
    for (const auto& c : m.cells) needed.insert({c.rating_date, c.horizon_months});
  }
  std::vector<QuantileLabel> labels;
  for (const auto& [date, h] : needed) {
    for (auto mode : {LabelMode::kAbsolute, LabelMode::kSectorRelative}) {
      try {
        auto set = label_universe(data.prices, data.universe, date, h, mode);
        labels.insert(labels.end(), set.labels.begin(), set.labels.end());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kTooFewCompanies) throw;
        ++exclusions[fmt::format("unlabeled_cells:{}", to_string(e.kind()))];
      }
    }
  }

  std::map<std::string, std::vector<SentimentObservation>> by_method;
  if (!sentiment.empty()) by_method[method] = std::move(sentiment);
  auto report = build_report(methods, labels, by_method);
  for (const auto& [k, v] : exclusions) report.exclusions[k] += v;
  return report;
}

IngestSummary run_ingest(const ExperimentConfig& config, const ExperimentData& data) {
  const OutputLayout layout{config.output_dir};
  IngestSummary s;
  s.companies = data.universe.entries.size();
  s.price_series = data.prices.size();
  for (const auto& [_, series] : data.prices) s.price_observations += series.observations().size();
  s.articles = data.articles.size();
  s.filing_rows = data.filings.size();

  nlohmann::ordered_json j = {{"companies", s.companies},
                              {"price_series", s.price_series},
                              {"price_observations", s.price_observations},
                              {"articles", s.articles},
                              {"filing_rows", s.filing_rows}};
  std::vector<std::string> missing;
  for (const auto& t : data.universe.tickers()) {
    if (!data.prices.contains(t)) missing.push_back(t);
  }
  j["companies_without_prices"] = missing;

  if (config.analyst_ratings) {
    s.ratings = ingest_analyst_ratings(data.analyst_rows, data.vocabulary);
    const auto& r = *s.ratings;
    nlohmann::ordered_json actions = nlohmann::ordered_json::object();
    for (const auto& [a, n] : r.summary.action_counts) actions[std::string(to_string(a))] = n;
    nlohmann::ordered_json firms = nlohmann::ordered_json::object();
    for (const auto& [f, n] : r.summary.firm_counts) firms[f] = n;
    j["analyst_ratings"] = {{"rows", data.analyst_rows.size()},
                            {"accepted", r.events.size()},
                            {"quarantined", r.quarantined.size()},
                            {"rejected", r.rejected.size()},
                            {"actions", actions},
                            {"firms", firms}};
    std::vector<RejectedRatingRow> all = r.quarantined;
    all.insert(all.end(), r.rejected.begin(), r.rejected.end());
    std::ostringstream csv_out;
    write_quarantine_csv(csv_out, all);
    write_text(layout.ingest() / "analyst_quarantine.csv", csv_out.str());
  }
  write_text(layout.ingest() / "summary.json", j.dump(2) + "\n");
  return s;
}

}  // namespace equirate

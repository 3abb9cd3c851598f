#include <gtest/gtest.h>

#include <regex>

#include "equirate/error.hpp"
#include "equirate/runner.hpp"
#include "equirate/synthetic.hpp"
#include "test_support.hpp"

namespace equirate {
namespace {

using testing::ym;
using testing::ymd;

struct Fixture {
  testing::TempDir dir{"runner"};
  ExperimentConfig config;

  explicit Fixture(SyntheticOptions o = {}) {
    write_synthetic_dataset(o, dir.path());
    config = ExperimentConfig::load(dir.path() / "config.json");
  }
};

SyntheticOptions tiny(std::string method = "vanilla") {
  SyntheticOptions o;
  o.companies = 3;
  o.sectors = 1;
  o.start_month = ym(2022, 1);
  o.end_month = ym(2022, 2);
  o.method = std::move(method);
  return o;
}

TEST(Plan, GridArithmetic) {
  EXPECT_EQ(planned_rating_count(500, 30, 5), 75000u);
  const std::vector<std::string> tickers = {"A", "B", "C", "D", "E"};
  const auto plan = plan_grid(tickers, ym(2022, 1), ym(2022, 3), 5);
  EXPECT_EQ(plan.cells.size(), 15u);
  EXPECT_EQ(plan.expected_ratings, 75u);
  EXPECT_EQ(plan.months.size(), 3u);
  EXPECT_EQ(plan.cells[0].company, "A");
  EXPECT_EQ(plan.cells[5].rating_date, plan.rating_dates[1]);
}

TEST(Plan, Errors) {
  try {
    plan_grid({}, ym(2022, 1), ym(2022, 3), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyUniverse);
  }
  try {
    plan_grid({"A"}, ym(2022, 4), ym(2022, 3), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyDateRange);
  }
}

TEST(Plan, FirstTradingDayOfMonth) {
  const TradingCalendar cal({ymd(2021, 12, 31), ymd(2022, 1, 3), ymd(2022, 1, 4), ymd(2022, 2, 1), ymd(2022, 5, 2)});
  EXPECT_EQ(cal.first_trading_day(ym(2022, 1)), ymd(2022, 1, 3));
  EXPECT_EQ(cal.first_trading_day(ym(2022, 2)), ymd(2022, 2, 1));
  EXPECT_EQ(cal.first_trading_day(ym(2022, 5)), ymd(2022, 5, 2));
  // No calendar day within a week: first weekday of the month.
  EXPECT_EQ(cal.first_trading_day(ym(2022, 10)), ymd(2022, 10, 3));
  EXPECT_EQ(TradingCalendar{}.first_trading_day(ym(2022, 1)), ymd(2022, 1, 3));
}

TEST(Config, LoadResolvesPathsAndValidates) {
  Fixture f(tiny());
  EXPECT_TRUE(f.config.universe.is_absolute());
  EXPECT_EQ(f.config.universe.parent_path(), f.dir.path());
  EXPECT_EQ(f.config.start_month, ym(2022, 1));
  EXPECT_EQ(f.config.horizons, (std::vector<int>{1, 3, 6, 12, 18}));
  auto bad = f.config;
  bad.horizons = {2};
  EXPECT_THROW(bad.validate(), Error);
  bad = f.config;
  bad.end_month = ym(2021, 12);
  try {
    bad.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyDateRange);
  }
  bad = f.config;
  bad.gateway.backend = "carrier-pigeon";
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Config, DigestIgnoresOutputDirAndTransportSettings) {
  Fixture f(tiny());
  auto other = f.config;
  other.output_dir = "/somewhere/else";
  other.gateway.concurrency = 1;
  other.gateway.timeout_seconds = 5;
  EXPECT_EQ(other.digest(), f.config.digest());
  other.seed += 1;
  EXPECT_NE(other.digest(), f.config.digest());
  other = f.config;
  other.method = MethodKind::kFundamentals;
  EXPECT_NE(other.digest(), f.config.digest());
}

TEST(Run, TinyFixtureRecordsAndResume) {
  Fixture f(tiny());
  const auto first = run_experiment(f.config);
  EXPECT_EQ(first.planned_cells, 6u);
  EXPECT_EQ(first.expected_ratings, 30u);
  EXPECT_EQ(first.records, 6u);
  EXPECT_EQ(first.new_records, 6u);
  EXPECT_EQ(first.ok, 6u);
  EXPECT_EQ(first.gateway_calls, 6u);
  EXPECT_EQ(first.temporal_violations, 0u);
  EXPECT_FALSE(first.partial());
  EXPECT_EQ(load_prediction_store(OutputLayout{f.config.output_dir}.predictions()).size(), 6u);

  const auto second = run_experiment(f.config);
  EXPECT_EQ(second.gateway_calls, 0u);
  EXPECT_EQ(second.resumed, 6u);
  EXPECT_EQ(second.new_records, 0u);
  EXPECT_EQ(second.records, 6u);
  const auto manifest = nlohmann::json::parse(testing::read_file(OutputLayout{f.config.output_dir}.manifest()));
  EXPECT_EQ(manifest.at("records"), 6);
}

TEST(Run, ShortHistoryIsIsolated) {
  auto o = tiny();
  o.short_history = 1;
  Fixture f(o);
  const auto m = run_experiment(f.config);
  EXPECT_EQ(m.records, 4u);
  ASSERT_EQ(m.failures.size(), 2u);
  for (const auto& fail : m.failures) {
    EXPECT_EQ(fail.kind, ErrorKind::kInsufficientHistory);
    EXPECT_EQ(fail.company, "SYN03");
  }
  EXPECT_TRUE(m.partial());
}

TEST(Run, StoredRecordsRoundTrip) {
  Fixture f(tiny("sentiment"));
  run_experiment(f.config);
  const auto records = load_prediction_store(OutputLayout{f.config.output_dir}.predictions());
  ASSERT_EQ(records.size(), 6u);
  for (const auto& r : records) {
    EXPECT_EQ(r.schema_version, kPredictionSchemaVersion);
    EXPECT_EQ(r.key, cell_key(f.config.digest(), r.company, r.rating_date));
    EXPECT_LT(r.max_input_date, r.rating_date);
    ASSERT_TRUE(r.sentiment.has_value());
    EXPECT_EQ(r.sentiment->month, add_months(month_of(r.rating_date), -1));
    const auto again = stored_prediction_from_json(to_json(r));
    EXPECT_EQ(to_json(again).dump(), to_json(r).dump());
  }
}

// Answers every rating request with the quintile labels themselves.
class OracleBackend : public ChatBackend {
 public:
  explicit OracleBackend(const ExperimentData& data) : data_(data) {}

  std::string complete(const ChatRequest& request) override {
    const auto user = request.user_text();
    static const std::regex kCompany(R"(Company: [^\n]*\(([^)\n]+)\))");
    static const std::regex kDate(R"(Rating date: (\d{4}-\d{2}-\d{2}))");
    std::smatch m;
    std::regex_search(user, m, kCompany);
    const std::string company = m[1].str();
    std::regex_search(user, m, kDate);
    const Date d = parse_date(m[1].str());
    PredictionRecord rec;
    for (const auto& t : expected_horizon_targets(d)) {
      const auto set = label_universe(data_.prices, data_.universe, d, t.horizon_months, LabelMode::kAbsolute);
      const auto it = std::find_if(set.labels.begin(), set.labels.end(), [&](const auto& l) { return l.company == company; });
      rec.entries.push_back({t.horizon_months, t.target_date, it->truth, std::nullopt});
    }
    return render_prediction_block(rec);
  }

 private:
  const ExperimentData& data_;
};

TEST(Evaluate, OracleAsPredictorHasZeroMae) {
  auto o = tiny();
  o.companies = 10;
  Fixture f(o);
  f.config.gateway.concurrency = 1;
  const auto data = load_experiment_data(f.config);
  run_experiment(f.config, data, {.backend = std::make_shared<OracleBackend>(data)});
  const auto report = evaluate_experiment(f.config, data);
  ASSERT_FALSE(report.methods.empty());
  const auto& ev = report.methods[0];
  ASSERT_FALSE(ev.mae.empty());
  for (int h : {1, 3, 6, 12, 18}) EXPECT_EQ(ev.mae.at({h, LabelMode::kAbsolute}).mean, 0.0) << h;
  EXPECT_EQ(ev.composite.at(LabelMode::kAbsolute), 0.0);
}

TEST(Evaluate, MomentumMockBeatsRandomOnTrendingData) {
  SyntheticOptions o;
  Fixture f(o);
  const auto data = load_experiment_data(f.config);
  run_experiment(f.config, data);
  const auto report = evaluate_experiment(f.config, data);
  const auto& ev = report.methods.at(0);
  EXPECT_LT(ev.composite.at(LabelMode::kAbsolute), testing::oracle::uniform_ordinal_mae());
  ASSERT_EQ(report.methods.size(), 2u);
  EXPECT_EQ(report.methods[1].method, "analyst");
  EXPECT_EQ(report.exclusions.at("analyst_quarantined"), 1u);
}

std::string wrong_date_block(const ExperimentData& data, Date d, bool wrong) {
  (void)data;
  PredictionRecord rec;
  for (const auto& t : expected_horizon_targets(d)) {
    rec.entries.push_back({t.horizon_months, t.target_date, OrdinalRating::from_int(0), std::nullopt});
  }
  if (wrong) rec.entries[2].target_date = add_months(rec.entries[2].target_date, 1);
  return render_prediction_block(rec);
}

TEST(Run, CoveMismatchRetriedOnceThenExcluded) {
  auto o = tiny();
  o.companies = 1;
  o.end_month = ym(2022, 1);
  Fixture f(o);
  const auto data = load_experiment_data(f.config);
  const auto d = plan_experiment(f.config, data).rating_dates.at(0);
  auto backend = std::make_shared<ScriptedBackend>(
      std::vector<std::string>{wrong_date_block(data, d, true), wrong_date_block(data, d, true)});
  const auto m = run_experiment(f.config, data, {.backend = backend});
  EXPECT_EQ(backend->calls(), 2u);
  EXPECT_EQ(m.date_mismatch, 1u);
  EXPECT_TRUE(m.partial());
  const auto retry = backend->requests().at(1);
  EXPECT_EQ(retry.messages.size(), 4u);
  EXPECT_NE(retry.messages.back().content.find("6-month"), std::string::npos);
  const auto records = load_prediction_store(OutputLayout{f.config.output_dir}.predictions());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].status, RecordStatus::kDateMismatch);
  EXPECT_EQ(records[0].attempts, 2);
  const auto report = evaluate_experiment(f.config, data);
  EXPECT_EQ(report.methods.at(0).predictions, 0u);
  EXPECT_EQ(report.exclusions.at("date_mismatch"), 1u);
}

TEST(Run, CoveRetryRecovers) {
  auto o = tiny();
  o.companies = 1;
  o.end_month = ym(2022, 1);
  Fixture f(o);
  const auto data = load_experiment_data(f.config);
  const auto d = plan_experiment(f.config, data).rating_dates.at(0);
  auto backend = std::make_shared<ScriptedBackend>(
      std::vector<std::string>{wrong_date_block(data, d, true), wrong_date_block(data, d, false)});
  const auto m = run_experiment(f.config, data, {.backend = backend});
  EXPECT_EQ(m.ok, 1u);
  EXPECT_EQ(m.date_mismatch, 0u);
}

TEST(Run, MalformedAnswerFlagged) {
  auto o = tiny();
  o.companies = 1;
  o.end_month = ym(2022, 1);
  Fixture f(o);
  f.config.retry_once = false;
  const auto data = load_experiment_data(f.config);
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"I cannot rate this."});
  const auto m = run_experiment(f.config, data, {.backend = backend});
  EXPECT_EQ(m.malformed, 1u);
  EXPECT_EQ(backend->calls(), 1u);
}

TEST(Run, PoisonNeverReachesPrompts) {
  for (const char* method : {"news", "fundamentals-sentiment"}) {
    auto o = tiny(method);
    o.poison = true;
    Fixture f(o);
    const auto m = run_experiment(f.config);
    EXPECT_EQ(m.temporal_violations, 0u);
    EXPECT_EQ(m.records, 6u) << method;
    const auto transcript = testing::read_file(OutputLayout{f.config.output_dir}.transcript());
    EXPECT_EQ(transcript.find(kPoisonMarker), std::string::npos) << method;
    EXPECT_EQ(transcript.find("987,654,321"), std::string::npos) << method;
    for (const auto& r : load_prediction_store(OutputLayout{f.config.output_dir}.predictions())) {
      EXPECT_LT(r.max_input_date, r.rating_date);
    }
  }
}

TEST(Ingest, WritesSummaryAndQuarantine) {
  Fixture f(tiny());
  const auto data = load_experiment_data(f.config);
  const auto s = run_ingest(f.config, data);
  EXPECT_EQ(s.companies, 3u);
  ASSERT_TRUE(s.ratings.has_value());
  EXPECT_EQ(s.ratings->quarantined.size(), 1u);
  const OutputLayout layout{f.config.output_dir};
  EXPECT_TRUE(std::filesystem::exists(layout.ingest() / "summary.json"));
  EXPECT_NE(testing::read_file(layout.ingest() / "analyst_quarantine.csv").find("Speculative Buy"), std::string::npos);
}

TEST(NewsStage, EmptyMonthNeedsNoModelCall) {
  auto o = tiny("news");
  o.articles_per_month = 0;
  Fixture f(o);
  const auto data = load_experiment_data(f.config);
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{});
  const auto r = run_news_stage(f.config, data, true, {.backend = backend});
  EXPECT_EQ(backend->calls(), 0u);
  EXPECT_GT(r.summaries.empty, 0u);
  EXPECT_TRUE(r.summaries.failures.empty());
}

}  // namespace
}  // namespace equirate

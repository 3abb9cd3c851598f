#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "equirate/error.hpp"
#include "equirate/fundamentals.hpp"
#include "test_support.hpp"

namespace equirate {
namespace {

using testing::ymd;

const Date kAsOf = ymd(2023, 3, 1);

std::vector<FilingRow> fixture_rows() { return load_filing_rows(testing::data_dir() / "fundamentals" / "acme_filings.csv"); }

FilingRow filing(Date period_end, Date filed, std::string metric, std::optional<double> v) {
  return {"ACME", period_end, filed, std::move(metric), v};
}

TEST(IngestFundamentals, NewestFourOfSix) {
  const auto t = ingest_fundamentals(fixture_rows(), "ACME", kAsOf);
  ASSERT_EQ(t.quarters.size(), 4u);
  EXPECT_EQ(t.quarters.front().period_end, ymd(2022, 3, 26));
  EXPECT_EQ(t.quarters.back().period_end, ymd(2022, 12, 31));
  for (std::size_t i = 1; i < t.quarters.size(); ++i) EXPECT_LT(t.quarters[i - 1].period_end, t.quarters[i].period_end);
  EXPECT_NO_THROW(t.validate());
}

TEST(IngestFundamentals, FilingDateGatesVisibility) {
  const auto t = ingest_fundamentals(fixture_rows(), "ACME", kAsOf);
  for (const auto& q : t.quarters) {
    EXPECT_LT(q.filing_date, kAsOf);
    EXPECT_NE(q.period_end, ymd(2023, 2, 25));
  }
  // Visible once the as-of date passes the filing date.
  const auto later = ingest_fundamentals(fixture_rows(), "ACME", ymd(2023, 3, 11));
  EXPECT_EQ(later.quarters.back().period_end, ymd(2023, 2, 25));
  // Filed on the as-of date itself is still not visible.
  const auto same_day = ingest_fundamentals(fixture_rows(), "ACME", ymd(2023, 3, 10));
  EXPECT_EQ(same_day.quarters.back().period_end, ymd(2022, 12, 31));
}

TEST(IngestFundamentals, AbsentMetricStaysAbsent) {
  const auto t = ingest_fundamentals(fixture_rows(), "ACME", kAsOf);
  int with = 0;
  for (const auto& q : t.quarters) with += q.metrics.contains("operating_cash_flow") ? 1 : 0;
  EXPECT_EQ(with, 3);
  EXPECT_FALSE(t.quarters[2].metrics.contains("operating_cash_flow"));
  EXPECT_EQ(t.ignored_metrics, (std::vector<std::string>{"adjusted_ebitda", "free_cash_flow"}));
}

TEST(IngestFundamentals, NoFilings) {
  try {
    ingest_fundamentals(fixture_rows(), "ACME", ymd(2021, 10, 29));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoFilings);
  }
  EXPECT_THROW(ingest_fundamentals(fixture_rows(), "NOPE", kAsOf), Error);
}

TEST(IngestFundamentals, RestatementKeepsLatestVisibleFiling) {
  const Date pe = ymd(2022, 12, 31);
  const std::vector<FilingRow> rows = {filing(pe, ymd(2023, 1, 20), "revenue", 100.0),
                                       filing(pe, ymd(2023, 2, 15), "revenue", 110.0),
                                       filing(pe, ymd(2023, 3, 15), "revenue", 120.0)};
  const auto t = ingest_fundamentals(rows, "ACME", kAsOf);
  ASSERT_EQ(t.quarters.size(), 1u);
  EXPECT_EQ(t.quarters[0].metrics.at("revenue"), 110.0);
}

TEST(RenderFundamentals, HeaderOnlyForEmptyQuarters) {
  FundamentalsTable t;
  t.ticker = "ACME";
  t.as_of = kAsOf;
  t.definitions = MetricCatalog::defaults().definitions();
  const auto html = render_fundamentals_html(t);
  EXPECT_NE(html.find("<th>Metric</th>"), std::string::npos);
  EXPECT_EQ(html.find("<td>"), std::string::npos);
  t.quarters.push_back({"2022-12-31", ymd(2022, 12, 31), ymd(2023, 2, 3), {}});
  const auto one = render_fundamentals_html(t);
  EXPECT_NE(one.find("<th>2022-12-31</th>"), std::string::npos);
  EXPECT_EQ(one.find("<td>"), std::string::npos);
}

TEST(RenderFundamentals, MatchesGoldenFile) {
  const auto html = render_fundamentals_html(ingest_fundamentals(fixture_rows(), "ACME", kAsOf));
  const auto golden_path = testing::data_dir() / "fundamentals" / "acme_golden.html";
  if (std::getenv("EQUIRATE_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(golden_path, std::ios::binary) << html;
  }
  EXPECT_EQ(html, testing::read_file(golden_path));
}

TEST(RenderFundamentals, InputOrderInvariant) {
  const auto rows = fixture_rows();
  const auto expected = render_fundamentals_html(ingest_fundamentals(rows, "ACME", kAsOf));
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    auto shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(render_fundamentals_html(ingest_fundamentals(shuffled, "ACME", kAsOf)), expected);
  }
}

TEST(RenderFundamentals, LeakageCheckedOnEveryRender) {
  auto t = ingest_fundamentals(fixture_rows(), "ACME", kAsOf);
  t.quarters.back().filing_date = kAsOf;
  try {
    render_fundamentals_html(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLeakage);
  }
}

TEST(RenderFundamentals, UndefinedMetricRejected) {
  auto t = ingest_fundamentals(fixture_rows(), "ACME", kAsOf);
  t.quarters.back().metrics["mystery"] = 1.0;
  EXPECT_THROW(render_fundamentals_html(t), Error);
}

TEST(RenderFundamentals, FiveQuartersRejected) {
  auto t = ingest_fundamentals(fixture_rows(), "ACME", kAsOf);
  t.quarters.push_back(t.quarters.back());
  EXPECT_THROW(t.validate(), Error);
}

TEST(FormatMetricValue, ThousandsAndDecimals) {
  EXPECT_EQ(format_metric_value(1234567.0), "1,234,567");
  EXPECT_EQ(format_metric_value(-0.0512), "-0.0512");
  EXPECT_EQ(format_metric_value(2.18), "2.18");
  EXPECT_EQ(format_metric_value(999.0), "999");
  EXPECT_EQ(format_metric_value(-1000.5), "-1,000.5");
  EXPECT_EQ(format_metric_value(0.0), "0");
}

TEST(MetricCatalog, DefaultsAndDuplicates) {
  const auto c = MetricCatalog::defaults();
  EXPECT_EQ(c.definitions().size(), 10u);
  EXPECT_NE(c.find("revenue"), nullptr);
  EXPECT_THROW(MetricCatalog({{"a", "x"}, {"a", "y"}}), Error);
}

TEST(FilingRows, ParseErrors) {
  std::istringstream bad("ticker,period_end,filing_date,metric,value\nA,2022-01-01,2022-02-01,revenue,12x\n");
  EXPECT_THROW(read_filing_rows(bad), Error);
  std::istringstream na("ticker,period_end,filing_date,metric,value\nA,2022-01-01,2022-02-01,revenue,\n");
  EXPECT_FALSE(read_filing_rows(na).at(0).value.has_value());
}

}  // namespace
}  // namespace equirate

#include <gtest/gtest.h>

#include <random>

#include <fmt/format.h>

#include "equirate/error.hpp"
#include "equirate/prediction.hpp"
#include "test_support.hpp"

namespace equirate {
namespace {

using testing::ymd;

const Date kRatingDate = ymd(2022, 3, 1);

std::string block(const std::vector<std::tuple<int, std::string, std::string>>& rows, std::string extra = {}) {
  std::string s = "Reasoning first.\n```json\n{\"ratings\": [";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [h, date, rating] = rows[i];
    s += fmt::format("{}{{\"horizon_months\": {}, \"target_date\": \"{}\", \"rating\": {}, \"price_target\": 101.5}}",
                     i ? ", " : "", h, date, rating);
  }
  s += "], \"explanation\": \"Momentum.\"" + extra + "}\n```\n";
  return s;
}

std::vector<std::tuple<int, std::string, std::string>> good_rows() {
  return {{1, "2022-04-01", "\"Strong Buy\""},
          {3, "2022-06-01", "\"Outperform\""},
          {6, "2022-09-01", "\"Hold\""},
          {12, "2023-03-01", "\"Underweight\""},
          {18, "2023-09-01", "-2"}};
}

TEST(ExpectedTargets, CalendarMonths) {
  const auto t = expected_horizon_targets(ymd(2022, 1, 31));
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t[0].target_date, ymd(2022, 2, 28));
  EXPECT_EQ(t[1].target_date, ymd(2022, 4, 30));
  EXPECT_EQ(t[4].target_date, ymd(2023, 7, 31));
  const auto m = expected_horizon_targets(kRatingDate);
  EXPECT_EQ(m[1].target_date, ymd(2022, 6, 1));
}

TEST(ParsePrediction, WellFormedBlock) {
  const auto rec = parse_prediction(block(good_rows()), "ACME", kRatingDate, expected_horizon_targets(kRatingDate));
  ASSERT_EQ(rec.entries.size(), 5u);
  EXPECT_EQ(rec.entries[0].rating.value(), 2);
  EXPECT_EQ(rec.entries[1].rating.value(), 1);
  EXPECT_EQ(rec.entries[2].rating.value(), 0);
  EXPECT_EQ(rec.entries[3].rating.value(), -1);
  EXPECT_EQ(rec.entries[4].rating.value(), -2);
  EXPECT_EQ(rec.entries[2].price_target, 101.5);
  EXPECT_EQ(rec.explanation, "Momentum.");
  EXPECT_EQ(rec.company, "ACME");
  EXPECT_FALSE(rec.from_free_text);
  EXPECT_FALSE(rec.response_digest.empty());
}

TEST(ParsePrediction, MissingEighteenMonth) {
  auto rows = good_rows();
  rows.pop_back();
  try {
    parse_prediction(block(rows), "ACME", kRatingDate, expected_horizon_targets(kRatingDate));
    FAIL();
  } catch (const MalformedResponse& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedResponse);
    EXPECT_NE(std::string(e.what()).find("18"), std::string::npos);
    EXPECT_NE(e.raw_response().find("Reasoning first."), std::string::npos);
  }
}

TEST(ParsePrediction, UnknownTermIsMalformed) {
  auto rows = good_rows();
  std::get<2>(rows[0]) = "\"Screaming Buy\"";
  EXPECT_THROW(parse_prediction(block(rows), "ACME", kRatingDate, expected_horizon_targets(kRatingDate)),
               MalformedResponse);
}

TEST(ParsePrediction, DuplicateHorizonAndBadJson) {
  auto rows = good_rows();
  rows.push_back(rows[0]);
  EXPECT_THROW(parse_prediction(block(rows), "ACME", kRatingDate, expected_horizon_targets(kRatingDate)),
               MalformedResponse);
  EXPECT_THROW(parse_prediction("```json\n{\"ratings\": [\n```", "ACME", kRatingDate,
                                expected_horizon_targets(kRatingDate)),
               MalformedResponse);
}

TEST(ParsePrediction, NewsSentimentLabel) {
  const auto rec = parse_prediction(block(good_rows(), ", \"news_sentiment\": \"Mixed\""), "ACME", kRatingDate,
                                    expected_horizon_targets(kRatingDate));
  EXPECT_EQ(rec.news_sentiment, NewsSentimentLabel::kMixed);
}

TEST(ParsePrediction, FreeTextFallback) {
  const std::string text =
      "1-month (2022-04-01): Strong Buy, target $180.\n"
      "3 months, June 2022: Moderate Buy\n"
      "6 months (2022-09-01): Market Perform\n"
      "12 months (2023-03-01): Underperform at $1,020.50\n"
      "18 months (2023-09-01): Sell\n"
      "Overall news sentiment: positive\n"
      "Explanation: strong quarter.\n";
  const auto rec = parse_prediction(text, "ACME", kRatingDate, expected_horizon_targets(kRatingDate));
  EXPECT_TRUE(rec.from_free_text);
  ASSERT_EQ(rec.entries.size(), 5u);
  const std::vector<int> want = {2, 1, 0, -1, -2};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(rec.entries[i].rating.value(), want[i]) << i;
  EXPECT_EQ(rec.entries[1].target_date, ymd(2022, 6, 1));
  EXPECT_EQ(rec.entries[3].price_target, 1020.5);
  EXPECT_EQ(rec.news_sentiment, NewsSentimentLabel::kPositive);
  EXPECT_EQ(rec.explanation, "strong quarter.");
}

TEST(ParsePrediction, FreeTextMissingHorizon) {
  EXPECT_THROW(parse_prediction("1 month (2022-04-01): Buy\n", "ACME", kRatingDate,
                                expected_horizon_targets(kRatingDate)),
               MalformedResponse);
}

TEST(ParsePrediction, RenderRoundTrip) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> r(-2, 2), day(0, 2000);
  for (int i = 0; i < 200; ++i) {
    const Date d = add_days(ymd(2018, 1, 1), day(rng));
    PredictionRecord rec;
    rec.company = "X";
    rec.rating_date = d;
    for (const auto& t : expected_horizon_targets(d)) {
      rec.entries.push_back({t.horizon_months, t.target_date, OrdinalRating::from_int(r(rng)), std::nullopt});
    }
    rec.explanation = "e";
    const auto parsed = parse_prediction(render_prediction_block(rec), "X", d,
                                         expected_horizon_targets(d));
    ASSERT_EQ(parsed.entries.size(), rec.entries.size());
    for (std::size_t k = 0; k < rec.entries.size(); ++k) {
      EXPECT_EQ(parsed.entries[k].horizon_months, rec.entries[k].horizon_months);
      EXPECT_EQ(parsed.entries[k].target_date, rec.entries[k].target_date);
      EXPECT_EQ(parsed.entries[k].rating, rec.entries[k].rating);
    }
  }
}

TEST(Cove, ChecksEveryTargetDate) {
  auto rec = parse_prediction(block(good_rows()), "ACME", kRatingDate, expected_horizon_targets(kRatingDate));
  EXPECT_TRUE(verify_dates_cove(rec, kRatingDate).ok());
  EXPECT_EQ(rec.entry(3)->target_date, ymd(2022, 6, 1));
  auto rows = good_rows();
  std::get<1>(rows[3]) = "2023-04-01";
  rec = parse_prediction(block(rows), "ACME", kRatingDate, expected_horizon_targets(kRatingDate));
  const auto result = verify_dates_cove(rec, kRatingDate);
  EXPECT_FALSE(result.ok());
  EXPECT_EQ(result.mismatched_horizons, std::vector<int>{12});
}

TEST(NewsSentiment, ParseLabels) {
  EXPECT_EQ(parse_news_sentiment("POSITIVE"), NewsSentimentLabel::kPositive);
  EXPECT_EQ(parse_news_sentiment(" neutral "), NewsSentimentLabel::kNeutral);
  EXPECT_EQ(parse_news_sentiment("bullish"), std::nullopt);
}

}  // namespace
}  // namespace equirate

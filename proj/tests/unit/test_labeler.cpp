#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "equirate/error.hpp"
#include "equirate/labeler.hpp"
#include "test_support.hpp"

namespace equirate {
namespace {

using testing::weekday_series;
using testing::ymd;

TEST(AssignQuantiles, OnePerQuintile) {
  const std::map<std::string, double> r{{"A", 0.10}, {"B", 0.05}, {"C", 0.00}, {"D", -0.05}, {"E", -0.10}};
  const std::map<std::string, int> expected{{"A", 4}, {"B", 3}, {"C", 2}, {"D", 1}, {"E", 0}};
  EXPECT_EQ(assign_quantiles(r), expected);
}

TEST(AssignQuantiles, TenDistinctGiveTwoPerBucket) {
  std::map<std::string, double> r;
  for (int i = 0; i < 10; ++i) r["C" + std::to_string(i)] = std::sin(i * 1.7);
  const auto q = assign_quantiles(r);
  EXPECT_EQ(q, testing::oracle::quintiles(r));
  std::array<int, 5> sizes{};
  for (const auto& [id, b] : q) ++sizes[static_cast<std::size_t>(b)];
  for (int s : sizes) EXPECT_EQ(s, 2);
}

TEST(AssignQuantiles, MatchesOracleWithTies) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(5, 120)(rng);
    std::uniform_int_distribution<int> coarse(-6, 6);
    std::map<std::string, double> r;
    for (int i = 0; i < n; ++i) r["T" + std::to_string(i * 7919 % 1000)] = coarse(rng) / 100.0;
    const auto q = assign_quantiles(r);
    ASSERT_EQ(q, testing::oracle::quintiles(r));
    std::map<int, int> sizes;
    for (const auto& [id, b] : q) ++sizes[b];
    int lo = n, hi = 0;
    for (int b = 0; b < 5; ++b) {
      lo = std::min(lo, sizes[b]);
      hi = std::max(hi, sizes[b]);
    }
    EXPECT_LE(hi - lo, 1);
    for (const auto& [a, ra] : r) {
      for (const auto& [b, rb] : r) {
        if (ra > rb) EXPECT_GE(q.at(a), q.at(b));
      }
    }
  }
}

TEST(AssignQuantiles, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 0.2);
  std::map<std::string, double> r, t;
  for (int i = 0; i < 57; ++i) {
    const double x = g(rng);
    r["X" + std::to_string(i)] = x;
    t["X" + std::to_string(i)] = std::exp(3 * x) + 5;
  }
  EXPECT_EQ(assign_quantiles(r), assign_quantiles(t));
}

TEST(AssignQuantiles, Errors) {
  try {
    assign_quantiles({{"A", 0.1}, {"B", 0.2}, {"C", 0.3}, {"D", 0.4}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooFewCompanies);
  }
  EXPECT_THROW(assign_quantiles({{"A", 0.1}, {"B", 0.2}, {"C", NAN}, {"D", 0.4}, {"E", 0.0}}), Error);
}

TEST(QuantileToRating, Mapping) {
  EXPECT_EQ(quantile_to_rating(0).value(), -2);
  EXPECT_EQ(quantile_to_rating(1).value(), -1);
  EXPECT_EQ(quantile_to_rating(2).value(), 0);
  EXPECT_EQ(quantile_to_rating(3).value(), 1);
  EXPECT_EQ(quantile_to_rating(4).value(), 2);
  EXPECT_EQ(quantile_to_rating(0).name(), "Strong Sell");
  EXPECT_EQ(quantile_to_rating(4).name(), "Strong Buy");
  for (int v : kAllRatingValues) EXPECT_EQ(quantile_to_rating(rating_to_quantile(OrdinalRating::from_int(v))).value(), v);
  try {
    quantile_to_rating(5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutOfRange);
  }
  EXPECT_THROW(quantile_to_rating(-1), Error);
}

struct LabelFixture {
  PriceStore prices;
  Universe universe;

  // Companies with constant daily growth so every forward return is known.
  explicit LabelFixture(const std::vector<std::pair<std::string, double>>& growth, bool with_index = true) {
    universe.market_index = "MKT";
    universe.sector_indices["S"] = "SIDX";
    std::vector<const PriceSeries*> members;
    for (const auto& [id, g] : growth) {
      universe.entries.push_back({id, id + " Corp", {}, "S"});
      prices[id] = weekday_series(id, ymd(2021, 12, 1), 400, [g = g](int i) { return 100.0 * std::pow(1 + g, i); });
    }
    if (with_index) {
      prices["SIDX"] = weekday_series("SIDX", ymd(2021, 12, 1), 400, [](int i) { return 50.0 + 0.01 * i; });
    }
  }
};

TEST(LabelUniverse, HandRankedFixture) {
  LabelFixture f({{"A", 0.002}, {"B", -0.001}, {"C", 0.0005}, {"D", -0.003}, {"E", 0.001}});
  const auto set = label_universe(f.prices, f.universe, ymd(2022, 1, 3), 3, LabelMode::kAbsolute);
  ASSERT_EQ(set.labels.size(), 5u);
  EXPECT_TRUE(set.excluded.empty());
  const std::map<std::string, int> expected{{"A", 4}, {"B", 1}, {"C", 2}, {"D", 0}, {"E", 3}};
  for (const auto& l : set.labels) {
    EXPECT_EQ(l.quintile, expected.at(l.company)) << l.company;
    EXPECT_EQ(l.truth.value(), l.quintile - 2);
    EXPECT_EQ(l.horizon_months, 3);
    EXPECT_EQ(l.mode, LabelMode::kAbsolute);
    EXPECT_NEAR(l.forward_return, compute_return(f.prices.at(l.company), ymd(2022, 1, 3), 3), 1e-15);
  }
}

TEST(LabelUniverse, MissingEndpointIsExcluded) {
  LabelFixture f({{"A", 0.002}, {"B", -0.001}, {"C", 0.0005}, {"D", -0.003}, {"E", 0.001}, {"F", 0.0}});
  f.prices["F"] = weekday_series("F", ymd(2021, 12, 1), 60, [](int) { return 9.0; });
  const auto set = label_universe(f.prices, f.universe, ymd(2022, 1, 3), 6, LabelMode::kAbsolute);
  EXPECT_EQ(set.labels.size(), 5u);
  ASSERT_EQ(set.excluded.size(), 1u);
  EXPECT_EQ(set.excluded[0].company, "F");
  EXPECT_FALSE(set.excluded[0].reason.empty());
}

TEST(LabelUniverse, TooFewCompanies) {
  LabelFixture f({{"A", 0.002}, {"B", -0.001}, {"C", 0.0005}, {"D", -0.003}});
  try {
    label_universe(f.prices, f.universe, ymd(2022, 1, 3), 1, LabelMode::kAbsolute);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooFewCompanies);
  }
}

TEST(LabelUniverse, SectorRelativeAgainstEqualWeightedCompositeSumsToZero) {
  std::vector<std::pair<std::string, double>> g;
  for (int i = 0; i < 10; ++i) g.emplace_back("K" + std::to_string(i), 0.0004 * (i - 5));
  LabelFixture f(g, false);
  const Date t = ymd(2022, 2, 1);
  const int p = 6;
  double mean = 0;
  for (const auto& [id, growth] : g) mean += compute_return(f.prices.at(id), t, p);
  mean /= static_cast<double>(g.size());
  // Index whose move over [t, t+p] is the equal-weighted member mean.
  const Date end = resolve_trading_date(add_months(t, p), f.prices.at("K0"));
  std::vector<PriceObservation> idx;
  for (const auto& o : f.prices.at("K0").observations()) idx.push_back({o.date, o.date < end ? 100.0 : 100.0 * (1 + mean)});
  f.prices["SIDX"] = PriceSeries("SIDX", idx);

  const auto set = label_universe(f.prices, f.universe, t, p, LabelMode::kSectorRelative);
  ASSERT_EQ(set.labels.size(), 10u);
  double sum = 0;
  for (const auto& l : set.labels) sum += l.forward_return;
  EXPECT_NEAR(sum, 0.0, 1e-12);
  std::array<int, 5> counts{};
  for (const auto& l : set.labels) ++counts[static_cast<std::size_t>(l.quintile)];
  for (int c : counts) EXPECT_EQ(c, 2);
}

TEST(LabelUniverse, SectorRelativeWithoutIndexSeriesExcludes) {
  LabelFixture f({{"A", 0.002}, {"B", -0.001}, {"C", 0.0005}, {"D", -0.003}, {"E", 0.001}}, false);
  EXPECT_THROW(label_universe(f.prices, f.universe, ymd(2022, 1, 3), 3, LabelMode::kSectorRelative), Error);
  EXPECT_NO_THROW(label_universe(f.prices, f.universe, ymd(2022, 1, 3), 3, LabelMode::kAbsolute));
}

TEST(RatingCorrect, Indicator) {
  QuantileLabel label{"A", ymd(2022, 3, 1), 6, LabelMode::kAbsolute, 4, OrdinalRating::from_int(2), 0.1};
  EXPECT_TRUE(rating_correct({"A", ymd(2022, 3, 1), 6, OrdinalRating::from_int(2)}, label));
  label.quintile = 0;
  label.truth = OrdinalRating::from_int(-2);
  EXPECT_FALSE(rating_correct({"A", ymd(2022, 3, 1), 6, OrdinalRating::from_int(2)}, label));
  EXPECT_FALSE(rating_correct({"A", ymd(2022, 3, 1), 6, OrdinalRating::from_int(0)}, label));
  try {
    rating_correct({"B", ymd(2022, 3, 1), 6, OrdinalRating::from_int(0)}, label);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kKeyMismatch);
  }
  EXPECT_THROW(rating_correct({"A", ymd(2022, 3, 1), 3, OrdinalRating::from_int(0)}, label), Error);
}

TEST(LabelsCsv, Header) {
  std::ostringstream out;
  write_labels_csv(out, {{"A", ymd(2022, 3, 1), 6, LabelMode::kSectorRelative, 3, OrdinalRating::from_int(1), 0.0}});
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "company,rating_date,horizon_months,mode,quintile,truth_rating");
  EXPECT_NE(text.find("A,2022-03-01,6,"), std::string::npos);
}

}  // namespace
}  // namespace equirate

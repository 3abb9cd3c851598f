#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "equirate/error.hpp"
#include "equirate/evaluation.hpp"
#include "equirate/report.hpp"
#include "test_support.hpp"

namespace equirate {
namespace {

using testing::ym;
using testing::ymd;

OrdinalRating R(int v) { return OrdinalRating::from_int(v); }

QuantileLabel label(std::string company, Date d, int h, int truth, LabelMode mode = LabelMode::kAbsolute) {
  return {std::move(company), d, h, mode, truth + 2, R(truth), 0.0};
}

TEST(Mae, ZeroErrorAndHandArithmetic) {
  const std::vector<int> same = {2, -1, 0, 0};
  const auto z = mae(same, same);
  EXPECT_EQ(z.mean, 0.0);
  EXPECT_EQ(z.std, 0.0);
  EXPECT_EQ(z.n, 4u);
  const std::vector<int> p = {2, -2, 0}, t = {0, -2, 0};
  const auto s = mae(p, t);
  EXPECT_DOUBLE_EQ(s.mean, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(((4.0 / 3) * (4.0 / 3) + 2 * (2.0 / 3) * (2.0 / 3)) / 2.0));
  const std::vector<int> one_p = {2}, one_t = {-2};
  const auto single = mae(one_p, one_t);
  EXPECT_EQ(single.mean, 4.0);
  EXPECT_EQ(single.std, 0.0);
}

TEST(Mae, Errors) {
  const std::vector<int> a = {1, 2}, b = {1};
  try {
    mae(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLengthMismatch);
  }
  try {
    mae(std::vector<int>{}, std::vector<int>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyInput);
  }
}

TEST(Mae, MatchesPerElementOracleAndIsSymmetric) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> r(-2, 2);
  std::vector<int> p(200), t(200);
  for (auto& x : p) x = r(rng);
  for (auto& x : t) x = r(rng);
  long total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - t[i]);
  const auto s = mae(p, t);
  EXPECT_EQ(s.mean, static_cast<double>(total) / 200.0);
  EXPECT_EQ(mae(t, p).mean, s.mean);
  EXPECT_LE(s.mean, 4.0);
  EXPECT_GE(s.mean, 0.0);
}

TEST(CompositeError, MeanOfThreeSixTwelve) {
  EXPECT_DOUBLE_EQ(composite_error({{3, 1.0}, {6, 2.0}, {12, 3.0}}), 2.0);
  EXPECT_DOUBLE_EQ(composite_error({{1, 9.9}, {3, 1.0}, {6, 1.0}, {12, 1.0}, {18, 9.9}}), 1.0);
  try {
    composite_error({{3, 1.0}, {6, 2.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingHorizon);
  }
}

TEST(RatingDistribution, Counting) {
  const std::vector<OrdinalRating> holds(10, R(0));
  const auto d = rating_distribution(holds);
  EXPECT_EQ(d.count(0), 10u);
  EXPECT_EQ(d.count(2), 0u);
  EXPECT_EQ(d.total, 10u);
  const auto empty = rating_distribution({});
  EXPECT_EQ(empty.total, 0u);
  for (double p : empty.proportions()) EXPECT_EQ(p, 0.0);
  const std::vector<OrdinalRating> mixed = {R(2), R(2), R(1), R(-2), R(0), R(1), R(2)};
  const auto m = rating_distribution(mixed);
  double sum = 0;
  for (double p : m.proportions()) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(m.proportions()[4], 3.0 / 7.0, 1e-15);
}

TEST(Spearman, PerfectMonotone) {
  const std::vector<double> x = {1, 2, 3, 4, 5}, up = {10, 20, 25, 80, 81}, down = {5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
}

TEST(Spearman, TiesMatchAverageRankOracle) {
  const std::vector<double> x = {1, 2, 2, 3, 3, 3, 4}, y = {2, 1, 4, 3, 3, 5, 0};
  EXPECT_EQ(average_ranks(x), testing::oracle::ranks(x));
  EXPECT_EQ(average_ranks(x), (std::vector<double>{1, 2.5, 2.5, 5, 5, 5, 7}));
  EXPECT_NEAR(spearman(x, y), testing::oracle::spearman(x, y), 1e-12);
}

TEST(Spearman, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> x(50), y(50), tx(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x[i] = g(rng);
    y[i] = x[i] + g(rng);
    tx[i] = std::exp(x[i]);
  }
  const double rho = spearman(x, y);
  EXPECT_NEAR(spearman(tx, y), rho, 1e-12);
  EXPECT_LE(std::abs(rho), 1.0);
}

TEST(Spearman, Errors) {
  const std::vector<double> c = {1, 1, 1}, x = {1, 2, 3}, two = {1, 2}, one = {1};
  try {
    spearman(c, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
  EXPECT_THROW(spearman(x, two), Error);
  EXPECT_THROW(spearman(one, one), Error);
}

TEST(MonthlyBreakdown, HandComputedCells) {
  const Date m1 = ymd(2022, 1, 3), m2 = ymd(2022, 2, 1);
  const std::vector<RatingCell> cells = {
      {"A", m1, 1, R(2)}, {"B", m1, 1, R(0)},  {"A", m1, 3, R(1)}, {"B", m1, 3, R(-1)},
      {"A", m2, 1, R(2)}, {"B", m2, 1, R(-2)}, {"A", m2, 3, R(0)}, {"B", m2, 3, R(0)},
  };
  const std::vector<QuantileLabel> labels = {
      label("A", m1, 1, 2),  label("B", m1, 1, -2), label("A", m1, 3, -1), label("B", m1, 3, -1),
      label("A", m2, 1, 0),  label("B", m2, 1, -1), label("A", m2, 3, 1),  label("B", m2, 3, 2),
  };
  const auto t = monthly_breakdown(cells, labels);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_DOUBLE_EQ(t.at({ym(2022, 1), 1, LabelMode::kAbsolute}).mean, (0 + 2) / 2.0);
  EXPECT_DOUBLE_EQ(t.at({ym(2022, 1), 3, LabelMode::kAbsolute}).mean, (2 + 0) / 2.0);
  EXPECT_DOUBLE_EQ(t.at({ym(2022, 2), 1, LabelMode::kAbsolute}).mean, (2 + 1) / 2.0);
  EXPECT_DOUBLE_EQ(t.at({ym(2022, 2), 3, LabelMode::kAbsolute}).mean, (1 + 2) / 2.0);
}

TEST(MonthlyBreakdown, UnlabeledCellIsAbsentAndSingleRecord) {
  const std::vector<RatingCell> cells = {{"A", ymd(2022, 1, 3), 18, R(1)}, {"A", ymd(2022, 1, 3), 1, R(1)}};
  const std::vector<QuantileLabel> labels = {label("A", ymd(2022, 1, 3), 1, -1)};
  const auto t = monthly_breakdown(cells, labels);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_FALSE(t.contains({ym(2022, 1), 18, LabelMode::kAbsolute}));
  EXPECT_EQ(t.at({ym(2022, 1), 1, LabelMode::kAbsolute}).mean, 2.0);
  EXPECT_EQ(t.at({ym(2022, 1), 1, LabelMode::kAbsolute}).n, 1u);
}

EvaluationReport sample_report() {
  std::vector<RatingCell> cells;
  std::vector<QuantileLabel> labels;
  std::vector<SentimentObservation> sentiment;
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> r(-2, 2), s(-5, 5);
  for (int m = 1; m <= 3; ++m) {
    const Date d = ymd(2022, static_cast<unsigned>(m), 1);
    for (int c = 0; c < 10; ++c) {
      const std::string id = "C" + std::to_string(c);
      sentiment.push_back({id, d, s(rng), s(rng)});
      for (int h : {1, 3, 6, 12, 18}) {
        cells.push_back({id, d, h, R(r(rng))});
        if (!(m == 3 && h == 18)) {
          labels.push_back(label(id, d, h, r(rng)));
          labels.push_back(label(id, d, h, r(rng), LabelMode::kSectorRelative));
        }
      }
    }
  }
  std::vector<RatingCell> analyst;
  std::copy_if(cells.begin(), cells.end(), std::back_inserter(analyst),
               [](const RatingCell& c) { return c.horizon_months <= 3; });
  const std::vector<MethodCells> methods = {{"vanilla", cells}, {"analyst", analyst}};
  auto report = build_report(methods, labels, {{"vanilla", sentiment}});
  report.exclusions["date_mismatch"] = 2;
  return report;
}

TEST(BuildReport, TotalsAndComposite) {
  const auto report = sample_report();
  ASSERT_EQ(report.methods.size(), 2u);
  const auto& v = report.methods[0];
  EXPECT_EQ(v.predictions, 150u);
  EXPECT_EQ(v.unlabeled, 10u);
  EXPECT_EQ(v.distribution.total, 150u);
  for (const auto& [key, stat] : v.mae) {
    std::size_t monthly_n = 0;
    for (const auto& [mk, ms] : v.monthly) {
      if (mk.horizon_months == key.first && mk.mode == key.second) monthly_n += ms.n;
    }
    EXPECT_EQ(monthly_n, stat.n);
    EXPECT_LE(stat.mean, 4.0);
  }
  for (auto mode : {LabelMode::kAbsolute, LabelMode::kSectorRelative}) {
    const double expected =
        (v.mae.at({3, mode}).mean + v.mae.at({6, mode}).mean + v.mae.at({12, mode}).mean) / 3.0;
    EXPECT_DOUBLE_EQ(v.composite.at(mode), expected);
  }
  EXPECT_FALSE(report.methods[1].composite.contains(LabelMode::kAbsolute));
  ASSERT_FALSE(report.correlations.empty());
  EXPECT_EQ(report.correlations.front().method, "vanilla");
}

TEST(BuildReport, OracleAsPredictorIsZero) {
  std::vector<QuantileLabel> labels;
  std::vector<RatingCell> cells;
  for (int c = 0; c < 20; ++c) {
    for (int h : {1, 3, 6, 12, 18}) {
      labels.push_back(label("C" + std::to_string(c), ymd(2022, 1, 3), h, c % 5 - 2));
      cells.push_back({"C" + std::to_string(c), ymd(2022, 1, 3), h, R(c % 5 - 2)});
    }
  }
  const std::vector<MethodCells> methods = {{"oracle", cells}};
  const auto report = build_report(methods, labels);
  for (const auto& [key, stat] : report.methods[0].mae) EXPECT_EQ(stat.mean, 0.0);
  EXPECT_EQ(report.methods[0].composite.at(LabelMode::kAbsolute), 0.0);
}

TEST(Correlations, PairsAndDegenerate) {
  std::vector<RatingCell> cells;
  std::vector<SentimentObservation> obs;
  for (int c = 0; c < 5; ++c) {
    const std::string id = "C" + std::to_string(c);
    obs.push_back({id, ymd(2022, 1, 3), 2 * c - 4, 1});
    cells.push_back({id, ymd(2022, 1, 3), 3, R(c - 2)});
  }
  const auto out = sentiment_rating_correlations("sentiment", cells, obs);
  const auto find = [&](const std::string& pair, int h) {
    return std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.pair == pair && e.horizon_months == h; });
  };
  const auto company = find("company-sentiment~rating", 3);
  ASSERT_NE(company, out.end());
  ASSERT_TRUE(company->rho.has_value());
  EXPECT_NEAR(*company->rho, 1.0, 1e-12);
  EXPECT_EQ(company->n, 5u);
  const auto sector = find("sector-sentiment~rating", 3);
  ASSERT_NE(sector, out.end());
  EXPECT_FALSE(sector->rho.has_value());
  EXPECT_NE(find("company-sentiment~sector-sentiment", 0), out.end());
}

TEST(EmitReport, FourFilesWithHeaders) {
  testing::TempDir dir("report");
  emit_report(sample_report(), dir.path());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) files += e.is_regular_file() ? 1 : 0;
  EXPECT_EQ(files, 4u);
  const auto first_line = [&](const char* name) {
    const auto text = testing::read_file(dir.path() / name);
    return text.substr(0, text.find('\n'));
  };
  EXPECT_EQ(first_line("monthly_mae.csv"), "method,month,horizon_months,mode,mae,std,n");
  EXPECT_EQ(first_line("rating_distribution.csv"), "method,rating,label,count,proportion");
  EXPECT_EQ(first_line("correlations.csv"), "method,pair,horizon_months,rho,n");
  EXPECT_EQ(nlohmann::json::parse(testing::read_file(dir.path() / "report.json")).at("schema_version"), 1);
}

TEST(EmitReport, ByteIdenticalReruns) {
  testing::TempDir a("ra"), b("rb");
  emit_report(sample_report(), a.path());
  emit_report(sample_report(), b.path());
  for (const auto& name : kReportFiles) {
    EXPECT_EQ(testing::read_file(a.path() / name), testing::read_file(b.path() / name)) << name;
  }
}

TEST(EmitReport, EmptyReportHeadersOnly) {
  testing::TempDir dir("empty");
  emit_report(EvaluationReport{}, dir.path());
  for (const auto& name : kReportFiles) {
    if (name == "report.json") continue;
    const auto text = testing::read_file(dir.path() / name);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1) << name;
  }
}

TEST(EmitReport, JsonRoundTrip) {
  testing::TempDir dir("round");
  const auto report = sample_report();
  emit_report(report, dir.path());
  const auto loaded = load_report(dir.path() / "report.json");
  ASSERT_EQ(loaded.methods.size(), report.methods.size());
  EXPECT_EQ(loaded.methods[0].mae.size(), report.methods[0].mae.size());
  EXPECT_DOUBLE_EQ(loaded.methods[0].composite.at(LabelMode::kAbsolute),
                   report.methods[0].composite.at(LabelMode::kAbsolute));
  EXPECT_EQ(loaded.exclusions, report.exclusions);
  testing::TempDir again("round2");
  emit_report(loaded, again.path());
  for (const auto& name : kReportFiles) {
    EXPECT_EQ(testing::read_file(again.path() / name), testing::read_file(dir.path() / name)) << name;
  }
}

}  // namespace
}  // namespace equirate

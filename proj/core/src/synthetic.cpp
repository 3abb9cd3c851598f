#include "equirate/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "equirate/csv.hpp"
#include "equirate/error.hpp"

namespace equirate {
namespace {

constexpr std::array<std::string_view, 16> kStems = {"Alder",  "Birchwood", "Cedarline", "Dogwood", "Elmstead", "Fircrest",
                                                     "Ginkgo", "Hazelton",  "Juniper",   "Larchmont", "Maplegate", "Oakridge",
                                                     "Pinecone", "Quillon", "Rowan",     "Sprucefield"};
constexpr std::array<std::string_view, 4> kSuffixes = {"Systems", "Holdings", "Industries", "Labs"};
constexpr std::array<std::string_view, 5> kSectors = {"Technology", "Energy", "Health Care", "Financials", "Utilities"};

constexpr std::array<std::string_view, 5> kGoodNews = {"reports record quarterly growth", "beats earnings estimates",
                                                       "shares rally on upgrade", "posts profit surge",
                                                       "gains share after product launch"};
constexpr std::array<std::string_view, 5> kBadNews = {"misses revenue estimates", "faces lawsuit over contracts",
                                                      "shares drop after guidance cut", "reports quarterly loss",
                                                      "announces product recall"};
constexpr std::array<std::string_view, 3> kFirms = {"Atlas Securities", "Beacon Capital", "Crest Partners"};
constexpr std::array<std::string_view, 5> kActions = {"maintain", "reiterate", "upgrade", "downgrade", "initiate"};

bool weekday(Date d) {
  const std::chrono::weekday w{std::chrono::sys_days{d}};
  return w != std::chrono::Saturday && w != std::chrono::Sunday;
}

Date first_weekday(YearMonth m) {
  Date d = first_of_month(m);
  while (!weekday(d)) d = add_days(d, 1);
  return d;
}

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::string price(double v) { return fmt::format("{:.4f}", v); }

struct Company {
  std::string ticker;
  std::string name;
  std::string alias;
  std::string sector;
  double drift = 0.0;
  Date first_day;
};

}  // namespace

void write_synthetic_dataset(const SyntheticOptions& o, const std::filesystem::path& dir) {
  if (o.companies == 0 || o.sectors == 0 || o.sectors > kSectors.size()) {
    throw Error(ErrorKind::kInvalidArgument, "need at least one company and between 1 and 5 sectors");
  }
  if (o.end_month < o.start_month) throw Error(ErrorKind::kEmptyDateRange, "end month before start month");
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Drifts spread evenly from negative to positive, shuffled over companies.
  std::vector<double> drifts(o.companies);
  for (std::size_t i = 0; i < o.companies; ++i) {
    const double t = o.companies == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(o.companies - 1);
    drifts[i] = -0.0016 + 0.0032 * t;
  }
  std::shuffle(drifts.begin(), drifts.end(), rng);

  const Date history_start = first_of_month(add_months(o.start_month, -15));
  const Date history_end = first_of_month(add_months(o.end_month, 20));

  std::vector<Company> companies;
  for (std::size_t i = 0; i < o.companies; ++i) {
    Company c;
    c.ticker = fmt::format("SYN{:02}", i + 1);
    const auto stem = std::string(kStems[i % kStems.size()]);
    const auto round = i / kStems.size();
    c.alias = round == 0 ? stem : fmt::format("{} {}", stem, round + 1);
    c.name = fmt::format("{} {}", c.alias, kSuffixes[i % kSuffixes.size()]);
    c.sector = std::string(kSectors[i % o.sectors]);
    c.drift = drifts[i];
    c.first_day = i >= o.companies - std::min(o.short_history, o.companies)
                      ? first_of_month(add_months(o.start_month, -3))
                      : history_start;
    companies.push_back(std::move(c));
  }

  std::vector<Date> days;
  for (Date d = history_start; d < history_end; d = add_days(d, 1)) {
    if (weekday(d)) days.push_back(d);
  }

  // prices.csv, index series chained from mean member returns.
  std::vector<double> level(o.companies, 0.0);
  for (std::size_t i = 0; i < o.companies; ++i) level[i] = 20.0 + 80.0 * unit(rng);
  std::vector<double> sector_shock(o.sectors);
  double market_level = 1000.0;
  std::vector<double> sector_level(o.sectors, 1000.0);
  std::vector<std::string> price_rows;
  for (std::size_t di = 0; di < days.size(); ++di) {
    const Date d = days[di];
    const double market_shock = 0.004 * gauss(rng);
    for (auto& s : sector_shock) s = 0.003 * gauss(rng);
    double market_sum = 0.0;
    std::vector<double> sector_sum(o.sectors, 0.0);
    std::vector<int> sector_n(o.sectors, 0);
    for (std::size_t i = 0; i < o.companies; ++i) {
      const std::size_t s = i % o.sectors;
      const double r = di == 0 ? 0.0 : companies[i].drift + market_shock + sector_shock[s] + 0.008 * gauss(rng);
      level[i] *= 1.0 + r;
      market_sum += r;
      sector_sum[s] += r;
      ++sector_n[s];
      if (d >= companies[i].first_day) price_rows.push_back(fmt::format("{},{},{}", d, companies[i].ticker, price(level[i])));
    }
    market_level *= 1.0 + market_sum / static_cast<double>(o.companies);
    if (o.market_index) price_rows.push_back(fmt::format("{},MKT,{}", d, price(market_level)));
    for (std::size_t s = 0; s < o.sectors; ++s) {
      if (sector_n[s] > 0) sector_level[s] *= 1.0 + sector_sum[s] / sector_n[s];
      price_rows.push_back(fmt::format("{},IDX{},{}", d, s + 1, price(sector_level[s])));
    }
  }
  {
    auto out = open(dir / "prices.csv");
    out << "date,ticker,adj_close\n";
    for (const auto& row : price_rows) out << row << '\n';
  }

  // universe.json
  {
    nlohmann::ordered_json u;
    u["market_index"] = o.market_index ? "MKT" : "";
    nlohmann::ordered_json idx = nlohmann::ordered_json::object();
    for (std::size_t s = 0; s < o.sectors; ++s) idx[std::string(kSectors[s])] = fmt::format("IDX{}", s + 1);
    u["sector_indices"] = idx;
    u["companies"] = nlohmann::ordered_json::array();
    for (const auto& c : companies) {
      u["companies"].push_back({{"ticker", c.ticker}, {"name", c.name}, {"aliases", {c.alias, c.ticker}}, {"sector", c.sector}});
    }
    auto out = open(dir / "universe.json");
    out << u.dump(2) << '\n';
  }

  // news.jsonl: the month before the first rating month through the last.
  {
    auto out = open(dir / "news.jsonl");
    for (auto m = add_months(o.start_month, -1); m <= o.end_month; m = add_months(m, 1)) {
      const int days_in_month = static_cast<int>(static_cast<unsigned>(
          std::chrono::year_month_day_last{m.year(), std::chrono::month_day_last{m.month()}}.day()));
      for (const auto& c : companies) {
        for (int k = 0; k < o.articles_per_month; ++k) {
          const bool good = unit(rng) < (c.drift > 0 ? 0.75 : 0.25);
          const auto& pool = good ? kGoodNews : kBadNews;
          const auto event = pool[static_cast<std::size_t>(unit(rng) * pool.size()) % pool.size()];
          const int day = 1 + static_cast<int>(unit(rng) * days_in_month) % days_in_month;
          const Date published = add_days(first_of_month(m), day - 1);
          const bool missing = k == 0 && unit(rng) < 0.1;
          nlohmann::ordered_json a = {
              {"ticker", c.ticker},
              {"published", format_date(published)},
              {"url", fmt::format("https://news.example.com/{}/{}/{}", c.ticker, format_year_month(m), k + 1)},
              {"title", fmt::format("{} {}", c.name, event)},
              {"body", missing ? std::string{}
                               : fmt::format("{} ({}) {} in {}. Analysts at several desks discussed the {} outlook.",
                                             c.name, c.ticker, event, month_name_year(m), c.sector)}};
          out << a.dump() << '\n';
        }
      }
      // Unrelated article that no matcher should keep.
      out << nlohmann::ordered_json({{"ticker", nullptr},
                                     {"published", format_date(add_days(first_of_month(m), 14))},
                                     {"url", fmt::format("https://news.example.com/misc/{}", format_year_month(m))},
                                     {"title", "Local bakery wins regional pastry award"},
                                     {"body", "The judges praised the croissants."}})
                 .dump()
          << '\n';
    }
    if (o.poison) {
      {
        const auto m = o.end_month;
        const auto& c = companies.front();
        out << nlohmann::ordered_json(
                   {{"ticker", c.ticker},
                    {"published", format_date(first_weekday(m))},
                    {"url", fmt::format("https://news.example.com/late/{}", format_year_month(m))},
                    {"title", fmt::format("{} {} shares collapse", c.name, kPoisonMarker)},
                    {"body", fmt::format("{} {} record loss and lawsuit.", c.name, kPoisonMarker)}})
                   .dump()
            << '\n';
      }
    }
  }

  // fundamentals.csv: quarter ends, filed 40 days later.
  {
    auto out = open(dir / "fundamentals.csv");
    out << "ticker,period_end,filing_date,metric,value\n";
    for (const auto& c : companies) {
      double revenue = 500.0e6 + 1.5e9 * unit(rng);
      const double shares = std::round(50.0e6 + 200.0e6 * unit(rng));
      for (auto m = add_months(o.start_month, -24); m <= o.end_month; m = add_months(m, 1)) {
        if (static_cast<unsigned>(m.month()) % 3 != 0) continue;
        const Date period_end{m.year() / m.month() / std::chrono::last};
        const Date filed = add_days(period_end, 40);
        revenue *= 1.0 + c.drift * 60.0 + 0.02 * gauss(rng);
        const double margin = 0.08 + c.drift * 30.0 + 0.02 * gauss(rng);
        const double net_income = revenue * margin;
        const double assets = revenue * 3.2;
        const double liabilities = assets * (0.45 + 0.1 * unit(rng));
        const auto row = [&](std::string_view metric, std::string value) {
          out << csv::join_row({c.ticker, format_date(period_end), format_date(filed), std::string(metric), value})
              << '\n';
        };
        row("revenue", fmt::format("{:.0f}", revenue));
        row("net_income", fmt::format("{:.0f}", net_income));
        row("eps", fmt::format("{:.2f}", net_income / shares));
        row("operating_cash_flow", unit(rng) < 0.1 ? std::string("NA") : fmt::format("{:.0f}", net_income * 1.3));
        row("total_assets", fmt::format("{:.0f}", assets));
        row("total_liabilities", fmt::format("{:.0f}", liabilities));
        row("stockholders_equity", fmt::format("{:.0f}", assets - liabilities));
        row("shares_outstanding", fmt::format("{:.0f}", shares));
        row("adjusted_ebitda", fmt::format("{:.0f}", net_income * 1.6));
      }
    }
    if (o.poison) {
      {
        const auto m = o.end_month;
        const auto prev = add_months(m, -1);
        const Date period_end{prev.year() / prev.month() / std::chrono::last};
        out << csv::join_row({companies.front().ticker, format_date(period_end), format_date(first_weekday(m)),
                              "revenue", fmt::format("{:.0f}", kPoisonValue)})
            << '\n';
      }
    }
  }

  // analyst_ratings.csv
  {
    constexpr std::array<std::string_view, 10> kTerms = {"Buy",        "Outperform", "Overweight", "Hold",    "Neutral",
                                                         "Equal-Weight", "Underperform", "Sell",    "Strong Buy", "Market Perform"};
    auto out = open(dir / "analyst_ratings.csv");
    out << "firm,ticker,date,action,term\n";
    for (auto m = o.start_month; m <= o.end_month; m = add_months(m, 1)) {
      for (const auto& c : companies) {
        const Date d = add_days(first_of_month(m), static_cast<int>(unit(rng) * 27.0));
        const auto firm = kFirms[static_cast<std::size_t>(unit(rng) * kFirms.size()) % kFirms.size()];
        const auto action = kActions[static_cast<std::size_t>(unit(rng) * kActions.size()) % kActions.size()];
        // Buy-skewed, like real coverage.
        const double u = unit(rng);
        const std::size_t term = u < 0.55 ? static_cast<std::size_t>(u / 0.55 * 3) % 3
                                 : u < 0.9 ? 3 + static_cast<std::size_t>((u - 0.55) / 0.35 * 3) % 3
                                           : 6 + static_cast<std::size_t>((u - 0.9) / 0.1 * 4) % 4;
        out << csv::join_row({std::string(firm), c.ticker, format_date(d), std::string(action), std::string(kTerms[term])})
            << '\n';
      }
    }
    out << csv::join_row({"Atlas Securities", companies.front().ticker, format_date(first_of_month(o.start_month)),
                          "initiate", "Speculative Buy"})
        << '\n';
  }

  // config.json
  {
    nlohmann::ordered_json cfg = {{"universe", "universe.json"},
                                  {"prices", "prices.csv"},
                                  {"news", "news.jsonl"},
                                  {"fundamentals", "fundamentals.csv"},
                                  {"analyst_ratings", "analyst_ratings.csv"},
                                  {"method", o.method},
                                  {"start_month", format_year_month(o.start_month)},
                                  {"end_month", format_year_month(o.end_month)},
                                  {"horizons", {1, 3, 6, 12, 18}},
                                  {"gateway", {{"backend", "mock"}, {"concurrency", 4}, {"mock", {{"mode", "momentum"}}}}},
                                  {"output_dir", "out"},
                                  {"seed", o.seed}};
    auto out = open(dir / "config.json");
    out << cfg.dump(2) << '\n';
  }
}

}  // namespace equirate

#include "equirate/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "equirate/csv.hpp"
#include "equirate/error.hpp"

namespace equirate {

PriceSeries::PriceSeries(std::string instrument_id, std::vector<PriceObservation> observations)
    : id_(std::move(instrument_id)), obs_(std::move(observations)) {
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (!(obs_[i].adj_close > 0.0) || !std::isfinite(obs_[i].adj_close)) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("{}: non-positive price {} on {}", id_, obs_[i].adj_close, obs_[i].date));
    }
    if (i > 0 && !(obs_[i - 1].date < obs_[i].date)) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("{}: dates not strictly increasing at {}", id_, obs_[i].date));
    }
  }
}

Date PriceSeries::first_date() const {
  if (obs_.empty()) throw Error(ErrorKind::kInvalidArgument, fmt::format("{}: empty series", id_));
  return obs_.front().date;
}

Date PriceSeries::last_date() const {
  if (obs_.empty()) throw Error(ErrorKind::kInvalidArgument, fmt::format("{}: empty series", id_));
  return obs_.back().date;
}

const PriceObservation* PriceSeries::at_or_before(Date d) const {
  auto it = std::upper_bound(obs_.begin(), obs_.end(), d,
                             [](Date lhs, const PriceObservation& o) { return lhs < o.date; });
  if (it == obs_.begin()) return nullptr;
  return &*std::prev(it);
}

const PriceObservation* PriceSeries::at_or_after(Date d) const {
  auto it = std::lower_bound(obs_.begin(), obs_.end(), d,
                             [](const PriceObservation& o, Date rhs) { return o.date < rhs; });
  if (it == obs_.end()) return nullptr;
  return &*it;
}

// ---------------------------------------------------------------------------

void Universe::validate() const {
  std::set<std::string_view> seen;
  for (const auto& e : entries) {
    if (e.ticker.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "universe entry with empty ticker");
    }
    if (!seen.insert(e.ticker).second) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("duplicate ticker '{}' in universe", e.ticker));
    }
    if (!sector_indices.contains(e.sector)) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("ticker '{}' has sector '{}' with no sector index", e.ticker, e.sector));
    }
  }
}

const UniverseEntry* Universe::find(std::string_view ticker) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.ticker == ticker; });
  return it == entries.end() ? nullptr : &*it;
}

std::vector<std::string> Universe::tickers() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.ticker);
  return out;
}

std::vector<std::string> Universe::sectors() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.sector);
  return {s.begin(), s.end()};
}

std::vector<const UniverseEntry*> Universe::members_of(std::string_view sector) const {
  std::vector<const UniverseEntry*> out;
  for (const auto& e : entries) {
    if (e.sector == sector) out.push_back(&e);
  }
  return out;
}

// ---------------------------------------------------------------------------

Date resolve_trading_date(Date calendar_date, const PriceSeries& series, int max_roll_days) {
  if (series.empty()) {
    throw Error(ErrorKind::kNoTradingDate, fmt::format("{}: empty series", series.id()));
  }
  if (const auto* next = series.at_or_after(calendar_date)) {
    if (days_between(calendar_date, next->date) <= max_roll_days) return next->date;
    throw Error(ErrorKind::kNoTradingDate,
                fmt::format("{}: no trading date within {} days after {}", series.id(), max_roll_days,
                            calendar_date));
  }
  const Date last = series.last_date();
  if (days_between(last, calendar_date) <= max_roll_days) return last;
  throw Error(ErrorKind::kNoTradingDate,
              fmt::format("{}: {} is past the series end {}", series.id(), calendar_date, last));
}

namespace {

double close_on(const PriceSeries& series, Date trading_date) {
  const auto* o = series.at_or_after(trading_date);
  // resolve_trading_date only returns dates present in the series
  return o->adj_close;
}

}  // namespace

double compute_return(const PriceSeries& series, Date t, int horizon_months, int max_roll_days) {
  const Date start = resolve_trading_date(t, series, max_roll_days);
  const Date end = resolve_trading_date(add_months(t, horizon_months), series, max_roll_days);
  const double p0 = close_on(series, start);
  const double p1 = close_on(series, end);
  return (p1 - p0) / p0;
}

double trailing_return(const PriceSeries& series, Date as_of, int months, int max_roll_days) {
  const Date start_date = add_months(as_of, -months);
  const auto* start = series.at_or_before(start_date);
  const auto* end = series.at_or_before(as_of);
  if (start == nullptr || days_between(start->date, start_date) > max_roll_days) {
    throw Error(ErrorKind::kInsufficientHistory,
                fmt::format("{}: no close within {} days before {}", series.id(), max_roll_days, start_date));
  }
  if (end == nullptr || days_between(end->date, as_of) > max_roll_days) {
    throw Error(ErrorKind::kInsufficientHistory,
                fmt::format("{}: no close within {} days before {}", series.id(), max_roll_days, as_of));
  }
  return (end->adj_close - start->adj_close) / start->adj_close;
}

// ---------------------------------------------------------------------------

Benchmark Benchmark::from_series(const PriceSeries& series) {
  Benchmark b;
  b.id_ = series.id();
  b.series_ = &series;
  return b;
}

Benchmark Benchmark::equal_weighted(std::string id, std::vector<const PriceSeries*> members) {
  Benchmark b;
  b.id_ = std::move(id);
  b.members_ = std::move(members);
  return b;
}

double Benchmark::trailing_return(Date as_of, int months, int max_roll_days) const {
  if (series_) return equirate::trailing_return(*series_, as_of, months, max_roll_days);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* m : members_) {
    try {
      sum += equirate::trailing_return(*m, as_of, months, max_roll_days);
      ++n;
    } catch (const Error&) {
    }
  }
  if (n == 0) {
    throw Error(ErrorKind::kInsufficientHistory,
                fmt::format("{}: no member has a {}-month return as of {}", id_, months, as_of));
  }
  return sum / static_cast<double>(n);
}

double Benchmark::forward_return(Date t, int horizon_months, int max_roll_days) const {
  if (series_) return compute_return(*series_, t, horizon_months, max_roll_days);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* m : members_) {
    try {
      sum += compute_return(*m, t, horizon_months, max_roll_days);
      ++n;
    } catch (const Error&) {
    }
  }
  if (n == 0) {
    throw Error(ErrorKind::kNoTradingDate,
                fmt::format("{}: no member has a {}-month forward return from {}", id_, horizon_months, t));
  }
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

std::array<double, TechnicalSnapshot::kFieldCount> TechnicalSnapshot::values() const {
  return {current_price,      week52_min,         week52_max,         volatility_90d,
          return_1m,          return_3m,          return_12m,         market_relative_1m,
          market_relative_3m, market_relative_12m, sector_relative_1m, sector_relative_3m,
          sector_relative_12m};
}

const std::array<std::string_view, TechnicalSnapshot::kFieldCount>& TechnicalSnapshot::labels() {
  static const std::array<std::string_view, kFieldCount> kLabels = {
      "current-price",      "week52-min",         "week52-max",         "volatility-90d",
      "returns-1m",         "returns-3m",         "returns-12m",        "market-relative-1m",
      "market-relative-3m", "market-relative-12m", "sector-relative-1m", "sector-relative-3m",
      "sector-relative-12m"};
  return kLabels;
}

TechnicalSnapshot build_technical_snapshot(const PriceSeries& company, const Benchmark& market,
                                           const Benchmark& sector, Date as_of, int max_roll_days) {
  TechnicalSnapshot snap;
  snap.as_of = as_of;
  std::vector<std::string> failed;

  const auto* current = company.at_or_before(as_of);
  if (current == nullptr || days_between(current->date, as_of) > max_roll_days) {
    failed.emplace_back("current-price");
  } else {
    snap.current_price = current->adj_close;
    snap.price_date = current->date;
  }

  const auto covers = [&](Date window_start) {
    return !company.empty() && days_between(window_start, company.first_date()) <= max_roll_days;
  };

  const Date range_start = add_days(as_of, -365);
  if (current != nullptr && covers(range_start)) {
    const auto obs = company.observations();
    double lo = current->adj_close;
    double hi = current->adj_close;
    for (const auto& o : obs) {
      if (o.date < range_start) continue;
      if (as_of < o.date) break;
      lo = std::min(lo, o.adj_close);
      hi = std::max(hi, o.adj_close);
    }
    snap.week52_min = lo;
    snap.week52_max = hi;
  } else {
    failed.emplace_back("week52-range");
  }

  const Date vol_start = add_days(as_of, -90);
  if (covers(vol_start)) {
    std::vector<double> rets;
    const PriceObservation* prev = nullptr;
    for (const auto& o : company.observations()) {
      if (o.date < vol_start) continue;
      if (as_of < o.date) break;
      if (prev != nullptr) rets.push_back((o.adj_close - prev->adj_close) / prev->adj_close);
      prev = &o;
    }
    if (rets.size() >= 2) {
      double mean = 0.0;
      for (double r : rets) mean += r;
      mean /= static_cast<double>(rets.size());
      double ss = 0.0;
      for (double r : rets) ss += (r - mean) * (r - mean);
      snap.volatility_90d = std::sqrt(ss / static_cast<double>(rets.size() - 1));
    } else {
      failed.emplace_back("volatility-90d");
    }
  } else {
    failed.emplace_back("volatility-90d");
  }

  struct Window {
    int months;
    double* absolute;
    double* vs_market;
    double* vs_sector;
  };
  const std::array<Window, 3> windows = {{
      {1, &snap.return_1m, &snap.market_relative_1m, &snap.sector_relative_1m},
      {3, &snap.return_3m, &snap.market_relative_3m, &snap.sector_relative_3m},
      {12, &snap.return_12m, &snap.market_relative_12m, &snap.sector_relative_12m},
  }};
  for (const auto& w : windows) {
    double r = 0.0;
    try {
      r = trailing_return(company, as_of, w.months, max_roll_days);
      *w.absolute = r;
    } catch (const Error&) {
      failed.push_back(fmt::format("returns-{}m", w.months));
      continue;
    }
    try {
      *w.vs_market = compute_relative_return(r, market.trailing_return(as_of, w.months, max_roll_days));
    } catch (const Error&) {
      failed.push_back(fmt::format("market-relative-{}m", w.months));
    }
    try {
      *w.vs_sector = compute_relative_return(r, sector.trailing_return(as_of, w.months, max_roll_days));
    } catch (const Error&) {
      failed.push_back(fmt::format("sector-relative-{}m", w.months));
    }
  }

  if (!failed.empty()) {
    throw Error(ErrorKind::kInsufficientHistory,
                fmt::format("{} as of {}: {}", company.id(), as_of, fmt::join(failed, ", ")));
  }
  return snap;
}

TechnicalSnapshot build_technical_snapshot(const PriceSeries& company, const PriceSeries& market,
                                           const PriceSeries& sector, Date as_of, int max_roll_days) {
  return build_technical_snapshot(company, Benchmark::from_series(market), Benchmark::from_series(sector),
                                  as_of, max_roll_days);
}

// ---------------------------------------------------------------------------

PriceStore parse_prices_csv(std::istream& in) {
  csv::Reader reader(in);
  reader.read_header();
  reader.require_columns({"date", "ticker", "adj_close"});
  const auto c_date = *reader.column("date");
  const auto c_ticker = *reader.column("ticker");
  const auto c_price = *reader.column("adj_close");

  std::map<std::string, std::vector<PriceObservation>, std::less<>> grouped;
  while (auto row = reader.next_row()) {
    const auto& r = *row;
    if (r.size() <= std::max({c_date, c_ticker, c_price})) {
      throw Error(ErrorKind::kParse, fmt::format("prices line {}: too few fields", reader.line()));
    }
    double price = 0.0;
    try {
      std::size_t used = 0;
      price = std::stod(r[c_price], &used);
      if (used != r[c_price].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, fmt::format("prices line {}: bad price '{}'", reader.line(), r[c_price]));
    }
    grouped[r[c_ticker]].push_back({parse_date(r[c_date]), price});
  }

  PriceStore store;
  for (auto& [ticker, obs] : grouped) {
    std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    store.emplace(ticker, PriceSeries(ticker, std::move(obs)));
  }
  return store;
}

PriceStore load_prices_csv(const std::filesystem::path& path) {
  auto in = csv::open_input(path);
  return parse_prices_csv(in);
}

Universe parse_universe(std::string_view json_text) {
  Universe u;
  try {
    const auto j = nlohmann::json::parse(json_text);
    u.market_index = j.value("market_index", std::string{});
    if (j.contains("sector_indices")) {
      for (const auto& [sector, id] : j.at("sector_indices").items()) {
        u.sector_indices.emplace(sector, id.get<std::string>());
      }
    }
    for (const auto& c : j.at("companies")) {
      UniverseEntry e;
      e.ticker = c.at("ticker").get<std::string>();
      e.name = c.value("name", e.ticker);
      e.aliases = c.value("aliases", std::vector<std::string>{});
      e.sector = c.at("sector").get<std::string>();
      u.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::kParse, fmt::format("universe: {}", ex.what()));
  }
  u.validate();
  return u;
}

Universe load_universe(const std::filesystem::path& path) {
  auto in = csv::open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_universe(ss.str());
}

Benchmark market_benchmark(const Universe& universe, const PriceStore& prices) {
  if (!universe.market_index.empty()) {
    if (auto it = prices.find(universe.market_index); it != prices.end()) {
      return Benchmark::from_series(it->second);
    }
  }
  std::vector<const PriceSeries*> members;
  for (const auto& e : universe.entries) {
    if (auto it = prices.find(e.ticker); it != prices.end()) members.push_back(&it->second);
  }
  return Benchmark::equal_weighted("equal-weighted-universe", std::move(members));
}

Benchmark sector_benchmark(const Universe& universe, const PriceStore& prices, std::string_view sector) {
  auto idx = universe.sector_indices.find(sector);
  if (idx == universe.sector_indices.end()) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("sector '{}' has no index mapping", sector));
  }
  auto it = prices.find(idx->second);
  if (it == prices.end()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("sector index '{}' for '{}' has no price series", idx->second, sector));
  }
  return Benchmark::from_series(it->second);
}

}  // namespace equirate

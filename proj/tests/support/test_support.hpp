#pragma once

// Shared fixtures and independent reference implementations for tests.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "equirate/dates.hpp"
#include "equirate/market_data.hpp"

namespace equirate::testing {

inline std::filesystem::path data_dir() { return EQUIRATE_TEST_DATA; }

inline Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline YearMonth ym(int y, unsigned m) { return YearMonth{std::chrono::year{y}, std::chrono::month{m}}; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("equirate-" + tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline bool is_weekday(Date d) {
  const std::chrono::weekday w{std::chrono::sys_days{d}};
  return w != std::chrono::Saturday && w != std::chrono::Sunday;
}

// Weekday series from `start` for `days` calendar days with prices from fn(i).
template <class F>
PriceSeries weekday_series(const std::string& id, Date start, int days, F&& price_of_index) {
  std::vector<PriceObservation> obs;
  int i = 0;
  for (auto d = std::chrono::sys_days{start}; d < std::chrono::sys_days{start} + std::chrono::days{days};
       d += std::chrono::days{1}) {
    if (is_weekday(Date{d})) obs.push_back({Date{d}, price_of_index(i++)});
  }
  return PriceSeries(id, std::move(obs));
}

namespace oracle {

// Calendar-month shift with day clamped to the target month's length.
inline Date shift_months(Date d, int months) {
  const int total = static_cast<int>(d.year()) * 12 + static_cast<int>(static_cast<unsigned>(d.month())) - 1 + months;
  const std::chrono::year y{total / 12};
  const std::chrono::month m{static_cast<unsigned>(total % 12 + 1)};
  const auto last = std::chrono::year_month_day_last{y, std::chrono::month_day_last{m}}.day();
  const auto day = std::min(d.day(), last);
  return Date{y, m, day};
}

inline long day_number(Date d) { return std::chrono::sys_days{d}.time_since_epoch().count(); }

// Linear scan: last observation dated on or before d.
inline const PriceObservation* last_on_or_before(const std::vector<PriceObservation>& obs, Date d) {
  const PriceObservation* best = nullptr;
  for (const auto& o : obs) {
    if (day_number(o.date) <= day_number(d)) best = &o;
  }
  return best;
}

inline double trailing(const std::vector<PriceObservation>& obs, Date as_of, int months) {
  const auto* end = last_on_or_before(obs, as_of);
  const auto* start = last_on_or_before(obs, shift_months(as_of, -months));
  return (end->adj_close - start->adj_close) / start->adj_close;
}

struct Snapshot {
  double price, lo, hi, vol, r1, r3, r12;
};

inline Snapshot snapshot(const std::vector<PriceObservation>& obs, Date as_of) {
  Snapshot s{};
  s.price = last_on_or_before(obs, as_of)->adj_close;
  s.lo = s.price;
  s.hi = s.price;
  const long a = day_number(as_of);
  std::vector<long double> rets;
  const PriceObservation* prev = nullptr;
  for (const auto& o : obs) {
    const long n = day_number(o.date);
    if (n >= a - 365 && n <= a) {
      s.lo = std::min(s.lo, o.adj_close);
      s.hi = std::max(s.hi, o.adj_close);
    }
    if (n >= a - 90 && n <= a) {
      if (prev) rets.push_back((static_cast<long double>(o.adj_close) - prev->adj_close) / prev->adj_close);
      prev = &o;
    }
  }
  long double sum = 0, sq = 0;
  for (auto r : rets) {
    sum += r;
    sq += r * r;
  }
  const long double n = static_cast<long double>(rets.size());
  s.vol = static_cast<double>(std::sqrt((sq - sum * sum / n) / (n - 1)));
  s.r1 = trailing(obs, as_of, 1);
  s.r3 = trailing(obs, as_of, 3);
  s.r12 = trailing(obs, as_of, 12);
  return s;
}

// Sort by (value, id), then bucket = floor(rank * k / n).
inline std::map<std::string, int> quintiles(const std::map<std::string, double>& returns, int k = 5) {
  std::vector<std::pair<double, std::string>> v;
  for (const auto& [id, r] : returns) v.emplace_back(r, id);
  std::sort(v.begin(), v.end());
  std::map<std::string, int> out;
  const long n = static_cast<long>(v.size());
  for (long rank = 0; rank < n; ++rank) out[v[static_cast<std::size_t>(rank)].second] = static_cast<int>(rank * k / n);
  return out;
}

// Ranks by counting: 1 + #less + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double y : x) {
      if (y < x[i]) ++less;
      if (y == x[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= rx.size();
  my /= ry.size();
  long double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return static_cast<double>(num / std::sqrt(dx * dy));
}

// Expected |i - j| for independent uniform draws over five classes.
inline double uniform_ordinal_mae() {
  int total = 0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) total += std::abs(i - j);
  }
  return total / 25.0;
}

}  // namespace oracle
}  // namespace equirate::testing

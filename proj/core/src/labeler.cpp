#include "equirate/labeler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "equirate/error.hpp"

namespace equirate {

std::string_view to_string(LabelMode mode) {
  return mode == LabelMode::kAbsolute ? "absolute" : "sector-relative";
}

LabelMode parse_label_mode(std::string_view text) {
  if (text == "absolute") return LabelMode::kAbsolute;
  if (text == "sector-relative") return LabelMode::kSectorRelative;
  throw Error(ErrorKind::kParse, fmt::format("unknown label mode '{}'", text));
}

std::map<std::string, int> assign_quantiles(const std::map<std::string, double>& returns, int buckets) {
  if (buckets < 1) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("bucket count {} < 1", buckets));
  }
  const auto n = returns.size();
  if (n < static_cast<std::size_t>(buckets)) {
    throw Error(ErrorKind::kTooFewCompanies, fmt::format("{} companies for {} buckets", n, buckets));
  }
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(n);
  for (const auto& [id, r] : returns) {
    if (!std::isfinite(r)) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("non-finite return for '{}'", id));
    }
    ranked.emplace_back(r, &id);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  });
  std::map<std::string, int> out;
  for (std::size_t r = 0; r < n; ++r) {
    out.emplace(*ranked[r].second, static_cast<int>(r * static_cast<std::size_t>(buckets) / n));
  }
  return out;
}

OrdinalRating quantile_to_rating(int quintile) {
  if (quintile < 0 || quintile >= kQuintiles) {
    throw Error(ErrorKind::kOutOfRange, fmt::format("quintile {} outside [0, 4]", quintile));
  }
  return OrdinalRating::from_int(quintile - 2);
}

int rating_to_quantile(OrdinalRating rating) { return rating.value() + 2; }

LabelSet label_universe(const PriceStore& prices, const Universe& universe, Date rating_date,
                        int horizon_months, LabelMode mode, int buckets) {
  LabelSet set;
  std::map<std::string, double> returns;
  std::map<std::string, double> sector_returns;  // memo per sector

  for (const auto& e : universe.entries) {
    auto it = prices.find(e.ticker);
    if (it == prices.end()) {
      set.excluded.push_back({e.ticker, "no price series"});
      continue;
    }
    double r = 0.0;
    try {
      r = compute_return(it->second, rating_date, horizon_months);
    } catch (const Error& err) {
      set.excluded.push_back({e.ticker, err.what()});
      continue;
    }
    if (mode == LabelMode::kSectorRelative) {
      auto memo = sector_returns.find(e.sector);
      if (memo == sector_returns.end()) {
        try {
          const auto bench = sector_benchmark(universe, prices, e.sector);
          memo = sector_returns.emplace(e.sector, bench.forward_return(rating_date, horizon_months)).first;
        } catch (const Error& err) {
          set.excluded.push_back({e.ticker, err.what()});
          continue;
        }
      }
      r = compute_relative_return(r, memo->second);
    }
    returns.emplace(e.ticker, r);
  }

  const auto buckets_by_company = assign_quantiles(returns, buckets);
  set.labels.reserve(buckets_by_company.size());
  for (const auto& [company, q] : buckets_by_company) {
    QuantileLabel label;
    label.company = company;
    label.rating_date = rating_date;
    label.horizon_months = horizon_months;
    label.mode = mode;
    label.quintile = q;
    // For k != 5 the bucket still maps onto the five-level scale only when
    // it is in range; callers using other k read `quintile` directly.
    label.truth = buckets == kQuintiles ? quantile_to_rating(q) : OrdinalRating{};
    label.forward_return = returns.at(company);
    set.labels.push_back(std::move(label));
  }
  return set;
}

bool rating_correct(const RatingCell& rating, const QuantileLabel& label) {
  if (rating.company != label.company || rating.rating_date != label.rating_date ||
      rating.horizon_months != label.horizon_months) {
    throw Error(ErrorKind::kKeyMismatch,
                fmt::format("rating ({}, {}, {}m) vs label ({}, {}, {}m)", rating.company, rating.rating_date,
                            rating.horizon_months, label.company, label.rating_date, label.horizon_months));
  }
  return rating.rating == label.truth;
}

void write_labels_csv(std::ostream& out, const std::vector<QuantileLabel>& labels) {
  out << "company,rating_date,horizon_months,mode,quintile,truth_rating\n";
  for (const auto& l : labels) {
    out << fmt::format("{},{},{},{},{},{}\n", l.company, l.rating_date, l.horizon_months, to_string(l.mode),
                       l.quintile, l.truth.value());
  }
}

}  // namespace equirate

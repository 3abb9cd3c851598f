#include "equirate/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "equirate/error.hpp"

namespace equirate {
namespace {

MaeStat summarize_errors(std::span<const double> errors) {
  MaeStat s;
  s.n = errors.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double e : errors) sum += e;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double e : errors) ss += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

using CellKey = std::tuple<std::string, Date, int>;

}  // namespace

MaeStat mae(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} predictions vs {} truths", predictions.size(), truths.size()));
  }
  if (predictions.empty()) throw Error(ErrorKind::kEmptyInput, "no predictions to score");
  std::vector<double> errors(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    errors[i] = std::abs(static_cast<double>(predictions[i] - truths[i]));
  }
  return summarize_errors(errors);
}

MaeStat mae(std::span<const OrdinalRating> predictions, std::span<const OrdinalRating> truths) {
  std::vector<int> p(predictions.size()), t(truths.size());
  std::transform(predictions.begin(), predictions.end(), p.begin(), [](OrdinalRating r) { return r.value(); });
  std::transform(truths.begin(), truths.end(), t.begin(), [](OrdinalRating r) { return r.value(); });
  return mae(p, t);
}

double composite_error(const std::map<int, double>& mae_by_horizon) {
  double sum = 0.0;
  for (int h : kCompositeHorizons) {
    auto it = mae_by_horizon.find(h);
    if (it == mae_by_horizon.end()) {
      throw Error(ErrorKind::kMissingHorizon, fmt::format("no {}-month MAE for the composite", h));
    }
    sum += it->second;
  }
  return sum / static_cast<double>(kCompositeHorizons.size());
}

std::array<double, 5> RatingDistribution::proportions() const {
  std::array<double, 5> p{};
  if (total == 0) return p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return p;
}

RatingDistribution rating_distribution(std::span<const OrdinalRating> ratings) {
  RatingDistribution d;
  for (auto r : ratings) ++d.counts[static_cast<std::size_t>(r.value() + 2)];
  d.total = ratings.size();
  return d;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorKind::kLengthMismatch, fmt::format("{} vs {} values", xs.size(), ys.size()));
  }
  if (xs.size() < 2) throw Error(ErrorKind::kEmptyInput, "spearman needs at least two pairs");
  for (double v : xs) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "non-finite value");
  }
  for (double v : ys) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "non-finite value");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::kDegenerate, "constant input, rank correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MonthlyTable monthly_breakdown(std::span<const RatingCell> cells, std::span<const QuantileLabel> labels) {
  std::map<std::pair<CellKey, LabelMode>, int> truth;
  for (const auto& l : labels) truth[{CellKey{l.company, l.rating_date, l.horizon_months}, l.mode}] = l.truth.value();

  std::map<MonthlyKey, std::vector<double>> errors;
  for (const auto& c : cells) {
    for (auto mode : {LabelMode::kAbsolute, LabelMode::kSectorRelative}) {
      auto it = truth.find({CellKey{c.company, c.rating_date, c.horizon_months}, mode});
      if (it == truth.end()) continue;
      errors[MonthlyKey{month_of(c.rating_date), c.horizon_months, mode}].push_back(
          std::abs(static_cast<double>(c.rating.value() - it->second)));
    }
  }
  MonthlyTable table;
  for (const auto& [key, e] : errors) table.emplace(key, summarize_errors(e));
  return table;
}

std::vector<CorrelationEntry> sentiment_rating_correlations(std::string_view method,
                                                            std::span<const RatingCell> cells,
                                                            std::span<const SentimentObservation> sentiment) {
  std::map<std::pair<std::string, Date>, const SentimentObservation*> by_key;
  for (const auto& s : sentiment) by_key[{s.company, s.rating_date}] = &s;

  std::vector<CorrelationEntry> out;
  const auto add = [&](std::string pair, int horizon, const std::vector<double>& xs, const std::vector<double>& ys) {
    CorrelationEntry e{std::string(method), std::move(pair), horizon, std::nullopt, xs.size()};
    if (xs.size() >= 2) {
      try {
        e.rho = spearman(xs, ys);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kDegenerate) throw;
      }
    }
    out.push_back(std::move(e));
  };

  std::map<int, std::vector<const RatingCell*>> by_horizon;
  for (const auto& c : cells) by_horizon[c.horizon_months].push_back(&c);

  for (const auto& [h, hcells] : by_horizon) {
    std::vector<double> company, sector, rating;
    for (const auto* c : hcells) {
      auto it = by_key.find({c->company, c->rating_date});
      if (it == by_key.end()) continue;
      company.push_back(it->second->company_score);
      sector.push_back(it->second->sector_score);
      rating.push_back(c->rating.value());
    }
    add("company-sentiment~rating", h, company, rating);
    add("sector-sentiment~rating", h, sector, rating);
  }
  std::vector<double> company, sector;
  for (const auto& [_, s] : by_key) {
    company.push_back(s->company_score);
    sector.push_back(s->sector_score);
  }
  add("company-sentiment~sector-sentiment", 0, company, sector);
  return out;
}

EvaluationReport build_report(std::span<const MethodCells> methods, std::span<const QuantileLabel> labels,
                              const std::map<std::string, std::vector<SentimentObservation>>& sentiment) {
  std::map<std::pair<CellKey, LabelMode>, int> truth;
  for (const auto& l : labels) truth[{CellKey{l.company, l.rating_date, l.horizon_months}, l.mode}] = l.truth.value();

  EvaluationReport report;
  for (const auto& m : methods) {
    MethodEvaluation ev;
    ev.method = m.method;
    ev.predictions = m.cells.size();
    std::map<std::pair<int, LabelMode>, std::vector<double>> errors;
    std::vector<OrdinalRating> ratings;
    for (const auto& c : m.cells) {
      ratings.push_back(c.rating);
      bool any = false;
      for (auto mode : {LabelMode::kAbsolute, LabelMode::kSectorRelative}) {
        auto it = truth.find({CellKey{c.company, c.rating_date, c.horizon_months}, mode});
        if (it == truth.end()) continue;
        any = true;
        errors[{c.horizon_months, mode}].push_back(std::abs(static_cast<double>(c.rating.value() - it->second)));
      }
      if (!any) ++ev.unlabeled;
    }
    for (const auto& [key, e] : errors) ev.mae.emplace(key, summarize_errors(e));
    for (auto mode : {LabelMode::kAbsolute, LabelMode::kSectorRelative}) {
      std::map<int, double> by_h;
      for (const auto& [key, stat] : ev.mae) {
        if (key.second == mode) by_h[key.first] = stat.mean;
      }
      try {
        ev.composite[mode] = composite_error(by_h);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kMissingHorizon) throw;
      }
    }
    ev.monthly = monthly_breakdown(m.cells, labels);
    ev.distribution = rating_distribution(ratings);
    if (auto it = sentiment.find(m.method); it != sentiment.end()) {
      auto corr = sentiment_rating_correlations(m.method, m.cells, it->second);
      report.correlations.insert(report.correlations.end(), corr.begin(), corr.end());
    }
    report.methods.push_back(std::move(ev));
  }
  return report;
}

}  // namespace equirate

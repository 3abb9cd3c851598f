#include "equirate/report.hpp"

#include <fstream>

#include <fmt/format.h>

#include "equirate/csv.hpp"
#include "equirate/error.hpp"

namespace equirate {
namespace {

std::string num(double v) { return fmt::format("{:.6f}", v); }

nlohmann::ordered_json stat_json(const MaeStat& s) { return {{"mae", s.mean}, {"std", s.std}, {"n", s.n}}; }

MaeStat stat_from(const nlohmann::json& j) {
  return MaeStat{j.at("mae").get<double>(), j.at("std").get<double>(), j.at("n").get<std::size_t>()};
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (const auto& m : report.methods) {
    nlohmann::ordered_json mae = nlohmann::ordered_json::array();
    for (const auto& [key, stat] : m.mae) {
      auto row = stat_json(stat);
      row["horizon_months"] = key.first;
      row["mode"] = to_string(key.second);
      mae.push_back(std::move(row));
    }
    nlohmann::ordered_json composite = nlohmann::ordered_json::object();
    for (const auto& [mode, value] : m.composite) composite[std::string(to_string(mode))] = value;
    nlohmann::ordered_json monthly = nlohmann::ordered_json::array();
    for (const auto& [key, stat] : m.monthly) {
      nlohmann::ordered_json row = {{"month", format_year_month(key.month)},
                                    {"horizon_months", key.horizon_months},
                                    {"mode", to_string(key.mode)}};
      row.update(stat_json(stat));
      monthly.push_back(std::move(row));
    }
    nlohmann::ordered_json dist = nlohmann::ordered_json::object();
    for (int r : kAllRatingValues) dist[std::to_string(r)] = m.distribution.count(r);
    methods.push_back({{"method", m.method},
                       {"predictions", m.predictions},
                       {"unlabeled", m.unlabeled},
                       {"mae", std::move(mae)},
                       {"composite", std::move(composite)},
                       {"monthly", std::move(monthly)},
                       {"distribution", std::move(dist)}});
  }
  nlohmann::ordered_json corr = nlohmann::ordered_json::array();
  for (const auto& c : report.correlations) {
    corr.push_back({{"method", c.method},
                    {"pair", c.pair},
                    {"horizon_months", c.horizon_months},
                    {"rho", c.rho ? nlohmann::ordered_json(*c.rho) : nlohmann::ordered_json(nullptr)},
                    {"n", c.n}});
  }
  nlohmann::ordered_json exclusions = nlohmann::ordered_json::object();
  for (const auto& [reason, count] : report.exclusions) exclusions[reason] = count;
  return {{"schema_version", 1}, {"methods", std::move(methods)}, {"correlations", std::move(corr)},
          {"exclusions", std::move(exclusions)}};
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport report;
  try {
    for (const auto& mj : j.at("methods")) {
      MethodEvaluation m;
      m.method = mj.at("method").get<std::string>();
      m.predictions = mj.at("predictions").get<std::size_t>();
      m.unlabeled = mj.at("unlabeled").get<std::size_t>();
      for (const auto& row : mj.at("mae")) {
        m.mae.emplace(std::pair{row.at("horizon_months").get<int>(), parse_label_mode(row.at("mode").get<std::string>())},
                      stat_from(row));
      }
      for (const auto& [mode, value] : mj.at("composite").items()) m.composite[parse_label_mode(mode)] = value.get<double>();
      for (const auto& row : mj.at("monthly")) {
        m.monthly.emplace(MonthlyKey{parse_year_month(row.at("month").get<std::string>()),
                                     row.at("horizon_months").get<int>(),
                                     parse_label_mode(row.at("mode").get<std::string>())},
                          stat_from(row));
      }
      for (int r : kAllRatingValues) {
        const auto c = mj.at("distribution").at(std::to_string(r)).get<std::size_t>();
        m.distribution.counts[static_cast<std::size_t>(r + 2)] = c;
        m.distribution.total += c;
      }
      report.methods.push_back(std::move(m));
    }
    for (const auto& cj : j.at("correlations")) {
      CorrelationEntry c;
      c.method = cj.at("method").get<std::string>();
      c.pair = cj.at("pair").get<std::string>();
      c.horizon_months = cj.at("horizon_months").get<int>();
      if (!cj.at("rho").is_null()) c.rho = cj.at("rho").get<double>();
      c.n = cj.at("n").get<std::size_t>();
      report.correlations.push_back(std::move(c));
    }
    for (const auto& [reason, count] : j.at("exclusions").items()) report.exclusions[reason] = count.get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, fmt::format("report: {}", e.what()));
  }
  return report;
}

void emit_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  {
    auto out = open_output(dir / "report.json");
    out << report_to_json(report).dump(2) << '\n';
  }
  {
    auto out = open_output(dir / "monthly_mae.csv");
    out << "method,month,horizon_months,mode,mae,std,n\n";
    for (const auto& m : report.methods) {
      for (const auto& [key, s] : m.monthly) {
        out << csv::join_row({m.method, format_year_month(key.month), std::to_string(key.horizon_months),
                              std::string(to_string(key.mode)), num(s.mean), num(s.std), std::to_string(s.n)})
            << '\n';
      }
    }
  }
  {
    auto out = open_output(dir / "rating_distribution.csv");
    out << "method,rating,label,count,proportion\n";
    for (const auto& m : report.methods) {
      const auto p = m.distribution.proportions();
      for (int r : kAllRatingValues) {
        out << csv::join_row({m.method, std::to_string(r), std::string(OrdinalRating::from_int(r).name()),
                              std::to_string(m.distribution.count(r)), num(p[static_cast<std::size_t>(r + 2)])})
            << '\n';
      }
    }
  }
  {
    auto out = open_output(dir / "correlations.csv");
    out << "method,pair,horizon_months,rho,n\n";
    for (const auto& c : report.correlations) {
      out << csv::join_row({c.method, c.pair, std::to_string(c.horizon_months), c.rho ? num(*c.rho) : std::string{},
                            std::to_string(c.n)})
          << '\n';
    }
  }
}

EvaluationReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace equirate

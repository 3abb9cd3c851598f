// equirate: run the rating pipeline from a JSON experiment config.
//
// Exit status: 0 success, 1 partial (some cells failed or were excluded),
// 2 fatal (bad config, unreadable inputs).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "equirate/error.hpp"
#include "equirate/report.hpp"
#include "equirate/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kFatal = 2;

struct Overrides {
  std::string config;
  std::string output_dir;
  std::string method;
  std::string start;
  std::string end;
  std::string backend;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--output-dir", o.output_dir, "override output_dir");
  cmd->add_option("--method", o.method, "vanilla | news | sentiment | fundamentals | fundamentals-sentiment");
  cmd->add_option("--start", o.start, "first rating month (YYYY-MM)");
  cmd->add_option("--end", o.end, "last rating month (YYYY-MM)");
  cmd->add_option("--backend", o.backend, "mock | http");
  cmd->add_option("--seed", o.seed, "seed for the mock backend");
  cmd->add_option("--concurrency", o.concurrency, "max in-flight model requests");
}

equirate::ExperimentConfig load_config(const Overrides& o) {
  auto c = equirate::ExperimentConfig::load(o.config);
  if (!o.output_dir.empty()) c.output_dir = std::filesystem::absolute(o.output_dir);
  if (!o.method.empty()) c.method = equirate::parse_method(o.method);
  if (!o.start.empty()) c.start_month = equirate::parse_year_month(o.start);
  if (!o.end.empty()) c.end_month = equirate::parse_year_month(o.end);
  if (!o.backend.empty()) c.gateway.backend = o.backend;
  if (o.seed) c.seed = *o.seed;
  if (o.concurrency) c.gateway.concurrency = *o.concurrency;
  c.validate();
  return c;
}

int news_status(const equirate::NewsPipeline::Stats& s, std::string_view what) {
  fmt::print("{}: {} computed, {} cached, {} empty\n", what, s.computed, s.cached, s.empty);
  for (const auto& [kind, n] : s.failures) fmt::print(stderr, "  {} failed: {}\n", n, kind);
  return s.failures.empty() ? kOk : kPartial;
}

void print_report(const equirate::EvaluationReport& r) {
  for (const auto& m : r.methods) {
    fmt::print("{} ({} predictions)\n", m.method, m.predictions);
    for (const auto& [key, s] : m.mae) {
      fmt::print("  {:>2}m {:<15} MAE {:.3f} +/- {:.3f}  n={}\n", key.first, equirate::to_string(key.second), s.mean,
                 s.std, s.n);
    }
    for (const auto& [mode, v] : m.composite) fmt::print("  composite {:<15} {:.3f}\n", equirate::to_string(mode), v);
  }
  for (const auto& [reason, n] : r.exclusions) fmt::print("excluded {}: {}\n", reason, n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stock rating experiments with chat models"};
  app.require_subcommand(1);

  Overrides o;
  auto* ingest = app.add_subcommand("ingest", "validate inputs and write ingest summaries");
  auto* summarize = app.add_subcommand("summarize", "summarize monthly company and sector news");
  auto* score = app.add_subcommand("score-sentiment", "score news summaries from -5 to 5");
  auto* predict = app.add_subcommand("predict", "generate ratings for every planned cell (resumable)");
  auto* evaluate = app.add_subcommand("evaluate", "score stored ratings against quantile labels");
  auto* report = app.add_subcommand("report", "print a stored evaluation and optionally re-emit its files");
  for (auto* cmd : {ingest, summarize, score, predict, evaluate, report}) add_common(cmd, o);
  std::string report_out;
  report->add_option("--out", report_out, "directory to write the report files to");

  auto* templates = app.add_subcommand("templates", "write the built-in prompt templates for editing");
  std::string templates_out;
  templates->add_option("--out", templates_out, "target directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*templates) {
      equirate::TemplateSet::defaults().write_all(templates_out);
      fmt::print("templates written to {}\n", templates_out);
      return kOk;
    }

    const auto config = load_config(o);
    const equirate::OutputLayout layout{config.output_dir};

    if (*report) {
      const auto r = equirate::load_report(layout.evaluation() / "report.json");
      print_report(r);
      if (!report_out.empty()) equirate::emit_report(r, report_out);
      return kOk;
    }

    const auto data = equirate::load_experiment_data(config);

    if (*ingest) {
      const auto s = equirate::run_ingest(config, data);
      fmt::print("{} companies, {} price series ({} observations), {} articles, {} filing rows\n", s.companies,
                 s.price_series, s.price_observations, s.articles, s.filing_rows);
      if (s.ratings) {
        fmt::print("analyst ratings: {} accepted, {} quarantined, {} rejected\n", s.ratings->events.size(),
                   s.ratings->quarantined.size(), s.ratings->rejected.size());
        if (!s.ratings->quarantined.empty() || !s.ratings->rejected.empty()) return kPartial;
      }
      return kOk;
    }
    if (*summarize || *score) {
      const auto r = equirate::run_news_stage(config, data, static_cast<bool>(*score));
      int status = news_status(r.summaries, "summaries");
      if (*score) status = std::max(status, news_status(r.sentiment, "sentiment"));
      return status;
    }
    if (*predict) {
      const auto m = equirate::run_experiment(config, data);
      fmt::print("{} cells planned ({} ratings), {} resumed, {} new records, {} ok, {} date mismatch, {} malformed, "
                 "{} failed, {} model calls\n",
                 m.planned_cells, m.expected_ratings, m.resumed, m.new_records, m.ok, m.date_mismatch, m.malformed,
                 m.failures.size(), m.gateway_calls);
      for (const auto& f : m.failures) {
        fmt::print(stderr, "  {} {}: {}\n", f.company, equirate::format_date(f.rating_date), f.message);
      }
      if (m.temporal_violations > 0) {
        fmt::print(stderr, "{} records used data dated on or after their rating date\n", m.temporal_violations);
        return kFatal;
      }
      return m.partial() ? kPartial : kOk;
    }
    if (*evaluate) {
      const auto r = equirate::evaluate_experiment(config, data);
      equirate::emit_report(r, layout.evaluation());
      print_report(r);
      return kOk;
    }
  } catch (const equirate::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFatal;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFatal;
  }
  return kFatal;
}

#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "equirate/dates.hpp"

namespace equirate {

struct FilingRow {
  std::string ticker;
  Date period_end;
  Date filing_date;
  std::string metric;
  std::optional<double> value;  // empty cell -> absent
};

struct MetricDefinition {
  std::string name;
  std::string description;
};

// Ordered metric catalogue; the order is the row order of rendered tables.
class MetricCatalog {
 public:
  MetricCatalog() = default;
  explicit MetricCatalog(std::vector<MetricDefinition> definitions);

  // revenue, net income, EPS, operating cash flow, total assets, total
  // liabilities, stockholders' equity, shares outstanding, ROA, gross margin.
  static MetricCatalog defaults();
  // JSON: {"metrics": [{"name": ..., "description": ...}, ...]}
  static MetricCatalog load(const std::filesystem::path& path);

  const std::vector<MetricDefinition>& definitions() const { return defs_; }
  const MetricDefinition* find(std::string_view name) const;

 private:
  std::vector<MetricDefinition> defs_;
};

struct FundamentalsQuarter {
  std::string label;  // fiscal period label (period-end date)
  Date period_end;
  Date filing_date;
  std::map<std::string, double, std::less<>> metrics;
};

struct FundamentalsTable {
  static constexpr std::size_t kMaxQuarters = 4;

  std::string ticker;
  Date as_of;
  std::vector<FundamentalsQuarter> quarters;  // oldest first
  std::vector<MetricDefinition> definitions;  // catalogue order
  std::vector<std::string> ignored_metrics;   // present in filings, not in the catalogue

  // At most four quarters, every filing dated before as-of, every metric
  // defined. Throws Error(kLeakage) or Error(kInvalidArgument).
  void validate() const;
  Date latest_filing_date() const;
};

// Selects up to the four most recent filings with filing_date < as_of. A
// filing is the set of rows sharing (period_end, filing_date); a restated
// period keeps only its latest visible filing. Metrics outside the catalogue
// are listed in `ignored_metrics`. Throws Error(kNoFilings).
FundamentalsTable ingest_fundamentals(const std::vector<FilingRow>& rows, std::string_view ticker, Date as_of,
                                      const MetricCatalog& catalog = MetricCatalog::defaults());

// Deterministic HTML table: metrics as rows in catalogue order, quarters as
// columns oldest to newest, thousands separators, "N/A" for absent cells.
// Re-validates the table (leakage check) on every call.
std::string render_fundamentals_html(const FundamentalsTable& table);

// "1,234,567", "-0.0512", "2.18"
std::string format_metric_value(double value);

// CSV `ticker,period_end,filing_date,metric,value`.
std::vector<FilingRow> read_filing_rows(std::istream& in);
std::vector<FilingRow> load_filing_rows(const std::filesystem::path& path);

}  // namespace equirate

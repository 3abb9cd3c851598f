#include "equirate/fundamentals.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "equirate/csv.hpp"
#include "equirate/error.hpp"

namespace equirate {

MetricCatalog::MetricCatalog(std::vector<MetricDefinition> definitions) : defs_(std::move(definitions)) {
  std::set<std::string_view> seen;
  for (const auto& d : defs_) {
    if (!seen.insert(d.name).second) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("metric '{}' defined twice", d.name));
    }
  }
}

MetricCatalog MetricCatalog::defaults() {
  return MetricCatalog({
      {"revenue", "Total revenue recognized in the quarter (USD)."},
      {"net_income", "Profit after all expenses, interest and taxes for the quarter (USD)."},
      {"eps", "Diluted earnings per share: net income divided by diluted shares (USD per share)."},
      {"operating_cash_flow", "Cash generated by normal business operations in the quarter (USD)."},
      {"total_assets", "Everything the company owns at period end (USD)."},
      {"total_liabilities", "Everything the company owes at period end (USD)."},
      {"stockholders_equity", "Total assets minus total liabilities at period end (USD)."},
      {"shares_outstanding", "Common shares outstanding at period end."},
      {"return_on_assets", "Net income divided by total assets (fraction)."},
      {"gross_margin", "Revenue minus cost of revenue, divided by revenue (fraction)."},
  });
}

MetricCatalog MetricCatalog::load(const std::filesystem::path& path) {
  auto in = csv::open_input(path);
  std::vector<MetricDefinition> defs;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& m : j.at("metrics")) {
      defs.push_back({m.at("name").get<std::string>(), m.at("description").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::kParse, fmt::format("{}: {}", path.string(), ex.what()));
  }
  return MetricCatalog(std::move(defs));
}

const MetricDefinition* MetricCatalog::find(std::string_view name) const {
  auto it = std::find_if(defs_.begin(), defs_.end(), [&](const auto& d) { return d.name == name; });
  return it == defs_.end() ? nullptr : &*it;
}

// ---------------------------------------------------------------------------

void FundamentalsTable::validate() const {
  if (quarters.size() > kMaxQuarters) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("{}: {} quarters, at most 4", ticker, quarters.size()));
  }
  for (const auto& q : quarters) {
    if (!(q.filing_date < as_of) || !(q.period_end < as_of)) {
      throw Error(ErrorKind::kLeakage, fmt::format("{}: quarter {} filed {} is not before as-of {}", ticker,
                                                   q.label, q.filing_date, as_of));
    }
    for (const auto& [metric, v] : q.metrics) {
      const bool defined = std::any_of(definitions.begin(), definitions.end(),
                                       [&](const auto& d) { return d.name == metric; });
      if (!defined) {
        throw Error(ErrorKind::kInvalidArgument, fmt::format("{}: metric '{}' has no definition", ticker, metric));
      }
    }
  }
}

Date FundamentalsTable::latest_filing_date() const {
  Date latest{};
  for (const auto& q : quarters) latest = std::max(latest, q.filing_date);
  return latest;
}

FundamentalsTable ingest_fundamentals(const std::vector<FilingRow>& rows, std::string_view ticker, Date as_of,
                                      const MetricCatalog& catalog) {
  // Latest visible filing per period end.
  std::map<Date, Date> filing_for_period;
  for (const auto& r : rows) {
    if (r.ticker != ticker || !(r.filing_date < as_of) || !(r.period_end < as_of)) continue;
    auto [it, inserted] = filing_for_period.emplace(r.period_end, r.filing_date);
    if (!inserted && it->second < r.filing_date) it->second = r.filing_date;
  }
  if (filing_for_period.empty()) {
    throw Error(ErrorKind::kNoFilings, fmt::format("{}: no filings before {}", ticker, as_of));
  }

  std::vector<std::pair<Date, Date>> filings(filing_for_period.begin(), filing_for_period.end());
  // Most recent by filing date, period end as tiebreak.
  std::sort(filings.begin(), filings.end(),
            [](const auto& a, const auto& b) { return std::tie(a.second, a.first) > std::tie(b.second, b.first); });
  if (filings.size() > FundamentalsTable::kMaxQuarters) filings.resize(FundamentalsTable::kMaxQuarters);
  std::sort(filings.begin(), filings.end());  // oldest period first

  FundamentalsTable table;
  table.ticker = std::string(ticker);
  table.as_of = as_of;
  std::set<std::string> ignored;
  for (const auto& [period_end, filing_date] : filings) {
    FundamentalsQuarter q;
    q.label = format_date(period_end);
    q.period_end = period_end;
    q.filing_date = filing_date;
    for (const auto& r : rows) {
      if (r.ticker != ticker || r.period_end != period_end || r.filing_date != filing_date) continue;
      if (catalog.find(r.metric) == nullptr) {
        ignored.insert(r.metric);
        continue;
      }
      if (r.value) q.metrics.insert_or_assign(r.metric, *r.value);
    }
    table.quarters.push_back(std::move(q));
  }
  table.definitions = catalog.definitions();
  table.ignored_metrics.assign(ignored.begin(), ignored.end());
  table.validate();
  return table;
}

// ---------------------------------------------------------------------------

namespace {

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string group_thousands(std::string_view digits) {
  std::string out;
  const auto n = digits.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

}  // namespace

std::string format_metric_value(double value) {
  if (!std::isfinite(value)) return "N/A";
  // Four decimals, trailing zeros trimmed; integral values print without a point.
  std::string text = fmt::format("{:.4f}", std::abs(value));
  text.erase(text.find_last_not_of('0') + 1);
  if (text.back() == '.') text.pop_back();
  if (text == "0") return "0";
  const auto dot = text.find('.');
  std::string out = value < 0 ? "-" : "";
  out += group_thousands(std::string_view(text).substr(0, dot));
  if (dot != std::string::npos) out += text.substr(dot);
  return out;
}

std::string render_fundamentals_html(const FundamentalsTable& table) {
  table.validate();
  std::string html;
  html += fmt::format("<table class=\"fundamentals\" data-ticker=\"{}\">\n", html_escape(table.ticker));
  html += "<thead>\n<tr><th>Metric</th>";
  for (const auto& q : table.quarters) html += fmt::format("<th>{}</th>", html_escape(q.label));
  html += "</tr>\n</thead>\n<tbody>\n";
  for (const auto& def : table.definitions) {
    const bool present = std::any_of(table.quarters.begin(), table.quarters.end(),
                                     [&](const auto& q) { return q.metrics.contains(def.name); });
    if (!present) continue;
    html += fmt::format("<tr><td>{}</td>", html_escape(def.name));
    for (const auto& q : table.quarters) {
      auto it = q.metrics.find(def.name);
      html += fmt::format("<td>{}</td>", it == q.metrics.end() ? std::string("N/A") : format_metric_value(it->second));
    }
    html += "</tr>\n";
  }
  html += "</tbody>\n</table>\n";
  return html;
}

// ---------------------------------------------------------------------------

std::vector<FilingRow> read_filing_rows(std::istream& in) {
  csv::Reader reader(in);
  reader.read_header();
  reader.require_columns({"ticker", "period_end", "filing_date", "metric", "value"});
  const auto c_ticker = *reader.column("ticker");
  const auto c_period = *reader.column("period_end");
  const auto c_filed = *reader.column("filing_date");
  const auto c_metric = *reader.column("metric");
  const auto c_value = *reader.column("value");
  std::vector<FilingRow> rows;
  while (auto r = reader.next_row()) {
    if (r->size() <= std::max({c_ticker, c_period, c_filed, c_metric, c_value})) {
      throw Error(ErrorKind::kParse, fmt::format("fundamentals line {}: too few fields", reader.line()));
    }
    FilingRow row;
    row.ticker = (*r)[c_ticker];
    row.period_end = parse_date((*r)[c_period]);
    row.filing_date = parse_date((*r)[c_filed]);
    row.metric = (*r)[c_metric];
    const auto& v = (*r)[c_value];
    if (!v.empty() && v != "NA" && v != "N/A") {
      try {
        std::size_t used = 0;
        row.value = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParse, fmt::format("fundamentals line {}: bad value '{}'", reader.line(), v));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<FilingRow> load_filing_rows(const std::filesystem::path& path) {
  auto in = csv::open_input(path);
  return read_filing_rows(in);
}

}  // namespace equirate

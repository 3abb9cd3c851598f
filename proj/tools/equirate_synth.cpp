// equirate-synth: write a synthetic dataset (prices, news, filings, analyst
// ratings) and a matching experiment config.

#include <CLI11.hpp>
#include <fmt/format.h>

#include "equirate/error.hpp"
#include "equirate/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic equirate dataset"};
  equirate::SyntheticOptions o;
  std::string out;
  std::string start = "2022-01";
  std::string end = "2022-06";
  app.add_option("--out", out, "target directory")->required();
  app.add_option("--companies", o.companies, "number of companies")->capture_default_str();
  app.add_option("--sectors", o.sectors, "number of sectors (1-5)")->capture_default_str();
  app.add_option("--start", start, "first rating month")->capture_default_str();
  app.add_option("--end", end, "last rating month")->capture_default_str();
  app.add_option("--seed", o.seed, "random seed")->capture_default_str();
  app.add_option("--articles", o.articles_per_month, "articles per company and month")->capture_default_str();
  app.add_option("--short-history", o.short_history, "companies with only 3 months of history");
  app.add_option("--method", o.method, "method written to config.json")->capture_default_str();
  app.add_flag("--poison", o.poison, "add rating-date news and filings that must never reach a prompt");
  app.add_flag("!--no-market-index", o.market_index, "omit the market index series");
  CLI11_PARSE(app, argc, argv);

  try {
    o.start_month = equirate::parse_year_month(start);
    o.end_month = equirate::parse_year_month(end);
    equirate::write_synthetic_dataset(o, out);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  fmt::print("dataset written to {}\n", out);
  return 0;
}

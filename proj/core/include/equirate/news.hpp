#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equirate/dates.hpp"
#include "equirate/gateway.hpp"
#include "equirate/templates.hpp"

namespace equirate {

struct Article {
  std::optional<std::string> ticker_hint;
  Date published;
  std::string url;
  std::string title;
  std::string body;  // empty -> counted as missing
};

struct CompanyIdentity {
  std::string ticker;
  std::string name;
  std::vector<std::string> aliases;
};

// Decides whether an article is about a company. The lexical default can be
// swapped for an entity-recognition model.
class RelevanceMatcher {
 public:
  virtual ~RelevanceMatcher() = default;
  virtual bool is_relevant(const Article& article, const CompanyIdentity& company) const = 0;
};

// Whole-token, case-insensitive match of the name or any alias in the title
// or body.
class LexicalMatcher : public RelevanceMatcher {
 public:
  bool is_relevant(const Article& article, const CompanyIdentity& company) const override;
};

// True when `phrase` occurs in `text` bounded by non-alphanumerics.
bool contains_whole_phrase(std::string_view text, std::string_view phrase);

std::vector<Article> filter_relevant_articles(std::span<const Article> articles, const CompanyIdentity& company,
                                              const RelevanceMatcher& matcher);
std::vector<Article> filter_relevant_articles(std::span<const Article> articles, std::string_view company_name,
                                              std::span<const std::string> aliases);

enum class ScopeKind { kCompany, kSector };

struct NewsScope {
  ScopeKind kind = ScopeKind::kCompany;
  std::string id;  // ticker or sector id

  static NewsScope company(std::string ticker) { return {ScopeKind::kCompany, std::move(ticker)}; }
  static NewsScope sector(std::string sector_id) { return {ScopeKind::kSector, std::move(sector_id)}; }

  // "company:AAPL", "sector:Technology"
  std::string key() const;
  static NewsScope parse(std::string_view key);

  auto operator<=>(const NewsScope&) const = default;
};

struct BundleStats {
  std::size_t article_count = 0;
  std::size_t char_count = 0;  // body code points
  std::size_t token_estimate = 0;  // ceil(char_count / 4)
  std::size_t url_count = 0;  // distinct non-empty URLs
  std::size_t missing_count = 0;  // empty bodies

  bool operator==(const BundleStats&) const = default;
};

BundleStats compute_bundle_stats(std::span<const Article> articles);

struct NewsBundle {
  NewsScope scope;
  YearMonth month;
  std::vector<Article> articles;  // ordered by (published, url, title)
  BundleStats stats;

  bool empty() const { return articles.empty(); }
  // Binds scope, month and every article field.
  std::string digest() const;
};

// Keeps articles published in `month`.
NewsBundle aggregate_monthly(std::span<const Article> articles, NewsScope scope, YearMonth month);

// Pools the relevant articles of every sector member into one bundle. An
// article relevant to several members is counted once.
NewsBundle aggregate_sector(std::span<const Article> articles, std::string sector_id,
                            std::span<const CompanyIdentity> members, YearMonth month,
                            const RelevanceMatcher& matcher);

struct Summary {
  NewsScope scope;
  YearMonth month;
  std::string text;
  std::string source_digest;
};

struct SentimentScore {
  NewsScope scope;
  YearMonth month;
  int score = 0;
  std::string source_digest;
};

struct SummarizeOptions {
  // Articles per summarizer call when the bundle does not fit the budget;
  // 0 derives it from the budget.
  std::size_t max_articles_per_call = 0;
  // Token budget for one summarizer call; 0 uses the gateway's context budget.
  std::size_t token_budget = 0;
  // Display name for company scopes (defaults to the ticker).
  std::string subject_name;
};

// One summarizer call when the bundle fits the budget; otherwise one call per
// chunk of articles and a final call merging the chunk summaries.
// Throws Error(kEmptyBundle).
Summary summarize(const NewsBundle& bundle, Gateway& gateway, const SummarizeOptions& options = {},
                  const TemplateSet& templates = TemplateSet::defaults());

// The last integer in the reply; nullopt when none, when it has a fractional
// part or when it lies outside [-5, 5].
std::optional<int> parse_sentiment_reply(std::string_view reply);

// Retries once on an unusable reply, then throws Error(kUnparsableSentiment).
SentimentScore score_sentiment(const Summary& summary, Gateway& gateway, std::string_view subject_name = {},
                               const TemplateSet& templates = TemplateSet::defaults());

// JSONL: {"ticker","published","url","title","body"}; ticker may be null.
std::vector<Article> read_articles_jsonl(std::istream& in);
std::vector<Article> load_articles_jsonl(const std::filesystem::path& path);

// Append-only JSONL caches keyed by (scope, month, source digest).
class SummaryStore {
 public:
  explicit SummaryStore(std::filesystem::path path);
  std::optional<Summary> find(const NewsScope& scope, YearMonth month, std::string_view digest) const;
  // No-op when the key is already present.
  void put(const Summary& summary);
  std::vector<Summary> all() const;

 private:
  std::filesystem::path path_;
  std::map<std::string, Summary, std::less<>> entries_;
};

class SentimentStore {
 public:
  explicit SentimentStore(std::filesystem::path path);
  std::optional<SentimentScore> find(const NewsScope& scope, YearMonth month, std::string_view digest) const;
  void put(const SentimentScore& score);
  std::vector<SentimentScore> all() const;

 private:
  std::filesystem::path path_;
  std::map<std::string, SentimentScore, std::less<>> entries_;
};

}  // namespace equirate

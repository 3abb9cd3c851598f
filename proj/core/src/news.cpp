#include "equirate/news.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "equirate/digest.hpp"
#include "equirate/error.hpp"

namespace equirate {
namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t count_code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string format_articles(std::span<const Article> articles) {
  std::string text;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    const auto& a = articles[i];
    if (i) text += "\n\n";
    text += fmt::format("Title: {}\nDate: {}\n{}", a.title, format_date(a.published),
                        a.body.empty() ? std::string("(no article text)") : a.body);
  }
  return text;
}

std::string store_key(const NewsScope& scope, YearMonth month, std::string_view digest) {
  return fmt::format("{}|{}|{}", scope.key(), format_year_month(month), digest);
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return rows;
}

void append_jsonl(const std::filesystem::path& path, const nlohmann::json& row) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot append to '{}'", path.string()));
  out << row.dump() << '\n';
}

}  // namespace

bool contains_whole_phrase(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  const std::string hay = lower(text);
  const std::string needle = lower(phrase);
  std::size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    const bool left = pos == 0 || !is_word_char(static_cast<unsigned char>(hay[pos - 1])) ||
                      !is_word_char(static_cast<unsigned char>(needle.front()));
    const auto end = pos + needle.size();
    const bool right = end == hay.size() || !is_word_char(static_cast<unsigned char>(hay[end])) ||
                       !is_word_char(static_cast<unsigned char>(needle.back()));
    if (left && right) return true;
    ++pos;
  }
  return false;
}

bool LexicalMatcher::is_relevant(const Article& article, const CompanyIdentity& company) const {
  const auto hit = [&](std::string_view phrase) {
    return contains_whole_phrase(article.title, phrase) || contains_whole_phrase(article.body, phrase);
  };
  if (hit(company.name)) return true;
  return std::any_of(company.aliases.begin(), company.aliases.end(), hit);
}

std::vector<Article> filter_relevant_articles(std::span<const Article> articles, const CompanyIdentity& company,
                                              const RelevanceMatcher& matcher) {
  std::vector<Article> out;
  for (const auto& a : articles) {
    if (matcher.is_relevant(a, company)) out.push_back(a);
  }
  return out;
}

std::vector<Article> filter_relevant_articles(std::span<const Article> articles, std::string_view company_name,
                                              std::span<const std::string> aliases) {
  CompanyIdentity id{"", std::string(company_name), {aliases.begin(), aliases.end()}};
  return filter_relevant_articles(articles, id, LexicalMatcher{});
}

std::string NewsScope::key() const {
  return fmt::format("{}:{}", kind == ScopeKind::kCompany ? "company" : "sector", id);
}

NewsScope NewsScope::parse(std::string_view key) {
  const auto colon = key.find(':');
  if (colon != std::string_view::npos) {
    const auto kind = key.substr(0, colon);
    const auto id = std::string(key.substr(colon + 1));
    if (!id.empty()) {
      if (kind == "company") return company(id);
      if (kind == "sector") return sector(id);
    }
  }
  throw Error(ErrorKind::kParse, fmt::format("bad news scope '{}'", key));
}

BundleStats compute_bundle_stats(std::span<const Article> articles) {
  BundleStats s;
  std::set<std::string_view> urls;
  for (const auto& a : articles) {
    ++s.article_count;
    s.char_count += count_code_points(a.body);
    if (a.body.empty()) ++s.missing_count;
    if (!a.url.empty()) urls.insert(a.url);
  }
  s.url_count = urls.size();
  s.token_estimate = (s.char_count + 3) / 4;
  return s;
}

std::string NewsBundle::digest() const {
  DigestBuilder d;
  d.add(scope.key()).add(format_year_month(month)).add(std::to_string(articles.size()));
  for (const auto& a : articles) {
    d.add(a.ticker_hint.value_or("")).add(format_date(a.published)).add(a.url).add(a.title).add(a.body);
  }
  return d.hex();
}

namespace {

void sort_articles(std::vector<Article>& articles) {
  std::stable_sort(articles.begin(), articles.end(), [](const Article& a, const Article& b) {
    return std::tie(a.published, a.url, a.title) < std::tie(b.published, b.url, b.title);
  });
}

}  // namespace

NewsBundle aggregate_monthly(std::span<const Article> articles, NewsScope scope, YearMonth month) {
  NewsBundle b;
  b.scope = std::move(scope);
  b.month = month;
  for (const auto& a : articles) {
    if (month_of(a.published) == month) b.articles.push_back(a);
  }
  sort_articles(b.articles);
  b.stats = compute_bundle_stats(b.articles);
  return b;
}

NewsBundle aggregate_sector(std::span<const Article> articles, std::string sector_id,
                            std::span<const CompanyIdentity> members, YearMonth month,
                            const RelevanceMatcher& matcher) {
  std::vector<Article> pooled;
  for (const auto& a : articles) {
    if (month_of(a.published) != month) continue;
    const bool relevant = std::any_of(members.begin(), members.end(),
                                      [&](const CompanyIdentity& c) { return matcher.is_relevant(a, c); });
    if (relevant) pooled.push_back(a);
  }
  return aggregate_monthly(pooled, NewsScope::sector(std::move(sector_id)), month);
}

Summary summarize(const NewsBundle& bundle, Gateway& gateway, const SummarizeOptions& options,
                  const TemplateSet& templates) {
  if (bundle.empty()) {
    throw Error(ErrorKind::kEmptyBundle,
                fmt::format("no articles for {} in {}", bundle.scope.key(), format_year_month(bundle.month)));
  }
  const bool company = bundle.scope.kind == ScopeKind::kCompany;
  const std::string name = options.subject_name.empty() ? bundle.scope.id : options.subject_name;
  const std::string month = month_name_year(bundle.month);
  const std::string& system = templates.get("summarizer_system");

  const auto ask = [&](std::span<const Article> chunk) {
    const auto user = company ? templates.render("summarizer_company", {{"name", name},
                                                                        {"id", bundle.scope.id},
                                                                        {"month", month},
                                                                        {"articles", format_articles(chunk)}})
                              : templates.render("summarizer_sector", {{"id", bundle.scope.id},
                                                                       {"month", month},
                                                                       {"articles", format_articles(chunk)}});
    return gateway.chat(system, user);
  };

  const std::size_t budget = options.token_budget ? options.token_budget : gateway.settings().context_token_budget;
  const std::size_t n = bundle.articles.size();
  const std::size_t full_tokens = (format_articles(bundle.articles).size() + system.size() + 3) / 4;

  std::size_t per_call = n;
  if (options.max_articles_per_call > 0 && options.max_articles_per_call < n) {
    per_call = options.max_articles_per_call;
  } else if (full_tokens > budget) {
    const std::size_t avg = std::max<std::size_t>(1, full_tokens / n);
    per_call = std::clamp<std::size_t>(budget / avg, 1, n);
    if (per_call == n) per_call = std::max<std::size_t>(1, n / 2);
  }

  Summary s{bundle.scope, bundle.month, {}, bundle.digest()};
  const std::span<const Article> all(bundle.articles);
  if (per_call >= n) {
    s.text = ask(all);
  } else {
    std::string partials;
    for (std::size_t i = 0; i < n; i += per_call) {
      const auto text = ask(all.subspan(i, std::min(per_call, n - i)));
      partials += fmt::format("- {}\n", text);
    }
    partials.pop_back();
    const std::string subject = company ? fmt::format("{} ({})", name, bundle.scope.id)
                                        : fmt::format("the {} sector", bundle.scope.id);
    s.text = gateway.chat(system, templates.render("summarizer_reduce",
                                                   {{"subject", subject}, {"month", month}, {"summaries", partials}}));
  }
  const auto first = s.text.find_first_not_of(" \t\r\n");
  const auto last = s.text.find_last_not_of(" \t\r\n");
  s.text = first == std::string::npos ? std::string{} : s.text.substr(first, last - first + 1);
  if (s.text.empty()) {
    throw Error(ErrorKind::kMalformedResponse, fmt::format("empty summary for {}", bundle.scope.key()));
  }
  return s;
}

std::optional<int> parse_sentiment_reply(std::string_view reply) {
  static const std::regex kNumber(R"(([+-]?)(\d+)(\.\d+)?)");
  const std::string text(reply);
  std::smatch last;
  bool found = false;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumber); it != std::sregex_iterator(); ++it) {
    last = *it;
    found = true;
  }
  if (!found) return std::nullopt;
  if (last[3].matched && last[3].length() > 0) {
    // "3.0" is still an integer; "2.5" is not.
    const auto frac = last[3].str().substr(1);
    if (frac.find_first_not_of('0') != std::string::npos) return std::nullopt;
  }
  if (last[2].length() > 3) return std::nullopt;
  int v = std::stoi(last[2].str());
  if (last[1].str() == "-") v = -v;
  if (v < -5 || v > 5) return std::nullopt;
  return v;
}

SentimentScore score_sentiment(const Summary& summary, Gateway& gateway, std::string_view subject_name,
                               const TemplateSet& templates) {
  if (summary.text.empty()) throw Error(ErrorKind::kInvalidArgument, "empty summary");
  const bool company = summary.scope.kind == ScopeKind::kCompany;
  const std::string month = month_name_year(summary.month);
  const auto user = company ? templates.render("sentiment_company",
                                               {{"month", month},
                                                {"name", subject_name.empty() ? summary.scope.id : std::string(subject_name)},
                                                {"id", summary.scope.id},
                                                {"summary", summary.text}})
                            : templates.render("sentiment_sector",
                                               {{"month", month}, {"id", summary.scope.id}, {"summary", summary.text}});
  std::string reply;
  for (int attempt = 0; attempt < 2; ++attempt) {
    reply = gateway.chat(templates.get("sentiment_system"), user);
    if (auto v = parse_sentiment_reply(reply)) {
      return SentimentScore{summary.scope, summary.month, *v, summary.source_digest};
    }
  }
  throw Error(ErrorKind::kUnparsableSentiment,
              fmt::format("{} {}: no integer in [-5, 5] in reply '{}'", summary.scope.key(),
                          format_year_month(summary.month), reply.substr(0, 200)));
}

std::vector<Article> read_articles_jsonl(std::istream& in) {
  std::vector<Article> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Article a;
      if (j.contains("ticker") && j["ticker"].is_string() && !j["ticker"].get<std::string>().empty()) {
        a.ticker_hint = j["ticker"].get<std::string>();
      }
      const auto published = j.at("published").get<std::string>();
      a.published = parse_date(published.substr(0, 10));
      a.url = j.value("url", "");
      a.title = j.value("title", "");
      if (j.contains("body") && j["body"].is_string()) a.body = j["body"].get<std::string>();
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("articles line {}: {}", n, e.what()));
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, fmt::format("articles line {}: {}", n, e.what()));
    }
  }
  return out;
}

std::vector<Article> load_articles_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  return read_articles_jsonl(in);
}

SummaryStore::SummaryStore(std::filesystem::path path) : path_(std::move(path)) {
  for (const auto& j : read_jsonl(path_)) {
    Summary s{NewsScope::parse(j.at("scope").get<std::string>()), parse_year_month(j.at("month").get<std::string>()),
              j.at("text").get<std::string>(), j.at("digest").get<std::string>()};
    entries_.emplace(store_key(s.scope, s.month, s.source_digest), std::move(s));
  }
}

std::optional<Summary> SummaryStore::find(const NewsScope& scope, YearMonth month, std::string_view digest) const {
  auto it = entries_.find(store_key(scope, month, digest));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void SummaryStore::put(const Summary& s) {
  auto key = store_key(s.scope, s.month, s.source_digest);
  if (entries_.contains(key)) return;
  append_jsonl(path_, {{"scope", s.scope.key()},
                       {"month", format_year_month(s.month)},
                       {"digest", s.source_digest},
                       {"text", s.text}});
  entries_.emplace(std::move(key), s);
}

std::vector<Summary> SummaryStore::all() const {
  std::vector<Summary> out;
  for (const auto& [_, s] : entries_) out.push_back(s);
  return out;
}

SentimentStore::SentimentStore(std::filesystem::path path) : path_(std::move(path)) {
  for (const auto& j : read_jsonl(path_)) {
    SentimentScore s{NewsScope::parse(j.at("scope").get<std::string>()),
                     parse_year_month(j.at("month").get<std::string>()), j.at("score").get<int>(),
                     j.at("digest").get<std::string>()};
    if (s.score < -5 || s.score > 5) {
      throw Error(ErrorKind::kOutOfRange, fmt::format("{}: stored sentiment {} outside [-5, 5]", path_.string(), s.score));
    }
    entries_.emplace(store_key(s.scope, s.month, s.source_digest), std::move(s));
  }
}

std::optional<SentimentScore> SentimentStore::find(const NewsScope& scope, YearMonth month,
                                                   std::string_view digest) const {
  auto it = entries_.find(store_key(scope, month, digest));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void SentimentStore::put(const SentimentScore& s) {
  auto key = store_key(s.scope, s.month, s.source_digest);
  if (entries_.contains(key)) return;
  append_jsonl(path_, {{"scope", s.scope.key()},
                       {"month", format_year_month(s.month)},
                       {"digest", s.source_digest},
                       {"score", s.score}});
  entries_.emplace(std::move(key), s);
}

std::vector<SentimentScore> SentimentStore::all() const {
  std::vector<SentimentScore> out;
  for (const auto& [_, s] : entries_) out.push_back(s);
  return out;
}

}  // namespace equirate

#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "equirate/error.hpp"
#include "equirate/gateway.hpp"

namespace equirate {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& base_url, const std::string& path) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("base url '{}' has no scheme", base_url));
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  e.path = prefix + (path.empty() || path.front() == '/' ? path : "/" + path);
  return e;
}

bool mentions_context_limit(const std::string& body) {
  return body.find("context_length_exceeded") != std::string::npos ||
         body.find("maximum context length") != std::string::npos ||
         body.find("too many tokens") != std::string::npos;
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  const auto endpoint = split_url(config_.base_url, config_.path);
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    if (config_.auth_style == "api-key") {
      headers.emplace("api-key", config_.api_key);
    } else {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
  }
  const std::string body = request.to_wire_json().dump();

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(config_.retry.delay_for(attempt - 1));

    auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (!res) {
      last_failure = fmt::format("transport error: {}", httplib::to_string(res.error()));
      continue;
    }
    if (res->status == 200) {
      try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::kBackendUnavailable, fmt::format("unexpected response body: {}", ex.what()));
      }
    }
    if ((res->status == 400 || res->status == 413) && mentions_context_limit(res->body)) {
      throw Error(ErrorKind::kContextOverflow, fmt::format("HTTP {}: {}", res->status, res->body));
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = fmt::format("HTTP {}", res->status);
      continue;
    }
    throw Error(ErrorKind::kBackendUnavailable, fmt::format("HTTP {}: {}", res->status, res->body));
  }
  throw Error(ErrorKind::kBackendUnavailable,
              fmt::format("giving up after {} retries ({})", config_.retry.max_retries, last_failure));
}

}  // namespace equirate

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace equirate {

enum class ChatRole { kSystem, kUser, kAssistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string model_id;

  // First message is the system prompt, no message is empty. Throws
  // Error(kInvalidArgument).
  void validate() const;
  // Digest of the full request (model, sampling settings, messages).
  std::string digest() const;
  // Chat-completions wire body: {"model", "messages", "temperature", "max_tokens"}.
  nlohmann::json to_wire_json() const;

  const std::string& system_text() const;
  // Concatenated user message content.
  std::string user_text() const;
};

// A chat-completion backend. Implementations must be safe to call from
// several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the assistant message content. Throws Error(kBackendUnavailable)
  // or Error(kContextOverflow).
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct GatewaySettings {
  std::string model_id = "gpt-4-32k";
  double temperature = 0.0;
  int max_output_tokens = 1024;
  int concurrency = 4;
  // Budget used by the summarizer to decide when to chunk.
  std::size_t context_token_budget = 24000;
};

// Shared front door to a backend: bounds in-flight requests, stamps requests
// with the configured sampling settings and appends a JSONL transcript line
// per call (request digest, messages, response).
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend, GatewaySettings settings);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Transcript lines are appended to `path`.
  void set_transcript(const std::filesystem::path& path);

  std::string complete(const ChatRequest& request);
  // Builds a two-message request with the configured settings.
  std::string chat(std::string system_text, std::string user_text);
  ChatRequest make_request(std::string system_text, std::string user_text) const;

  const GatewaySettings& settings() const { return settings_; }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<ChatBackend> backend_;
  GatewaySettings settings_;
  std::counting_semaphore<> slots_;
  std::atomic<std::uint64_t> calls_{0};
  std::mutex transcript_mutex_;
  std::ofstream transcript_;
};

// ---------------------------------------------------------------------------
// HTTP backend

struct RetryPolicy {
  int max_retries = 5;
  std::chrono::milliseconds initial_delay{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{60000};

  // Delay before retry number `attempt` (0-based).
  std::chrono::milliseconds delay_for(int attempt) const;
};

struct HttpBackendConfig {
  // e.g. "https://api.openai.com/v1"; the request goes to base_url + path.
  std::string base_url = "https://api.openai.com/v1";
  std::string path = "/chat/completions";
  std::string api_key;
  // "bearer" -> Authorization: Bearer <key>; "api-key" -> api-key: <key> (Azure).
  std::string auth_style = "bearer";
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
};

class HttpChatBackend : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpChatBackend(HttpBackendConfig config, Sleeper sleeper = {});

  // Retries timeouts, connection failures, 429 and 5xx with exponential
  // backoff; a token-limit rejection raises Error(kContextOverflow).
  std::string complete(const ChatRequest& request) override;

 private:
  HttpBackendConfig config_;
  Sleeper sleeper_;
};

// ---------------------------------------------------------------------------
// Mock backends

// Replays canned replies in order; throws Error(kBackendUnavailable) once the
// script is exhausted.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies);

  std::string complete(const ChatRequest& request) override;

  std::size_t calls() const;
  std::vector<ChatRequest> requests() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

struct MomentumMockOptions {
  // 3-month trailing return beyond which the rating becomes "strong".
  double strong_threshold = 0.10;
  // Probability that a horizon's rating is replaced by a seeded random draw.
  double noise = 0.0;
};

// Deterministic stand-in for a real model: a pure function of (seed,
// request). Rating requests are answered with a well-formed structured block
// whose direction follows the sign of the prompt's 3-month return;
// summarization and sentiment requests get simple lexical answers.
class MomentumMockBackend : public ChatBackend {
 public:
  explicit MomentumMockBackend(std::uint64_t seed, MomentumMockOptions options = {});

  std::string complete(const ChatRequest& request) override;

 private:
  std::string answer_rating(const ChatRequest& request) const;
  std::string answer_summary(const ChatRequest& request) const;
  std::string answer_sentiment(const ChatRequest& request) const;

  std::uint64_t seed_;
  MomentumMockOptions options_;
};

}  // namespace equirate

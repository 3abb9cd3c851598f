#include "equirate/gateway.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "equirate/digest.hpp"
#include "equirate/error.hpp"

namespace equirate {

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem: return "system";
    case ChatRole::kUser: return "user";
    case ChatRole::kAssistant: return "assistant";
  }
  return "user";
}

void ChatRequest::validate() const {
  if (messages.empty() || messages.front().role != ChatRole::kSystem) {
    throw Error(ErrorKind::kInvalidArgument, "chat request must start with a system message");
  }
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (messages[i].content.empty()) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("chat message {} is empty", i));
    }
  }
  if (max_output_tokens <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "max_output_tokens must be positive");
  }
}

std::string ChatRequest::digest() const {
  DigestBuilder d;
  d.add(model_id).add(fmt::format("{:.17g}", temperature)).add(std::to_string(max_output_tokens));
  for (const auto& m : messages) d.add(to_string(m.role)).add(m.content);
  return d.hex();
}

nlohmann::json ChatRequest::to_wire_json() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return {{"model", model_id}, {"messages", std::move(msgs)}, {"temperature", temperature},
          {"max_tokens", max_output_tokens}};
}

const std::string& ChatRequest::system_text() const {
  static const std::string kEmpty;
  return (!messages.empty() && messages.front().role == ChatRole::kSystem) ? messages.front().content : kEmpty;
}

std::string ChatRequest::user_text() const {
  std::string out;
  for (const auto& m : messages) {
    if (m.role != ChatRole::kUser) continue;
    if (!out.empty()) out += "\n\n";
    out += m.content;
  }
  return out;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewaySettings settings)
    : backend_(std::move(backend)), settings_(std::move(settings)), slots_(std::max(1, settings_.concurrency)) {
  if (!backend_) throw Error(ErrorKind::kInvalidArgument, "gateway needs a backend");
}

Gateway::~Gateway() = default;

void Gateway::set_transcript(const std::filesystem::path& path) {
  std::lock_guard lock(transcript_mutex_);
  transcript_.close();
  transcript_.open(path, std::ios::app | std::ios::binary);
  if (!transcript_) throw Error(ErrorKind::kIo, fmt::format("cannot open transcript '{}'", path.string()));
}

std::string Gateway::complete(const ChatRequest& request) {
  request.validate();
  slots_.acquire();
  std::string reply;
  try {
    reply = backend_->complete(request);
  } catch (...) {
    slots_.release();
    throw;
  }
  slots_.release();
  ++calls_;

  std::lock_guard lock(transcript_mutex_);
  if (transcript_.is_open()) {
    nlohmann::json line = {{"request_digest", request.digest()},
                           {"request", request.to_wire_json()},
                           {"response", reply}};
    transcript_ << line.dump() << '\n';
    transcript_.flush();
  }
  return reply;
}

ChatRequest Gateway::make_request(std::string system_text, std::string user_text) const {
  ChatRequest req;
  req.model_id = settings_.model_id;
  req.temperature = settings_.temperature;
  req.max_output_tokens = settings_.max_output_tokens;
  req.messages.push_back({ChatRole::kSystem, std::move(system_text)});
  req.messages.push_back({ChatRole::kUser, std::move(user_text)});
  return req;
}

std::string Gateway::chat(std::string system_text, std::string user_text) {
  return complete(make_request(std::move(system_text), std::move(user_text)));
}

// ---------------------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
  const double scaled = static_cast<double>(initial_delay.count()) * std::pow(multiplier, attempt);
  const double capped = std::min(scaled, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (next_ >= replies_.size()) {
    throw Error(ErrorKind::kBackendUnavailable,
                fmt::format("scripted backend exhausted after {} replies", replies_.size()));
  }
  return replies_[next_++];
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

}  // namespace equirate

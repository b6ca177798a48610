#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rpeval/errors.hpp"

namespace rpeval {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatParams {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<long long> seed;
};

// Stable digest of (model, ordered messages, temperature, max_tokens).
// Equal logical requests hash equally in any process on any platform.
std::string fingerprint(const std::vector<ChatMessage>& messages,
                        const ChatParams& params);

// Throws on empty message lists, empty system/user content, temperature
// outside [0,2] or non-positive max_tokens.
void validate_request(const std::vector<ChatMessage>& messages,
                      const ChatParams& params);

class Backend {
 public:
  virtual ~Backend() = default;

  // Returns the assistant text for the request. Safe to call concurrently.
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const ChatParams& params) = 0;
};

struct ScriptedRequest {
  std::vector<ChatMessage> messages;
  ChatParams params;
  std::string fingerprint;
};

// Deterministic replay backend for tests and offline runs. Matchers are
// exact fingerprints or ordered sequence slots; exact matches win. Ordered
// slots assume serialized callers (documented contract); the transcript
// itself is safe under concurrent appends.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;

  // Exact matcher keyed by the request fingerprint.
  void script_exact(const std::string& request_fingerprint,
                    std::string response);
  void script_exact(const std::vector<ChatMessage>& messages,
                    const ChatParams& params, std::string response);

  // Ordered slot, consumed first-in first-out by unmatched requests.
  void push_response(std::string response);

  std::string complete(const std::vector<ChatMessage>& messages,
                       const ChatParams& params) override;

  std::vector<ScriptedRequest> transcript() const;
  std::size_t call_count() const;
  std::size_t remaining_slots() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> exact_;
  std::deque<std::string> slots_;
  std::vector<ScriptedRequest> transcript_;
};

// Requests-per-minute token bucket. acquire() blocks until a token is due;
// concurrent callers queue.
class TokenBucket {
 public:
  // rpm <= 0 disables limiting.
  explicit TokenBucket(double rpm);

  void acquire();

 private:
  double rpm_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;
  std::mutex mu_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{250};
  double backoff_factor = 2.0;
};

struct HttpBackendOptions {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key;  // empty -> no Authorization header
  RetryPolicy retry;
  double rpm = 60.0;
  std::chrono::seconds timeout{120};
};

// Chat-completions HTTP JSON client. Retries timeouts, 429 and 5xx with
// exponential backoff; any other 4xx fails immediately.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  std::string complete(const std::vector<ChatMessage>& messages,
                       const ChatParams& params) override;

 private:
  HttpBackendOptions options_;
  TokenBucket limiter_;
};

// Persistent response cache in front of any backend. Append-only JSONL
// keyed by fingerprint; repeated requests never reach upstream.
class CachingBackend : public Backend {
 public:
  CachingBackend(Backend& upstream, std::filesystem::path cache_file);

  std::string complete(const std::vector<ChatMessage>& messages,
                       const ChatParams& params) override;

  std::size_t upstream_calls() const { return upstream_calls_.load(); }

 private:
  Backend& upstream_;
  std::filesystem::path path_;
  std::map<std::string, std::string> entries_;
  std::ofstream out_;
  std::mutex mu_;
  std::atomic<std::size_t> upstream_calls_{0};
};

// UTC wall-clock timestamp, ISO 8601.
std::string iso_timestamp_now();

}  // namespace rpeval

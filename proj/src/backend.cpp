#include "rpeval/backend.hpp"

#include <charconv>
#include <cstdlib>
#include <ctime>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"
#include "rpeval/hash.hpp"

namespace rpeval {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "?";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw ParseError("invalid chat role '" + std::string(s) + "'");
}

namespace {

std::string canonical_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string fingerprint(const std::vector<ChatMessage>& messages,
                        const ChatParams& params) {
  std::uint64_t h = fnv1a(params.model);
  h = fnv1a("\x1e", h);
  for (const ChatMessage& m : messages) {
    h = fnv1a(to_string(m.role), h);
    h = fnv1a("\x1f", h);
    h = fnv1a(m.content, h);
    h = fnv1a("\x1e", h);
  }
  h = fnv1a(canonical_double(params.temperature), h);
  h = fnv1a("\x1e", h);
  h = fnv1a(std::to_string(params.max_tokens), h);
  return to_hex(h);
}

void validate_request(const std::vector<ChatMessage>& messages,
                      const ChatParams& params) {
  if (messages.empty()) {
    throw InvalidInputError("chat request needs at least one message");
  }
  for (const ChatMessage& m : messages) {
    if (m.role != Role::Assistant && m.content.empty()) {
      throw InvalidInputError("system/user message content must be non-empty");
    }
  }
  if (params.temperature < 0.0 || params.temperature > 2.0) {
    throw InvalidInputError("temperature must lie in [0,2]");
  }
  if (params.max_tokens <= 0) {
    throw InvalidInputError("max_tokens must be positive");
  }
}

void ScriptedBackend::script_exact(const std::string& request_fingerprint,
                                   std::string response) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = exact_.emplace(request_fingerprint, std::move(response));
  if (!inserted) {
    throw ConfigError("duplicate scripted fixture for fingerprint " +
                      request_fingerprint);
  }
}

void ScriptedBackend::script_exact(const std::vector<ChatMessage>& messages,
                                   const ChatParams& params,
                                   std::string response) {
  script_exact(fingerprint(messages, params), std::move(response));
}

void ScriptedBackend::push_response(std::string response) {
  std::lock_guard lock(mu_);
  slots_.push_back(std::move(response));
}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>& messages,
                                      const ChatParams& params) {
  validate_request(messages, params);
  const std::string fp = fingerprint(messages, params);
  std::lock_guard lock(mu_);
  transcript_.push_back({messages, params, fp});
  if (auto it = exact_.find(fp); it != exact_.end()) return it->second;
  if (!slots_.empty()) {
    std::string response = std::move(slots_.front());
    slots_.pop_front();
    return response;
  }
  throw MissingFixtureError(fp);
}

std::vector<ScriptedRequest> ScriptedBackend::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard lock(mu_);
  return transcript_.size();
}

std::size_t ScriptedBackend::remaining_slots() const {
  std::lock_guard lock(mu_);
  return slots_.size();
}

TokenBucket::TokenBucket(double rpm)
    : rpm_(rpm),
      capacity_(1.0),  // strict spacing, no bursts
      tokens_(capacity_),
      last_refill_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rpm_ <= 0) return;
  const double per_second = rpm_ / 60.0;
  while (true) {
    std::chrono::duration<double> wait{0};
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      const std::chrono::duration<double> elapsed = now - last_refill_;
      tokens_ = std::min(capacity_, tokens_ + elapsed.count() * per_second);
      last_refill_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / per_second);
    }
    std::this_thread::sleep_for(wait);
  }
}

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)), limiter_(options_.rpm) {
  if (options_.base_url.empty()) {
    throw ConfigError("HTTP backend needs a base URL");
  }
}

std::string HttpBackend::complete(const std::vector<ChatMessage>& messages,
                                  const ChatParams& params) {
  validate_request(messages, params);

  nlohmann::json body;
  body["model"] = params.model;
  body["messages"] = nlohmann::json::array();
  for (const ChatMessage& m : messages) {
    body["messages"].push_back(
        {{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  if (params.seed) body["seed"] = *params.seed;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }

  std::string last_error;
  auto backoff = options_.retry.initial_backoff;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    limiter_.acquire();
    httplib::Client client(options_.base_url);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    auto res = client.Post(options_.path, headers, payload, "application/json");

    bool transient = false;
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      transient = true;
    } else if (res->status == 200) {
      nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.contains("choices") ||
          reply["choices"].empty() ||
          !reply["choices"][0].contains("message") ||
          !reply["choices"][0]["message"].contains("content")) {
        throw TransportError("malformed completion response body: " +
                             res->body.substr(0, 512));
      }
      return reply["choices"][0]["message"]["content"].get<std::string>();
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      transient = true;
    } else {
      throw TransportError("HTTP " + std::to_string(res->status) +
                           " (not retryable): " + res->body.substr(0, 512));
    }

    if (transient && attempt < options_.retry.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(backoff.count()) * options_.retry.backoff_factor));
    }
  }
  throw TransportError("request failed after " +
                       std::to_string(options_.retry.max_attempts) +
                       " attempts; last error: " + last_error);
}

CachingBackend::CachingBackend(Backend& upstream,
                               std::filesystem::path cache_file)
    : upstream_(upstream), path_(std::move(cache_file)) {
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
      if (record.is_discarded() || !record.contains("fingerprint") ||
          !record.contains("response")) {
        throw ValidationError("corrupt cache record in " + path_.string(),
                              lineno);
      }
      entries_[record["fingerprint"].get<std::string>()] =
          record["response"].get<std::string>();
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) {
    throw ConfigError("cannot open cache file " + path_.string());
  }
}

std::string CachingBackend::complete(const std::vector<ChatMessage>& messages,
                                     const ChatParams& params) {
  const std::string fp = fingerprint(messages, params);
  {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(fp); it != entries_.end()) return it->second;
  }
  std::string response = upstream_.complete(messages, params);
  upstream_calls_.fetch_add(1);
  std::lock_guard lock(mu_);
  // A concurrent call may have filled this fingerprint in the meantime;
  // the first write wins and the file stays one-record-per-fingerprint.
  auto [it, inserted] = entries_.emplace(fp, std::move(response));
  if (inserted) {
    nlohmann::ordered_json record;
    record["fingerprint"] = fp;
    record["model"] = params.model;
    record["response"] = it->second;
    record["timestamp"] = iso_timestamp_now();
    out_ << record.dump() << "\n";
    out_.flush();
  }
  return it->second;
}

std::string iso_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace rpeval

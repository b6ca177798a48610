#pragma once

#include <string>
#include <vector>

#include "rpeval/backend.hpp"
#include "rpeval/prompts.hpp"

namespace rpeval {

// Parse re-ask cap: 1 initial attempt + kReaskCap re-asks, then a format
// error carrying every raw response.
inline constexpr int kReaskCap = 3;

// Shared chat-call parameters for a run. Decision calls (estimators,
// judges, datagen checks) pin temperature 0; generation calls default 0.7.
struct CallOptions {
  std::string model = "scripted";
  double decision_temperature = 0.0;
  double generation_temperature = 0.7;
  int max_tokens = 2048;

  ChatParams decision_params() const {
    return ChatParams{model, decision_temperature, max_tokens, std::nullopt};
  }
  ChatParams generation_params() const {
    return ChatParams{model, generation_temperature, max_tokens, std::nullopt};
  }
};

// Runs a chat call and parses the reply. A ParseError from `parse` triggers
// a fresh call with an appended format reminder, up to kReaskCap re-asks;
// any other exception (e.g. FormatError for schema violations) propagates
// immediately.
template <typename Parse>
auto ask_parsed(Backend& backend, std::vector<ChatMessage> messages,
                const ChatParams& params, std::string_view what,
                Parse&& parse) {
  std::vector<std::string> raw_responses;
  std::string last_error;
  for (int attempt = 0; attempt <= kReaskCap; ++attempt) {
    if (attempt > 0) {
      messages.push_back(
          {Role::User, std::string(prompts::format_reminder())});
    }
    raw_responses.push_back(backend.complete(messages, params));
    try {
      return parse(raw_responses.back());
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw EstimatorFormatError(
      std::string(what) + ": response still malformed after " +
          std::to_string(kReaskCap) + " re-asks (" + last_error + ")",
      std::move(raw_responses));
}

}  // namespace rpeval

#include "rpeval/reasoner.hpp"

#include <cctype>
#include <limits>

#include "json.hpp"
#include "rpeval/util.hpp"

namespace rpeval {

namespace {

std::vector<std::string> split_segments(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Drops punctuation the models like to wrap policies in ("(B)", "A B C").
std::string strip_to_alpha(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

std::vector<ChatMessage> estimator_messages(std::string_view system_prompt,
                                            const Query& query,
                                            const std::vector<Preference>& memory) {
  return {
      {Role::System, std::string(system_prompt)},
      {Role::User,
       render_template(prompts::estimator_user(),
                       {{"personas", prompts::render_personas(memory)},
                        {"question", query.text}})},
  };
}

EstimatorOutput run_estimator(std::string_view what,
                              std::string_view system_prompt,
                              const Query& query,
                              const std::vector<Preference>& memory,
                              Backend& backend, const CallOptions& options) {
  if (memory.empty()) {
    throw InvalidInputError("estimator needs a non-empty memory");
  }
  return ask_parsed(backend, estimator_messages(system_prompt, query, memory),
                    options.decision_params(), what,
                    [&](const std::string& raw) {
                      return parse_estimator_output(raw, memory.size());
                    });
}

}  // namespace

EstimatorOutput parse_estimator_output(const std::string& raw,
                                       std::size_t expected_count) {
  const auto json_text = extract_json_object(raw);
  if (!json_text) throw ParseError("no JSON object in estimator response");
  const nlohmann::json j = nlohmann::json::parse(*json_text);
  if (!j.contains("ranking") || !j["ranking"].is_string()) {
    throw ParseError("estimator response lacks a \"ranking\" string");
  }

  EstimatorOutput out;
  out.reason = j.value("reason", std::string{});

  const auto segments = split_segments(j["ranking"].get<std::string>(), '|');
  if (segments.size() != expected_count) {
    throw ParseError("expected " + std::to_string(expected_count) +
                     " ranking segment(s), got " +
                     std::to_string(segments.size()));
  }
  out.rankings.reserve(segments.size());
  for (const std::string& seg : segments) {
    out.rankings.push_back(ranks_from_ordering(seg));
  }

  // Rankings are authoritative; a malformed hint is dropped, not re-asked.
  if (j.contains("policy") && j["policy"].is_string()) {
    try {
      PolicyString hint =
          PolicyString::parse(strip_to_alpha(j["policy"].get<std::string>()));
      if (hint.size() == expected_count) out.policy_hint = std::move(hint);
    } catch (const ParseError&) {
    }
  }
  return out;
}

EstimatorOutput estimate_mle(const Query& query,
                             const std::vector<Preference>& memory,
                             Backend& backend, const CallOptions& options) {
  return run_estimator("mle estimator", prompts::mle_system(), query, memory,
                       backend, options);
}

EstimatorOutput estimate_ipe(const Query& query,
                             const std::vector<Preference>& memory,
                             Backend& backend, const CallOptions& options) {
  return run_estimator("ipe estimator", prompts::ipe_system(), query, memory,
                       backend, options);
}

std::pair<IntentLabel, bool> aggregate(const RankVector& rank_mle,
                                       const RankVector& rank_ipe, Rng& rng) {
  int best = std::numeric_limits<int>::max();
  std::vector<IntentLabel> argmin;
  for (IntentLabel l : kAllIntents) {
    const int sum = rank_mle.rank(l) + rank_ipe.rank(l);
    if (sum < best) {
      best = sum;
      argmin.assign(1, l);
    } else if (sum == best) {
      argmin.push_back(l);
    }
  }
  const bool tie_broken = argmin.size() > 1;
  const IntentLabel pick =
      tie_broken ? argmin[rng.below(argmin.size())] : argmin.front();
  return {pick, tie_broken};
}

Decision decide(const Sample& sample, Backend& backend,
                const CallOptions& options, std::uint64_t seed) {
  if (sample.preferences.empty()) {
    throw InvalidInputError("sample " + sample.id + " has no preferences");
  }
  const EstimatorOutput mle =
      estimate_mle(sample.query, sample.preferences, backend, options);
  const EstimatorOutput ipe =
      estimate_ipe(sample.query, sample.preferences, backend, options);

  Rng rng = make_sample_rng(seed, sample.id);
  Decision decision;
  decision.seed = seed;
  decision.per_preference.reserve(sample.preferences.size());
  for (std::size_t k = 0; k < sample.preferences.size(); ++k) {
    PreferenceDecision pd;
    pd.rank_mle = mle.rankings[k];
    pd.rank_ipe = ipe.rankings[k];
    for (IntentLabel l : kAllIntents) {
      pd.rank_post[static_cast<std::size_t>(l)] =
          pd.rank_mle.rank(l) + pd.rank_ipe.rank(l);
    }
    auto [label, tie_broken] = aggregate(pd.rank_mle, pd.rank_ipe, rng);
    pd.tie_broken = tie_broken;
    decision.per_preference.push_back(pd);
    decision.policy.labels.push_back(label);
  }
  return decision;
}

PolicyString baseline_decide(std::string_view mode, const Sample& sample,
                             Backend& backend, const CallOptions& options) {
  const std::size_t k = sample.preferences.size();
  std::vector<ChatMessage> messages{
      {Role::System,
       std::string(prompts::baseline_system(mode, sample.config.multiplicity))},
      {Role::User,
       render_template(prompts::baseline_user(),
                       {{"personas", prompts::render_personas(sample.preferences)},
                        {"question", sample.query.text}})},
  };
  return ask_parsed(
      backend, std::move(messages), options.decision_params(),
      "baseline " + std::string(mode), [&](const std::string& raw) {
        const auto json_text = extract_json_object(raw);
        if (!json_text) throw ParseError("no JSON object in baseline response");
        const nlohmann::json j = nlohmann::json::parse(*json_text);
        if (!j.contains("policy") || !j["policy"].is_string()) {
          throw ParseError("baseline response lacks a \"policy\" string");
        }
        PolicyString policy =
            PolicyString::parse(strip_to_alpha(j["policy"].get<std::string>()));
        if (policy.size() != k) {
          throw ParseError("policy length " + std::to_string(policy.size()) +
                           " != preference count " + std::to_string(k));
        }
        return policy;
      });
}

std::string generate_response(const Sample& sample, const PolicyString& policy,
                              Backend& backend, const CallOptions& options) {
  if (policy.size() != sample.preferences.size()) {
    throw InvalidInputError(
        "policy length " + std::to_string(policy.size()) +
        " != preference count " + std::to_string(sample.preferences.size()));
  }
  std::vector<ChatMessage> messages{
      {Role::System, std::string(prompts::generation_system())},
      {Role::User,
       render_template(prompts::generation_user(),
                       {{"personas", prompts::render_personas(sample.preferences)},
                        {"question", sample.query.text},
                        {"policy", policy.str()}})},
  };
  return backend.complete(messages, options.generation_params());
}

}  // namespace rpeval

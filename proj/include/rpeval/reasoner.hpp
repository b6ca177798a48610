#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpeval/core.hpp"
#include "rpeval/hash.hpp"
#include "rpeval/llm_call.hpp"

namespace rpeval {

// Parsed estimator reply: one rank vector per preference. The optional
// policy hint is recorded for audit but never feeds aggregation.
struct EstimatorOutput {
  std::string reason;
  std::vector<RankVector> rankings;
  std::optional<PolicyString> policy_hint;
};

struct PreferenceDecision {
  RankVector rank_mle;
  RankVector rank_ipe;
  std::array<int, 3> rank_post{0, 0, 0};  // indexed by IntentLabel
  bool tie_broken = false;

  int post(IntentLabel l) const { return rank_post[static_cast<std::size_t>(l)]; }
};

struct Decision {
  PolicyString policy;
  std::vector<PreferenceDecision> per_preference;
  std::uint64_t seed = 0;
};

// Query-likelihood ranks: how plausibly the observed query expresses each
// intent given the memory.
EstimatorOutput estimate_mle(const Query& query,
                             const std::vector<Preference>& memory,
                             Backend& backend, const CallOptions& options);

// Intent-prior ranks: how plausible each intent is for a user holding the
// memory, independent of the query's phrasing.
EstimatorOutput estimate_ipe(const Query& query,
                             const std::vector<Preference>& memory,
                             Backend& backend, const CallOptions& options);

// Minimizes rank_mle + rank_ipe; ties resolved uniformly with the supplied
// generator. Returns the chosen label and whether a tie was broken.
std::pair<IntentLabel, bool> aggregate(const RankVector& rank_mle,
                                       const RankVector& rank_ipe, Rng& rng);

// Full pipeline for one sample: one MLE call, one IPE call (two backend
// calls on the happy path), then per-preference rank-sum aggregation with a
// stream seeded by (seed, sample.id).
Decision decide(const Sample& sample, Backend& backend,
                const CallOptions& options, std::uint64_t seed);

// One-call prompt baselines; mode is "vanilla" | "reminder" | "cot".
PolicyString baseline_decide(std::string_view mode, const Sample& sample,
                             Backend& backend, const CallOptions& options);

// Policy-conditioned response generation; returns the assistant text
// verbatim.
std::string generate_response(const Sample& sample, const PolicyString& policy,
                              Backend& backend, const CallOptions& options);

// Exposed for tests: parses an estimator reply against an expected
// preference count.
EstimatorOutput parse_estimator_output(const std::string& raw,
                                       std::size_t expected_count);

}  // namespace rpeval

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpeval/core.hpp"
#include "rpeval/hash.hpp"
#include "rpeval/llm_call.hpp"

namespace rpeval {

// Iterative-update cap: the generation loop has no bound in the source
// procedure, so updates are capped and rejections audit-logged.
inline constexpr int kDefaultMaxIters = 5;
// Bootstrapping aborts after this many consecutive zero-progress rounds.
inline constexpr int kStagnationLimit = 3;
// Few-shot exemplars drawn from the scenario repository per round.
inline constexpr std::size_t kBootstrapFewShot = 5;

struct Scenario {
  std::string id;
  std::string what;
  std::string why;

  void validate() const;
  bool operator==(const Scenario&) const = default;
};

struct QualityScores {
  int rationality = 0;
  int relevance = 0;
  int alignment = 0;
  std::string judgment;

  // Retention rule: only full scores pass.
  bool pass() const {
    return rationality == 5 && relevance == 5 && alignment == 5;
  }
};

// A preference with its provisional intent label, as pooled per query
// during generation and expansion.
struct LabeledPreference {
  Preference preference;
  IntentLabel label = IntentLabel::Ignore;
  std::string rationale;
  std::string intent_text;
};

enum class Annotator { A, B };
enum class ReviewVerdict { Admit, Stand };

struct AnnotationCase {
  std::string preference_text;
  std::string query_text;
  std::string rationale;
  IntentLabel llm_label = IntentLabel::Ignore;
  IntentLabel label_a = IntentLabel::Ignore;
  IntentLabel label_b = IntentLabel::Ignore;
  // Present only for disputers (annotators whose label differs from the
  // LLM label).
  std::map<Annotator, ReviewVerdict> reviews;
};

// Grows the scenario repository with few-shot-prompted rounds until it
// holds at least `target` scenarios (dedup by normalized what+why).
std::vector<Scenario> bootstrap_scenarios(const std::vector<Scenario>& seeds,
                                          Backend& backend, std::size_t target,
                                          Rng& rng, const CallOptions& options);

std::vector<Query> synthesize_queries(const Scenario& scenario,
                                      Backend& backend,
                                      const CallOptions& options);

// Inverted generation: preferences that would carry the requested intent
// for this query. Returns (preference, rationale) pairs.
std::vector<std::pair<Preference, std::string>> invert_preference(
    const Query& query, IntentLabel intent, Backend& backend,
    const CallOptions& options);

QualityScores quality_check(const Query& query, const Preference& preference,
                            IntentLabel intent, Backend& backend,
                            const CallOptions& options);

// Quality gate over a combined multi-preference profile.
QualityScores quality_check_profile(const Query& query,
                                    const std::vector<LabeledPreference>& profile,
                                    Backend& backend,
                                    const CallOptions& options);

// One yes/no consistency call over a combined profile (the LKO conflict
// filter).
bool profile_consistent(const Query& query,
                        const std::vector<LabeledPreference>& profile,
                        Backend& backend, const CallOptions& options);

struct IterationOutcome {
  bool accepted = false;
  Preference preference;
  // Set only when at least one update ran.
  std::optional<std::string> rationale;
  std::optional<std::string> intent_text;
  int quality_calls = 0;
  int updater_calls = 0;
  std::string last_judgment;
};

// Alternates quality_check and persona updates until pass or max_iters
// quality failures; rejections are kept for audit, not for the dataset.
IterationOutcome iterate_update(const Query& query, Preference preference,
                                IntentLabel intent, Backend& backend,
                                int max_iters, const CallOptions& options);

// Recasts an explicit preference as a multi-turn dialogue. The statement
// text is retained as provenance; the id is preserved.
Preference explicit_to_implicit(const Preference& preference, Backend& backend,
                                const CallOptions& options);

struct BuildResult {
  std::optional<Sample> sample;
  std::string skip_reason;  // set iff !sample

  bool ok() const { return sample.has_value(); }
};

// Ignore-All: n ∈ [3,8] Ignore-labeled distractors, quality-gated.
BuildResult build_ignore_all(const Query& query,
                             const std::vector<LabeledPreference>& pool,
                             Rng& rng, Backend& backend,
                             const CallOptions& options);

// Leave-K-Out: k ∈ [1,3] applicable preferences mixed with Ignore
// distractors; conflict-filtered, then quality-gated.
BuildResult build_leave_k_out(const Query& query,
                              const std::vector<LabeledPreference>& pool,
                              Rng& rng, Backend& backend,
                              const CallOptions& options);

// Dual-blind reconciliation: three-way agreement keeps the LLM label
// without consulting reviews; otherwise every disputer must have reviewed,
// all admitting keeps the LLM label, any standing disputes the item
// (nullopt).
std::optional<IntentLabel> reconcile(const AnnotationCase& annotation);

}  // namespace rpeval

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rpeval/core.hpp"

namespace rpeval::prompts {

// Bump when any template or few-shot exemplar changes; recorded in run
// manifests so results stay attributable to an exact prompt set.
inline constexpr std::string_view kAssetVersion = "rpeval-prompts/1.0.0";

// Estimators (rank three intents per preference).
std::string_view mle_system();
std::string_view ipe_system();
std::string_view estimator_user();  // slots: {personas} {question}

// Policy-conditioned response generation.
std::string_view generation_system();
std::string_view generation_user();  // slots: {personas} {question} {policy}

// Prompt baselines. mode is one of "vanilla" | "reminder" | "cot".
std::string_view baseline_system(std::string_view mode, Multiplicity mult);
std::string_view baseline_user();  // slots: {personas} {question}

// LLM-as-judge.
std::string_view judge_system(Multiplicity mult);
std::string_view judge_user();  // slots: {personas} {question} {response} {intent}

// Dataset construction.
std::string_view scenario_bootstrap_system();
std::string_view scenario_bootstrap_user();  // slots: {exemplars}
std::string_view query_synthesis_system();
std::string_view query_synthesis_user();  // slots: {what} {why}
std::string_view preference_inversion_system();
std::string_view preference_inversion_user();  // slots: {intent} {question}
std::string_view quality_check_system();
std::string_view quality_check_user();  // slots: {personas} {question} {intent}
std::string_view persona_update_system();
std::string_view persona_update_user();  // slots: {persona_old} {question} {intent}
std::string_view explicit_to_implicit_system();
std::string_view explicit_to_implicit_user();  // slots: {persona}
std::string_view conflict_filter_system();
std::string_view conflict_filter_user();  // slots: {personas} {question}

// Appended as an extra user turn on each re-ask after a parse failure.
std::string_view format_reminder();

// Personas rendered one per line; implicit preferences show their dialogue
// instead of the statement.
std::string render_personas(const std::vector<Preference>& preferences);
std::string render_preference(const Preference& preference);

}  // namespace rpeval::prompts

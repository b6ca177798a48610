#include "rpeval/datagen.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "rpeval/util.hpp"

namespace rpeval {

namespace {

std::string pad_index(std::size_t i, int width = 4) {
  std::string digits = std::to_string(i);
  if (digits.size() < static_cast<std::size_t>(width)) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return digits;
}

std::string scenario_key(const Scenario& s) {
  return normalize_text(s.what) + "\x1f" + normalize_text(s.why);
}

nlohmann::json parse_object(const std::string& raw, std::string_view what) {
  const auto text = extract_json_object(raw);
  if (!text) {
    throw ParseError("no JSON object in " + std::string(what) + " response");
  }
  return nlohmann::json::parse(*text);
}

nlohmann::json parse_array(const std::string& raw, std::string_view what) {
  const auto text = extract_json_array(raw);
  if (!text) {
    throw ParseError("no JSON array in " + std::string(what) + " response");
  }
  return nlohmann::json::parse(*text);
}

int read_score(const nlohmann::json& j, const char* key, const char* alias) {
  const nlohmann::json* v = nullptr;
  if (j.contains(key)) {
    v = &j[key];
  } else if (alias && j.contains(alias)) {
    v = &j[alias];
  } else {
    throw FormatError(std::string("quality verdict missing field \"") + key +
                      "\"");
  }
  if (!v->is_number()) {
    throw FormatError(std::string("quality field \"") + key +
                      "\" is not a number");
  }
  const double x = v->get<double>();
  const int score = static_cast<int>(x);
  if (x != score || score < 0 || score > 5) {
    throw FormatError(std::string("quality field \"") + key + "\" = " +
                      v->dump() + " outside 0-5");
  }
  return score;
}

QualityScores parse_quality(const std::string& raw) {
  const nlohmann::json j = parse_object(raw, "quality check");
  QualityScores q;
  q.rationality = read_score(j, "rationality", "question_score");
  q.relevance = read_score(j, "relevance", "recall_score");
  q.alignment = read_score(j, "alignment", "intent_score");
  q.judgment = j.value("judgment", std::string{});
  return q;
}

std::string render_labeled_personas(const std::vector<LabeledPreference>& profile) {
  std::vector<Preference> prefs;
  prefs.reserve(profile.size());
  for (const LabeledPreference& lp : profile) prefs.push_back(lp.preference);
  return prompts::render_personas(prefs);
}

QualityScores run_quality(const std::string& personas, const std::string& question,
                          const std::string& intent, Backend& backend,
                          const CallOptions& options) {
  std::vector<ChatMessage> messages{
      {Role::System, std::string(prompts::quality_check_system())},
      {Role::User, render_template(prompts::quality_check_user(),
                                   {{"personas", personas},
                                    {"question", question},
                                    {"intent", intent}})},
  };
  return ask_parsed(backend, std::move(messages), options.decision_params(),
                    "quality check", parse_quality);
}

// Pool subset in pool order, deduplicated by preference id and by
// normalized text (first occurrence wins).
std::vector<LabeledPreference> collect_members(
    const std::vector<LabeledPreference>& pool,
    const std::vector<std::size_t>& indices) {
  std::vector<LabeledPreference> members;
  std::set<std::string> seen_ids;
  std::set<std::string> seen_texts;
  for (std::size_t idx : indices) {
    const LabeledPreference& lp = pool[idx];
    if (!seen_ids.insert(lp.preference.id).second) continue;
    if (!seen_texts.insert(normalize_text(lp.preference.text)).second) continue;
    members.push_back(lp);
  }
  return members;
}

Sample make_multi_sample(std::string id, const Query& query,
                         const std::vector<LabeledPreference>& members,
                         SampleSubtype subtype) {
  Sample sample;
  sample.id = std::move(id);
  sample.query = query;
  std::string rationale;
  std::string intent_text;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const LabeledPreference& lp = members[i];
    sample.preferences.push_back(lp.preference);
    sample.gold.labels.push_back(lp.label);
    const std::string tag = "Persona " + std::to_string(i) + " (" +
                            std::string(label_name(lp.label)) + "): ";
    if (!rationale.empty()) rationale += "\n";
    rationale += tag + lp.rationale;
    if (!intent_text.empty()) intent_text += "\n";
    intent_text += tag + lp.intent_text;
  }
  sample.rationale = std::move(rationale);
  sample.intent_text = std::move(intent_text);
  sample.config = {Multiplicity::Multi, PreferenceForm::Explicit, subtype};
  sample.validate();
  return sample;
}

}  // namespace

void Scenario::validate() const {
  if (what.empty() || why.empty()) {
    throw InvalidInputError("scenario " + id + ": what and why must be non-empty");
  }
}

std::vector<Scenario> bootstrap_scenarios(const std::vector<Scenario>& seeds,
                                          Backend& backend, std::size_t target,
                                          Rng& rng, const CallOptions& options) {
  if (seeds.empty()) {
    throw InvalidInputError("bootstrap needs at least one seed scenario");
  }
  if (target < seeds.size()) {
    throw InvalidInputError("target repository size " + std::to_string(target) +
                            " is below the seed count " +
                            std::to_string(seeds.size()));
  }
  std::vector<Scenario> repo;
  std::set<std::string> keys;
  for (const Scenario& s : seeds) {
    s.validate();
    if (keys.insert(scenario_key(s)).second) repo.push_back(s);
  }

  int stagnant_rounds = 0;
  while (repo.size() < target) {
    const auto picks = sample_indices(
        rng, repo.size(), std::min(kBootstrapFewShot, repo.size()));
    std::string exemplars;
    for (std::size_t idx : picks) {
      exemplars += "- what: " + repo[idx].what + "; why: " + repo[idx].why + "\n";
    }
    std::vector<ChatMessage> messages{
        {Role::System, std::string(prompts::scenario_bootstrap_system())},
        {Role::User, render_template(prompts::scenario_bootstrap_user(),
                                     {{"exemplars", exemplars}})},
    };
    const auto items = ask_parsed(
        backend, std::move(messages), options.decision_params(),
        "scenario bootstrap", [](const std::string& raw) {
          return parse_array(raw, "scenario bootstrap");
        });

    std::size_t added = 0;
    for (const auto& item : items) {
      if (!item.is_object() || !item.contains("what") || !item.contains("why") ||
          !item["what"].is_string() || !item["why"].is_string()) {
        throw FormatError("scenario item must carry \"what\" and \"why\" strings");
      }
      Scenario s;
      s.what = item["what"].get<std::string>();
      s.why = item["why"].get<std::string>();
      s.validate();
      if (!keys.insert(scenario_key(s)).second) continue;
      s.id = "s" + pad_index(repo.size());
      repo.push_back(std::move(s));
      ++added;
      if (repo.size() >= target) break;
    }
    if (added == 0) {
      if (++stagnant_rounds >= kStagnationLimit) {
        throw StagnationError("scenario bootstrapping added nothing for " +
                              std::to_string(kStagnationLimit) +
                              " consecutive rounds (repository size " +
                              std::to_string(repo.size()) + ", target " +
                              std::to_string(target) + ")");
      }
    } else {
      stagnant_rounds = 0;
    }
  }
  return repo;
}

std::vector<Query> synthesize_queries(const Scenario& scenario,
                                      Backend& backend,
                                      const CallOptions& options) {
  scenario.validate();
  std::vector<ChatMessage> messages{
      {Role::System, std::string(prompts::query_synthesis_system())},
      {Role::User, render_template(prompts::query_synthesis_user(),
                                   {{"what", scenario.what},
                                    {"why", scenario.why}})},
  };
  const auto items =
      ask_parsed(backend, std::move(messages), options.decision_params(),
                 "query synthesis", [](const std::string& raw) {
                   return parse_array(raw, "query synthesis");
                 });
  if (items.empty()) {
    throw FormatError("query synthesis returned an empty array for scenario " +
                      scenario.id);
  }
  std::vector<Query> queries;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    if (!item.is_object() || !item.contains("question") ||
        !item["question"].is_string() ||
        item["question"].get<std::string>().empty()) {
      throw FormatError("query item " + std::to_string(i) +
                        " is missing a \"question\" string");
    }
    if (!item.contains("Structure") || !item["Structure"].is_object()) {
      throw FormatError("query item " + std::to_string(i) +
                        " is missing its \"Structure\" object");
    }
    const auto& st = item["Structure"];
    if (st.value("What", std::string{}) != scenario.what) {
      throw FormatError("query item " + std::to_string(i) +
                        ": Structure.What does not echo the scenario's what");
    }
    Query q;
    q.id = scenario.id + "-q" + pad_index(i, 2);
    q.text = item["question"].get<std::string>();
    q.scenario = Scenario5W{st.value("Who", std::string{}),
                            st.value("When", std::string{}),
                            st.value("Where", std::string{}),
                            st.value("What", std::string{}),
                            st.value("Why", std::string{})};
    queries.push_back(std::move(q));
  }
  return queries;
}

std::vector<std::pair<Preference, std::string>> invert_preference(
    const Query& query, IntentLabel intent, Backend& backend,
    const CallOptions& options) {
  query.validate();
  std::vector<ChatMessage> messages{
      {Role::System, std::string(prompts::preference_inversion_system())},
      {Role::User,
       render_template(prompts::preference_inversion_user(),
                       {{"intent", std::string(label_name(intent))},
                        {"question", query.text}})},
  };
  const auto items =
      ask_parsed(backend, std::move(messages), options.decision_params(),
                 "preference inversion", [](const std::string& raw) {
                   return parse_array(raw, "preference inversion");
                 });

  std::vector<std::pair<Preference, std::string>> out;
  for (const auto& item : items) {
    if (!item.is_object() || !item.contains("intent_type") ||
        !item["intent_type"].is_string()) {
      throw FormatError("inversion item is missing \"intent_type\"");
    }
    const std::string got = trim(item["intent_type"].get<std::string>());
    if (to_lower(got) != to_lower(label_name(intent))) {
      throw FormatError("inversion intent_type \"" + got +
                        "\" does not match the requested intent " +
                        std::string(label_name(intent)));
    }
    if (!item.contains("persona") || !item["persona"].is_array()) {
      throw FormatError("inversion item is missing its \"persona\" array");
    }
    const std::string reason = item.value("reason", std::string{});
    for (const auto& persona : item["persona"]) {
      if (!persona.is_string() || persona.get<std::string>().empty()) {
        throw FormatError("inversion persona entries must be non-empty strings");
      }
      Preference p;
      p.id = query.id + "-" + to_letter(intent) + pad_index(out.size(), 2);
      p.text = persona.get<std::string>();
      p.form = PreferenceForm::Explicit;
      out.emplace_back(std::move(p), reason);
    }
  }
  return out;
}

QualityScores quality_check(const Query& query, const Preference& preference,
                            IntentLabel intent, Backend& backend,
                            const CallOptions& options) {
  return run_quality(prompts::render_personas({preference}), query.text,
                     std::string(label_name(intent)), backend, options);
}

QualityScores quality_check_profile(const Query& query,
                                    const std::vector<LabeledPreference>& profile,
                                    Backend& backend,
                                    const CallOptions& options) {
  std::string intents;
  for (const LabeledPreference& lp : profile) {
    intents.push_back(to_letter(lp.label));
  }
  return run_quality(render_labeled_personas(profile), query.text,
                     "per persona: " + intents, backend, options);
}

bool profile_consistent(const Query& query,
                        const std::vector<LabeledPreference>& profile,
                        Backend& backend, const CallOptions& options) {
  std::vector<ChatMessage> messages{
      {Role::System, std::string(prompts::conflict_filter_system())},
      {Role::User,
       render_template(prompts::conflict_filter_user(),
                       {{"personas", render_labeled_personas(profile)},
                        {"question", query.text}})},
  };
  return ask_parsed(backend, std::move(messages), options.decision_params(),
                    "conflict filter", [](const std::string& raw) {
                      const nlohmann::json j = parse_object(raw, "conflict filter");
                      if (!j.contains("consistent") ||
                          !j["consistent"].is_boolean()) {
                        throw FormatError(
                            "conflict filter verdict lacks boolean "
                            "\"consistent\"");
                      }
                      return j["consistent"].get<bool>();
                    });
}

IterationOutcome iterate_update(const Query& query, Preference preference,
                                IntentLabel intent, Backend& backend,
                                int max_iters, const CallOptions& options) {
  if (max_iters < 1) {
    throw InvalidInputError("iterate_update needs max_iters >= 1");
  }
  IterationOutcome outcome;
  for (int iter = 1; iter <= max_iters; ++iter) {
    const QualityScores scores =
        quality_check(query, preference, intent, backend, options);
    ++outcome.quality_calls;
    outcome.last_judgment = scores.judgment;
    if (scores.pass()) {
      outcome.accepted = true;
      break;
    }
    if (iter == max_iters) break;

    std::vector<ChatMessage> messages{
        {Role::System, std::string(prompts::persona_update_system())},
        {Role::User,
         render_template(prompts::persona_update_user(),
                         {{"persona_old", preference.text},
                          {"question", query.text},
                          {"intent", std::string(label_name(intent))}})},
    };
    const nlohmann::json update = ask_parsed(
        backend, std::move(messages), options.decision_params(),
        "persona update", [](const std::string& raw) {
          const nlohmann::json j = parse_object(raw, "persona update");
          if (!j.contains("persona") || !j["persona"].is_string() ||
              j["persona"].get<std::string>().empty()) {
            throw FormatError("persona update lacks a \"persona\" string");
          }
          return j;
        });
    ++outcome.updater_calls;
    preference.text = update["persona"].get<std::string>();
    if (update.contains("reason") && update["reason"].is_string()) {
      outcome.rationale = update["reason"].get<std::string>();
    }
    // The intent label stays fixed within the loop; the updater's own
    // intent description is recorded, not compared.
    if (update.contains("intent") && update["intent"].is_string()) {
      outcome.intent_text = update["intent"].get<std::string>();
    }
  }
  outcome.preference = std::move(preference);
  return outcome;
}

Preference explicit_to_implicit(const Preference& preference, Backend& backend,
                                const CallOptions& options) {
  if (preference.form != PreferenceForm::Explicit) {
    throw InvalidInputError("preference " + preference.id +
                            " is already implicit");
  }
  std::vector<ChatMessage> messages{
      {Role::System, std::string(prompts::explicit_to_implicit_system())},
      {Role::User, render_template(prompts::explicit_to_implicit_user(),
                                   {{"persona", preference.text}})},
  };
  const std::string raw =
      backend.complete(messages, options.generation_params());

  std::vector<DialogueTurn> turns;
  std::size_t start = 0;
  while (start <= raw.size()) {
    const std::size_t end = raw.find('\n', start);
    const std::string line =
        trim(raw.substr(start, end == std::string::npos ? std::string::npos
                                                        : end - start));
    std::optional<Speaker> speaker;
    std::string text;
    if (line.rfind("User:", 0) == 0) {
      speaker = Speaker::User;
      text = trim(line.substr(5));
    } else if (line.rfind("Assistant:", 0) == 0) {
      speaker = Speaker::Assistant;
      text = trim(line.substr(10));
    }
    if (speaker) {
      if (!turns.empty() && turns.back().speaker == *speaker) {
        turns.back().text += " " + text;  // merge consecutive same-speaker turns
      } else {
        turns.push_back({*speaker, std::move(text)});
      }
    } else if (!line.empty() && !turns.empty()) {
      turns.back().text += " " + line;  // continuation line
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (turns.empty()) {
    throw FormatError("dialogue rewrite for preference " + preference.id +
                      " has no \"User:\"/\"Assistant:\" turns");
  }

  Preference implicit = preference;  // text kept as provenance
  implicit.form = PreferenceForm::Implicit;
  implicit.dialogue = std::move(turns);
  implicit.validate();
  return implicit;
}

BuildResult build_ignore_all(const Query& query,
                             const std::vector<LabeledPreference>& pool,
                             Rng& rng, Backend& backend,
                             const CallOptions& options) {
  std::vector<std::size_t> ignore_pool;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].label == IntentLabel::Ignore) ignore_pool.push_back(i);
  }
  if (ignore_pool.size() < 3) {
    return {std::nullopt, "only " + std::to_string(ignore_pool.size()) +
                              " Ignore preferences for query " + query.id +
                              "; IA needs at least 3"};
  }
  const std::size_t hi = std::min<std::size_t>(8, ignore_pool.size());
  const std::size_t n = 3 + rng.below(hi - 3 + 1);
  std::vector<std::size_t> picked;
  for (std::size_t idx : sample_indices(rng, ignore_pool.size(), n)) {
    picked.push_back(ignore_pool[idx]);
  }
  const auto members = collect_members(pool, picked);
  if (members.size() < 3) {
    return {std::nullopt, "IA subset for query " + query.id +
                              " deduplicated below 3 preferences"};
  }
  const QualityScores gate =
      quality_check_profile(query, members, backend, options);
  if (!gate.pass()) {
    return {std::nullopt,
            "quality gate rejected IA profile for query " + query.id +
                (gate.judgment.empty() ? "" : ": " + gate.judgment)};
  }
  return {make_multi_sample(query.id + "-ia", query, members,
                            SampleSubtype::IgnoreAll),
          {}};
}

BuildResult build_leave_k_out(const Query& query,
                              const std::vector<LabeledPreference>& pool,
                              Rng& rng, Backend& backend,
                              const CallOptions& options) {
  std::vector<std::size_t> non_ignore;
  std::vector<std::size_t> ignore_pool;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].label == IntentLabel::Ignore) {
      ignore_pool.push_back(i);
    } else {
      non_ignore.push_back(i);
    }
  }
  if (non_ignore.empty()) {
    return {std::nullopt,
            "no non-Ignore preference for query " + query.id + "; LKO skipped"};
  }
  const std::size_t k =
      1 + rng.below(std::min<std::size_t>(3, non_ignore.size()));
  const std::size_t n_target = 3 + rng.below(6);  // total profile size in [3,8]
  const std::size_t want_distractors =
      std::max<std::size_t>(n_target > k ? n_target - k : 0, 1);
  const std::size_t distractors =
      std::min(want_distractors, ignore_pool.size());

  std::vector<std::size_t> picked;
  for (std::size_t idx : sample_indices(rng, non_ignore.size(), k)) {
    picked.push_back(non_ignore[idx]);
  }
  for (std::size_t idx : sample_indices(rng, ignore_pool.size(), distractors)) {
    picked.push_back(ignore_pool[idx]);
  }
  std::sort(picked.begin(), picked.end());  // pool order preserved

  const auto members = collect_members(pool, picked);
  std::size_t kept_non_ignore = 0;
  for (const LabeledPreference& lp : members) {
    if (lp.label != IntentLabel::Ignore) ++kept_non_ignore;
  }
  if (kept_non_ignore < 1 || kept_non_ignore > 3) {
    return {std::nullopt, "LKO subset for query " + query.id +
                              " has non-Ignore count outside [1,3]"};
  }
  if (!profile_consistent(query, members, backend, options)) {
    return {std::nullopt,
            "conflict filter rejected LKO profile for query " + query.id};
  }
  const QualityScores gate =
      quality_check_profile(query, members, backend, options);
  if (!gate.pass()) {
    return {std::nullopt,
            "quality gate rejected LKO profile for query " + query.id +
                (gate.judgment.empty() ? "" : ": " + gate.judgment)};
  }
  return {make_multi_sample(query.id + "-lko", query, members,
                            SampleSubtype::LeaveKOut),
          {}};
}

std::optional<IntentLabel> reconcile(const AnnotationCase& annotation) {
  const bool a_disputes = annotation.label_a != annotation.llm_label;
  const bool b_disputes = annotation.label_b != annotation.llm_label;
  // Three-way agreement keeps the LLM label and never consults reviews.
  if (!a_disputes && !b_disputes) return annotation.llm_label;

  auto review_of = [&](Annotator who) {
    auto it = annotation.reviews.find(who);
    if (it == annotation.reviews.end()) {
      throw InvalidInputError(
          std::string("missing self-review for disputing annotator ") +
          (who == Annotator::A ? "A" : "B"));
    }
    return it->second;
  };
  bool any_stand = false;
  if (a_disputes && review_of(Annotator::A) == ReviewVerdict::Stand) {
    any_stand = true;
  }
  if (b_disputes && review_of(Annotator::B) == ReviewVerdict::Stand) {
    any_stand = true;
  }
  if (any_stand) return std::nullopt;
  return annotation.llm_label;
}

}  // namespace rpeval

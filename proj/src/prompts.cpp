#include "rpeval/prompts.hpp"

#include "rpeval/errors.hpp"

namespace rpeval::prompts {

namespace {

constexpr std::string_view kIntentDefinitions =
    "(A) Ignore: Act solely based on the current task objective, disregarding "
    "past preferences.\n"
    "(B) Support: Attempt to fulfill the current task while integrating or "
    "partially retaining past preferences.\n"
    "(C) Dominate: The current behavior is strongly driven by preferences, "
    "with the task focused around those preferences.\n";

// Fixed few-shot exemplars shipped with the artifact. Versioned through
// kAssetVersion together with the templates.
constexpr std::string_view kMleFewShot =
    "<Example>\n"
    "Persona 0: The user enjoys horror movies and often watches them late at "
    "night.\n"
    "Persona 1: The user is vegetarian and never eats meat of any kind.\n"
    "Question: We are hosting my partner's parents for dinner this weekend, "
    "what should I cook?\n"
    "Reasoning 0: The query is about a dinner menu; nothing in its wording "
    "invokes movie habits, and a user with this persona would not expect it "
    "to shape the answer. Ignore ranks first, Support second, Dominate "
    "last.\n"
    "Reasoning 1: The query is about food, and a vegetarian user phrasing "
    "this query expects the constraint to hold without restating it. "
    "Dominate ranks first, Support second, Ignore last.\n"
    "ranking: \"ABC|CBA\"\n"
    "<Example End>\n";

constexpr std::string_view kIpeFewShot =
    "<Example>\n"
    "Persona 0: The user enjoys horror movies and often watches them late at "
    "night.\n"
    "Persona 1: The user is vegetarian and never eats meat of any kind.\n"
    "Question: We are hosting my partner's parents for dinner this weekend, "
    "what should I cook?\n"
    "Reasoning 0: For a dinner-planning request, a user with a horror-movie "
    "habit would neither generate nor accept menu advice driven by it; the "
    "plausible prior is Ignore first.\n"
    "Reasoning 1: A vegetarian user asking about cooking will inevitably "
    "hold the preference as binding; the plausible prior is Dominate first.\n"
    "ranking: \"ABC|CBA\"\n"
    "<Example End>\n";

constexpr std::string_view kCotSingleFewShot =
    "<Example>\n"
    "Persona: The user likes strong-rhythm electronic music for workouts.\n"
    "Question: Could you put together a quiet playlist to help me fall "
    "asleep?\n"
    "Chain of Thought: The query asks for sleep-aid audio. The stored "
    "preference concerns workout music and would mislead the response if "
    "applied; the correct strategy is to ignore it.\n"
    "policy: \"A\"\n"
    "<Example End>\n";

constexpr std::string_view kCotMultiFewShot =
    "<Example>\n"
    "Persona 0: The user likes spicy food.\n"
    "Persona 1: The user is allergic to peanuts and strictly avoids them.\n"
    "Question: Any ideas for tonight's takeout order?\n"
    "Chain of Thought 0: Spicy options would improve the answer but general "
    "suggestions are also acceptable, so this preference plays a supporting "
    "role.\n"
    "Chain of Thought 1: The allergy must constrain every suggestion; this "
    "preference dominates.\n"
    "policy: \"BC\"\n"
    "<Example End>\n";

const std::string kMleSystem = std::string(
    "You are a rational reasoning language model assistant. Your task is to "
    "determine: given a user's multiple preferences (persona) and a natural "
    "language query, which candidate intent is most likely to reflect the "
    "true intent expressed by the query.\n\n"
    "Your reasoning logic is: does the current question combined with each "
    "persona sufficiently support the expression of a specific intent, or is "
    "additional information needed?\n\n"
    "You will rank the three intents by likelihood:\n"
    "(A) Ignore: The expression is entirely independent of preferences, and "
    "ignoring preferences is natural. The query clearly expresses the user's "
    "intent without needing additional information about preferences.\n"
    "(B) Support: The query itself has some relation to preferences, leaving "
    "room for general recommendations. The query needs no additional "
    "information to express an intent open to both preference-based and "
    "general advice.\n"
    "(C) Dominate: The structure and context of the query clearly indicate "
    "that only preferences should drive the response; the query is tightly "
    "constrained by them.\n\n") +
    std::string(kMleFewShot) +
    "\nRespond with a JSON object:\n"
    "{\n"
    "  \"persona\": \"<persona>\",\n"
    "  \"question\": \"<question>\",\n"
    "  \"reason\": \"<your reasoning process>\",\n"
    "  \"ranking\": \"<such as BAC|ABC|ABC|CBA>\",\n"
    "  \"policy\": \"<such as BAAC>\"\n"
    "}\n"
    "The \"ranking\" field must contain exactly one ordering of the letters "
    "A, B and C per persona, most likely intent first, segments separated by "
    "\"|\".";

const std::string kIpeSystem = std::string(
    "You are a rational reasoning language model assistant. Your task is to "
    "judge: for a user with specific preferences, in a specific scenario "
    "(given a specific question), the relative ranking of the different "
    "intents the user might have or accept.\n\n"
    "Your reasoning logic is: does the current question combined with each "
    "persona sufficiently support the expression of a specific intent, or is "
    "additional information needed?\n\n"
    "You will rank the three intents by prior plausibility:\n"
    "(A) Ignore: Perform the task solely based on the current objective. "
    "Users with this preference typically do not generate or accept "
    "intentions related to it in the given context.\n"
    "(B) Support: Users with this preference may consider incorporating it, "
    "but will also accept a general response without it.\n"
    "(C) Dominate: For users with this preference, it is a crucial factor "
    "that must be reflected; ignoring it produces an incorrect response.\n\n") +
    std::string(kIpeFewShot) +
    "\nRespond with a JSON object:\n"
    "{\n"
    "  \"persona\": \"<persona>\",\n"
    "  \"question\": \"<question>\",\n"
    "  \"reason\": \"<your reasoning process>\",\n"
    "  \"ranking\": \"<such as BAC|ABC|ABC|CBA>\",\n"
    "  \"policy\": \"<such as BAAC>\"\n"
    "}\n"
    "The \"ranking\" field must contain exactly one ordering of the letters "
    "A, B and C per persona, most likely intent first, segments separated by "
    "\"|\".";

const std::string kGenerationSystem = std::string(
    "You are a rational reasoning language model assistant. Your task is to "
    "generate a response based on the given user personas, user question, "
    "and a string that indicates the usage strategy for each persona (e.g., "
    "\"AABBC\"). Each letter in the string corresponds to a persona's "
    "strategy:\n") + std::string(kIntentDefinitions);

std::string baseline_single(std::string_view lead,
                            std::string_view few_shot = {}) {
  std::string out = std::string(lead) + "\n" + std::string(kIntentDefinitions);
  if (!few_shot.empty()) out += "\n" + std::string(few_shot);
  out +=
      "\nRespond with a JSON object:\n"
      "{\n"
      "  \"persona\": \"<persona>\",\n"
      "  \"question\": \"<question>\",\n"
      "  \"reason\": \"<your reasoning process>\",\n"
      "  \"policy\": \"(A/B/C)\"\n"
      "}";
  return out;
}

std::string baseline_multi(std::string_view lead,
                           std::string_view few_shot = {}) {
  std::string out = std::string(lead) + "\n" + std::string(kIntentDefinitions);
  if (!few_shot.empty()) out += "\n" + std::string(few_shot);
  out +=
      "\nPlease analyze the role of each preference in the current task and "
      "output a string giving the strategy for each preference. The length "
      "of the string must exactly match the number of preferences, and each "
      "character must be A, B, or C.\n"
      "Respond with a JSON object:\n"
      "{\n"
      "  \"personas\": \"<personas>\",\n"
      "  \"question\": \"<question>\",\n"
      "  \"reason\": \"<your reasoning process>\",\n"
      "  \"policy\": \"(such as AABCC)\"\n"
      "}";
  return out;
}

const std::string kVanillaSingle = baseline_single(
    "You are a personalized assistant, and you need to appropriately "
    "reference the user's persona to determine the most suitable answer "
    "strategy from the following three options:");

const std::string kReminderSingle = baseline_single(
    "You are a personalized assistant, and you need to decide whether and "
    "how to use preferences in this scenario. Choose the most appropriate "
    "answer strategy from the following three:");

const std::string kCotSingle = baseline_single(
    "You are a personalized assistant and need to refer to the user profile "
    "appropriately to determine the most appropriate answer strategy from "
    "the following three options:",
    kCotSingleFewShot);

const std::string kVanillaMulti = baseline_multi(
    "You are a personalized assistant, and your task is to appropriately "
    "reference the user's persona to determine the answer strategy. You need "
    "to assess the role of each preference in the current task and decide "
    "the corresponding strategy for each preference. Each preference should "
    "be categorized into one of the following three options:");

const std::string kReminderMulti = baseline_multi(
    "You are a personalized assistant. You need to appropriately reference "
    "the user's persona to determine the response strategy, and decide "
    "whether and how preferences should be applied in this scenario. Each "
    "preference must be classified into one of the following three "
    "categories:");

const std::string kCotMulti = baseline_multi(
    "You are a personalized assistant, and your task is to appropriately "
    "reference the user's persona to determine the answer strategy. You need "
    "to assess the role of each preference in the current task and decide "
    "the corresponding strategy for each preference. Each preference should "
    "be categorized into one of the following three options:",
    kCotMultiFewShot);

constexpr std::string_view kErrorDefinitions =
    "Filter Bubble (FB): The system mistakenly assumes the user wants "
    "preference-driven behavior, resulting in only preference-related "
    "content being output, lacking normal or diverse information.\n"
    "Underpersonalization Bias (UPB): The system wrongly assumes the user "
    "doesn't need preferences at all and outputs standard content, without "
    "personalized elements.\n"
    "Redundant Information Inclusion (RII): The system assumes it should "
    "balance preferences and general content, but the user only wants either "
    "general advice or preference-related memory, not both.\n"
    "Low Feasibility (LF): The system applies preferences inappropriately or "
    "unrealistically to the context, leading to an unusable response.\n"
    "Verbose Generation (VG): The system generates unnecessary content, "
    "including overly detailed or repetitive information, such as repeating "
    "preferences unnecessarily.\n";

const std::string kJudgeSingle = std::string(
    "You are an evaluation assistant. Your task is to assess whether the "
    "following response aligns with the specified intent type and rate the "
    "issues that occur in it.\n\n"
    "The intent types can be classified as follows:\n") +
    std::string(kIntentDefinitions) + "\n" + std::string(kErrorDefinitions) +
    "\nPlease first assess whether the response strictly aligns with the "
    "user's intent. Then, evaluate whether this response contains the above "
    "issues and rate their severity (0-5, with 0 being none and 5 being "
    "extremely severe). Finally, give an overall score (0-5), where higher "
    "scores indicate more severe issues.\n\n"
    "Please respond in the following JSON format (the value for \"match\" "
    "must be either true or false):\n"
    "{\n"
    "  \"match\": true or false,\n"
    "  \"FB\": 0-5,\n"
    "  \"UPB\": 0-5,\n"
    "  \"RII\": 0-5,\n"
    "  \"LF\": 0-5,\n"
    "  \"VG\": 0-5,\n"
    "  \"Judge\": 0-5,\n"
    "  \"reason\": \"Briefly explain your reasoning\"\n"
    "}";

const std::string kJudgeMulti = std::string(
    "You are an evaluation assistant. Your task is to determine whether the "
    "following reply aligns with the specified intent type, and to score the "
    "issues that occur. Persona refers to multiple user preferences, while "
    "intent denotes the user's true intention, i.e., the utilization level "
    "of each preference.\n\n"
    "The intent types can be classified as follows:\n") +
    std::string(kIntentDefinitions) + "\n" + std::string(kErrorDefinitions) +
    "\nPlease first assess whether the response strictly aligns with the "
    "user's intent. Then, evaluate whether this response contains the above "
    "issues and rate their severity (0-5, with 0 being none and 5 being "
    "extremely severe). Finally, give an overall score (0-5), where higher "
    "scores indicate more severe issues.\n\n"
    "Please respond in the following JSON format. \"MACRO\" is true only if "
    "every preference is used at its intended level; \"MICRO\" is the "
    "fraction of preferences used correctly, written n/m:\n"
    "{\n"
    "  \"MACRO\": true or false,\n"
    "  \"MICRO\": \"n/m\",\n"
    "  \"FB\": 0-5,\n"
    "  \"UPB\": 0-5,\n"
    "  \"RII\": 0-5,\n"
    "  \"LF\": 0-5,\n"
    "  \"VG\": 0-5,\n"
    "  \"Judge\": 0-5,\n"
    "  \"reason\": \"Briefly explain your reasoning\"\n"
    "}";

}  // namespace

std::string_view mle_system() { return kMleSystem; }
std::string_view ipe_system() { return kIpeSystem; }

std::string_view estimator_user() {
  return "{personas}\n\nQuestion: {question}";
}

std::string_view generation_system() { return kGenerationSystem; }

std::string_view generation_user() {
  return "{personas}\n\nQuestion: {question}\n\nStrategy string: {policy}\n\n"
         "Please generate a concise, direct response.";
}

std::string_view baseline_system(std::string_view mode, Multiplicity mult) {
  const bool single = mult == Multiplicity::Single;
  if (mode == "vanilla") return single ? kVanillaSingle : kVanillaMulti;
  if (mode == "reminder") return single ? kReminderSingle : kReminderMulti;
  if (mode == "cot") return single ? kCotSingle : kCotMulti;
  throw ConfigError("unknown baseline mode '" + std::string(mode) + "'");
}

std::string_view baseline_user() {
  return "{personas}\n\nQuestion: {question}";
}

std::string_view judge_system(Multiplicity mult) {
  return mult == Multiplicity::Single ? kJudgeSingle : kJudgeMulti;
}

std::string_view judge_user() {
  return "{personas}\n\nQuestion: {question}\n\nResponse: {response}\n\n"
         "Intent: {intent}";
}

std::string_view scenario_bootstrap_system() {
  return "You are building a repository of everyday-life meta-scenarios for "
         "a personal assistant. Each scenario is defined by two elements: "
         "\"what\", the concrete situation or activity (e.g., family trip "
         "planning, healthy diet plan), and \"why\", the underlying "
         "motivation or need driving it (e.g., strengthening family bonds, "
         "maintaining health).\n\n"
         "Given the example scenarios, propose new scenarios that are "
         "distinct from every example and from each other. Keep them "
         "realistic and everyday.\n\n"
         "Respond with a JSON array:\n"
         "[\n"
         "  {\"what\": \"...\", \"why\": \"...\"},\n"
         "  ...\n"
         "]";
}

std::string_view scenario_bootstrap_user() {
  return "Example scenarios:\n{exemplars}\n\nPropose new scenarios.";
}

std::string_view query_synthesis_system() {
  return "You are a highly capable language understanding assistant tasked "
         "with constructing a dataset to evaluate AI's personalized "
         "understanding ability. Based on the specified What and Why, your "
         "goal is to freely and reasonably complement them with Who, When, "
         "and Where, and generate natural, vague, and realistic daily-life "
         "questions that resemble real user queries.\n\n"
         "Free selection rules:\n"
         "- Who, When, and Where can be reasonably inferred from common "
         "sense and life experience.\n"
         "- The supplemented elements must logically match the What + Why "
         "pair.\n\n"
         "Generation requirements:\n"
         "- Each question must be phrased as a request to a personal "
         "assistant, not as a conversation with another person.\n"
         "- Language should be natural and colloquial, avoiding mechanical "
         "phrasing.\n"
         "- The main tone should be inquisitive: seeking advice, "
         "recommendations, or inspiration.\n"
         "- Each question should be 1-2 sentences, concise but vivid.\n"
         "- Avoid repetitive patterns; ensure subtle variations across "
         "questions.\n\n"
         "Respond with a JSON array:\n"
         "[\n"
         "  {\n"
         "    \"question\": \"(Natural daily-life query)\",\n"
         "    \"Structure\": {\n"
         "      \"Who\": \"(Inferred participants)\",\n"
         "      \"When\": \"(Inferred time context)\",\n"
         "      \"Where\": \"(Inferred location context)\",\n"
         "      \"What\": \"(the given What, echoed verbatim)\",\n"
         "      \"Why\": \"(the given Why, echoed verbatim)\"\n"
         "    }\n"
         "  },\n"
         "  ...\n"
         "]";
}

std::string_view query_synthesis_user() {
  return "Fixed conditions:\nWhat: {what}\nWhy: {why}";
}

std::string_view preference_inversion_system() {
  return "You are a highly capable language understanding assistant building "
         "a dataset to evaluate AI's ability for personalized understanding. "
         "Your task is to generate user preferences such that, for the given "
         "question, each preference plays exactly the requested intent "
         "role:\n"
         "(A) Ignore: the preference does not improve, or may even mislead, "
         "the response to this question.\n"
         "(B) Support: the preference can improve the quality of the "
         "response but is not mandatory.\n"
         "(C) Dominate: the preference must be strictly followed; otherwise "
         "the response is factually wrong or strongly rejected.\n\n"
         "Requirements:\n"
         "- The advice type should be an abstract, general category, not a "
         "specific example.\n"
         "- Preferences must be real and natural, based on interests, "
         "habits, behavior styles, life pace, etc., and must not be specific "
         "to the current scenario.\n"
         "- The language should be neutral, natural, and free of sarcasm.\n"
         "- Keep each preference a simple statement like \"User likes "
         "xxx.\"\n\n"
         "Respond with a JSON array:\n"
         "[\n"
         "  {\n"
         "    \"intent_type\": \"<the requested intent>\",\n"
         "    \"advice_type\": \"(Abstract category)\",\n"
         "    \"reason\": \"(Brief reason)\",\n"
         "    \"persona\": [\n"
         "      \"Preference 1\",\n"
         "      \"Preference 2\"\n"
         "    ]\n"
         "  },\n"
         "  ...\n"
         "]";
}

std::string_view preference_inversion_user() {
  return "Requested intent: {intent}\nQuestion: {question}";
}

std::string_view quality_check_system() {
  return "You are a professional data auditor, responsible for evaluating "
         "whether a user with the given long-term preference(s) (persona) "
         "would express the given request with the stated intent type as "
         "the driving intent.\n\n"
         "Scoring dimensions (0-5 scale for each; 5 means fully satisfied):\n"
         "- Rationality: a response following the stated intent type would "
         "be reasonable; the user's current goal takes precedence and the "
         "persona must not override the user's choices when irrelevant.\n"
         "- Relevance: the stated intent type matches how likely the user "
         "is to recall this persona for this request (Ignore: would almost "
         "never recall it; Support: may recall it, but not necessarily; "
         "Dominate: would inevitably recall it).\n"
         "- Alignment: the stated intent type matches how well the persona "
         "aligns with the query focus (Ignore: unrelated; Support: "
         "compatible, general advice also acceptable; Dominate: fully "
         "aligned).\n\n"
         "Respond with a JSON object:\n"
         "{\n"
         "  \"rationality\": 0-5,\n"
         "  \"relevance\": 0-5,\n"
         "  \"alignment\": 0-5,\n"
         "  \"judgment\": \"...\"\n"
         "}";
}

std::string_view quality_check_user() {
  return "User preference (persona):\n{personas}\n\nUser request (question): "
         "{question}\n\nStated intent type: {intent}";
}

std::string_view persona_update_system() {
  return "You are a persona analysis assistant. I will provide you with a "
         "user trait along with a query and a target intent type. Your task "
         "is to refine and update the persona into a scenario-independent, "
         "stable expression of preference strength so that a user holding "
         "the updated persona, when issuing this query, expresses exactly "
         "the target intent type (Ignore: expects the persona to be "
         "completely disregarded; Support: expects persona-related advice "
         "alongside general suggestions; Dominate: rejects any response "
         "that contradicts the persona).\n\n"
         "Rules (must follow strictly):\n"
         "- The updated persona must not mention the scenario, intent, or "
         "behavior of the given query. It must remain a context-free "
         "persona expression.\n"
         "- The persona should implicitly reflect the strength of "
         "preference, e.g., through wording style, behavioral description, "
         "or language rhythm.\n"
         "- Weak preferences may be expressed in a casual and plain style; "
         "strong preferences should be conveyed with stronger tone, richer "
         "details, and more emotional intensity.\n\n"
         "Respond with a JSON object:\n"
         "{\n"
         "  \"persona_old\": \"...\",\n"
         "  \"question\": \"...\",\n"
         "  \"intent\": \"(the intent the user pursues under the updated "
         "persona)\",\n"
         "  \"reason\": \"(your reasoning process)\",\n"
         "  \"check\": \"(your validation that the persona is "
         "scenario-independent and free of query-specific entities or "
         "behaviors)\",\n"
         "  \"persona\": \"(the updated persona description)\"\n"
         "}";
}

std::string_view persona_update_user() {
  return "User's previous preference (persona_old): {persona_old}\n"
         "User's query (question): {question}\n"
         "Target intent type: {intent}";
}

std::string_view explicit_to_implicit_system() {
  return "Based on the user's explicit preference, create a multi-turn "
         "dialogue (e.g., five turns) that naturally conveys this preference "
         "without directly stating \"this is my preference\" or using "
         "list-style options. The strength and scope of the preference must "
         "strictly match the persona description.\n\n"
         "Requirements:\n"
         "- The dialogue should include interactions between the user and "
         "the assistant, with the number of turns adjusted as needed.\n"
         "- The language should be natural, conversational, and aligned "
         "with everyday communication habits.\n"
         "- The user should implicitly express the preference through "
         "responses or by sharing experiences, rather than explicitly "
         "stating or defining it.\n\n"
         "Provide the complete multi-turn dialogue directly. Each turn must "
         "be prefixed with \"User:\" or \"Assistant:\".";
}

std::string_view explicit_to_implicit_user() { return "{persona}"; }

std::string_view conflict_filter_system() {
  return "You are auditing a user profile for internal consistency. Given "
         "several stored preferences of one user and the user's current "
         "question, decide whether all the preferences can plausibly hold "
         "for the same user at the same time, with no pair of entries "
         "contradicting each other.\n\n"
         "Respond with a JSON object:\n"
         "{\n"
         "  \"consistent\": true or false,\n"
         "  \"reason\": \"...\"\n"
         "}";
}

std::string_view conflict_filter_user() {
  return "Preferences:\n{personas}\n\nQuestion: {question}";
}

std::string_view format_reminder() {
  return "Your previous reply could not be parsed. Respond again with only "
         "the JSON in exactly the required output format, with no "
         "surrounding prose.";
}

std::string render_preference(const Preference& preference) {
  if (preference.form == PreferenceForm::Explicit) return preference.text;
  std::string out;
  for (std::size_t i = 0; i < preference.dialogue.size(); ++i) {
    const DialogueTurn& turn = preference.dialogue[i];
    out += turn.speaker == Speaker::User ? "User: " : "Assistant: ";
    out += turn.text;
    if (i + 1 < preference.dialogue.size()) out += "\n";
  }
  return out;
}

std::string render_personas(const std::vector<Preference>& preferences) {
  std::string out;
  for (std::size_t i = 0; i < preferences.size(); ++i) {
    const Preference& p = preferences[i];
    if (p.form == PreferenceForm::Explicit) {
      out += "Persona " + std::to_string(i) + ": " + p.text;
    } else {
      out += "Persona " + std::to_string(i) + " (dialogue):\n" +
             render_preference(p);
    }
    if (i + 1 < preferences.size()) out += "\n";
  }
  return out;
}

}  // namespace rpeval::prompts

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpeval/errors.hpp"

namespace rpeval {

// The three memory-utilization intents. Letter codes A/B/C are the wire
// form used in policy and ranking strings.
enum class IntentLabel { Ignore, Support, Dominate };

inline constexpr std::array<IntentLabel, 3> kAllIntents = {
    IntentLabel::Ignore, IntentLabel::Support, IntentLabel::Dominate};

char to_letter(IntentLabel label);
IntentLabel label_from_letter(char letter);  // throws ParseError
std::string_view label_name(IntentLabel label);
IntentLabel label_from_name(std::string_view name);  // throws ParseError

enum class PreferenceForm { Explicit, Implicit };
enum class Speaker { User, Assistant };

struct DialogueTurn {
  Speaker speaker;
  std::string text;

  bool operator==(const DialogueTurn&) const = default;
};

// One user-memory item. Explicit form is a direct statement; implicit form
// renders the same statement as a multi-turn dialogue (text keeps the
// source statement as provenance).
struct Preference {
  std::string id;
  std::string text;
  PreferenceForm form = PreferenceForm::Explicit;
  std::vector<DialogueTurn> dialogue;

  void validate() const;
  bool operator==(const Preference&) const = default;
};

struct Scenario5W {
  std::string who, when, where, what, why;

  bool operator==(const Scenario5W&) const = default;
};

struct Query {
  std::string id;  // in-memory provenance only; not persisted
  std::string text;
  std::optional<Scenario5W> scenario;

  void validate() const;
  // id is deliberately excluded: the dataset schema does not carry it.
  bool operator==(const Query& other) const {
    return text == other.text && scenario == other.scenario;
  }
};

// Ordered intent decisions, one per preference. Serializes as "BAAC".
struct PolicyString {
  std::vector<IntentLabel> labels;

  static PolicyString parse(std::string_view s);  // throws ParseError
  std::string str() const;
  std::size_t size() const { return labels.size(); }
  IntentLabel operator[](std::size_t k) const { return labels[k]; }

  bool operator==(const PolicyString&) const = default;
};

enum class Multiplicity { Single, Multi };
enum class SampleSubtype { None, IgnoreAll, LeaveKOut };

std::string_view to_string(Multiplicity m);
std::string_view to_string(PreferenceForm f);
std::string_view to_string(SampleSubtype s);
Multiplicity multiplicity_from_string(std::string_view s);
PreferenceForm form_from_string(std::string_view s);
SampleSubtype subtype_from_string(std::string_view s);

struct SampleConfig {
  Multiplicity multiplicity = Multiplicity::Single;
  PreferenceForm form = PreferenceForm::Explicit;
  SampleSubtype subtype = SampleSubtype::None;

  bool operator==(const SampleConfig&) const = default;
};

struct Sample {
  std::string id;
  Query query;
  std::vector<Preference> preferences;
  PolicyString gold;
  std::string rationale;
  std::optional<std::string> intent_text;
  SampleConfig config;

  void validate() const;  // throws InvalidInputError
  bool operator==(const Sample&) const = default;
};

// Competition ranks over the three intents: rank(i) = 1 + |{j : j beats i}|.
// Ties share a rank; values stay in [1,3].
struct RankVector {
  std::array<int, 3> ranks{0, 0, 0};  // indexed by IntentLabel

  int rank(IntentLabel label) const {
    return ranks[static_cast<std::size_t>(label)];
  }
  int& rank(IntentLabel label) {
    return ranks[static_cast<std::size_t>(label)];
  }
  bool tie_free() const;

  bool operator==(const RankVector&) const = default;
};

// rank(i) = 1 + count of j with score(j) > score(i).
RankVector ranks_from_scores(const std::map<IntentLabel, double>& scores);

// "BAC" -> B first. Case-insensitive, whitespace-trimmed; anything that is
// not a permutation of ABC is a ParseError naming the segment.
RankVector ranks_from_ordering(std::string_view ordering);

// Inverse of ranks_from_ordering; tied vectors cannot be expressed as an
// ordering string and raise InvalidInputError.
std::string ordering_from_ranks(const RankVector& rv);

}  // namespace rpeval

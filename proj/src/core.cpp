#include "rpeval/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rpeval/util.hpp"

namespace rpeval {

char to_letter(IntentLabel label) {
  switch (label) {
    case IntentLabel::Ignore: return 'A';
    case IntentLabel::Support: return 'B';
    case IntentLabel::Dominate: return 'C';
  }
  return '?';
}

IntentLabel label_from_letter(char letter) {
  switch (letter) {
    case 'A': return IntentLabel::Ignore;
    case 'B': return IntentLabel::Support;
    case 'C': return IntentLabel::Dominate;
    default:
      throw ParseError(std::string("invalid intent letter '") + letter +
                       "' (expected A, B or C)");
  }
}

std::string_view label_name(IntentLabel label) {
  switch (label) {
    case IntentLabel::Ignore: return "Ignore";
    case IntentLabel::Support: return "Support";
    case IntentLabel::Dominate: return "Dominate";
  }
  return "?";
}

IntentLabel label_from_name(std::string_view name) {
  for (IntentLabel l : kAllIntents) {
    if (label_name(l) == name) return l;
  }
  throw ParseError("invalid intent name '" + std::string(name) + "'");
}

void Preference::validate() const {
  if (id.empty()) throw InvalidInputError("preference id must be non-empty");
  if (form == PreferenceForm::Explicit) {
    if (!dialogue.empty()) {
      throw InvalidInputError("preference " + id +
                              ": explicit form must not carry a dialogue");
    }
    return;
  }
  if (dialogue.empty()) {
    throw InvalidInputError("preference " + id +
                            ": implicit form requires a non-empty dialogue");
  }
  for (std::size_t i = 1; i < dialogue.size(); ++i) {
    if (dialogue[i].speaker == dialogue[i - 1].speaker) {
      throw InvalidInputError("preference " + id +
                              ": dialogue speakers must alternate (turn " +
                              std::to_string(i) + ")");
    }
  }
}

void Query::validate() const {
  if (text.empty()) throw InvalidInputError("query text must be non-empty");
}

PolicyString PolicyString::parse(std::string_view s) {
  const std::string cleaned = to_upper(trim(s));
  if (cleaned.empty()) throw ParseError("empty policy string");
  PolicyString out;
  out.labels.reserve(cleaned.size());
  for (char c : cleaned) out.labels.push_back(label_from_letter(c));
  return out;
}

std::string PolicyString::str() const {
  std::string out;
  out.reserve(labels.size());
  for (IntentLabel l : labels) out.push_back(to_letter(l));
  return out;
}

std::string_view to_string(Multiplicity m) {
  return m == Multiplicity::Single ? "single" : "multi";
}

std::string_view to_string(PreferenceForm f) {
  return f == PreferenceForm::Explicit ? "explicit" : "implicit";
}

std::string_view to_string(SampleSubtype s) {
  switch (s) {
    case SampleSubtype::None: return "none";
    case SampleSubtype::IgnoreAll: return "IA";
    case SampleSubtype::LeaveKOut: return "LKO";
  }
  return "?";
}

Multiplicity multiplicity_from_string(std::string_view s) {
  if (s == "single") return Multiplicity::Single;
  if (s == "multi") return Multiplicity::Multi;
  throw ParseError("invalid multiplicity '" + std::string(s) + "'");
}

PreferenceForm form_from_string(std::string_view s) {
  if (s == "explicit") return PreferenceForm::Explicit;
  if (s == "implicit") return PreferenceForm::Implicit;
  throw ParseError("invalid form '" + std::string(s) + "'");
}

SampleSubtype subtype_from_string(std::string_view s) {
  if (s == "none") return SampleSubtype::None;
  if (s == "IA") return SampleSubtype::IgnoreAll;
  if (s == "LKO") return SampleSubtype::LeaveKOut;
  throw ParseError("invalid subtype '" + std::string(s) + "'");
}

void Sample::validate() const {
  if (id.empty()) throw InvalidInputError("sample id must be non-empty");
  query.validate();
  if (preferences.empty()) {
    throw InvalidInputError("sample " + id + ": needs at least one preference");
  }
  if (gold.size() != preferences.size()) {
    throw InvalidInputError("sample " + id + ": gold length " +
                            std::to_string(gold.size()) +
                            " != preference count " +
                            std::to_string(preferences.size()));
  }
  std::set<std::string> ids;
  for (const Preference& p : preferences) {
    p.validate();
    if (!ids.insert(p.id).second) {
      throw InvalidInputError("sample " + id + ": duplicate preference id '" +
                              p.id + "'");
    }
    if (p.form != config.form) {
      throw InvalidInputError("sample " + id + ": preference " + p.id +
                              " form does not match config.form");
    }
  }
  const std::size_t k = preferences.size();
  if (config.multiplicity == Multiplicity::Single && k != 1) {
    throw InvalidInputError("sample " + id + ": single multiplicity requires K = 1");
  }
  std::size_t non_ignore = 0;
  for (IntentLabel l : gold.labels) {
    if (l != IntentLabel::Ignore) ++non_ignore;
  }
  if (config.subtype == SampleSubtype::IgnoreAll) {
    if (non_ignore != 0) {
      throw InvalidInputError("sample " + id +
                              ": IA subtype requires all-Ignore gold labels");
    }
    if (k < 3 || k > 8) {
      throw InvalidInputError("sample " + id +
                              ": IA subtype requires K ∈ [3,8], got K = " +
                              std::to_string(k));
    }
  }
  if (config.subtype == SampleSubtype::LeaveKOut) {
    if (non_ignore < 1 || non_ignore > 3) {
      throw InvalidInputError(
          "sample " + id +
          ": LKO subtype requires non-Ignore count ∈ [1,3], got " +
          std::to_string(non_ignore));
    }
  }
}

bool RankVector::tie_free() const {
  std::array<int, 3> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  return sorted == std::array<int, 3>{1, 2, 3};
}

RankVector ranks_from_scores(const std::map<IntentLabel, double>& scores) {
  if (scores.size() != kAllIntents.size()) {
    throw InvalidInputError("scores must cover all three intents");
  }
  for (const auto& [label, s] : scores) {
    if (!std::isfinite(s)) {
      throw InvalidInputError(std::string("non-finite score for intent ") +
                              std::string(label_name(label)));
    }
  }
  RankVector rv;
  for (IntentLabel i : kAllIntents) {
    int beaten_by = 0;
    for (IntentLabel j : kAllIntents) {
      if (j != i && scores.at(j) > scores.at(i)) ++beaten_by;
    }
    rv.rank(i) = 1 + beaten_by;
  }
  return rv;
}

RankVector ranks_from_ordering(std::string_view ordering) {
  const std::string cleaned = to_upper(trim(ordering));
  auto fail = [&](const std::string& why) {
    throw ParseError("invalid ordering segment \"" + std::string(ordering) +
                     "\": " + why);
  };
  if (cleaned.size() != 3) fail("expected exactly 3 letters");
  RankVector rv;
  std::array<bool, 3> seen{false, false, false};
  for (std::size_t pos = 0; pos < 3; ++pos) {
    const char c = cleaned[pos];
    if (c != 'A' && c != 'B' && c != 'C') {
      fail(std::string("foreign character '") + c + "'");
    }
    const auto idx = static_cast<std::size_t>(c - 'A');
    if (seen[idx]) fail(std::string("duplicate letter '") + c + "'");
    seen[idx] = true;
    rv.ranks[idx] = static_cast<int>(pos) + 1;
  }
  return rv;
}

std::string ordering_from_ranks(const RankVector& rv) {
  if (!rv.tie_free()) {
    throw InvalidInputError(
        "tied rank vector cannot be serialized as an ordering string");
  }
  std::string out(3, '?');
  for (IntentLabel l : kAllIntents) {
    out[static_cast<std::size_t>(rv.rank(l) - 1)] = to_letter(l);
  }
  return out;
}

}  // namespace rpeval

#include "rpeval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rpeval/util.hpp"

namespace rpeval {

std::string_view to_string(StrategyErrorKind kind) {
  switch (kind) {
    case StrategyErrorKind::None: return "None";
    case StrategyErrorKind::FB: return "FB";
    case StrategyErrorKind::RII: return "RII";
    case StrategyErrorKind::UPB: return "UPB";
  }
  return "?";
}

StrategyErrorKind strategy_error(IntentLabel pred, IntentLabel gold) {
  if (pred == gold) return StrategyErrorKind::None;
  switch (pred) {
    case IntentLabel::Dominate: return StrategyErrorKind::FB;
    case IntentLabel::Support: return StrategyErrorKind::RII;
    case IntentLabel::Ignore: return StrategyErrorKind::UPB;
  }
  return StrategyErrorKind::None;
}

SingleAccuracy single_accuracy(
    const std::vector<std::pair<IntentLabel, IntentLabel>>& results) {
  if (results.empty()) {
    throw InvalidInputError("single_accuracy needs at least one result");
  }
  SingleAccuracy out;
  std::map<IntentLabel, int> gold_counts;
  std::map<IntentLabel, int> hit_counts;
  int hits = 0;
  for (const auto& [pred, gold] : results) {
    ++gold_counts[gold];
    if (pred == gold) {
      ++hits;
      ++hit_counts[gold];
    }
  }
  out.acc_all = static_cast<double>(hits) / results.size();
  for (const auto& [label, n] : gold_counts) {
    out.acc_per_class[label] = static_cast<double>(hit_counts[label]) / n;
  }
  return out;
}

MultiAccuracy multi_accuracy(
    const std::vector<std::pair<PolicyString, PolicyString>>& results) {
  if (results.empty()) {
    throw InvalidInputError("multi_accuracy needs at least one result");
  }
  MultiAccuracy out;
  int exact = 0;
  long long matched = 0;
  long long positions = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [pred, gold] = results[i];
    if (pred.size() != gold.size()) {
      throw InvalidInputError("multi_accuracy: length mismatch at sample " +
                              std::to_string(i) + " (pred " + pred.str() +
                              " vs gold " + gold.str() + ")");
    }
    bool all = true;
    for (std::size_t k = 0; k < gold.size(); ++k) {
      if (pred[k] == gold[k]) {
        ++matched;
      } else {
        all = false;
      }
    }
    positions += static_cast<long long>(gold.size());
    if (all) ++exact;
  }
  out.macro = static_cast<double>(exact) / results.size();
  out.micro = static_cast<double>(matched) / positions;
  return out;
}

namespace {

int read_severity(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ParseError(std::string("judge verdict lacks numeric \"") + key +
                     "\"");
  }
  const double v = j[key].get<double>();
  if (v != std::floor(v)) {
    throw ParseError(std::string("judge field \"") + key +
                     "\" is not an integer");
  }
  const int score = static_cast<int>(v);
  if (score < 0 || score > 5) {
    throw FormatError(std::string("judge field \"") + key + "\" = " +
                      std::to_string(score) + " outside [0,5]");
  }
  return score;
}

Rational parse_micro(const nlohmann::json& v, std::size_t k) {
  const int den = static_cast<int>(k);
  if (v.is_string()) {
    const std::string s = trim(v.get<std::string>());
    const std::size_t slash = s.find('/');
    if (slash == std::string::npos) throw ParseError("MICRO is not \"n/m\"");
    int num = 0, d = 0;
    try {
      num = std::stoi(s.substr(0, slash));
      d = std::stoi(s.substr(slash + 1));
    } catch (const std::exception&) {
      throw ParseError("MICRO \"" + s + "\" is not \"n/m\"");
    }
    if (d != den) {
      throw FormatError("MICRO denominator " + std::to_string(d) +
                        " != preference count " + std::to_string(den));
    }
    if (num < 0 || num > den) {
      throw FormatError("MICRO numerator " + std::to_string(num) +
                        " outside [0," + std::to_string(den) + "]");
    }
    return {num, den};
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (x < 0.0 || x > 1.0) {
      throw FormatError("MICRO value " + std::to_string(x) + " outside [0,1]");
    }
    return {static_cast<int>(std::lround(x * den)), den};
  }
  throw ParseError("MICRO must be an \"n/m\" string or a number");
}

}  // namespace

JudgeResult parse_judge_result(const std::string& raw, Multiplicity mult,
                               std::size_t preference_count) {
  const auto json_text = extract_json_object(raw);
  if (!json_text) throw ParseError("no JSON object in judge response");
  const nlohmann::json j = nlohmann::json::parse(*json_text);

  JudgeResult out;
  out.multi = mult == Multiplicity::Multi;
  if (out.multi) {
    if (!j.contains("MACRO") || !j["MACRO"].is_boolean()) {
      throw ParseError("multi judge verdict lacks boolean \"MACRO\"");
    }
    out.match = j["MACRO"].get<bool>();
    if (!j.contains("MICRO")) {
      throw ParseError("multi judge verdict lacks \"MICRO\"");
    }
    out.micro = parse_micro(j["MICRO"], preference_count);
  } else {
    if (!j.contains("match") || !j["match"].is_boolean()) {
      throw ParseError("judge verdict lacks boolean \"match\"");
    }
    out.match = j["match"].get<bool>();
  }
  out.fb = read_severity(j, "FB");
  out.upb = read_severity(j, "UPB");
  out.rii = read_severity(j, "RII");
  out.lf = read_severity(j, "LF");
  out.vg = read_severity(j, "VG");
  out.judge = read_severity(j, "Judge");
  out.reason = j.value("reason", std::string{});
  return out;
}

JudgeResult judge(const Sample& sample, const std::string& response,
                  Backend& backend, const CallOptions& options) {
  if (!sample.intent_text || sample.intent_text->empty()) {
    throw InvalidInputError("sample " + sample.id +
                            " has no intent_text; judging needs the gold "
                            "intent description");
  }
  std::vector<ChatMessage> messages{
      {Role::System,
       std::string(prompts::judge_system(sample.config.multiplicity))},
      {Role::User,
       render_template(prompts::judge_user(),
                       {{"personas", prompts::render_personas(sample.preferences)},
                        {"question", sample.query.text},
                        {"response", response},
                        {"intent", *sample.intent_text}})},
  };
  return ask_parsed(backend, std::move(messages), options.decision_params(),
                    "judge for sample " + sample.id,
                    [&](const std::string& raw) {
                      return parse_judge_result(raw,
                                                sample.config.multiplicity,
                                                sample.preferences.size());
                    });
}

double qwk(const std::vector<int>& ratings_a, const std::vector<int>& ratings_b,
           int categories) {
  if (ratings_a.size() != ratings_b.size()) {
    throw InvalidInputError("rating vectors differ in length (" +
                            std::to_string(ratings_a.size()) + " vs " +
                            std::to_string(ratings_b.size()) + ")");
  }
  if (ratings_a.empty()) {
    throw InvalidInputError("rating vectors must be non-empty");
  }
  if (categories < 2) {
    throw InvalidInputError("qwk needs at least 2 categories");
  }
  const auto k = static_cast<std::size_t>(categories);
  auto check = [&](int r) {
    if (r < 0 || r >= categories) {
      throw InvalidInputError("rating " + std::to_string(r) +
                              " outside [0," + std::to_string(categories - 1) +
                              "]");
    }
  };

  std::vector<long long> observed(k * k, 0);
  std::vector<long long> marginal_a(k, 0);
  std::vector<long long> marginal_b(k, 0);
  for (std::size_t i = 0; i < ratings_a.size(); ++i) {
    check(ratings_a[i]);
    check(ratings_b[i]);
    ++observed[static_cast<std::size_t>(ratings_a[i]) * k +
               static_cast<std::size_t>(ratings_b[i])];
    ++marginal_a[static_cast<std::size_t>(ratings_a[i])];
    ++marginal_b[static_cast<std::size_t>(ratings_b[i])];
  }

  // The (K-1)^2 weight normalization cancels in the ratio, so unscaled
  // squared distances over integer counts keep the arithmetic exact for as
  // long as possible. Observed terms carry an extra factor n to share the
  // expected terms' n^2 denominator.
  const double n = static_cast<double>(ratings_a.size());
  double weighted_observed = 0.0;
  double weighted_expected = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = d * d;
      weighted_observed +=
          w * static_cast<double>(observed[i * k + j]) * n;
      weighted_expected +=
          w * static_cast<double>(marginal_a[i] * marginal_b[j]);
    }
  }
  if (weighted_observed == 0.0) return 1.0;
  return 1.0 - weighted_observed / weighted_expected;
}

namespace {

bool config_less(const SampleConfig& a, const SampleConfig& b) {
  return std::tuple(static_cast<int>(a.multiplicity), static_cast<int>(a.form),
                    static_cast<int>(a.subtype)) <
         std::tuple(static_cast<int>(b.multiplicity), static_cast<int>(b.form),
                    static_cast<int>(b.subtype));
}

struct Row {
  const Sample* sample = nullptr;
  const DecisionOutcome* outcome = nullptr;
  const JudgeResult* verdict = nullptr;
};

SliceStats compute_stats(const std::vector<Row>& rows) {
  SliceStats stats;
  stats.n_samples = static_cast<int>(rows.size());

  std::vector<std::pair<IntentLabel, IntentLabel>> single_pairs;
  std::vector<std::pair<PolicyString, PolicyString>> multi_pairs;
  double fb = 0, upb = 0, rii = 0, lf = 0, vg = 0, judge_sum = 0;
  int judged = 0;
  double judge_micro_sum = 0;
  int judge_micro_n = 0;

  for (const Row& row : rows) {
    if (row.outcome->failure) {
      ++stats.n_failures;
    } else if (row.sample->config.multiplicity == Multiplicity::Single) {
      single_pairs.emplace_back((*row.outcome->policy)[0], row.sample->gold[0]);
    } else {
      multi_pairs.emplace_back(*row.outcome->policy, row.sample->gold);
    }
    if (row.verdict) {
      ++judged;
      fb += row.verdict->fb;
      upb += row.verdict->upb;
      rii += row.verdict->rii;
      lf += row.verdict->lf;
      vg += row.verdict->vg;
      judge_sum += row.verdict->judge;
      if (row.verdict->micro) {
        judge_micro_sum += row.verdict->micro->value();
        ++judge_micro_n;
      }
    }
  }

  if (!single_pairs.empty()) {
    const SingleAccuracy acc = single_accuracy(single_pairs);
    stats.acc_all = acc.acc_all;
    stats.acc_per_class = acc.acc_per_class;
  }
  if (!multi_pairs.empty()) {
    const MultiAccuracy acc = multi_accuracy(multi_pairs);
    stats.macro = acc.macro;
    stats.micro = acc.micro;
  }
  if (judged > 0) {
    stats.fb = fb / judged;
    stats.upb = upb / judged;
    stats.rii = rii / judged;
    stats.lf = lf / judged;
    stats.vg = vg / judged;
    stats.judge_mean = judge_sum / judged;
  }
  if (judge_micro_n > 0) stats.judge_micro = judge_micro_sum / judge_micro_n;
  return stats;
}

double round_to(double v, int places) {
  const double scale = std::pow(10.0, places);
  return std::round(v * scale) / scale;
}

nlohmann::ordered_json stats_to_json(const SliceStats& s) {
  nlohmann::ordered_json out;
  out["n_samples"] = s.n_samples;
  out["n_failures"] = s.n_failures;
  nlohmann::ordered_json acc;
  if (s.acc_all) {
    acc["all"] = round_to(*s.acc_all, 4);
    nlohmann::ordered_json per_class;
    for (const auto& [label, v] : s.acc_per_class) {
      per_class[std::string(label_name(label))] = round_to(v, 4);
    }
    acc["per_class"] = per_class;
  }
  if (s.macro) acc["macro"] = round_to(*s.macro, 4);
  if (s.micro) acc["micro"] = round_to(*s.micro, 4);
  out["acc"] = acc;
  nlohmann::ordered_json errors;
  if (s.fb) {
    errors["FB"] = round_to(*s.fb, 3);
    errors["UPB"] = round_to(*s.upb, 3);
    errors["RII"] = round_to(*s.rii, 3);
    errors["LF"] = round_to(*s.lf, 3);
    errors["VG"] = round_to(*s.vg, 3);
  }
  out["errors"] = errors;
  if (s.judge_mean) out["judge_mean"] = round_to(*s.judge_mean, 3);
  if (s.judge_micro) out["judge_micro"] = round_to(*s.judge_micro, 4);
  return out;
}

std::string config_label(const SampleConfig& c) {
  std::string out = std::string(to_string(c.multiplicity)) + "/" +
                    std::string(to_string(c.form));
  if (c.subtype != SampleSubtype::None) {
    out += "/" + std::string(to_string(c.subtype));
  }
  return out;
}

}  // namespace

Report report(const std::vector<DecisionOutcome>& decisions,
              const std::vector<std::pair<std::string, JudgeResult>>& judges,
              const std::vector<Sample>& dataset) {
  std::map<std::string, const Sample*> by_id;
  for (const Sample& s : dataset) {
    if (!by_id.emplace(s.id, &s).second) {
      throw InvalidInputError("duplicate sample id '" + s.id +
                              "' in dataset");
    }
  }
  std::map<std::string, const DecisionOutcome*> outcome_by_id;
  for (const DecisionOutcome& d : decisions) {
    if (!by_id.count(d.id)) {
      throw InvalidInputError("decision for unknown sample id '" + d.id + "'");
    }
    if (!outcome_by_id.emplace(d.id, &d).second) {
      throw InvalidInputError("duplicate decision for sample id '" + d.id +
                              "'");
    }
    if (!d.failure && !d.policy) {
      throw InvalidInputError("decision for sample '" + d.id +
                              "' carries neither policy nor failure");
    }
    if (d.policy && d.policy->size() != by_id.at(d.id)->gold.size()) {
      throw InvalidInputError("decision policy length mismatch for sample '" +
                              d.id + "'");
    }
  }
  std::map<std::string, const JudgeResult*> verdict_by_id;
  for (const auto& [id, verdict] : judges) {
    if (!by_id.count(id)) {
      throw InvalidInputError("judge result for unknown sample id '" + id +
                              "'");
    }
    verdict_by_id[id] = &verdict;
  }

  Report rep;
  std::map<SampleConfig, std::vector<Row>, decltype(&config_less)> slices(
      &config_less);
  std::vector<Row> all_rows;
  rep.strategy_histogram[StrategyErrorKind::FB] = 0;
  rep.strategy_histogram[StrategyErrorKind::RII] = 0;
  rep.strategy_histogram[StrategyErrorKind::UPB] = 0;

  for (const auto& [id, sample] : by_id) {
    auto it = outcome_by_id.find(id);
    if (it == outcome_by_id.end()) {
      rep.missing.push_back(id);
      continue;
    }
    Row row;
    row.sample = sample;
    row.outcome = it->second;
    if (auto v = verdict_by_id.find(id); v != verdict_by_id.end()) {
      row.verdict = v->second;
    }
    if (row.outcome->failure) {
      rep.failures.emplace_back(id, *row.outcome->failure);
    } else {
      for (std::size_t k = 0; k < sample->gold.size(); ++k) {
        const StrategyErrorKind kind =
            strategy_error((*row.outcome->policy)[k], sample->gold[k]);
        if (kind != StrategyErrorKind::None) ++rep.strategy_histogram[kind];
      }
    }
    slices[sample->config].push_back(row);
    all_rows.push_back(row);
  }

  for (const auto& [config, rows] : slices) {
    rep.slices.emplace_back(config, compute_stats(rows));
  }
  if (!all_rows.empty()) rep.overall = compute_stats(all_rows);
  return rep;
}

std::string report_to_json(const Report& r) {
  nlohmann::ordered_json out;
  out["slices"] = nlohmann::ordered_json::array();
  for (const auto& [config, stats] : r.slices) {
    nlohmann::ordered_json slice;
    slice["config"] = {{"multiplicity", std::string(to_string(config.multiplicity))},
                       {"form", std::string(to_string(config.form))},
                       {"subtype", std::string(to_string(config.subtype))}};
    const nlohmann::ordered_json s = stats_to_json(stats);
    for (auto it = s.begin(); it != s.end(); ++it) slice[it.key()] = it.value();
    out["slices"].push_back(slice);
  }
  out["overall"] = stats_to_json(r.overall);
  nlohmann::ordered_json hist;
  for (const auto& [kind, count] : r.strategy_histogram) {
    hist[std::string(to_string(kind))] = count;
  }
  out["strategy_errors"] = hist;
  out["failures"] = nlohmann::ordered_json::array();
  for (const auto& [id, reason] : r.failures) {
    out["failures"].push_back({{"id", id}, {"reason", reason}});
  }
  out["missing"] = r.missing;
  return out.dump(2) + "\n";
}

std::string report_to_table(const Report& r) {
  std::ostringstream os;
  os << std::left << std::setw(26) << "config" << std::right << std::setw(6)
     << "n" << std::setw(8) << "acc" << std::setw(8) << "macro" << std::setw(8)
     << "micro" << std::setw(8) << "FB" << std::setw(8) << "UPB"
     << std::setw(8) << "RII" << std::setw(8) << "LF" << std::setw(8) << "VG"
     << std::setw(8) << "judge" << std::setw(6) << "fail" << "\n";
  auto cell = [&](const std::optional<double>& v, int places) {
    std::ostringstream c;
    if (v) {
      c << std::fixed << std::setprecision(places) << *v;
    } else {
      c << "-";
    }
    return c.str();
  };
  auto line = [&](const std::string& name, const SliceStats& s) {
    os << std::left << std::setw(26) << name << std::right << std::setw(6)
       << s.n_samples << std::setw(8) << cell(s.acc_all, 3) << std::setw(8)
       << cell(s.macro, 3) << std::setw(8) << cell(s.micro, 3) << std::setw(8)
       << cell(s.fb, 3) << std::setw(8) << cell(s.upb, 3) << std::setw(8)
       << cell(s.rii, 3) << std::setw(8) << cell(s.lf, 3) << std::setw(8)
       << cell(s.vg, 3) << std::setw(8) << cell(s.judge_mean, 3)
       << std::setw(6) << s.n_failures << "\n";
  };
  for (const auto& [config, stats] : r.slices) line(config_label(config), stats);
  line("overall", r.overall);
  os << "strategy errors:";
  for (const auto& [kind, count] : r.strategy_histogram) {
    os << " " << to_string(kind) << "=" << count;
  }
  os << "\n";
  if (!r.missing.empty()) {
    os << "missing decisions: " << r.missing.size() << "\n";
  }
  return os.str();
}

}  // namespace rpeval

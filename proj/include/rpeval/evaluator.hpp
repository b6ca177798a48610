#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpeval/core.hpp"
#include "rpeval/llm_call.hpp"

namespace rpeval {

// Strategy-level error taxonomy: which mistake a wrong prediction makes,
// determined purely by the (predicted, gold) cell.
enum class StrategyErrorKind { None, FB, RII, UPB };

std::string_view to_string(StrategyErrorKind kind);

StrategyErrorKind strategy_error(IntentLabel pred, IntentLabel gold);

struct SingleAccuracy {
  double acc_all = 0.0;
  // Classes with zero gold instances are omitted, never reported as 0.
  std::map<IntentLabel, double> acc_per_class;
};

SingleAccuracy single_accuracy(
    const std::vector<std::pair<IntentLabel, IntentLabel>>& results);

struct MultiAccuracy {
  double macro = 0.0;  // fraction of samples with every position correct
  double micro = 0.0;  // matching positions / total positions
};

MultiAccuracy multi_accuracy(
    const std::vector<std::pair<PolicyString, PolicyString>>& results);

struct Rational {
  int num = 0;
  int den = 1;

  double value() const { return static_cast<double>(num) / den; }
  std::string str() const {
    return std::to_string(num) + "/" + std::to_string(den);
  }
  bool operator==(const Rational&) const = default;
};

// Parsed LLM-judge verdict. `match` holds the single-preference match or
// the multi-preference MACRO; `micro` is present only for multi verdicts.
struct JudgeResult {
  bool multi = false;
  bool match = false;
  std::optional<Rational> micro;
  int fb = 0, upb = 0, rii = 0, lf = 0, vg = 0;
  int judge = 0;
  std::string reason;
};

JudgeResult judge(const Sample& sample, const std::string& response,
                  Backend& backend, const CallOptions& options);

// Exposed for tests.
JudgeResult parse_judge_result(const std::string& raw, Multiplicity mult,
                               std::size_t preference_count);

// Quadratic-weighted Cohen's kappa for ordinal ratings in [0, categories-1].
// Zero observed weighted disagreement returns 1.0 by convention.
double qwk(const std::vector<int>& ratings_a, const std::vector<int>& ratings_b,
           int categories);

// ---- Run reporting ----

// Per-sample evaluation outcome fed into the report. Exactly one of
// `policy` / `failure` is set.
struct DecisionOutcome {
  std::string id;
  std::optional<PolicyString> policy;
  std::optional<std::string> failure;
};

struct SliceStats {
  int n_samples = 0;
  int n_failures = 0;
  // Discriminative accuracy, computed from labels.
  std::optional<double> acc_all;               // K = 1 samples
  std::map<IntentLabel, double> acc_per_class; // K = 1 samples
  std::optional<double> macro;                 // K > 1 samples
  std::optional<double> micro;                 // K > 1 samples
  // Judge severities, means over judged samples.
  std::optional<double> fb, upb, rii, lf, vg;
  std::optional<double> judge_mean;
  // The judge's own micro estimate, reported separately from the
  // label-derived micro above.
  std::optional<double> judge_micro;
};

struct Report {
  std::vector<std::pair<SampleConfig, SliceStats>> slices;  // sorted by config
  SliceStats overall;
  std::map<StrategyErrorKind, int> strategy_histogram;
  std::vector<std::pair<std::string, std::string>> failures;  // id, reason
  std::vector<std::string> missing;  // dataset ids with no decision
};

Report report(const std::vector<DecisionOutcome>& decisions,
              const std::vector<std::pair<std::string, JudgeResult>>& judges,
              const std::vector<Sample>& dataset);

std::string report_to_json(const Report& r);  // canonical, machine-readable
std::string report_to_table(const Report& r); // aligned plain text

}  // namespace rpeval

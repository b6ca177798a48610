// Acceptance suite: runs every release criterion and prints one PASS/FAIL
// line per criterion. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <vector>

#include "golden_run.hpp"
#include "rpeval/datagen.hpp"
#include "rpeval/evaluator.hpp"
#include "rpeval/reasoner.hpp"
#include "test_support.hpp"

using namespace rpeval;

namespace {

int failures = 0;

void criterion(int number, const std::string& name,
               const std::function<void()>& body) {
  try {
    body();
    std::printf("PASS  %d. %s\n", number, name.c_str());
  } catch (const std::exception& e) {
    std::printf("FAIL  %d. %s\n      %s\n", number, name.c_str(), e.what());
    ++failures;
  }
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

// ---- criterion 1 -----------------------------------------------------

void rank_aggregation_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const std::array<const char*, 6> orderings = {"ABC", "ACB", "BAC",
                                                "BCA", "CAB", "CBA"};
  int pairs = 0;
  for (const char* a : orderings) {
    for (const char* b : orderings) {
      ++pairs;
      const RankVector ra = ranks_from_ordering(a);
      const RankVector rb = ranks_from_ordering(b);
      // Brute-force argmin-of-sums set.
      int best = 100;
      std::set<IntentLabel> expected;
      for (IntentLabel l : kAllIntents) {
        const int s = ra.rank(l) + rb.rank(l);
        if (s < best) {
          best = s;
          expected = {l};
        } else if (s == best) {
          expected.insert(l);
        }
      }
      std::set<IntentLabel> produced;
      for (std::uint64_t seed = 0; seed < 128; ++seed) {
        Rng rng(seed);
        const auto [label, tie_broken] = aggregate(ra, rb, rng);
        require(expected.count(label) == 1,
                std::string("aggregate(") + a + "," + b +
                    ") left the argmin set");
        require(tie_broken == (expected.size() > 1),
                std::string("tie flag wrong for (") + a + "," + b + ")");
        produced.insert(label);
      }
      require(produced == expected,
              std::string("argmin coverage wrong for (") + a + "," + b + ")");
    }
  }
  require(pairs == 36, "expected 36 ordered pairs");
  const auto elapsed = std::chrono::steady_clock::now() - start;
  require(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed)
              .count() < 1000,
          "exhaustive enumeration exceeded 1 s");
}

// ---- criterion 2 -----------------------------------------------------

void error_matrix_table() {
  using K = StrategyErrorKind;
  const IntentLabel I = IntentLabel::Ignore;
  const IntentLabel S = IntentLabel::Support;
  const IntentLabel D = IntentLabel::Dominate;
  const struct {
    IntentLabel pred, gold;
    K expected;
  } cells[9] = {
      {I, I, K::None}, {I, S, K::UPB},  {I, D, K::UPB},
      {S, I, K::RII},  {S, S, K::None}, {S, D, K::RII},
      {D, I, K::FB},   {D, S, K::FB},   {D, D, K::None},
  };
  for (const auto& cell : cells) {
    require(strategy_error(cell.pred, cell.gold) == cell.expected,
            std::string("cell (") + to_letter(cell.pred) + "," +
                to_letter(cell.gold) + ") mismatched");
  }
}

// ---- criterion 3 -----------------------------------------------------

void metric_fixtures() {
  using P = std::pair<IntentLabel, IntentLabel>;
  const IntentLabel A = IntentLabel::Ignore;
  const IntentLabel B = IntentLabel::Support;
  const IntentLabel C = IntentLabel::Dominate;

  // Five hand-computed single_accuracy fixtures, exact comparisons.
  {
    const SingleAccuracy acc = single_accuracy({P{A, A}, P{B, B}, P{C, C}});
    require(acc.acc_all == 1.0, "fixture 1 acc_all");
  }
  {
    const SingleAccuracy acc = single_accuracy({P{A, A}, P{B, A}, P{C, C}});
    require(acc.acc_all == 2.0 / 3.0, "fixture 2 acc_all");
    require(acc.acc_per_class.at(A) == 1.0 / 2.0, "fixture 2 class A");
    require(acc.acc_per_class.at(C) == 1.0, "fixture 2 class C");
    require(acc.acc_per_class.count(B) == 0, "fixture 2 absent class");
  }
  {
    const SingleAccuracy acc =
        single_accuracy({P{A, B}, P{A, B}, P{B, B}, P{C, B}});
    require(acc.acc_all == 1.0 / 4.0, "fixture 3 acc_all");
    require(acc.acc_per_class.at(B) == 1.0 / 4.0, "fixture 3 class B");
  }
  auto pair = [](const char* p, const char* g) {
    return std::make_pair(PolicyString::parse(p), PolicyString::parse(g));
  };
  {
    const MultiAccuracy acc =
        multi_accuracy({pair("AB", "AB"), pair("AAC", "ABC")});
    require(acc.macro == 1.0 / 2.0, "fixture 4 macro");
    require(acc.micro == 4.0 / 5.0, "fixture 4 micro");
  }
  {
    const MultiAccuracy acc = multi_accuracy(
        {pair("AAA", "AAA"), pair("BC", "CB"), pair("ABCA", "ABCC")});
    require(acc.macro == 1.0 / 3.0, "fixture 5 macro");
    require(acc.micro == 6.0 / 9.0, "fixture 5 micro");
  }
  {
    const MultiAccuracy acc = multi_accuracy({pair("C", "C"), pair("B", "C")});
    require(acc.macro == 1.0 / 2.0, "fixture 6 macro");
    require(acc.micro == 1.0 / 2.0, "fixture 6 micro");
  }

  // K = 1 identity under 1,000 randomized trials.
  Rng rng(0xACCE55);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(25));
    std::vector<std::pair<PolicyString, PolicyString>> pairs;
    std::vector<P> singles;
    for (int i = 0; i < n; ++i) {
      const IntentLabel pred = kAllIntents[rng.below(3)];
      const IntentLabel gold = kAllIntents[rng.below(3)];
      PolicyString ps, gs;
      ps.labels = {pred};
      gs.labels = {gold};
      pairs.emplace_back(ps, gs);
      singles.emplace_back(pred, gold);
    }
    const MultiAccuracy multi = multi_accuracy(pairs);
    const SingleAccuracy single = single_accuracy(singles);
    require(multi.macro == multi.micro, "K=1 identity macro != micro");
    require(multi.macro == single.acc_all, "K=1 identity macro != acc_all");
  }
}

// ---- criterion 4 -----------------------------------------------------

double oracle_qwk(const std::vector<int>& a, const std::vector<int>& b,
                  int categories) {
  const double n = static_cast<double>(a.size());
  std::vector<std::vector<double>> counts(
      categories, std::vector<double>(categories, 0.0));
  std::vector<double> ma(categories, 0.0), mb(categories, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    counts[a[i]][b[i]] += 1.0;
    ma[a[i]] += 1.0;
    mb[b[i]] += 1.0;
  }
  const double norm = static_cast<double>(categories - 1) *
                      static_cast<double>(categories - 1);
  double po = 0.0, pe = 0.0;
  for (int i = 0; i < categories; ++i) {
    for (int j = 0; j < categories; ++j) {
      const double v = 1.0 - (i - j) * (i - j) / norm;
      po += v * counts[i][j] / n;
      pe += v * (ma[i] / n) * (mb[j] / n);
    }
  }
  if (pe == 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

void qwk_criterion() {
  require(qwk({0, 1, 2, 3, 4, 5}, {0, 1, 2, 3, 4, 5}, 6) == 1.0,
          "perfect agreement must be exactly 1.0");
  const double opposed = qwk({0, 0, 5, 5}, {5, 5, 0, 0}, 6);
  require(std::abs(opposed - (-1.0)) < 1e-12,
          "opposed extremes must reach -1.0");

  Rng rng(0xCAFE);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(50));
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.below(6));
      b[i] = static_cast<int>(rng.below(6));
    }
    const double expected = oracle_qwk(a, b, 6);
    const double got = qwk(a, b, 6);
    require(std::abs(got - expected) < 1e-9,
            "implementation departed from the independent oracle by " +
                std::to_string(std::abs(got - expected)));
  }
}

// ---- criterion 5 -----------------------------------------------------

void golden_run_criterion() {
  test_support::TempDir dir("acceptance-golden");
  const golden::GoldenRun run_a = golden::run_pipeline(dir.file("a"), 77);
  require(run_a.generate.exit_code == 0,
          "generate failed:\n" + run_a.generate.output);
  require(run_a.expand.exit_code == 0,
          "expand failed:\n" + run_a.expand.output);
  require(run_a.evaluate.exit_code == 0,
          "evaluate failed:\n" + run_a.evaluate.output);
  const golden::GoldenRun run_b = golden::run_pipeline(dir.file("b"), 77);
  require(run_b.all_ok(), "second pipeline run failed");

  auto same = [&](const std::filesystem::path& x,
                  const std::filesystem::path& y, const char* what) {
    const std::string bytes_x = test_support::read_file(x);
    require(!bytes_x.empty(), std::string(what) + " is empty");
    require(bytes_x == test_support::read_file(y),
            std::string(what) + " differs between the two runs");
  };
  same(run_a.dataset, run_b.dataset, "generated dataset");
  same(run_a.expanded, run_b.expanded, "expanded dataset");
  same(run_a.results, run_b.results, "results file");
  same(run_a.report_json, run_b.report_json, "report.json");
  same(run_a.report_table, run_b.report_table, "report.txt");

  // The run must exercise all three intents, both multi subtypes and one
  // estimator-format failure.
  const std::vector<Sample> expanded = load_dataset(run_a.expanded);
  std::set<IntentLabel> intents;
  bool saw_ia = false;
  bool saw_lko = false;
  bool saw_implicit = false;
  for (const Sample& s : expanded) {
    for (IntentLabel l : s.gold.labels) intents.insert(l);
    saw_ia = saw_ia || s.config.subtype == SampleSubtype::IgnoreAll;
    saw_lko = saw_lko || s.config.subtype == SampleSubtype::LeaveKOut;
    saw_implicit =
        saw_implicit || s.config.form == PreferenceForm::Implicit;
  }
  require(intents.size() == 3, "expanded dataset is missing an intent");
  require(saw_ia, "no Ignore-All sample in the golden run");
  require(saw_lko, "no Leave-K-Out sample in the golden run");
  require(saw_implicit, "no implicit configuration in the golden run");

  const nlohmann::json report =
      nlohmann::json::parse(test_support::read_file(run_a.report_json));
  require(report["failures"].size() == 1,
          "expected exactly one estimator-format failure in the report");
  const std::string reason = report["failures"][0]["reason"];
  require(reason.find("malformed") != std::string::npos,
          "failure reason does not describe the format error");

  // Cross-platform identity is by construction: no platform-defined RNG
  // distributions, no wall-clock in scripted manifests, no absolute paths
  // in outputs, sorted writes, LF endings. Verified here by double run.
}

// ---- criterion 6 -----------------------------------------------------

void cost_contract() {
  CallOptions options;
  for (int k : {1, 2, 5}) {
    ScriptedBackend backend;
    std::string ranking = "ABC";
    for (int i = 1; i < k; ++i) ranking += "|ABC";
    const std::string estimator =
        "{\"reason\": \"r\", \"ranking\": \"" + ranking + "\"}";
    backend.push_response(estimator);
    backend.push_response(estimator);
    const Sample sample = test_support::make_multi_sample(
        "cost" + std::to_string(k), "query?", std::string(k, 'A'));
    decide(sample, backend, options, 3);
    require(backend.call_count() == 2,
            "decide() must issue exactly 2 backend calls, made " +
                std::to_string(backend.call_count()));
  }
  for (const char* mode : {"vanilla", "reminder", "cot"}) {
    ScriptedBackend backend;
    backend.push_response("{\"policy\": \"AB\"}");
    const Sample sample =
        test_support::make_multi_sample(std::string("cost-") + mode, "q?", "AB");
    baseline_decide(mode, sample, backend, options);
    require(backend.call_count() == 1,
            std::string(mode) + " baseline must issue exactly 1 call");
  }
}

// ---- criterion 7 -----------------------------------------------------

// Always-passing gate stub: answers the conflict filter and the quality
// gate by inspecting which prompt arrived.
class PassingGateBackend : public Backend {
 public:
  std::string complete(const std::vector<ChatMessage>& messages,
                       const ChatParams&) override {
    if (messages.front().content.find("internal consistency") !=
        std::string::npos) {
      return "{\"consistent\": true, \"reason\": \"ok\"}";
    }
    return "{\"rationality\": 5, \"relevance\": 5, \"alignment\": 5, "
           "\"judgment\": \"ok\"}";
  }
};

void dataset_invariants_fuzz() {
  CallOptions options;
  PassingGateBackend backend;

  Rng pool_rng(0xF00D);
  std::size_t built = 0;
  std::size_t attempts = 0;
  while (built < 10000) {
    ++attempts;
    const std::size_t ignores = pool_rng.below(12);
    const std::size_t others = pool_rng.below(5);
    std::vector<LabeledPreference> pool;
    for (std::size_t i = 0; i < ignores; ++i) {
      LabeledPreference lp;
      lp.preference = test_support::make_pref(
          "ig" + std::to_string(i), "ignore pref " + std::to_string(i));
      lp.label = IntentLabel::Ignore;
      lp.rationale = "r";
      lp.intent_text = "t";
      pool.push_back(lp);
    }
    for (std::size_t i = 0; i < others; ++i) {
      LabeledPreference lp;
      lp.preference = test_support::make_pref(
          "nx" + std::to_string(i), "relevant pref " + std::to_string(i));
      lp.label = (i % 2 == 0) ? IntentLabel::Support : IntentLabel::Dominate;
      lp.rationale = "r";
      lp.intent_text = "t";
      pool.push_back(lp);
    }
    const Query query{"fz" + std::to_string(attempts), "fuzz query?",
                      std::nullopt};

    Rng build_rng = make_sample_rng(attempts, "fuzz-ia");
    const BuildResult ia =
        build_ignore_all(query, pool, build_rng, backend, options);
    if (ia.ok()) {
      const Sample& s = *ia.sample;
      require(s.preferences.size() >= 3 && s.preferences.size() <= 8,
              "IA sample size outside [3,8]");
      for (IntentLabel l : s.gold.labels) {
        require(l == IntentLabel::Ignore, "IA sample has a non-Ignore label");
      }
      s.validate();
      ++built;
    }

    Rng lko_rng = make_sample_rng(attempts, "fuzz-lko");
    const BuildResult lko =
        build_leave_k_out(query, pool, lko_rng, backend, options);
    if (lko.ok()) {
      const Sample& s = *lko.sample;
      std::size_t non_ignore = 0;
      for (IntentLabel l : s.gold.labels) {
        if (l != IntentLabel::Ignore) ++non_ignore;
      }
      require(non_ignore >= 1 && non_ignore <= 3,
              "LKO non-Ignore count outside [1,3]");
      s.validate();
      ++built;
    }
    require(attempts < 40000, "fuzz failed to build enough samples");
  }
  require(built >= 10000, "fewer than 10,000 fuzz samples");
}

// ---- criterion 8 -----------------------------------------------------

void reconciliation_totality() {
  const std::array<ReviewVerdict, 2> verdicts = {ReviewVerdict::Admit,
                                                 ReviewVerdict::Stand};
  int cases = 0;
  for (IntentLabel llm : kAllIntents) {
    for (IntentLabel a : kAllIntents) {
      for (IntentLabel b : kAllIntents) {
        AnnotationCase base;
        base.llm_label = llm;
        base.label_a = a;
        base.label_b = b;
        const bool a_disputes = a != llm;
        const bool b_disputes = b != llm;
        if (!a_disputes && !b_disputes) {
          // The agreement path must not consult reviews: poisoned entries
          // change nothing.
          AnnotationCase poisoned = base;
          poisoned.reviews[Annotator::A] = ReviewVerdict::Stand;
          poisoned.reviews[Annotator::B] = ReviewVerdict::Stand;
          require(reconcile(base) == llm, "agreement must keep");
          require(reconcile(poisoned) == llm,
                  "agreement path consulted reviews");
          ++cases;
          continue;
        }
        for (ReviewVerdict ra : verdicts) {
          for (ReviewVerdict rb : verdicts) {
            AnnotationCase c = base;
            if (a_disputes) c.reviews[Annotator::A] = ra;
            if (b_disputes) c.reviews[Annotator::B] = rb;
            const bool any_stand =
                (a_disputes && ra == ReviewVerdict::Stand) ||
                (b_disputes && rb == ReviewVerdict::Stand);
            const auto result = reconcile(c);
            if (any_stand) {
              require(result == std::nullopt, "standing disputer must dispute");
            } else {
              require(result == llm, "admitting disputers must keep");
            }
            ++cases;
          }
        }
        // Missing reviews for disputers are invalid input.
        bool threw = false;
        try {
          reconcile(base);
        } catch (const InvalidInputError&) {
          threw = true;
        }
        require(threw, "missing disputer review must be invalid input");
      }
    }
  }
  require(cases > 0, "no reconciliation branches covered");
}

}  // namespace

int main() {
  std::printf("RPEval acceptance criteria\n");
  criterion(1, "rank-aggregation matches the exhaustive argmin oracle (36 pairs, <1s)",
            rank_aggregation_oracle);
  criterion(2, "strategy error matrix matches all 9 cells", error_matrix_table);
  criterion(3, "accuracy metrics reproduce hand-computed fixtures exactly",
            metric_fixtures);
  criterion(4, "QWK: 1.0 / -1.0 fixtures and 1e-9 oracle agreement",
            qwk_criterion);
  criterion(5, "scripted golden run is byte-identical across two runs",
            golden_run_criterion);
  criterion(6, "decide() costs 2 backend calls, baselines cost 1",
            cost_contract);
  criterion(7, "10,000 seeded expansion samples satisfy IA/LKO bounds",
            dataset_invariants_fuzz);
  criterion(8, "reconciliation is total and agreement ignores reviews",
            reconciliation_totality);
  if (failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria failed\n", failures);
  }
  return failures;
}

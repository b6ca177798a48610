#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rpeval/evaluator.hpp"
#include "rpeval/hash.hpp"
#include "test_support.hpp"

using namespace rpeval;
using test_support::make_multi_sample;
using test_support::make_single_sample;

namespace {

// Independent weighted-kappa oracle using the agreement formulation
// kappa = (po_w - pe_w) / (1 - pe_w) with agreement weights
// v_ij = 1 - (i-j)^2/(K-1)^2. Algebraically equal to the disagreement
// form computed by the implementation.
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
  if (pe == 1.0) return 1.0;  // degenerate: both raters constant and equal
  return (po - pe) / (1.0 - pe);
}

std::string judge_json_single(int fb, int upb, int rii, int lf, int vg,
                              int judge_score, bool match = true) {
  return "{\"match\": " + std::string(match ? "true" : "false") +
         ", \"FB\": " + std::to_string(fb) +
         ", \"UPB\": " + std::to_string(upb) +
         ", \"RII\": " + std::to_string(rii) +
         ", \"LF\": " + std::to_string(lf) +
         ", \"VG\": " + std::to_string(vg) +
         ", \"Judge\": " + std::to_string(judge_score) +
         ", \"reason\": \"looks fine\"}";
}

}  // namespace

TEST_SUITE("evaluator") {

TEST_CASE("strategy error matrix covers all 9 cells") {
  using K = StrategyErrorKind;
  const IntentLabel I = IntentLabel::Ignore;
  const IntentLabel S = IntentLabel::Support;
  const IntentLabel D = IntentLabel::Dominate;
  // Rows: predicted; columns: gold.
  CHECK(strategy_error(I, I) == K::None);
  CHECK(strategy_error(I, S) == K::UPB);
  CHECK(strategy_error(I, D) == K::UPB);
  CHECK(strategy_error(S, I) == K::RII);
  CHECK(strategy_error(S, S) == K::None);
  CHECK(strategy_error(S, D) == K::RII);
  CHECK(strategy_error(D, I) == K::FB);
  CHECK(strategy_error(D, S) == K::FB);
  CHECK(strategy_error(D, D) == K::None);
}

TEST_CASE("single_accuracy") {
  using P = std::pair<IntentLabel, IntentLabel>;
  const IntentLabel A = IntentLabel::Ignore;
  const IntentLabel B = IntentLabel::Support;
  const IntentLabel C = IntentLabel::Dominate;

  SUBCASE("all correct") {
    const SingleAccuracy acc = single_accuracy({P{A, A}, P{B, B}, P{C, C}});
    CHECK(acc.acc_all == 1.0);
    CHECK(acc.acc_per_class.at(A) == 1.0);
    CHECK(acc.acc_per_class.at(B) == 1.0);
    CHECK(acc.acc_per_class.at(C) == 1.0);
  }
  SUBCASE("hand-counted mixed case") {
    // preds (A,B,C) vs golds (A,A,C)
    const SingleAccuracy acc = single_accuracy({P{A, A}, P{B, A}, P{C, C}});
    CHECK(acc.acc_all == 2.0 / 3.0);
    CHECK(acc.acc_per_class.at(A) == 0.5);
    CHECK(acc.acc_per_class.at(C) == 1.0);
    CHECK(acc.acc_per_class.count(B) == 0);  // no Support gold
  }
  SUBCASE("absent classes are omitted, not zero") {
    const SingleAccuracy acc = single_accuracy({P{A, A}, P{C, B}});
    CHECK(acc.acc_per_class.count(C) == 0);
  }
  SUBCASE("empty input is invalid") {
    CHECK_THROWS_AS(single_accuracy({}), InvalidInputError);
  }
  SUBCASE("class-weighted mean of per-class accuracy equals acc_all") {
    Rng rng(404);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<P> results;
      std::map<IntentLabel, int> gold_counts;
      const int n = 1 + static_cast<int>(rng.below(30));
      for (int i = 0; i < n; ++i) {
        const IntentLabel pred = kAllIntents[rng.below(3)];
        const IntentLabel gold = kAllIntents[rng.below(3)];
        results.emplace_back(pred, gold);
        ++gold_counts[gold];
      }
      const SingleAccuracy acc = single_accuracy(results);
      double weighted = 0.0;
      for (const auto& [label, share] : acc.acc_per_class) {
        weighted += share * gold_counts[label];
      }
      CHECK(weighted / n == doctest::Approx(acc.acc_all).epsilon(1e-12));
    }
  }
}

TEST_CASE("multi_accuracy") {
  auto pair = [](const char* p, const char* g) {
    return std::make_pair(PolicyString::parse(p), PolicyString::parse(g));
  };
  SUBCASE("hand-counted example") {
    const MultiAccuracy acc = multi_accuracy({pair("AB", "AB"), pair("AAC", "ABC")});
    CHECK(acc.macro == 0.5);
    CHECK(acc.micro == 4.0 / 5.0);
  }
  SUBCASE("all exact") {
    const MultiAccuracy acc = multi_accuracy({pair("ABC", "ABC"), pair("C", "C")});
    CHECK(acc.macro == 1.0);
    CHECK(acc.micro == 1.0);
  }
  SUBCASE("length mismatch names the sample") {
    CHECK_THROWS_WITH_AS(multi_accuracy({pair("AB", "AB"), pair("A", "AB")}),
                         doctest::Contains("sample 1"), InvalidInputError);
  }
  SUBCASE("K=1 identity: macro = micro = acc_all, 1000 randomized trials") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(20));
      std::vector<std::pair<PolicyString, PolicyString>> pairs;
      std::vector<std::pair<IntentLabel, IntentLabel>> singles;
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
      CHECK(multi.macro == multi.micro);
      CHECK(multi.macro == single.acc_all);
    }
  }
  SUBCASE("macro <= micro under a shared K") {
    Rng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = 2 + rng.below(4);
      const int n = 1 + static_cast<int>(rng.below(12));
      std::vector<std::pair<PolicyString, PolicyString>> pairs;
      for (int i = 0; i < n; ++i) {
        PolicyString ps, gs;
        for (std::size_t j = 0; j < k; ++j) {
          ps.labels.push_back(kAllIntents[rng.below(3)]);
          gs.labels.push_back(kAllIntents[rng.below(3)]);
        }
        pairs.emplace_back(ps, gs);
      }
      const MultiAccuracy acc = multi_accuracy(pairs);
      CHECK(acc.macro <= acc.micro + 1e-12);
    }
  }
}

TEST_CASE("judge verdict parsing") {
  SUBCASE("single, zero severities") {
    const JudgeResult v = parse_judge_result(
        judge_json_single(0, 0, 0, 0, 0, 0), Multiplicity::Single, 1);
    CHECK(v.match);
    CHECK(v.fb == 0);
    CHECK(v.judge == 0);
    CHECK_FALSE(v.multi);
    CHECK_FALSE(v.micro.has_value());
  }
  SUBCASE("multi with n/m micro") {
    const JudgeResult v = parse_judge_result(
        "{\"MACRO\": false, \"MICRO\": \"3/5\", \"FB\": 4, \"UPB\": 0, "
        "\"RII\": 1, \"LF\": 0, \"VG\": 2, \"Judge\": 3, \"reason\": \"x\"}",
        Multiplicity::Multi, 5);
    CHECK_FALSE(v.match);
    REQUIRE(v.micro.has_value());
    CHECK(v.micro->num == 3);
    CHECK(v.micro->den == 5);
    CHECK(v.fb == 4);
  }
  SUBCASE("real-valued micro normalizes to a rational") {
    const JudgeResult v = parse_judge_result(
        "{\"MACRO\": true, \"MICRO\": 0.6, \"FB\": 0, \"UPB\": 0, \"RII\": 0, "
        "\"LF\": 0, \"VG\": 0, \"Judge\": 0}",
        Multiplicity::Multi, 5);
    CHECK(v.micro == Rational{3, 5});
  }
  SUBCASE("severity out of range is a format error") {
    CHECK_THROWS_AS(parse_judge_result(judge_json_single(7, 0, 0, 0, 0, 0),
                                       Multiplicity::Single, 1),
                    FormatError);
  }
  SUBCASE("micro denominator must equal K") {
    CHECK_THROWS_AS(
        parse_judge_result("{\"MACRO\": true, \"MICRO\": \"2/4\", \"FB\": 0, "
                           "\"UPB\": 0, \"RII\": 0, \"LF\": 0, \"VG\": 0, "
                           "\"Judge\": 0}",
                           Multiplicity::Multi, 5),
        FormatError);
  }
  SUBCASE("missing fields re-ask (parse error)") {
    CHECK_THROWS_AS(parse_judge_result("{\"FB\": 1}", Multiplicity::Single, 1),
                    ParseError);
  }
}

TEST_CASE("judge orchestration") {
  CallOptions options;
  SUBCASE("requires intent_text") {
    ScriptedBackend backend;
    Sample sample = make_single_sample("j1", "q?", "pref", IntentLabel::Ignore);
    sample.intent_text.reset();
    CHECK_THROWS_AS(judge(sample, "resp", backend, options), InvalidInputError);
  }
  SUBCASE("re-asks after prose, then parses") {
    ScriptedBackend backend;
    backend.push_response("I think the answer matches the intent well.");
    backend.push_response(judge_json_single(0, 1, 0, 0, 2, 1));
    const Sample sample =
        make_single_sample("j2", "q?", "pref", IntentLabel::Ignore);
    const JudgeResult v = judge(sample, "a response", backend, options);
    CHECK(v.upb == 1);
    CHECK(v.vg == 2);
    CHECK(backend.call_count() == 2);
  }
  SUBCASE("multi prompt carries the response and intent text") {
    ScriptedBackend backend;
    backend.push_response(
        "{\"MACRO\": true, \"MICRO\": \"2/2\", \"FB\": 0, \"UPB\": 0, "
        "\"RII\": 0, \"LF\": 0, \"VG\": 0, \"Judge\": 0}");
    const Sample sample = make_multi_sample("j3", "q?", "AB");
    judge(sample, "the generated response", backend, options);
    const auto transcript = backend.transcript();
    const std::string& prompt = transcript[0].messages[1].content;
    CHECK(prompt.find("the generated response") != std::string::npos);
    CHECK(prompt.find(*sample.intent_text) != std::string::npos);
  }
}

TEST_CASE("qwk") {
  SUBCASE("perfect agreement") {
    CHECK(qwk({0, 1, 2, 3}, {0, 1, 2, 3}, 6) == 1.0);
    CHECK(qwk({0, 1, 2}, {0, 1, 2}, 6) == 1.0);
    CHECK(qwk({2, 2, 2}, {2, 2, 2}, 6) == 1.0);  // zero marginal variance
  }
  SUBCASE("opposed extremes reach -1") {
    CHECK(qwk({0, 0, 5, 5}, {5, 5, 0, 0}, 6) == doctest::Approx(-1.0));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(qwk({0, 1}, {0}, 6), InvalidInputError);
    CHECK_THROWS_AS(qwk({}, {}, 6), InvalidInputError);
    CHECK_THROWS_AS(qwk({0, 6}, {0, 1}, 6), InvalidInputError);
    CHECK_THROWS_AS(qwk({0, -1}, {0, 1}, 6), InvalidInputError);
    CHECK_THROWS_AS(qwk({0, 1}, {0, 1}, 1), InvalidInputError);
  }
  SUBCASE("symmetry and self-agreement") {
    Rng rng(808);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + static_cast<int>(rng.below(30));
      std::vector<int> a(n), b(n);
      for (int i = 0; i < n; ++i) {
        a[i] = static_cast<int>(rng.below(6));
        b[i] = static_cast<int>(rng.below(6));
      }
      CHECK(qwk(a, b, 6) == doctest::Approx(qwk(b, a, 6)).epsilon(1e-12));
      CHECK(qwk(a, a, 6) == 1.0);
    }
  }
  SUBCASE("agrees with the independent oracle on random pairs") {
    Rng rng(31415);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(50));
      std::vector<int> a(n), b(n);
      for (int i = 0; i < n; ++i) {
        a[i] = static_cast<int>(rng.below(6));
        b[i] = static_cast<int>(rng.below(6));
      }
      const double expected = oracle_qwk(a, b, 6);
      const double got = qwk(a, b, 6);
      CHECK(std::abs(got - expected) < 1e-9);
    }
  }
}

TEST_CASE("report aggregation") {
  auto outcome = [](const std::string& id, const char* policy) {
    DecisionOutcome o;
    o.id = id;
    o.policy = PolicyString::parse(policy);
    return o;
  };

  SUBCASE("single sample with a judge mean") {
    const Sample s = make_single_sample("r1", "q?", "p", IntentLabel::Ignore);
    JudgeResult v;
    v.judge = 3;
    v.fb = 1;
    const Report rep = report({outcome("r1", "A")}, {{"r1", v}}, {s});
    CHECK(rep.overall.judge_mean == doctest::Approx(3.0));
    CHECK(rep.overall.fb == doctest::Approx(1.0));
    CHECK(rep.overall.acc_all == 1.0);
    CHECK(rep.slices.size() == 1);
  }

  SUBCASE("two IA samples with macro 1 and 0") {
    Sample a = make_multi_sample("ia1", "q?", "AAA");
    a.config.subtype = SampleSubtype::IgnoreAll;
    Sample b = make_multi_sample("ia2", "q2?", "AAA");
    b.config.subtype = SampleSubtype::IgnoreAll;
    const Report rep = report({outcome("ia1", "AAA"), outcome("ia2", "AAB")},
                              {}, {a, b});
    REQUIRE(rep.slices.size() == 1);
    CHECK(rep.slices[0].second.macro == doctest::Approx(0.5));
  }

  SUBCASE("strategy histogram sums to the incorrect position count") {
    const Sample s1 = make_multi_sample("h1", "q?", "ABC");
    const Sample s2 = make_single_sample("h2", "q?", "p", IntentLabel::Support);
    const Report rep =
        report({outcome("h1", "CBA"), outcome("h2", "A")}, {},
               {s1, s2});
    int histogram_total = 0;
    for (const auto& [kind, count] : rep.strategy_histogram) {
      histogram_total += count;
    }
    // h1: C vs A wrong, B vs B right, A vs C wrong; h2: A vs B wrong.
    CHECK(histogram_total == 3);
  }

  SUBCASE("failures and missing are reported, never dropped") {
    const Sample s1 = make_single_sample("f1", "q?", "p", IntentLabel::Ignore);
    const Sample s2 = make_single_sample("f2", "q?", "p", IntentLabel::Ignore);
    const Sample s3 = make_single_sample("f3", "q?", "p", IntentLabel::Ignore);
    DecisionOutcome failed;
    failed.id = "f2";
    failed.failure = "estimator format error";
    const Report rep = report({outcome("f1", "A"), failed}, {}, {s1, s2, s3});
    REQUIRE(rep.failures.size() == 1);
    CHECK(rep.failures[0].first == "f2");
    REQUIRE(rep.missing.size() == 1);
    CHECK(rep.missing[0] == "f3");
    CHECK(rep.overall.n_failures == 1);
  }

  SUBCASE("unknown ids are invalid input") {
    const Sample s = make_single_sample("k1", "q?", "p", IntentLabel::Ignore);
    CHECK_THROWS_AS(report({outcome("zz", "A")}, {}, {s}), InvalidInputError);
    JudgeResult v;
    CHECK_THROWS_AS(report({outcome("k1", "A")}, {{"zz", v}}, {s}),
                    InvalidInputError);
  }

  SUBCASE("aggregation is permutation-invariant") {
    std::vector<Sample> dataset;
    std::vector<DecisionOutcome> outcomes;
    Rng rng(2718);
    for (int i = 0; i < 12; ++i) {
      const std::string id = "perm" + std::to_string(i);
      if (i % 2 == 0) {
        dataset.push_back(
            make_single_sample(id, "q?", "p", kAllIntents[rng.below(3)]));
        outcomes.push_back(
            outcome(id, std::string(1, to_letter(kAllIntents[rng.below(3)]))
                            .c_str()));
      } else {
        dataset.push_back(make_multi_sample(id, "q?", "AB"));
        PolicyString p;
        p.labels = {kAllIntents[rng.below(3)], kAllIntents[rng.below(3)]};
        DecisionOutcome o;
        o.id = id;
        o.policy = p;
        outcomes.push_back(o);
      }
    }
    const std::string baseline = report_to_json(report(outcomes, {}, dataset));
    std::reverse(outcomes.begin(), outcomes.end());
    std::reverse(dataset.begin(), dataset.end());
    CHECK(report_to_json(report(outcomes, {}, dataset)) == baseline);
  }
}

TEST_CASE("report serialization has severity means at 3 decimals") {
  const Sample s = make_single_sample("d1", "q?", "p", IntentLabel::Ignore);
  JudgeResult v;
  v.judge = 2;
  v.fb = 1;
  JudgeResult w;
  w.judge = 1;
  w.fb = 0;
  const Sample s2 = make_single_sample("d2", "q?", "p", IntentLabel::Ignore);
  const Sample s3 = make_single_sample("d3", "q?", "p", IntentLabel::Ignore);
  JudgeResult x;
  x.judge = 1;
  x.fb = 0;
  DecisionOutcome o1{"d1", PolicyString::parse("A"), std::nullopt};
  DecisionOutcome o2{"d2", PolicyString::parse("A"), std::nullopt};
  DecisionOutcome o3{"d3", PolicyString::parse("B"), std::nullopt};
  const Report rep = report({o1, o2, o3}, {{"d1", v}, {"d2", w}, {"d3", x}},
                            {s, s2, s3});
  // mean fb = 1/3 -> rounds to 0.333 in the JSON.
  const std::string json = report_to_json(rep);
  CHECK(json.find("0.333") != std::string::npos);
  const std::string table = report_to_table(rep);
  CHECK(table.find("0.333") != std::string::npos);
}

}  // TEST_SUITE

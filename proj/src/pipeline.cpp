#include "rpeval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "rpeval/reasoner.hpp"
#include "rpeval/util.hpp"

namespace rpeval {

namespace {

std::vector<Scenario> load_seed_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open seed scenarios file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw ValidationError("seed scenarios must be a JSON array", 1);
  }
  std::vector<Scenario> seeds;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    Scenario s;
    s.id = item.value("id", "seed" + std::to_string(i));
    if (!item.is_object() || !item.contains("what") || !item.contains("why") ||
        !item["what"].is_string() || !item["why"].is_string()) {
      throw ValidationError("seed scenario " + std::to_string(i) +
                                " needs \"what\" and \"why\" strings",
                            1);
    }
    s.what = item["what"].get<std::string>();
    s.why = item["why"].get<std::string>();
    s.validate();
    seeds.push_back(std::move(s));
  }
  if (seeds.empty()) throw ValidationError("seed scenario file is empty", 1);
  return seeds;
}

void write_audit(const std::filesystem::path& path,
                 const nlohmann::ordered_json& header,
                 std::vector<nlohmann::ordered_json> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const nlohmann::ordered_json& a, const nlohmann::ordered_json& b) {
              return a.value("id", std::string{}) < b.value("id", std::string{});
            });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write audit log " + path.string());
  out << header.dump() << "\n";
  for (const auto& entry : entries) out << entry.dump() << "\n";
}

// Index-parallel worker pool. Concurrency 1 degenerates to in-order
// sequential execution, which ordered-slot fixtures rely on.
void run_parallel(std::size_t count, int concurrency,
                  const std::function<void(std::size_t)>& fn) {
  if (concurrency <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> threads;
  const int n = std::min<int>(concurrency, static_cast<int>(count));
  threads.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
}

nlohmann::ordered_json rank_to_json(const RankVector& rv) {
  nlohmann::ordered_json j;
  for (IntentLabel l : kAllIntents) {
    j[std::string(1, to_letter(l))] = rv.rank(l);
  }
  return j;
}

RunManifest make_manifest(const EvaluateConfig& config,
                          const std::filesystem::path& dataset_path) {
  RunManifest manifest;
  manifest.seed = config.seed;
  manifest.model = config.call.model;
  manifest.method = config.method;
  manifest.prompt_version = std::string(prompts::kAssetVersion);
  manifest.dataset_digest = file_digest(dataset_path);
  manifest.dataset_name = dataset_path.filename().string();
  if (config.deterministic_manifest) {
    manifest.base_url_hash = to_hex(fnv1a("scripted"));
    manifest.timestamp = "1970-01-01T00:00:00Z";
  } else {
    manifest.base_url_hash = to_hex(fnv1a(config.base_url));
    manifest.timestamp = iso_timestamp_now();
  }
  manifest.run_id = to_hex(fnv1a(manifest.dataset_digest + "|" +
                                     manifest.method + "|" + manifest.model,
                                 fnv1a_u64(config.seed)));
  return manifest;
}

}  // namespace

std::unique_ptr<ScriptedBackend> load_fixtures(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open fixtures file " + path.string());
  auto backend = std::make_unique<ScriptedBackend>();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("response") ||
        !j["response"].is_string()) {
      throw ValidationError("fixture line needs a \"response\" string", lineno);
    }
    const std::string mode = j.value("mode", "seq");
    if (mode == "seq") {
      backend->push_response(j["response"].get<std::string>());
    } else if (mode == "exact") {
      if (!j.contains("fingerprint") || !j["fingerprint"].is_string()) {
        throw ValidationError("exact fixture needs a \"fingerprint\" string",
                              lineno);
      }
      backend->script_exact(j["fingerprint"].get<std::string>(),
                            j["response"].get<std::string>());
    } else {
      throw ValidationError("unknown fixture mode \"" + mode + "\"", lineno);
    }
  }
  return backend;
}

GenerateResult run_generate(const GenerateConfig& config, Backend& backend) {
  const std::vector<Scenario> seeds = load_seed_scenarios(config.seeds_path);
  const std::size_t target =
      config.target_scenarios == 0 ? seeds.size() : config.target_scenarios;
  Rng bootstrap_rng = make_sample_rng(config.seed, "bootstrap");
  const std::vector<Scenario> repo =
      bootstrap_scenarios(seeds, backend, target, bootstrap_rng, config.call);

  std::vector<Sample> dataset;
  std::vector<nlohmann::ordered_json> audit;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool done = false;

  for (const Scenario& scenario : repo) {
    if (done) break;
    std::vector<Query> queries =
        synthesize_queries(scenario, backend, config.call);
    if (config.queries_per_scenario > 0 &&
        queries.size() > config.queries_per_scenario) {
      queries.resize(config.queries_per_scenario);
    }
    for (const Query& query : queries) {
      if (done) break;
      std::set<std::string> texts_seen;
      for (IntentLabel intent : kAllIntents) {
        if (done) break;
        std::vector<std::pair<Preference, std::string>> inverted;
        try {
          inverted = invert_preference(query, intent, backend, config.call);
        } catch (const Error& e) {
          // Partial intent coverage: keep the query, flag the gap.
          audit.push_back({{"id", query.id},
                           {"type", "intent_skipped"},
                           {"intent", std::string(label_name(intent))},
                           {"reason", std::string(e.what())}});
          continue;
        }
        for (auto& [preference, reason] : inverted) {
          if (!texts_seen.insert(normalize_text(preference.text)).second) {
            continue;  // duplicate persona for this query
          }
          const IterationOutcome outcome =
              iterate_update(query, preference, intent, backend,
                             config.max_iters, config.call);
          audit.push_back(
              {{"id", preference.id},
               {"type", outcome.accepted ? "accepted" : "rejected"},
               {"intent", std::string(label_name(intent))},
               {"quality_calls", outcome.quality_calls},
               {"updater_calls", outcome.updater_calls}});
          if (!outcome.accepted) {
            ++rejected;
            continue;
          }
          Sample sample;
          sample.id = preference.id;
          sample.query = query;
          sample.preferences = {outcome.preference};
          sample.gold.labels = {intent};
          sample.rationale = outcome.rationale.value_or(reason);
          sample.intent_text = outcome.intent_text.value_or(reason);
          sample.config = {Multiplicity::Single, PreferenceForm::Explicit,
                           SampleSubtype::None};
          sample.validate();
          dataset.push_back(std::move(sample));
          ++accepted;
          if (config.target_samples > 0 &&
              accepted >= config.target_samples) {
            done = true;
            break;
          }
        }
      }
    }
  }

  std::filesystem::create_directories(config.out_dir);
  GenerateResult result;
  result.dataset_path = config.out_dir / "dataset.jsonl";
  result.audit_path = config.out_dir / "generation_audit.jsonl";
  result.accepted = accepted;
  result.rejected = rejected;
  save_dataset(result.dataset_path, dataset);
  write_audit(result.audit_path,
              {{"type", "audit"},
               {"stage", "generate"},
               {"max_iters", config.max_iters},
               {"scenarios", repo.size()},
               {"accepted", accepted},
               {"rejected", rejected}},
              std::move(audit));
  return result;
}

ExpandResult run_expand(const ExpandConfig& config, Backend& backend) {
  const std::vector<Sample> input = load_dataset(config.dataset_path);
  std::vector<Sample> output = input;
  std::vector<nlohmann::ordered_json> audit;
  std::size_t skipped = 0;

  if (config.ignore_all || config.leave_k_out) {
    // Group atomic samples by query text; each group becomes one candidate
    // pool for multi-preference construction.
    std::vector<std::string> group_order;
    std::map<std::string, std::vector<const Sample*>> groups;
    for (const Sample& s : input) {
      if (s.config.multiplicity != Multiplicity::Single ||
          s.config.form != PreferenceForm::Explicit ||
          s.config.subtype != SampleSubtype::None) {
        continue;
      }
      const std::string key = normalize_text(s.query.text);
      if (!groups.count(key)) group_order.push_back(key);
      groups[key].push_back(&s);
    }
    for (const std::string& key : group_order) {
      const auto& members = groups[key];
      Query query = members.front()->query;
      query.id = "m" + to_hex(fnv1a(key)).substr(0, 12);
      std::vector<LabeledPreference> pool;
      for (const Sample* s : members) {
        pool.push_back({s->preferences[0], s->gold[0], s->rationale,
                        s->intent_text.value_or(s->rationale)});
      }
      if (config.ignore_all) {
        Rng rng = make_sample_rng(config.seed, query.id + "-ia");
        BuildResult built =
            build_ignore_all(query, pool, rng, backend, config.call);
        if (built.ok()) {
          output.push_back(std::move(*built.sample));
        } else {
          ++skipped;
          audit.push_back({{"id", query.id + "-ia"},
                           {"type", "skipped"},
                           {"reason", built.skip_reason}});
        }
      }
      if (config.leave_k_out) {
        Rng rng = make_sample_rng(config.seed, query.id + "-lko");
        BuildResult built =
            build_leave_k_out(query, pool, rng, backend, config.call);
        if (built.ok()) {
          output.push_back(std::move(*built.sample));
        } else {
          ++skipped;
          audit.push_back({{"id", query.id + "-lko"},
                           {"type", "skipped"},
                           {"reason", built.skip_reason}});
        }
      }
    }
  }

  if (config.implicit) {
    std::sort(output.begin(), output.end(),
              [](const Sample& a, const Sample& b) { return a.id < b.id; });
    // Each unique preference is rewritten once and reused everywhere.
    std::map<std::string, Preference> rewritten;
    std::vector<Sample> twins;
    for (const Sample& s : output) {
      if (s.config.form != PreferenceForm::Explicit) continue;
      Sample twin = s;
      twin.id = s.id + "-imp";
      twin.config.form = PreferenceForm::Implicit;
      for (Preference& p : twin.preferences) {
        auto it = rewritten.find(p.id);
        if (it == rewritten.end()) {
          it = rewritten.emplace(p.id,
                                 explicit_to_implicit(p, backend, config.call))
                   .first;
        }
        p = it->second;
      }
      twin.validate();
      twins.push_back(std::move(twin));
    }
    output.insert(output.end(), std::make_move_iterator(twins.begin()),
                  std::make_move_iterator(twins.end()));
  }

  std::filesystem::create_directories(config.out_dir);
  ExpandResult result;
  result.dataset_path = config.out_dir / "expanded.jsonl";
  result.audit_path = config.out_dir / "expansion_audit.jsonl";
  result.emitted = output.size();
  result.skipped = skipped;
  save_dataset(result.dataset_path, output);
  write_audit(result.audit_path,
              {{"type", "audit"},
               {"stage", "expand"},
               {"emitted", output.size()},
               {"skipped", skipped}},
              std::move(audit));
  return result;
}

EvaluateResult run_evaluate(const EvaluateConfig& config, Backend& backend) {
  const std::vector<Sample> dataset = load_dataset(config.dataset_path);
  RunManifest manifest = make_manifest(config, config.dataset_path);

  struct PerSample {
    DecisionOutcome outcome;
    std::optional<JudgeResult> verdict;
    nlohmann::ordered_json payload;
  };
  std::vector<PerSample> rows(dataset.size());

  run_parallel(dataset.size(), config.concurrency, [&](std::size_t i) {
    const Sample& sample = dataset[i];
    PerSample& row = rows[i];
    row.outcome.id = sample.id;
    row.payload["gold"] = sample.gold.str();
    try {
      PolicyString policy;
      if (config.method == "rp-reasoner") {
        const Decision decision =
            decide(sample, backend, config.call, config.seed);
        policy = decision.policy;
        row.payload["policy"] = policy.str();
        nlohmann::ordered_json ranks = nlohmann::ordered_json::array();
        nlohmann::ordered_json ties = nlohmann::ordered_json::array();
        for (const PreferenceDecision& pd : decision.per_preference) {
          ranks.push_back({{"mle", rank_to_json(pd.rank_mle)},
                           {"ipe", rank_to_json(pd.rank_ipe)}});
          ties.push_back(pd.tie_broken);
        }
        row.payload["ranks"] = ranks;
        row.payload["tie_broken"] = ties;
      } else {
        policy = baseline_decide(config.method, sample, backend, config.call);
        row.payload["policy"] = policy.str();
      }
      row.outcome.policy = policy;
      if (config.generate) {
        const std::string response =
            generate_response(sample, policy, backend, config.call);
        row.payload["response"] = response;
        if (config.judge) {
          row.verdict = judge(sample, response, backend, config.call);
          row.payload["judge"] = judge_to_json(*row.verdict);
        }
      }
    } catch (const Error& e) {
      row.outcome = DecisionOutcome{sample.id, std::nullopt, e.what()};
      row.payload = nlohmann::ordered_json{};
      row.payload["gold"] = sample.gold.str();
      row.payload["failure"] = e.what();
      row.verdict.reset();
    }
  });

  std::vector<DecisionOutcome> outcomes;
  std::vector<std::pair<std::string, JudgeResult>> verdicts;
  std::vector<ResultRecord> records;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    outcomes.push_back(rows[i].outcome);
    if (rows[i].verdict) verdicts.emplace_back(dataset[i].id, *rows[i].verdict);
    records.push_back({dataset[i].id, std::move(rows[i].payload)});
  }

  std::filesystem::create_directories(config.out_dir);
  EvaluateResult result;
  result.results_path =
      save_results(config.out_dir / "results.jsonl", manifest, records);
  result.run_report = report(outcomes, verdicts, dataset);
  result.report_json_path = config.out_dir / "report.json";
  result.report_table_path = config.out_dir / "report.txt";
  {
    std::ofstream out(result.report_json_path, std::ios::binary);
    out << report_to_json(result.run_report);
  }
  {
    std::ofstream out(result.report_table_path, std::ios::binary);
    out << report_to_table(result.run_report);
  }
  return result;
}

std::filesystem::path run_judge(const JudgeRunConfig& config, Backend& backend) {
  const std::vector<Sample> dataset = load_dataset(config.dataset_path);
  std::map<std::string, const Sample*> by_id;
  for (const Sample& s : dataset) by_id[s.id] = &s;

  auto [manifest, input_records] = load_results(config.results_path);
  struct Item {
    const Sample* sample;
    std::string response;
  };
  std::vector<Item> items;
  for (const ResultRecord& record : input_records) {
    if (record.payload.contains("failure")) continue;
    if (!record.payload.contains("response")) continue;
    auto it = by_id.find(record.id);
    if (it == by_id.end()) {
      throw InvalidInputError("results record '" + record.id +
                              "' has no matching dataset sample");
    }
    items.push_back({it->second, record.payload["response"].get<std::string>()});
  }

  std::vector<ResultRecord> out_records(items.size());
  run_parallel(items.size(), config.concurrency, [&](std::size_t i) {
    const Item& item = items[i];
    nlohmann::ordered_json payload;
    try {
      const JudgeResult verdict =
          judge(*item.sample, item.response, backend, config.call);
      payload["judge"] = judge_to_json(verdict);
    } catch (const Error& e) {
      payload["failure"] = e.what();
    }
    out_records[i] = {item.sample->id, std::move(payload)};
  });

  manifest.model = config.call.model;
  manifest.prompt_version = std::string(prompts::kAssetVersion);
  if (config.deterministic_manifest) {
    manifest.base_url_hash = to_hex(fnv1a("scripted"));
    manifest.timestamp = "1970-01-01T00:00:00Z";
  } else {
    manifest.base_url_hash = to_hex(fnv1a(config.base_url));
    manifest.timestamp = iso_timestamp_now();
  }
  std::filesystem::create_directories(config.out_dir);
  return save_results(config.out_dir / "judge.jsonl", manifest, out_records);
}

ReportResult run_report(const ReportConfig& config) {
  const std::vector<Sample> dataset = load_dataset(config.dataset_path);
  auto [manifest, records] = load_results(config.results_path);

  std::vector<DecisionOutcome> outcomes;
  std::vector<std::pair<std::string, JudgeResult>> verdicts;
  for (const ResultRecord& record : records) {
    DecisionOutcome outcome;
    outcome.id = record.id;
    if (record.payload.contains("failure")) {
      outcome.failure = record.payload["failure"].get<std::string>();
    } else if (record.payload.contains("policy")) {
      outcome.policy =
          PolicyString::parse(record.payload["policy"].get<std::string>());
    } else {
      throw InvalidInputError("results record '" + record.id +
                              "' has neither policy nor failure");
    }
    outcomes.push_back(std::move(outcome));
    if (record.payload.contains("judge")) {
      verdicts.emplace_back(record.id,
                            judge_from_json(record.payload["judge"]));
    }
  }
  if (config.judge_path) {
    auto [judge_manifest, judge_records] = load_results(*config.judge_path);
    (void)judge_manifest;
    for (const ResultRecord& record : judge_records) {
      if (!record.payload.contains("judge")) continue;
      verdicts.emplace_back(record.id,
                            judge_from_json(record.payload["judge"]));
    }
  }

  ReportResult result;
  result.run_report = report(outcomes, verdicts, dataset);
  std::filesystem::create_directories(config.out_dir);
  result.report_json_path = config.out_dir / "report.json";
  result.report_table_path = config.out_dir / "report.txt";
  {
    std::ofstream out(result.report_json_path, std::ios::binary);
    out << report_to_json(result.run_report);
  }
  {
    std::ofstream out(result.report_table_path, std::ios::binary);
    out << report_to_table(result.run_report);
  }
  return result;
}

}  // namespace rpeval

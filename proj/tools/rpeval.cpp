#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rpeval/pipeline.hpp"
#include "rpeval/util.hpp"

namespace {

using namespace rpeval;

int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::Usage: return 2;
    case ErrorClass::Validation: return 3;
    case ErrorClass::Transport: return 4;
    case ErrorClass::Format: return 5;
    case ErrorClass::Internal: return 1;
  }
  return 1;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

struct BackendFlags {
  std::string fixtures;
  std::string model = "gpt-4.1";
  std::string base_url;
  std::string cache;
  double rpm = 60.0;
  int concurrency = 4;

  void attach(CLI::App* cmd) {
    cmd->add_option("--fixtures", fixtures,
                    "scripted fixtures JSONL (offline test mode)");
    cmd->add_option("--model", model, "model name");
    cmd->add_option("--base-url", base_url,
                    "chat-completions base URL (or RPEVAL_BASE_URL)");
    cmd->add_option("--cache", cache, "response cache file");
    cmd->add_option("--rpm", rpm, "requests per minute")->capture_default_str();
    cmd->add_option("--concurrency", concurrency, "parallel samples")->capture_default_str();
  }

  bool scripted() const { return !fixtures.empty(); }

  // Fixture mode pins concurrency to 1 so ordered slots replay in order.
  int effective_concurrency() const { return scripted() ? 1 : concurrency; }

  std::string resolved_base_url() const {
    return base_url.empty() ? env_or("RPEVAL_BASE_URL", "") : base_url;
  }

  struct Bundle {
    std::unique_ptr<Backend> owned;
    std::unique_ptr<CachingBackend> cached;
    Backend* backend = nullptr;
  };

  Bundle make_backend() const {
    Bundle bundle;
    if (scripted()) {
      bundle.owned = load_fixtures(fixtures);
    } else {
      HttpBackendOptions options;
      options.base_url = resolved_base_url();
      if (options.base_url.empty()) {
        throw UsageError(
            "no base URL; pass --base-url or set RPEVAL_BASE_URL "
            "(or use --fixtures for offline runs)");
      }
      options.api_key =
          env_or("RPEVAL_API_KEY", env_or("OPENAI_API_KEY", ""));
      options.rpm = rpm;
      bundle.owned = std::make_unique<HttpBackend>(std::move(options));
    }
    bundle.backend = bundle.owned.get();
    if (!cache.empty()) {
      bundle.cached = std::make_unique<CachingBackend>(*bundle.owned, cache);
      bundle.backend = bundle.cached.get();
    }
    return bundle;
  }
};

std::vector<int> load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open ratings file " + path);
  std::vector<int> ratings;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      ratings.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("rating '" + t + "' is not an integer in " + path,
                            lineno);
    }
  }
  if (ratings.empty()) {
    throw ValidationError("ratings file " + path + " is empty", 1);
  }
  return ratings;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RP-Reasoner and the RPEval pipeline: dataset generation, "
               "expansion, and discriminative/generative evaluation"};
  app.require_subcommand(1);

  // generate
  auto* cmd_generate = app.add_subcommand(
      "generate", "build an atomic single-preference dataset from seed "
                  "scenarios");
  GenerateConfig generate_config;
  BackendFlags generate_flags;
  std::string seeds_path, generate_out = "out";
  cmd_generate->add_option("--seeds", seeds_path, "seed scenarios JSON file")
      ->required();
  cmd_generate->add_option("--out", generate_out, "output directory")->capture_default_str();
  cmd_generate->add_option("--seed", generate_config.seed, "global RNG seed")
      ->required();
  cmd_generate->add_option("--scenarios", generate_config.target_scenarios,
                           "target scenario repository size (0 = seeds only)")->capture_default_str();
  cmd_generate->add_option("--queries-per-scenario",
                           generate_config.queries_per_scenario,
                           "cap on synthesized queries per scenario (0 = all)")->capture_default_str();
  cmd_generate->add_option("--target", generate_config.target_samples,
                           "stop after this many accepted samples (0 = all)")->capture_default_str();
  cmd_generate->add_option("--max-iters", generate_config.max_iters,
                           "iterative-update cap per candidate")->capture_default_str();
  generate_flags.attach(cmd_generate);

  // expand
  auto* cmd_expand = app.add_subcommand(
      "expand", "derive implicit / multi-preference configurations");
  ExpandConfig expand_config;
  BackendFlags expand_flags;
  std::string expand_dataset, expand_out = "out";
  cmd_expand->add_option("--dataset", expand_dataset, "input dataset JSONL")
      ->required();
  cmd_expand->add_option("--out", expand_out, "output directory")->capture_default_str();
  cmd_expand->add_option("--seed", expand_config.seed, "global RNG seed")
      ->required();
  cmd_expand->add_flag("--ia", expand_config.ignore_all,
                       "build Ignore-All multi samples");
  cmd_expand->add_flag("--lko", expand_config.leave_k_out,
                       "build Leave-K-Out multi samples");
  cmd_expand->add_flag("--implicit", expand_config.implicit,
                       "add explicit-to-implicit twins");
  expand_flags.attach(cmd_expand);

  // evaluate
  auto* cmd_evaluate =
      app.add_subcommand("evaluate", "run a method over a dataset");
  EvaluateConfig evaluate_config;
  BackendFlags evaluate_flags;
  std::string evaluate_dataset, evaluate_out = "out";
  cmd_evaluate->add_option("--dataset", evaluate_dataset, "dataset JSONL")
      ->required();
  cmd_evaluate->add_option("--out", evaluate_out, "output directory")->capture_default_str();
  cmd_evaluate
      ->add_option("--method", evaluate_config.method,
                   "vanilla | reminder | cot | rp-reasoner")->capture_default_str()
      ->check(CLI::IsMember({"vanilla", "reminder", "cot", "rp-reasoner"}));
  cmd_evaluate->add_option("--seed", evaluate_config.seed, "global RNG seed")
      ->required();
  cmd_evaluate->add_flag("--generate", evaluate_config.generate,
                         "also generate responses");
  cmd_evaluate->add_flag("--judge", evaluate_config.judge,
                         "also judge generated responses");
  evaluate_flags.attach(cmd_evaluate);

  // judge
  auto* cmd_judge = app.add_subcommand(
      "judge", "judge responses recorded in a results file");
  JudgeRunConfig judge_config;
  BackendFlags judge_flags;
  std::string judge_dataset, judge_results, judge_out = "out";
  cmd_judge->add_option("--dataset", judge_dataset, "dataset JSONL")
      ->required();
  cmd_judge->add_option("--results", judge_results, "results JSONL")
      ->required();
  cmd_judge->add_option("--out", judge_out, "output directory")->capture_default_str();
  judge_flags.attach(cmd_judge);

  // report
  auto* cmd_report = app.add_subcommand(
      "report", "recompute the report from persisted results");
  std::string report_dataset, report_results, report_judge,
      report_out = "out";
  cmd_report->add_option("--dataset", report_dataset, "dataset JSONL")
      ->required();
  cmd_report->add_option("--results", report_results, "results JSONL")
      ->required();
  cmd_report->add_option("--judge-results", report_judge,
                         "judge verdicts JSONL");
  cmd_report->add_option("--out", report_out, "output directory")->capture_default_str();

  // kappa
  auto* cmd_kappa = app.add_subcommand(
      "kappa", "quadratic-weighted Cohen's kappa between two rating files");
  std::string kappa_a, kappa_b;
  int kappa_categories = 6;
  cmd_kappa->add_option("file_a", kappa_a, "ratings file (one integer per line)")
      ->required();
  cmd_kappa->add_option("file_b", kappa_b, "ratings file (one integer per line)")
      ->required();
  cmd_kappa->add_option("--categories", kappa_categories,
                        "number of ordinal categories")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_generate->parsed()) {
      auto bundle = generate_flags.make_backend();
      generate_config.seeds_path = seeds_path;
      generate_config.out_dir = generate_out;
      generate_config.call.model = generate_flags.model;
      const GenerateResult result =
          run_generate(generate_config, *bundle.backend);
      std::cout << "dataset: " << result.dataset_path.string() << "\n"
                << "audit:   " << result.audit_path.string() << "\n"
                << "accepted " << result.accepted << ", rejected "
                << result.rejected << "\n";
    } else if (cmd_expand->parsed()) {
      auto bundle = expand_flags.make_backend();
      expand_config.dataset_path = expand_dataset;
      expand_config.out_dir = expand_out;
      expand_config.call.model = expand_flags.model;
      const ExpandResult result = run_expand(expand_config, *bundle.backend);
      std::cout << "dataset: " << result.dataset_path.string() << "\n"
                << "audit:   " << result.audit_path.string() << "\n"
                << "emitted " << result.emitted << ", skipped "
                << result.skipped << "\n";
    } else if (cmd_evaluate->parsed()) {
      auto bundle = evaluate_flags.make_backend();
      evaluate_config.dataset_path = evaluate_dataset;
      evaluate_config.out_dir = evaluate_out;
      evaluate_config.call.model = evaluate_flags.model;
      evaluate_config.concurrency = evaluate_flags.effective_concurrency();
      evaluate_config.deterministic_manifest = evaluate_flags.scripted();
      evaluate_config.base_url = evaluate_flags.resolved_base_url();
      const EvaluateResult result =
          run_evaluate(evaluate_config, *bundle.backend);
      std::cout << "results: " << result.results_path.string() << "\n"
                << "report:  " << result.report_json_path.string() << "\n"
                << report_to_table(result.run_report);
    } else if (cmd_judge->parsed()) {
      auto bundle = judge_flags.make_backend();
      judge_config.dataset_path = judge_dataset;
      judge_config.results_path = judge_results;
      judge_config.out_dir = judge_out;
      judge_config.call.model = judge_flags.model;
      judge_config.concurrency = judge_flags.effective_concurrency();
      judge_config.deterministic_manifest = judge_flags.scripted();
      judge_config.base_url = judge_flags.resolved_base_url();
      const auto path = run_judge(judge_config, *bundle.backend);
      std::cout << "judge results: " << path.string() << "\n";
    } else if (cmd_report->parsed()) {
      ReportConfig config;
      config.dataset_path = report_dataset;
      config.results_path = report_results;
      if (!report_judge.empty()) config.judge_path = report_judge;
      config.out_dir = report_out;
      const ReportResult result = run_report(config);
      std::cout << "report: " << result.report_json_path.string() << "\n"
                << report_to_table(result.run_report);
    } else if (cmd_kappa->parsed()) {
      const std::vector<int> a = load_ratings(kappa_a);
      const std::vector<int> b = load_ratings(kappa_b);
      double value = 0.0;
      try {
        value = qwk(a, b, kappa_categories);
      } catch (const InvalidInputError& e) {
        throw UsageError(e.what());
      }
      std::printf("%.4f\n", value);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

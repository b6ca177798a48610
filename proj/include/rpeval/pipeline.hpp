#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rpeval/backend.hpp"
#include "rpeval/datagen.hpp"
#include "rpeval/evaluator.hpp"
#include "rpeval/llm_call.hpp"
#include "rpeval/store.hpp"

namespace rpeval {

// Builds a ScriptedBackend from a fixtures JSONL file. Each line is either
//   {"mode":"seq","response":"..."}                 (ordered slot)
//   {"mode":"exact","fingerprint":"...","response":"..."}
std::unique_ptr<ScriptedBackend> load_fixtures(
    const std::filesystem::path& path);

struct GenerateConfig {
  std::filesystem::path seeds_path;
  std::filesystem::path out_dir;
  std::size_t target_scenarios = 0;  // 0 -> keep the seed repository as-is
  std::size_t queries_per_scenario = 0;  // 0 -> keep all synthesized queries
  std::size_t target_samples = 0;        // 0 -> unbounded
  int max_iters = kDefaultMaxIters;
  std::uint64_t seed = 0;
  CallOptions call;
};

struct GenerateResult {
  std::filesystem::path dataset_path;
  std::filesystem::path audit_path;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

// Bootstrap -> query synthesis -> preference inversion -> iterative update.
GenerateResult run_generate(const GenerateConfig& config, Backend& backend);

struct ExpandConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path out_dir;
  bool ignore_all = false;
  bool leave_k_out = false;
  bool implicit = false;
  std::uint64_t seed = 0;
  CallOptions call;
};

struct ExpandResult {
  std::filesystem::path dataset_path;
  std::filesystem::path audit_path;
  std::size_t emitted = 0;
  std::size_t skipped = 0;
};

// Single-to-multi construction (IA / LKO) and explicit-to-implicit
// rewriting; output covers the selected configuration cross-product.
ExpandResult run_expand(const ExpandConfig& config, Backend& backend);

struct EvaluateConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path out_dir;
  std::string method = "rp-reasoner";
  std::uint64_t seed = 0;
  bool generate = false;
  bool judge = false;
  int concurrency = 4;
  bool deterministic_manifest = false;  // pinned timestamp, scripted descriptor
  std::string base_url;                 // real runs: hashed into the manifest
  CallOptions call;
};

struct EvaluateResult {
  std::filesystem::path results_path;
  std::filesystem::path report_json_path;
  std::filesystem::path report_table_path;
  Report run_report;
};

EvaluateResult run_evaluate(const EvaluateConfig& config, Backend& backend);

struct JudgeRunConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path results_path;
  std::filesystem::path out_dir;
  int concurrency = 4;
  bool deterministic_manifest = false;
  std::string base_url;
  CallOptions call;
};

// Judges the responses recorded in a results file; writes judge verdicts.
std::filesystem::path run_judge(const JudgeRunConfig& config, Backend& backend);

struct ReportConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path results_path;
  std::optional<std::filesystem::path> judge_path;
  std::filesystem::path out_dir;
};

struct ReportResult {
  std::filesystem::path report_json_path;
  std::filesystem::path report_table_path;
  Report run_report;
};

// Recomputes the report from persisted results (and optional judge file).
ReportResult run_report(const ReportConfig& config);

}  // namespace rpeval

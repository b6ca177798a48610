#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rpeval/core.hpp"
#include "rpeval/evaluator.hpp"

namespace rpeval {

// Canonical flat projection of a Sample. Keys in fixed order, compact
// UTF-8, one record per line; query id is not persisted (set to the sample
// id on load).
nlohmann::ordered_json sample_to_json(const Sample& sample);
Sample sample_from_json(const nlohmann::json& record);

// Validates every record against the Sample invariants; the first error
// aborts the load with its line number. Records come back in file order.
std::vector<Sample> load_dataset(const std::filesystem::path& path);

// Writes records sorted by sample id, canonical serialization, LF endings.
void save_dataset(const std::filesystem::path& path,
                  const std::vector<Sample>& samples);

// FNV-1a of the file bytes, hex.
std::string file_digest(const std::filesystem::path& path);

struct RunManifest {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string model;
  std::string base_url_hash;
  std::string method;  // vanilla | reminder | cot | rp-reasoner
  std::string prompt_version;
  std::string dataset_digest;
  std::string dataset_name;
  std::string timestamp;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

struct ResultRecord {
  std::string id;
  nlohmann::ordered_json payload;  // serialized with "id" first
};

// Manifest header line, then one record per sample sorted by id. The file
// carries a .partial suffix until fully written.
std::filesystem::path save_results(const std::filesystem::path& path,
                                   const RunManifest& manifest,
                                   const std::vector<ResultRecord>& records);

std::pair<RunManifest, std::vector<ResultRecord>> load_results(
    const std::filesystem::path& path);

nlohmann::ordered_json judge_to_json(const JudgeResult& verdict);
JudgeResult judge_from_json(const nlohmann::json& j);

}  // namespace rpeval

#include "rpeval/store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "rpeval/hash.hpp"

namespace rpeval {

namespace {

void require_keys(const nlohmann::json& j,
                  const std::set<std::string>& allowed,
                  const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw InvalidInputError("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

std::string require_string(const nlohmann::json& j, const char* key,
                           const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw InvalidInputError("missing string field \"" + std::string(key) +
                            "\" in " + where);
  }
  return j[key].get<std::string>();
}

}  // namespace

nlohmann::ordered_json sample_to_json(const Sample& sample) {
  nlohmann::ordered_json record;
  record["id"] = sample.id;
  record["question"] = sample.query.text;
  if (sample.query.scenario) {
    const Scenario5W& sc = *sample.query.scenario;
    record["scenario"] = {{"who", sc.who},
                          {"when", sc.when},
                          {"where", sc.where},
                          {"what", sc.what},
                          {"why", sc.why}};
  }
  record["personas"] = nlohmann::ordered_json::array();
  for (const Preference& p : sample.preferences) {
    nlohmann::ordered_json persona;
    persona["id"] = p.id;
    persona["text"] = p.text;
    persona["form"] = std::string(to_string(p.form));
    if (p.form == PreferenceForm::Implicit) {
      persona["dialogue"] = nlohmann::ordered_json::array();
      for (const DialogueTurn& turn : p.dialogue) {
        persona["dialogue"].push_back(
            {{"speaker", turn.speaker == Speaker::User ? "User" : "Assistant"},
             {"text", turn.text}});
      }
    }
    record["personas"].push_back(persona);
  }
  record["gold"] = sample.gold.str();
  record["rationale"] = sample.rationale;
  if (sample.intent_text) record["intent_text"] = *sample.intent_text;
  record["config"] = {
      {"multiplicity", std::string(to_string(sample.config.multiplicity))},
      {"form", std::string(to_string(sample.config.form))},
      {"subtype", std::string(to_string(sample.config.subtype))}};
  return record;
}

Sample sample_from_json(const nlohmann::json& record) {
  if (!record.is_object()) {
    throw InvalidInputError("dataset record is not a JSON object");
  }
  require_keys(record,
               {"id", "question", "scenario", "personas", "gold", "rationale",
                "intent_text", "config"},
               "dataset record");

  Sample sample;
  sample.id = require_string(record, "id", "dataset record");
  const std::string where = "record " + sample.id;
  sample.query.id = sample.id;
  sample.query.text = require_string(record, "question", where);
  if (record.contains("scenario")) {
    const auto& sc = record["scenario"];
    if (!sc.is_object()) {
      throw InvalidInputError("scenario must be an object in " + where);
    }
    require_keys(sc, {"who", "when", "where", "what", "why"},
                 where + " scenario");
    sample.query.scenario = Scenario5W{
        sc.value("who", std::string{}), sc.value("when", std::string{}),
        sc.value("where", std::string{}), sc.value("what", std::string{}),
        sc.value("why", std::string{})};
  }
  if (!record.contains("personas") || !record["personas"].is_array()) {
    throw InvalidInputError("missing personas array in " + where);
  }
  for (const auto& persona : record["personas"]) {
    if (!persona.is_object()) {
      throw InvalidInputError("personas entries must be objects in " + where);
    }
    require_keys(persona, {"id", "text", "form", "dialogue"},
                 where + " persona");
    Preference p;
    p.id = require_string(persona, "id", where + " persona");
    p.text = require_string(persona, "text", where + " persona");
    p.form = form_from_string(require_string(persona, "form", where + " persona"));
    if (persona.contains("dialogue")) {
      if (!persona["dialogue"].is_array()) {
        throw InvalidInputError("persona dialogue must be an array in " + where);
      }
      for (const auto& turn : persona["dialogue"]) {
        if (!turn.is_object()) {
          throw InvalidInputError("dialogue turns must be objects in " + where);
        }
        require_keys(turn, {"speaker", "text"}, where + " dialogue turn");
        const std::string speaker = require_string(turn, "speaker", where);
        if (speaker != "User" && speaker != "Assistant") {
          throw InvalidInputError("invalid dialogue speaker \"" + speaker +
                                  "\" in " + where);
        }
        p.dialogue.push_back({speaker == "User" ? Speaker::User
                                                : Speaker::Assistant,
                              require_string(turn, "text", where)});
      }
    }
    sample.preferences.push_back(std::move(p));
  }
  sample.gold = PolicyString::parse(require_string(record, "gold", where));
  sample.rationale = require_string(record, "rationale", where);
  if (record.contains("intent_text")) {
    sample.intent_text = require_string(record, "intent_text", where);
  }
  if (!record.contains("config") || !record["config"].is_object()) {
    throw InvalidInputError("missing config object in " + where);
  }
  const auto& config = record["config"];
  require_keys(config, {"multiplicity", "form", "subtype"}, where + " config");
  sample.config.multiplicity =
      multiplicity_from_string(require_string(config, "multiplicity", where));
  sample.config.form = form_from_string(require_string(config, "form", where));
  sample.config.subtype =
      subtype_from_string(require_string(config, "subtype", where));

  sample.validate();
  return sample;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open dataset file " + path.string());
  std::vector<Sample> samples;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      throw ValidationError("empty line in dataset", lineno);
    }
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw ValidationError("record is not valid JSON", lineno);
    }
    try {
      samples.push_back(sample_from_json(record));
    } catch (const Error& e) {
      throw ValidationError(e.what(), lineno);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(e.what(), lineno);
    }
    if (!ids.insert(samples.back().id).second) {
      throw ValidationError("duplicate sample id '" + samples.back().id + "'",
                            lineno);
    }
  }
  return samples;
}

void save_dataset(const std::filesystem::path& path,
                  const std::vector<Sample>& samples) {
  std::vector<const Sample*> ordered;
  ordered.reserve(samples.size());
  std::set<std::string> ids;
  for (const Sample& s : samples) {
    s.validate();
    if (!ids.insert(s.id).second) {
      throw InvalidInputError("duplicate sample id '" + s.id + "'");
    }
    ordered.push_back(&s);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const Sample* a, const Sample* b) { return a->id < b->id; });

  const std::filesystem::path partial = path.string() + ".partial";
  {
    std::ofstream out(partial, std::ios::binary);
    if (!out) throw UsageError("cannot write dataset file " + path.string());
    for (const Sample* s : ordered) out << sample_to_json(*s).dump() << "\n";
  }
  std::filesystem::rename(partial, path);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return to_hex(fnv1a(buffer.str()));
}

void RunManifest::validate() const {
  if (dataset_digest.empty()) {
    throw InvalidInputError("run manifest is missing the dataset digest");
  }
  if (method != "vanilla" && method != "reminder" && method != "cot" &&
      method != "rp-reasoner") {
    throw InvalidInputError("run manifest has invalid method '" + method + "'");
  }
  if (run_id.empty()) throw InvalidInputError("run manifest is missing run_id");
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = "manifest";
  j["run_id"] = run_id;
  j["seed"] = seed;
  j["model"] = model;
  j["base_url_hash"] = base_url_hash;
  j["method"] = method;
  j["prompt_version"] = prompt_version;
  j["dataset_digest"] = dataset_digest;
  j["dataset"] = dataset_name;
  j["timestamp"] = timestamp;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = require_string(j, "run_id", "manifest");
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
    throw InvalidInputError("manifest is missing its numeric seed");
  }
  m.seed = j["seed"].get<std::uint64_t>();
  m.model = require_string(j, "model", "manifest");
  m.base_url_hash = require_string(j, "base_url_hash", "manifest");
  m.method = require_string(j, "method", "manifest");
  m.prompt_version = require_string(j, "prompt_version", "manifest");
  m.dataset_digest = require_string(j, "dataset_digest", "manifest");
  m.dataset_name = require_string(j, "dataset", "manifest");
  m.timestamp = require_string(j, "timestamp", "manifest");
  m.validate();
  return m;
}

std::filesystem::path save_results(const std::filesystem::path& path,
                                   const RunManifest& manifest,
                                   const std::vector<ResultRecord>& records) {
  manifest.validate();
  std::vector<const ResultRecord*> ordered;
  ordered.reserve(records.size());
  std::set<std::string> ids;
  for (const ResultRecord& r : records) {
    if (r.id.empty()) throw InvalidInputError("result record without id");
    if (!ids.insert(r.id).second) {
      throw InvalidInputError("duplicate result record for id '" + r.id + "'");
    }
    ordered.push_back(&r);
  }
  std::sort(
      ordered.begin(), ordered.end(),
      [](const ResultRecord* a, const ResultRecord* b) { return a->id < b->id; });

  const std::filesystem::path partial = path.string() + ".partial";
  {
    std::ofstream out(partial, std::ios::binary);
    if (!out) throw UsageError("cannot write results file " + path.string());
    out << manifest.to_json().dump() << "\n";
    for (const ResultRecord* r : ordered) {
      nlohmann::ordered_json line;
      line["id"] = r->id;
      for (auto it = r->payload.begin(); it != r->payload.end(); ++it) {
        if (it.key() != "id") line[it.key()] = it.value();
      }
      out << line.dump() << "\n";
    }
  }
  std::filesystem::rename(partial, path);
  return path;
}

std::pair<RunManifest, std::vector<ResultRecord>> load_results(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open results file " + path.string());
  std::string line;
  int lineno = 0;
  RunManifest manifest;
  std::vector<ResultRecord> records;
  bool have_manifest = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw ValidationError("empty line in results", lineno);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ValidationError("record is not valid JSON", lineno);
    }
    try {
      if (!have_manifest) {
        if (j.value("type", std::string{}) != "manifest") {
          throw InvalidInputError("first line must be the run manifest");
        }
        manifest = RunManifest::from_json(j);
        have_manifest = true;
        continue;
      }
      ResultRecord record;
      record.id = require_string(j, "id", "result record");
      record.payload = std::move(j);
      records.push_back(std::move(record));
    } catch (const Error& e) {
      throw ValidationError(e.what(), lineno);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(e.what(), lineno);
    }
  }
  if (!have_manifest) {
    throw ValidationError("results file has no manifest line", 1);
  }
  return {std::move(manifest), std::move(records)};
}

nlohmann::ordered_json judge_to_json(const JudgeResult& verdict) {
  nlohmann::ordered_json j;
  if (verdict.multi) {
    j["macro"] = verdict.match;
    if (verdict.micro) j["micro"] = verdict.micro->str();
  } else {
    j["match"] = verdict.match;
  }
  j["FB"] = verdict.fb;
  j["UPB"] = verdict.upb;
  j["RII"] = verdict.rii;
  j["LF"] = verdict.lf;
  j["VG"] = verdict.vg;
  j["Judge"] = verdict.judge;
  j["reason"] = verdict.reason;
  return j;
}

JudgeResult judge_from_json(const nlohmann::json& j) {
  JudgeResult v;
  v.multi = j.contains("macro");
  if (v.multi) {
    if (!j["macro"].is_boolean()) {
      throw InvalidInputError("judge record field \"macro\" must be boolean");
    }
    v.match = j["macro"].get<bool>();
    if (j.contains("micro")) {
      const std::string s = j["micro"].get<std::string>();
      const std::size_t slash = s.find('/');
      if (slash == std::string::npos) {
        throw InvalidInputError("judge record micro must be \"n/m\"");
      }
      v.micro = Rational{std::stoi(s.substr(0, slash)),
                         std::stoi(s.substr(slash + 1))};
    }
  } else {
    if (!j.contains("match") || !j["match"].is_boolean()) {
      throw InvalidInputError("judge record lacks boolean \"match\"");
    }
    v.match = j["match"].get<bool>();
  }
  auto field = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
      throw InvalidInputError(std::string("judge record lacks integer \"") +
                              key + "\"");
    }
    return j[key].get<int>();
  };
  v.fb = field("FB");
  v.upb = field("UPB");
  v.rii = field("RII");
  v.lf = field("LF");
  v.vg = field("VG");
  v.judge = field("Judge");
  v.reason = j.value("reason", std::string{});
  return v;
}

}  // namespace rpeval

// Copyright 2026 The StratSample Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stratsample/cache.h"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "stratsample/error.h"
#include "stratsample/text.h"

namespace stratsample {

using nlohmann::json;

std::string cache_key(std::string_view request, std::string_view model) {
  const json canonical = json::array({request, model});
  return text::sha256_hex(canonical.dump());
}

std::filesystem::path default_cache_dir() {
  const char* env = std::getenv("STRATSAMPLE_CACHE_DIR");
  if (env != nullptr && *env != '\0') return env;
  return ".stratsample-cache";
}

json to_json(const PartitionProperty& property) {
  return {{"id", property.id},
          {"statement", property.statement},
          {"origin", to_string(property.origin)}};
}

json to_json(const WeightedStratification& stratification) {
  json marginals = json::array();
  for (const MarginalEstimate& m : stratification.marginals()) {
    marginals.push_back({{"property", to_json(m.property)}, {"p_true", m.p_true}});
  }
  json joint = json::array();
  for (const auto& [stratum, p] : stratification.joint().entries()) {
    joint.push_back({{"stratum", stratum.to_string()}, {"p", p}});
  }
  return {{"marginals", std::move(marginals)}, {"joint", std::move(joint)}};
}

json to_json(const AutoStratTranscript& transcript) {
  json properties = json::array();
  for (const PartitionProperty& p : transcript.properties) {
    properties.push_back(to_json(p));
  }
  return {{"request", transcript.request},
          {"raw_response", transcript.raw_response},
          {"properties", std::move(properties)}};
}

json to_json(const EstimationTranscript& transcript) {
  json marginals = json::array();
  for (const MarginalAttempt& m : transcript.marginals) {
    marginals.push_back({{"property", to_json(m.property)},
                         {"raw_responses", m.raw_responses},
                         {"p_true", m.p_true ? json(*m.p_true) : json()},
                         {"error", m.error}});
  }
  json revisions = json::array();
  for (const ProbabilityRevision& r : transcript.revisions) {
    revisions.push_back({{"property_id", r.property_id},
                         {"estimated", r.estimated},
                         {"finalized", r.finalized}});
  }
  return {{"request", transcript.request},
          {"marginals", std::move(marginals)},
          {"finalize_raw_response", transcript.finalize_raw_response},
          {"stratification", to_json(transcript.stratification)},
          {"warnings", transcript.warnings},
          {"revisions", std::move(revisions)}};
}

json to_json(const PipelineCacheEntry& entry) {
  return {{"key", entry.key},
          {"request", entry.request},
          {"model", entry.model},
          {"created_at", entry.created_at},
          {"autostrat", to_json(entry.autostrat)},
          {"estimation", to_json(entry.estimation)}};
}

PartitionProperty property_from_json(const json& node) {
  return make_property(node.at("id").get<std::string>(),
                       node.at("statement").get<std::string>(),
                       property_origin_from_string(
                           node.value("origin", std::string("auto-stratified"))));
}

WeightedStratification stratification_from_json(const json& node) {
  std::vector<MarginalEstimate> marginals;
  for (const json& m : node.at("marginals")) {
    marginals.push_back(
        {property_from_json(m.at("property")), m.at("p_true").get<double>()});
  }
  return WeightedStratification(std::move(marginals));
}

AutoStratTranscript autostrat_from_json(const json& node) {
  AutoStratTranscript t;
  t.request = node.at("request").get<std::string>();
  t.raw_response = node.at("raw_response").get<std::string>();
  for (const json& p : node.at("properties")) {
    t.properties.push_back(property_from_json(p));
  }
  return t;
}

EstimationTranscript estimation_from_json(const json& node) {
  std::vector<MarginalAttempt> marginals;
  for (const json& m : node.at("marginals")) {
    MarginalAttempt attempt{property_from_json(m.at("property")),
                            m.value("raw_responses", std::vector<std::string>{}),
                            std::nullopt, m.value("error", std::string())};
    if (m.contains("p_true") && m["p_true"].is_number()) {
      attempt.p_true = m["p_true"].get<double>();
    }
    marginals.push_back(std::move(attempt));
  }
  std::vector<ProbabilityRevision> revisions;
  for (const json& r : node.value("revisions", json::array())) {
    revisions.push_back({r.at("property_id").get<std::string>(),
                         r.at("estimated").get<double>(),
                         r.at("finalized").get<double>()});
  }
  return EstimationTranscript{
      node.at("request").get<std::string>(),
      std::move(marginals),
      node.value("finalize_raw_response", std::string()),
      stratification_from_json(node.at("stratification")),
      node.value("warnings", std::vector<std::string>{}),
      std::move(revisions)};
}

PipelineCacheEntry cache_entry_from_json(const json& node) {
  return PipelineCacheEntry{node.at("key").get<std::string>(),
                            node.at("request").get<std::string>(),
                            node.at("model").get<std::string>(),
                            node.value("created_at", std::string()),
                            autostrat_from_json(node.at("autostrat")),
                            estimation_from_json(node.at("estimation"))};
}

PipelineCache::PipelineCache(std::filesystem::path dir, bool enabled)
    : dir_(std::move(dir)), enabled_(enabled) {}

std::filesystem::path PipelineCache::path_for(std::string_view key) const {
  return dir_ / (std::string(key) + ".json");
}

std::optional<PipelineCacheEntry> PipelineCache::load(const std::string& key) {
  if (!enabled_) return std::nullopt;
  std::lock_guard<std::mutex> lock(mu_);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc = json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) {
    throw ParseError("corrupt cache file " + path_for(key).string());
  }
  try {
    PipelineCacheEntry entry = cache_entry_from_json(doc);
    memo_.emplace(key, entry);
    return entry;
  } catch (const json::exception& e) {
    throw ParseError("bad cache file " + path_for(key).string() + ": " +
                     e.what());
  }
}

void PipelineCache::write_atomically(const std::filesystem::path& path,
                                     const json& doc) {
  std::filesystem::create_directories(dir_);
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  const std::filesystem::path tmp_path = path.string() + suffix.str();
  {
    std::ofstream out(tmp_path, std::ios::trunc);
    if (!out) throw Error("cannot write cache file " + tmp_path.string());
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp_path, path);
}

void PipelineCache::store(const PipelineCacheEntry& entry) {
  if (!enabled_) return;
  std::lock_guard<std::mutex> lock(mu_);
  write_atomically(path_for(entry.key), to_json(entry));
  memo_.insert_or_assign(entry.key, entry);
}

std::optional<AutoStratTranscript> PipelineCache::load_autostrat(
    const std::string& key) {
  if (!enabled_) return std::nullopt;
  std::lock_guard<std::mutex> lock(mu_);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second.autostrat;
  const std::filesystem::path path = dir_ / (key + ".autostrat.json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc = json::parse(buffer.str(), nullptr, false);
  try {
    if (doc.is_discarded()) throw ParseError("not valid JSON");
    return autostrat_from_json(doc);
  } catch (const std::exception& e) {
    throw ParseError("bad cache file " + path.string() + ": " + e.what());
  }
}

void PipelineCache::store_autostrat(const std::string& key,
                                    const AutoStratTranscript& transcript) {
  if (!enabled_) return;
  std::lock_guard<std::mutex> lock(mu_);
  write_atomically(dir_ / (key + ".autostrat.json"), to_json(transcript));
}

}  // namespace stratsample

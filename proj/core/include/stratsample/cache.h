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

#ifndef STRATSAMPLE_CACHE_H_
#define STRATSAMPLE_CACHE_H_

// Per-request cache of the stage 1 and stage 2 transcripts. One JSON
// document per key at <dir>/<key>.json; the files are human readable and may
// be edited offline (the joint is rebuilt from the stored marginals on load).

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "stratsample/autostrat.h"
#include "stratsample/estimate.h"

namespace stratsample {

struct PipelineCacheEntry {
  std::string key;
  std::string request;
  std::string model;
  std::string created_at;  // ISO-8601 UTC
  AutoStratTranscript autostrat;
  EstimationTranscript estimation;
};

// Hex SHA-256 of the canonical JSON array [request, model].
std::string cache_key(std::string_view request, std::string_view model);

// $STRATSAMPLE_CACHE_DIR, else ".stratsample-cache".
std::filesystem::path default_cache_dir();

nlohmann::json to_json(const PartitionProperty& property);
nlohmann::json to_json(const WeightedStratification& stratification);
nlohmann::json to_json(const AutoStratTranscript& transcript);
nlohmann::json to_json(const EstimationTranscript& transcript);
nlohmann::json to_json(const PipelineCacheEntry& entry);

PartitionProperty property_from_json(const nlohmann::json& node);
WeightedStratification stratification_from_json(const nlohmann::json& node);
AutoStratTranscript autostrat_from_json(const nlohmann::json& node);
EstimationTranscript estimation_from_json(const nlohmann::json& node);
PipelineCacheEntry cache_entry_from_json(const nlohmann::json& node);

class PipelineCache {
 public:
  explicit PipelineCache(std::filesystem::path dir, bool enabled = true);

  bool enabled() const { return enabled_; }
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(std::string_view key) const;

  // nullopt on a miss or when disabled. A missing file is a miss; a corrupt
  // one throws ParseError.
  std::optional<PipelineCacheEntry> load(const std::string& key);

  // Writes <key>.json via a temporary file and rename. No-op when disabled.
  void store(const PipelineCacheEntry& entry);

  // Stage 1 on its own, at <dir>/<key>.autostrat.json. Written by runs that
  // stop after auto-stratification and reused by the next full run.
  std::optional<AutoStratTranscript> load_autostrat(const std::string& key);
  void store_autostrat(const std::string& key,
                       const AutoStratTranscript& transcript);

 private:
  std::filesystem::path dir_;
  bool enabled_;
  std::mutex mu_;
  void write_atomically(const std::filesystem::path& path,
                        const nlohmann::json& doc);

  std::map<std::string, PipelineCacheEntry> memo_;
};

}  // namespace stratsample

#endif  // STRATSAMPLE_CACHE_H_

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

// Command-line front end. Precedence for every setting: flag, then the
// --config file (key = value lines), then environment, then default.

#include "cli.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stratsample/autostrat.h"
#include "stratsample/backend.h"
#include "stratsample/cache.h"
#include "stratsample/coverageqa.h"
#include "stratsample/error.h"
#include "stratsample/estimate.h"
#include "stratsample/eval.h"
#include "stratsample/sampler.h"

namespace stratsample::cli {
namespace {

struct RunConfig {
  std::string backend = "http";
  std::string base_url;
  std::string model;
  std::string fixture;
  bool scoring = false;
  std::vector<double> temperatures = {1.0};
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  std::string cache_dir = ".stratsample-cache";
  bool no_cache = false;
  std::size_t concurrency = 1;
  std::size_t max_invalid_retries = kDefaultMaxInvalidRetries;
  double stage_temperature = 0.0;

  // stratify / estimate / sample
  std::string request;
  std::size_t n = 10;

  // eval
  std::string dataset;
  std::string out_json;
  std::string out_csv;
  std::vector<std::string> methods = {"baseline", "simplestrat"};

  // gen-dataset
  std::string kb;
  std::string seed_pair;
  std::size_t min_answers = 20;
  std::size_t max_answers = 40;
  std::size_t max_depth = 3;
  std::string blacklist;
  std::vector<std::string> blacklist_properties;
  std::string domain = "general";
  bool phrase = false;

  // report
  std::string report_path;
};

std::shared_ptr<Backend> open_backend(const RunConfig& config) {
  BackendSpec spec;
  spec.kind = backend_kind_from_string(config.backend);
  spec.base_url = config.base_url;
  spec.model = config.model;
  spec.fixture = config.fixture;
  spec.enable_scoring = config.scoring;
  if (spec.kind != BackendKind::kHttp && spec.fixture.empty()) {
    throw InvalidArgument("--fixture is required for mock backends");
  }
  return make_backend(spec);
}

PipelineOptions pipeline_options(const RunConfig& config) {
  PipelineOptions options;
  options.stage.model = config.model;
  options.stage.temperature = config.stage_temperature;
  options.fan_out = config.concurrency;
  options.sample.model = config.model;
  options.sample.temperature = config.temperatures.front();
  options.sample.max_invalid_retries = config.max_invalid_retries;
  return options;
}

PipelineCache open_cache(const RunConfig& config) {
  return PipelineCache(config.cache_dir, !config.no_cache);
}

void print_stratification(std::ostream& out,
                          const WeightedStratification& stratification) {
  const auto& marginals = stratification.marginals();
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    out << (i + 1) << ". " << marginals[i].property.statement
        << " :: " << marginals[i].p_true << '\n';
  }
  out << "joint:";
  for (const auto& [stratum, p] : stratification.joint().entries()) {
    out << ' ' << stratum.to_string() << '=' << p;
  }
  out << '\n';
}

int cmd_stratify(const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
  auto backend = open_backend(config);
  PipelineCache cache = open_cache(config);
  const std::string model =
      config.model.empty() ? backend->model_id() : config.model;
  const std::string key = cache_key(config.request, model);

  std::optional<AutoStratTranscript> transcript = cache.load_autostrat(key);
  if (transcript) {
    err << "cache hit: " << key << '\n';
  } else {
    StageOptions stage;
    stage.model = config.model;
    stage.temperature = config.stage_temperature;
    transcript = run_auto_stratification(*backend, config.request, stage);
    cache.store_autostrat(key, *transcript);
  }
  for (std::size_t i = 0; i < transcript->properties.size(); ++i) {
    out << (i + 1) << ". " << transcript->properties[i].statement << '\n';
  }
  return kExitOk;
}

int cmd_estimate(const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
  auto backend = open_backend(config);
  PipelineCache cache = open_cache(config);
  PreparedStratification prepared = prepare_stratification(
      *backend, config.request, pipeline_options(config), &cache);
  if (prepared.cache_hit) err << "cache hit: " << prepared.entry.key << '\n';
  for (const std::string& warning : prepared.entry.estimation.warnings) {
    err << "warning: " << warning << '\n';
  }
  print_stratification(out, prepared.entry.estimation.stratification);
  return kExitOk;
}

int cmd_sample(const RunConfig& config, std::ostream& out, std::ostream& err) {
  auto backend = open_backend(config);
  PipelineCache cache = open_cache(config);
  const PipelineOptions options = pipeline_options(config);
  PreparedStratification prepared =
      prepare_stratification(*backend, config.request, options, &cache);
  if (prepared.cache_hit) err << "cache hit: " << prepared.entry.key << '\n';

  const ProbabilisticPrompt prompt{config.request,
                                   prepared.entry.estimation.stratification};
  Rng rng(derive_seed(config.seed, {}));
  for (std::size_t i = 0; i < config.n; ++i) {
    SampleOutcome outcome =
        sample_response(*backend, prompt, options.sample, rng);
    if (outcome.fell_back) {
      err << "fallback: sample " << (i + 1) << " used the unaugmented prompt "
          << "after " << outcome.attempts << " Invalid replies\n";
    }
    out << (i + 1) << '\t' << outcome.stratum.to_string() << '\t'
        << outcome.answer << '\n';
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const std::vector<QuestionRecord> questions = load_dataset(config.dataset);
  auto backend = open_backend(config);
  PipelineCache cache = open_cache(config);

  EvalConfig eval;
  eval.temperatures = config.temperatures;
  eval.samples = config.samples;
  eval.seed = config.seed;
  eval.concurrency = config.concurrency;
  eval.pipeline = pipeline_options(config);
  eval.pipeline.fan_out = 1;
  eval.methods.clear();
  for (const std::string& m : config.methods) {
    eval.methods.push_back(method_from_string(m));
  }

  const MetricsReport report = run_evaluation(*backend, questions, eval, &cache);
  if (!config.out_csv.empty()) {
    std::ofstream csv(config.out_csv, std::ios::trunc);
    if (!csv) throw Error("cannot write " + config.out_csv);
    csv << report_to_csv(report);
  }
  if (!config.out_json.empty()) {
    std::ofstream json_out(config.out_json, std::ios::trunc);
    if (!json_out) throw Error("cannot write " + config.out_json);
    json_out << report_to_json(report).dump(2) << '\n';
  }

  out << "temp\tmethod\tquestions\trecall\tprecision\tf1\tkl_nats\n";
  for (const AggregateRow& agg : report.aggregates) {
    out << agg.temperature << '\t' << to_string(agg.method) << '\t'
        << agg.questions << '\t' << std::fixed << std::setprecision(4)
        << agg.recall << '\t' << agg.precision << '\t' << agg.f1 << '\t';
    if (agg.kl_nats) {
      out << *agg.kl_nats;
    } else {
      out << '-';
    }
    out << std::defaultfloat << std::setprecision(6) << '\n';
  }
  for (const QuestionFailure& f : report.failures) {
    err << "failed: " << f.question_id
        << (f.method.empty() ? "" : " [" + f.method + "]") << ": "
        << f.message << '\n';
  }
  return report.failures.empty() ? kExitOk : kExitFailure;
}

int cmd_gen_dataset(const RunConfig& config, std::ostream& out,
                    std::ostream& err) {
  const auto eq = config.seed_pair.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == config.seed_pair.size()) {
    throw InvalidArgument("--seed-pair must look like property=value");
  }
  const PropertyValue seed{config.seed_pair.substr(0, eq),
                           config.seed_pair.substr(eq + 1)};

  SearchOptions search;
  search.min_answers = config.min_answers;
  search.max_answers = config.max_answers;
  search.max_depth = config.max_depth;
  if (!config.blacklist.empty()) search.blacklist = load_blacklist(config.blacklist);
  search.blacklist.insert(config.blacklist_properties.begin(),
                          config.blacklist_properties.end());

  const KnowledgeBase kb = load_kb(config.kb);
  std::vector<GeneratedQuestion> questions = recursive_search(kb, seed, search);
  if (config.phrase) {
    auto backend = open_backend(config);
    StageOptions stage;
    stage.model = config.model;
    stage.temperature = config.stage_temperature;
    for (GeneratedQuestion& q : questions) {
      q.question_text = to_question(*backend, q.constraints, stage);
    }
  }
  const std::vector<QuestionRecord> records = to_records(questions, config.domain);
  if (config.out_json.empty()) {
    out << dataset_to_string(records);
  } else {
    write_dataset(records, config.out_json);
  }
  err << "generated " << records.size() << " question(s)\n";
  return kExitOk;
}

int cmd_report(const RunConfig& config, std::ostream& out) {
  std::ifstream in(config.report_path);
  if (!in) throw InvalidArgument("cannot open report " + config.report_path);
  const nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("aggregates")) {
    throw ParseError("not a metrics report: " + config.report_path);
  }
  out << std::left << std::setw(8) << "temp" << std::setw(13) << "method"
      << std::setw(11) << "questions" << std::setw(9) << "recall"
      << std::setw(11) << "precision" << std::setw(8) << "f1" << "kl_nats\n";
  for (const auto& agg : doc["aggregates"]) {
    std::ostringstream kl;
    if (agg["kl_nats"].is_number()) {
      kl << std::fixed << std::setprecision(4) << agg["kl_nats"].get<double>();
    } else if (agg["kl_nats"].is_string()) {
      kl << agg["kl_nats"].get<std::string>();
    } else {
      kl << '-';
    }
    out << std::left << std::setw(8) << agg["temp"].get<double>()
        << std::setw(13) << agg["method"].get<std::string>() << std::setw(11)
        << agg["questions"].get<std::size_t>() << std::fixed
        << std::setprecision(4) << std::setw(9) << agg["recall"].get<double>()
        << std::setw(11) << agg["precision"].get<double>() << std::setw(8)
        << agg["f1"].get<double>() << kl.str() << std::defaultfloat << '\n';
  }
  return kExitOk;
}

void add_backend_options(CLI::App& sub, RunConfig& c) {
  sub.add_option("--backend", c.backend, "http | mock-scripted | mock-categorical")
      ->check(CLI::IsMember({"http", "mock-scripted", "mock-categorical"}))
      ->capture_default_str();
  sub.add_option("--base-url", c.base_url, "OpenAI-compatible server root");
  sub.add_option("--model", c.model, "Model identifier");
  sub.add_option("--fixture", c.fixture, "Mock backend fixture (JSON)");
  sub.add_flag("--scoring", c.scoring,
               "Enable forced-continuation scoring on the http backend");
  sub.add_option("--stage-temperature", c.stage_temperature,
                 "Temperature for the stratification stages")
      ->check(CLI::Range(0.0, 2.0))
      ->capture_default_str();
}

void add_cache_options(CLI::App& sub, RunConfig& c) {
  sub.add_option("--cache-dir", c.cache_dir, "Stage 1-2 cache directory")
      ->envname("STRATSAMPLE_CACHE_DIR")
      ->capture_default_str();
  sub.add_flag("--no-cache", c.no_cache, "Recompute stages 1-2 every call");
}

void add_sampling_options(CLI::App& sub, RunConfig& c) {
  sub.add_option("--temperature", c.temperatures,
                 "Sampling temperature (repeatable)")
      ->check(CLI::Range(0.0, 2.0))
      ->capture_default_str();
  sub.add_option("--seed", c.seed, "Root random seed")->capture_default_str();
  sub.add_option("--concurrency", c.concurrency, "Parallel fan-out bound")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub.add_option("--max-invalid-retries", c.max_invalid_retries,
                 "Invalid replies tolerated before the unaugmented fallback")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  RunConfig c;
  CLI::App app{"Stratified sampling for diverse language-model answers",
               "stratsample"};
  app.set_config("--config", "", "key = value configuration file");
  app.require_subcommand(1);
  app.fallthrough();
  add_backend_options(app, c);
  add_cache_options(app, c);
  add_sampling_options(app, c);

  CLI::App* stratify = app.add_subcommand("stratify", "Propose partition properties");
  stratify->add_option("request", c.request, "User request")->required();

  CLI::App* estimate = app.add_subcommand(
      "estimate", "Run stratification and heuristic estimation");
  estimate->add_option("request", c.request, "User request")->required();

  CLI::App* sample = app.add_subcommand("sample", "Draw stratified answers");
  sample->add_option("request", c.request, "User request")->required();
  sample->add_option("-n,--count", c.n, "Number of answers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  CLI::App* eval = app.add_subcommand("eval", "Evaluate diversity on a dataset");
  eval->add_option("--dataset", c.dataset, "Dataset JSON")->required();
  eval->add_option("--samples", c.samples, "Samples per question")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_option("--out-json", c.out_json, "Full report (JSON)");
  eval->add_option("--out-csv", c.out_csv, "Per-question rows (CSV)");
  eval->add_option("--methods", c.methods, "baseline,simplestrat")
      ->delimiter(',')
      ->check(CLI::IsMember({"baseline", "simplestrat"}));

  CLI::App* gen = app.add_subcommand("gen-dataset",
                                     "Generate questions from a triple dump");
  gen->add_option("kb", c.kb, "Triple dump (item<TAB>property<TAB>value)")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--seed-pair", c.seed_pair, "Seed constraint property=value")
      ->required();
  gen->add_option("--min", c.min_answers, "Minimum answers per question")
      ->capture_default_str();
  gen->add_option("--max", c.max_answers, "Maximum answers per question")
      ->capture_default_str();
  gen->add_option("--max-depth", c.max_depth, "Maximum constraints")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--blacklist", c.blacklist, "File of blacklisted properties");
  gen->add_option("--blacklist-property", c.blacklist_properties,
                  "Blacklisted property (repeatable)");
  gen->add_option("--domain", c.domain, "Domain tag")->capture_default_str();
  gen->add_option("--out-json", c.out_json, "Dataset output path (default stdout)");
  gen->add_flag("--phrase", c.phrase,
                "Phrase constraints as questions with the backend");

  CLI::App* report = app.add_subcommand("report", "Summarize a JSON report");
  report->add_option("report", c.report_path, "Report written by eval --out-json")
      ->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    for (CLI::App* sub : app.get_subcommands()) out << sub->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream usage_out, usage_err;
    app.exit(e, usage_out, usage_err);
    out << usage_out.str();
    err << usage_err.str();
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*stratify) return cmd_stratify(c, out, err);
    if (*estimate) return cmd_estimate(c, out, err);
    if (*sample) return cmd_sample(c, out, err);
    if (*eval) return cmd_eval(c, out, err);
    if (*gen) return cmd_gen_dataset(c, out, err);
    if (*report) return cmd_report(c, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace stratsample::cli

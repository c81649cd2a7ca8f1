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

#include "stratsample/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include "stratsample/text.h"

namespace stratsample {
namespace {

using nlohmann::json;

bool is_terminal_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

// Pr[answer | prompt] for every canonical answer, unnormalized.
std::vector<double> score_answers(Backend& backend, std::string_view prompt,
                                  const QuestionRecord& record) {
  if (!backend.supports_scoring()) {
    throw BackendError(BackendErrorKind::kScoringUnsupported,
                       "scoring unsupported");
  }
  std::vector<double> probs;
  probs.reserve(record.answers.size());
  for (const AnswerEntry& answer : record.answers) {
    probs.push_back(
        std::exp(backend.score_continuation(prompt, " " + answer.canonical)));
  }
  return probs;
}

ResponseDistribution finish_distribution(const QuestionRecord& record,
                                         std::vector<double> probs,
                                         std::vector<std::string>* warnings) {
  double total = 0.0;
  for (double p : probs) total += p;
  ResponseDistribution dist;
  if (total > 1.0) {
    if (total > 1.0 + kProbabilitySumTolerance && warnings != nullptr) {
      warnings->push_back(record.id + ": answer probabilities sum to " +
                          std::to_string(total) + "; rescaled, invalid mass 0");
    }
    for (double& p : probs) p /= total;
    dist.invalid_mass = 0.0;
  } else {
    dist.invalid_mass = 1.0 - total;
  }
  for (std::size_t i = 0; i < record.answers.size(); ++i) {
    dist.probs.emplace_back(record.answers[i].canonical, probs[i]);
  }
  return dist;
}

std::string format_double(const char* fmt, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), fmt, value);
  return buffer;
}

std::string format_optional(const std::optional<double>& value) {
  if (!value) return "";
  if (std::isinf(*value)) return "inf";
  return format_double("%.6f", *value);
}

json optional_json(const std::optional<double>& value) {
  if (!value) return nullptr;
  if (std::isinf(*value)) return "inf";
  return *value;
}

}  // namespace

void validate(const QuestionRecord& record) {
  if (record.answers.size() < 2) {
    throw InvalidArgument("question " + record.id +
                          " needs at least two answers");
  }
  std::set<std::string> seen;
  for (const AnswerEntry& answer : record.answers) {
    if (!seen.insert(normalize_answer(answer.canonical)).second) {
      throw InvalidArgument("question " + record.id +
                            ": duplicate answer text '" + answer.canonical + "'");
    }
    for (const std::string& alias : answer.aliases) {
      if (!seen.insert(normalize_answer(alias)).second) {
        throw InvalidArgument("question " + record.id +
                              ": duplicate alias '" + alias + "'");
      }
    }
  }
}

std::string normalize_answer(std::string_view raw) {
  std::string s = text::collapse_whitespace(text::to_lower(raw));
  for (bool changed = true; changed && !s.empty();) {
    changed = false;
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
      s = text::trim(std::string_view(s).substr(1, s.size() - 2));
      changed = true;
    }
    while (!s.empty() && is_terminal_punct(s.back())) {
      s.pop_back();
      changed = true;
    }
    s = text::trim(s);
  }
  for (std::string_view article : {"the ", "a ", "an "}) {
    if (s.size() > article.size() && s.compare(0, article.size(), article) == 0) {
      s.erase(0, article.size());
      break;
    }
  }
  return s;
}

std::optional<std::size_t> match_answer(std::string_view raw,
                                        const QuestionRecord& record) {
  const std::string key = normalize_answer(raw);
  if (key.empty()) return std::nullopt;
  for (std::size_t i = 0; i < record.answers.size(); ++i) {
    if (normalize_answer(record.answers[i].canonical) == key) return i;
    for (const std::string& alias : record.answers[i].aliases) {
      if (normalize_answer(alias) == key) return i;
    }
  }
  return std::nullopt;
}

double coverage_recall(const SampleTranscript& transcript,
                       const QuestionRecord& record) {
  if (record.answers.empty()) return 0.0;
  std::set<std::size_t> found;
  for (const std::string& raw : transcript.raw_answers) {
    if (auto id = match_answer(raw, record)) found.insert(*id);
  }
  return static_cast<double>(found.size()) /
         static_cast<double>(record.answers.size());
}

double precision(const SampleTranscript& transcript,
                 const QuestionRecord& record) {
  if (transcript.raw_answers.empty()) {
    throw InvalidArgument("precision of an empty transcript");
  }
  std::size_t matched = 0;
  for (const std::string& raw : transcript.raw_answers) {
    if (match_answer(raw, record)) ++matched;
  }
  return static_cast<double>(matched) /
         static_cast<double>(transcript.raw_answers.size());
}

double f1(double p, double r) {
  if (p + r <= 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double ResponseDistribution::probability(std::string_view canonical) const {
  for (const auto& [answer, p] : probs) {
    if (answer == canonical) return p;
  }
  return 0.0;
}

ResponseDistribution baseline_distribution(Backend& backend,
                                           std::string_view prompt,
                                           const QuestionRecord& record,
                                           std::vector<std::string>* warnings) {
  return finish_distribution(record, score_answers(backend, prompt, record),
                             warnings);
}

ResponseDistribution simplestrat_distribution(
    Backend& backend, const WeightedStratification& stratification,
    std::string_view user_request, const QuestionRecord& record,
    std::vector<std::string>* warnings) {
  const std::vector<PartitionProperty> properties = stratification.properties();
  std::vector<double> mixture(record.answers.size(), 0.0);
  for (const auto& [stratum, rho] : stratification.joint().entries()) {
    if (rho <= 0.0) continue;
    const std::vector<double> conditional = score_answers(
        backend, render_prompt(user_request, properties, stratum), record);
    for (std::size_t i = 0; i < mixture.size(); ++i) {
      mixture[i] += rho * conditional[i];
    }
  }
  return finish_distribution(record, std::move(mixture), warnings);
}

double kl_from_uniform(const ResponseDistribution& dist,
                       const QuestionRecord& record) {
  const double n = static_cast<double>(record.answers.size());
  if (n < 2) throw InvalidArgument("KL needs at least two valid answers");
  const double u = 1.0 / n;
  double kl = 0.0;
  for (const AnswerEntry& answer : record.answers) {
    const double p = dist.probability(answer.canonical);
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    kl += u * std::log(u / p);
  }
  return std::max(kl, 0.0);
}

const char* to_string(Method method) {
  return method == Method::kBaseline ? "baseline" : "simplestrat";
}

Method method_from_string(std::string_view name) {
  if (name == "baseline") return Method::kBaseline;
  if (name == "simplestrat") return Method::kSimpleStrat;
  throw InvalidArgument("unknown method: " + std::string(name));
}

namespace {

struct QuestionResult {
  std::vector<MetricsRow> rows;
  std::vector<QuestionFailure> failures;
};

QuestionResult evaluate_question(Backend& backend, const QuestionRecord& record,
                                 std::size_t question_index,
                                 const EvalConfig& config,
                                 PipelineCache* cache) {
  QuestionResult result;
  const bool scoring = config.distributions && backend.supports_scoring();

  for (Method method : config.methods) {
    try {
      std::optional<WeightedStratification> stratification;
      std::optional<ResponseDistribution> dist;
      std::vector<std::string> warnings;
      if (method == Method::kSimpleStrat) {
        stratification = prepare_stratification(backend, record.question,
                                                config.pipeline, cache)
                             .entry.estimation.stratification;
        if (scoring) {
          dist = simplestrat_distribution(backend, *stratification,
                                          record.question, record, &warnings);
        }
      } else if (scoring) {
        dist = baseline_distribution(
            backend, render_baseline_prompt(record.question), record, &warnings);
      }

      for (double temperature : config.temperatures) {
        MetricsRow row;
        row.question_id = record.id;
        row.temperature = temperature;
        row.method = method;
        SampleOptions sample = config.pipeline.sample;
        sample.temperature = temperature;

        for (std::size_t i = 0; i < config.samples; ++i) {
          Rng rng(derive_seed(config.seed, {question_index, i}));
          if (method == Method::kSimpleStrat) {
            const ProbabilisticPrompt prompt{record.question, *stratification};
            SampleOutcome outcome = sample_response(backend, prompt, sample, rng);
            if (outcome.fell_back) ++row.fallbacks;
            row.raw_answers.push_back(std::move(outcome.answer));
          } else {
            CompletionRequest request;
            request.model = sample.model.empty() ? backend.model_id() : sample.model;
            request.messages = {
                {Role::kUser, render_baseline_prompt(record.question)}};
            request.temperature = temperature;
            request.max_tokens = sample.max_tokens;
            request.seed = rng();
            row.raw_answers.push_back(text::trim(backend.complete(request).text));
          }
        }

        const SampleTranscript transcript{record.id, temperature,
                                          row.raw_answers};
        row.recall = coverage_recall(transcript, record);
        row.precision =
            transcript.raw_answers.empty() ? 0.0 : precision(transcript, record);
        row.f1 = f1(row.precision, row.recall);
        if (dist) {
          row.kl_nats = kl_from_uniform(*dist, record);
          row.invalid_mass = dist->invalid_mass;
        }
        result.rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      result.failures.push_back({record.id, to_string(method), e.what()});
    }
  }
  return result;
}

}  // namespace

MetricsReport run_evaluation(Backend& backend,
                             const std::vector<QuestionRecord>& questions,
                             const EvalConfig& config, PipelineCache* cache) {
  if (config.samples == 0) throw InvalidArgument("samples must be >= 1");
  if (config.concurrency == 0) throw InvalidArgument("concurrency must be >= 1");
  for (double t : config.temperatures) {
    if (!(t >= 0.0 && t <= 2.0)) {
      throw InvalidArgument("temperature must be in [0, 2]");
    }
  }

  std::vector<QuestionResult> results(questions.size());
  auto run_one = [&](std::size_t q) {
    try {
      validate(questions[q]);
      results[q] = evaluate_question(backend, questions[q], q, config, cache);
    } catch (const std::exception& e) {
      results[q].failures.push_back({questions[q].id, "", e.what()});
    }
  };

  const std::size_t workers = std::min(config.concurrency, questions.size());
  if (workers <= 1) {
    for (std::size_t q = 0; q < questions.size(); ++q) run_one(q);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t q = next++; q < questions.size(); q = next++) {
          run_one(q);
        }
      });
    }
  }

  MetricsReport report;
  for (QuestionResult& r : results) {
    for (MetricsRow& row : r.rows) report.rows.push_back(std::move(row));
    for (QuestionFailure& f : r.failures) report.failures.push_back(std::move(f));
  }

  for (double temperature : config.temperatures) {
    for (Method method : config.methods) {
      AggregateRow agg;
      agg.temperature = temperature;
      agg.method = method;
      double kl_sum = 0.0;
      std::size_t kl_count = 0;
      for (const MetricsRow& row : report.rows) {
        if (row.temperature != temperature || row.method != method) continue;
        ++agg.questions;
        agg.recall += row.recall;
        agg.precision += row.precision;
        agg.f1 += row.f1;
        if (row.kl_nats) {
          kl_sum += *row.kl_nats;
          ++kl_count;
        }
      }
      if (agg.questions > 0) {
        const double n = static_cast<double>(agg.questions);
        agg.recall /= n;
        agg.precision /= n;
        agg.f1 /= n;
      }
      if (kl_count > 0) agg.kl_nats = kl_sum / static_cast<double>(kl_count);
      report.aggregates.push_back(agg);
    }
  }
  return report;
}

std::string report_to_csv(const MetricsReport& report) {
  std::string out = "id,temp,method,recall,precision,f1,kl_nats,invalid_mass\n";
  for (const MetricsRow& row : report.rows) {
    out += row.question_id;
    out += ',' + format_double("%g", row.temperature);
    out += ',';
    out += to_string(row.method);
    out += ',' + format_double("%.6f", row.recall);
    out += ',' + format_double("%.6f", row.precision);
    out += ',' + format_double("%.6f", row.f1);
    out += ',' + format_optional(row.kl_nats);
    out += ',' + format_optional(row.invalid_mass);
    out += '\n';
  }
  return out;
}

json report_to_json(const MetricsReport& report) {
  json rows = json::array();
  for (const MetricsRow& row : report.rows) {
    rows.push_back({{"id", row.question_id},
                    {"temp", row.temperature},
                    {"method", to_string(row.method)},
                    {"recall", row.recall},
                    {"precision", row.precision},
                    {"f1", row.f1},
                    {"kl_nats", optional_json(row.kl_nats)},
                    {"invalid_mass", optional_json(row.invalid_mass)},
                    {"fallbacks", row.fallbacks},
                    {"answers", row.raw_answers}});
  }
  json aggregates = json::array();
  for (const AggregateRow& agg : report.aggregates) {
    aggregates.push_back({{"temp", agg.temperature},
                          {"method", to_string(agg.method)},
                          {"questions", agg.questions},
                          {"recall", agg.recall},
                          {"precision", agg.precision},
                          {"f1", agg.f1},
                          {"kl_nats", optional_json(agg.kl_nats)}});
  }
  json failures = json::array();
  for (const QuestionFailure& f : report.failures) {
    failures.push_back(
        {{"id", f.question_id}, {"method", f.method}, {"error", f.message}});
  }
  return {{"rows", std::move(rows)},
          {"aggregates", std::move(aggregates)},
          {"failures", std::move(failures)}};
}

}  // namespace stratsample

/**
 * Copyright 2026 The idslab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace idslab::lab {

inline constexpr const char* kVersion = "0.1.0";

/// Experiment description read from `key = value` text. '#' starts a
/// comment; lists are whitespace or comma separated; ranges are lo:hi:step.
///
///   experiment = ids | silt | pam | constants | tauberian | riesz
///   seed = 1
///   output = runs/ids-small
///   threads = 1
///   ...experiment parameters (see validate)
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::string output = "idslab-out";
  int threads = 0;  // 0 keeps the OpenMP default
  std::map<std::string, std::string> params;  // everything else, raw

  [[nodiscard]] bool has(const std::string& key) const { return params.count(key) != 0; }
  [[nodiscard]] double number(const std::string& key) const;
  [[nodiscard]] double number(const std::string& key, double fallback) const;
  [[nodiscard]] int integer(const std::string& key) const;
  [[nodiscard]] int integer(const std::string& key, int fallback) const;
  [[nodiscard]] std::vector<double> list(const std::string& key) const;
  [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
};

struct FieldError {
  std::string field;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::vector<FieldError> errors);
  std::vector<FieldError> errors;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// IDSLAB_OUTPUT_DIR replaces `output`, IDSLAB_THREADS replaces `threads`.
void apply_environment(ExperimentConfig& config);

/// Sorted `key=value` lines; numbers re-printed with 17 significant digits.
std::string canonical(const ExperimentConfig& config);
/// FNV-1a 64 of canonical(config), as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::uint64_t fnv1a64(const std::string& bytes);

/// Every precondition of the selected experiment, checked before launch.
std::vector<FieldError> validate(const ExperimentConfig& config);

struct ResultRecord {
  std::string config_hash;
  std::string module;
  std::string operation;
  std::string inputs_digest;
  std::string outputs;  // JSON object text
  double wall_time = 0.0;
  std::string version = kVersion;
  std::string error;  // empty on success

  [[nodiscard]] std::string to_jsonl() const;
};

/// Seed of realization i: derive_seed(master, i) (splitmix64 finalizer of
/// master + golden * (i + 1)), a bijection in i for a fixed master.
std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index);

/// Runs the experiment and writes records.jsonl, config.txt and the CSV
/// tables into the output directory. Throws ConfigError when validation
/// fails; module errors become records with `error` set.
std::vector<ResultRecord> run(const ExperimentConfig& config);

struct Report {
  std::vector<std::string> files;    // written, relative to the directory
  std::vector<std::string> problems;  // missing or corrupt inputs
  std::size_t records = 0;
};

/// Summaries of a run directory as CSV under <dir>/report. An empty or
/// record-less directory yields report/summary.csv containing "no records".
Report report(const std::filesystem::path& dir);

/// CSV number: 17 significant digits, '.' decimal point.
std::string csv_number(double x);

}  // namespace idslab::lab

/*
 * Copyright 2026 The qtomo authors
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

#ifndef QTOMO_CORE_CONFIG_HPP
#define QTOMO_CORE_CONFIG_HPP

#include <string>
#include <utility>
#include <vector>

#include "core/experiment.hpp"

namespace qtomo {

/// Flat sectioned key-value experiment description. Unknown sections or
/// keys are hard errors; parse errors carry "<origin>:<line>:" anchors.
struct ParsedConfig {
  ExperimentConfig experiment;
  /// Every effective field as "section.key" -> value, sorted by key;
  /// independent of declaration order and of explicitly spelled defaults.
  std::vector<std::pair<std::string, std::string>> canonical;
  /// FNV-1a 64 hash of the canonical form, as 16 hex digits.
  std::string hash;
};

ParsedConfig parse_config_text(const std::string& text,
                               const std::string& origin);
ParsedConfig parse_config_file(const std::string& path);

/// Replaces the master seed and recomputes the canonical form and hash.
void override_seed(ParsedConfig& cfg, std::uint64_t seed);

/// Replaces the worker count (not part of the canonical form; workers do
/// not change results).
void override_workers(ParsedConfig& cfg, int workers);

std::string canonical_config_string(
    const std::vector<std::pair<std::string, std::string>>& canonical);

std::string fnv1a_hex(const std::string& text);

/// Canonical form of a resolved experiment config.
std::vector<std::pair<std::string, std::string>> canonicalize(
    const ExperimentConfig& cfg);

// --- whole-run driver -------------------------------------------------------

struct RunOutputs {
  std::string csv_path;
  std::string summary_path;
  std::string manifest_path;
};

/// Runs the ensemble and writes results.csv, summary.json and
/// manifest.json into out_dir. Data outputs are byte-deterministic under a
/// fixed seed unless with_timing fills the CSV seconds column; wall-clock
/// timestamps live in the manifest only.
RunOutputs run_simulation_files(const ParsedConfig& cfg,
                                const std::string& out_dir, bool with_timing);

/// JSON fit report for a results CSV restricted to [n_lo, n_hi] (mean
/// infidelity across replicas per checkpoint).
std::string fit_report_json(const std::string& csv_path, long n_lo, long n_hi);

}  // namespace qtomo

#endif  // QTOMO_CORE_CONFIG_HPP

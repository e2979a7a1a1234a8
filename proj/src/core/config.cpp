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

#include "core/config.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "core/version.hpp"

namespace qtomo {

namespace {

using OrderedJson = nlohmann::ordered_json;

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct RawConfig {
  std::string origin;
  std::map<std::string, std::map<std::string, RawEntry>> sections;

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ConfigurationError(origin + ":" + std::to_string(line) + ": " +
                             message);
  }

  const RawEntry* find(const std::string& section, const std::string& key) {
    auto sec = sections.find(section);
    if (sec == sections.end()) return nullptr;
    auto it = sec->second.find(key);
    if (it == sec->second.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::string require(const std::string& section, const std::string& key) {
    const RawEntry* entry = find(section, key);
    if (!entry)
      throw ConfigurationError(origin + ": missing required field [" +
                               section + "] " + key);
    return entry->value;
  }

  void check_all_used() const {
    for (const auto& [section, entries] : sections)
      for (const auto& [key, entry] : entries)
        if (!entry.used)
          fail(entry.line, "unknown key '" + section + "." + key + "'");
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::vector<std::string>> kKnownKeys = {
    {"experiment",
     {"dim", "n_max", "checkpoint_count", "checkpoint_list", "replicas",
      "seed", "estimator", "workers"}},
    {"truth", {"source", "bloch", "matrix"}},
    {"prior", {"kind"}},
    {"strategy",
     {"kind", "cycle", "candidates", "restriction", "n0_rule",
      "shots_per_eval", "jitter_sigma"}},
    {"particles",
     {"count", "ess_threshold", "resampler", "liu_west_a", "mh_steps",
      "mh_step_scale"}},
};

RawConfig tokenize(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') raw.fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (kKnownKeys.find(section) == kKnownKeys.end())
        raw.fail(line_no, "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      raw.fail(line_no, "expected 'key = value'");
    if (section.empty())
      raw.fail(line_no, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& known = kKnownKeys.at(section);
    if (std::find(known.begin(), known.end(), key) == known.end())
      raw.fail(line_no, "unknown key '" + section + "." + key + "'");
    if (value.empty()) raw.fail(line_no, "empty value for '" + key + "'");
    auto [it, inserted] =
        raw.sections[section].emplace(key, RawEntry{value, line_no, false});
    if (!inserted)
      raw.fail(line_no, "duplicate key '" + section + "." + key + "'");
  }
  return raw;
}

long parse_long(RawConfig& raw, const RawEntry& entry) {
  try {
    size_t pos = 0;
    const long v = std::stol(entry.value, &pos);
    if (pos != entry.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    raw.fail(entry.line, "expected an integer, got '" + entry.value + "'");
  }
}

double parse_double(RawConfig& raw, const RawEntry& entry) {
  try {
    size_t pos = 0;
    const double v = std::stod(entry.value, &pos);
    if (pos != entry.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    raw.fail(entry.line, "expected a number, got '" + entry.value + "'");
  }
}

std::vector<double> parse_doubles(RawConfig& raw, const RawEntry& entry) {
  std::istringstream ss(entry.value);
  std::vector<double> values;
  double v;
  while (ss >> v) values.push_back(v);
  if (!ss.eof())
    raw.fail(entry.line, "expected numbers, got '" + entry.value + "'");
  return values;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical_config_string(
    const std::vector<std::pair<std::string, std::string>>& canonical) {
  std::string out;
  for (const auto& [key, value] : canonical) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> canonicalize(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&kv](const std::string& key, const std::string& value) {
    kv.emplace_back(key, value);
  };
  put("experiment.dim", std::to_string(cfg.dim));
  put("experiment.estimator", estimator_kind_name(cfg.estimator));
  put("experiment.n_max", std::to_string(cfg.n_max));
  put("experiment.replicas", std::to_string(cfg.replicas));
  put("experiment.seed", std::to_string(cfg.seed));
  {
    std::string list;
    for (long n : cfg.checkpoints) {
      if (!list.empty()) list += ' ';
      list += std::to_string(n);
    }
    put("experiment.checkpoints", list);
  }
  if (cfg.truth.kind == TruthSource::Kind::fixed) {
    put("truth.source", "fixed");
    std::string elems;
    const Matrix& m = cfg.truth.fixed->mat();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (!elems.empty()) elems += ' ';
        elems += format_double(m(i, j).real()) + ' ' +
                 format_double(m(i, j).imag());
      }
    put("truth.matrix", elems);
  } else {
    put("truth.source", prior_kind_name(cfg.truth.prior.kind));
  }
  const bool self_guided = cfg.strategy.kind == StrategyKind::self_guided;
  if (!self_guided) put("prior.kind", prior_kind_name(cfg.smc_prior.kind));
  put("strategy.kind", strategy_kind_name(cfg.strategy.kind));
  switch (cfg.strategy.kind) {
    case StrategyKind::static_cycle:
      put("strategy.cycle", cfg.strategy.cycle);
      break;
    case StrategyKind::info_gain:
    case StrategyKind::fidelity_utility:
      put("strategy.candidates",
          std::to_string(cfg.strategy.candidate_count > 0
                             ? cfg.strategy.candidate_count
                             : default_candidate_count(cfg.dim)));
      if (cfg.dim == 4)
        put("strategy.restriction",
            cfg.strategy.restriction == CandidateRestriction::factorized
                ? "factorized"
                : "unconstrained");
      break;
    case StrategyKind::two_step:
      put("strategy.n0_rule", cfg.strategy.n0_rule == TwoStepVariant::bagan
                                  ? "bagan"
                                  : "worst_case");
      break;
    case StrategyKind::self_guided:
      put("strategy.shots_per_eval",
          std::to_string(cfg.strategy.shots_per_eval));
      break;
    default:
      break;
  }
  put("strategy.jitter_sigma", format_double(cfg.jitter_sigma));
  if (!self_guided) {
    put("particles.count",
        std::to_string(cfg.n_particles > 0 ? cfg.n_particles
                                           : default_particle_count(cfg.dim)));
    put("particles.ess_threshold", format_double(cfg.smc_policy.ess_fraction));
    put("particles.resampler",
        cfg.smc_policy.method == ResampleMethod::liu_west
            ? "liu_west"
            : "metropolis_hastings");
    if (cfg.smc_policy.method == ResampleMethod::liu_west) {
      put("particles.liu_west_a",
          format_double(cfg.smc_policy.params.liu_west_a));
    } else {
      put("particles.mh_steps",
          std::to_string(cfg.smc_policy.params.mh_steps));
      put("particles.mh_step_scale",
          format_double(cfg.smc_policy.params.mh_step_scale));
    }
  }
  std::sort(kv.begin(), kv.end());
  return kv;
}

ParsedConfig parse_config_text(const std::string& text,
                               const std::string& origin) {
  RawConfig raw = tokenize(text, origin);
  ExperimentConfig cfg;

  {
    const RawEntry* e = raw.find("experiment", "dim");
    if (!e)
      throw ConfigurationError(origin +
                               ": missing required field [experiment] dim");
    cfg.dim = static_cast<int>(parse_long(raw, *e));
    if (cfg.dim != 2 && cfg.dim != 4)
      raw.fail(e->line, "[experiment] dim must be 2 or 4");
  }

  {
    const RawEntry* e = raw.find("experiment", "n_max");
    if (!e)
      throw ConfigurationError(origin +
                               ": missing required field [experiment] n_max");
    cfg.n_max = parse_long(raw, *e);
  }
  {
    const RawEntry* e = raw.find("experiment", "replicas");
    if (!e)
      throw ConfigurationError(
          origin + ": missing required field [experiment] replicas");
    cfg.replicas = static_cast<int>(parse_long(raw, *e));
  }
  {
    const RawEntry* e = raw.find("experiment", "seed");
    if (!e)
      throw ConfigurationError(origin +
                               ": missing required field [experiment] seed");
    cfg.seed = static_cast<std::uint64_t>(parse_long(raw, *e));
  }
  {
    const std::string name = raw.require("experiment", "estimator");
    const auto kind = estimator_kind_from_name(name);
    if (!kind)
      throw ConfigurationError(origin + ": unknown estimator '" + name + "'");
    cfg.estimator = *kind;
  }
  if (const RawEntry* e = raw.find("experiment", "workers"))
    cfg.workers = static_cast<int>(parse_long(raw, *e));

  // Truth source.
  {
    const RawEntry* source = raw.find("truth", "source");
    if (!source)
      throw ConfigurationError(origin +
                               ": missing required field [truth] source");
    const std::string name = source->value;
    if (auto kind = prior_kind_from_name(name)) {
      cfg.truth.kind = TruthSource::Kind::prior;
      cfg.truth.prior = PriorSpec{*kind, cfg.dim};
    } else if (name == "fixed_bloch") {
      const RawEntry* bloch = raw.find("truth", "bloch");
      if (!bloch)
        throw ConfigurationError(origin +
                                 ": missing required field [truth] bloch");
      if (cfg.dim != 2)
        raw.fail(bloch->line, "fixed_bloch requires dim = 2");
      const std::vector<double> v = parse_doubles(raw, *bloch);
      if (v.size() != 3) raw.fail(bloch->line, "bloch needs 3 components");
      try {
        cfg.truth.kind = TruthSource::Kind::fixed;
        cfg.truth.fixed = density_from_bloch({v[0], v[1], v[2]});
      } catch (const std::exception& err) {
        raw.fail(bloch->line, err.what());
      }
    } else if (name == "fixed_matrix") {
      const RawEntry* mat = raw.find("truth", "matrix");
      if (!mat)
        throw ConfigurationError(origin +
                                 ": missing required field [truth] matrix");
      const std::vector<double> v = parse_doubles(raw, *mat);
      const size_t expected = 2u * static_cast<size_t>(cfg.dim * cfg.dim);
      if (v.size() != expected)
        raw.fail(mat->line, "matrix needs " + std::to_string(expected) +
                                " numbers (row-major re im pairs)");
      Matrix m(cfg.dim, cfg.dim);
      size_t k = 0;
      for (int i = 0; i < cfg.dim; ++i)
        for (int j = 0; j < cfg.dim; ++j) {
          m(i, j) = Complex(v[k], v[k + 1]);
          k += 2;
        }
      try {
        cfg.truth.kind = TruthSource::Kind::fixed;
        cfg.truth.fixed = DensityMatrix::validated(std::move(m));
      } catch (const std::exception& err) {
        raw.fail(mat->line, err.what());
      }
    } else {
      raw.fail(source->line, "unknown truth source '" + name + "'");
    }
  }

  // Particle-filter prior: explicit, else the truth prior, else Bures.
  cfg.smc_prior = PriorSpec{PriorKind::bures_uniform, cfg.dim};
  if (cfg.truth.kind == TruthSource::Kind::prior)
    cfg.smc_prior.kind = cfg.truth.prior.kind;
  if (const RawEntry* e = raw.find("prior", "kind")) {
    const auto kind = prior_kind_from_name(e->value);
    if (!kind) raw.fail(e->line, "unknown prior kind '" + e->value + "'");
    cfg.smc_prior.kind = *kind;
  }

  // Strategy.
  {
    const RawEntry* e = raw.find("strategy", "kind");
    if (!e)
      throw ConfigurationError(origin +
                               ": missing required field [strategy] kind");
    const auto kind = strategy_kind_from_name(e->value);
    if (!kind) raw.fail(e->line, "unknown strategy kind '" + e->value + "'");
    cfg.strategy.kind = *kind;
  }
  if (const RawEntry* e = raw.find("strategy", "cycle"))
    cfg.strategy.cycle = e->value;
  if (const RawEntry* e = raw.find("strategy", "candidates"))
    cfg.strategy.candidate_count = static_cast<int>(parse_long(raw, *e));
  if (const RawEntry* e = raw.find("strategy", "restriction")) {
    if (e->value == "factorized")
      cfg.strategy.restriction = CandidateRestriction::factorized;
    else if (e->value == "unconstrained")
      cfg.strategy.restriction = CandidateRestriction::unconstrained;
    else
      raw.fail(e->line, "restriction must be factorized or unconstrained");
  }
  if (const RawEntry* e = raw.find("strategy", "n0_rule")) {
    if (e->value == "bagan")
      cfg.strategy.n0_rule = TwoStepVariant::bagan;
    else if (e->value == "worst_case")
      cfg.strategy.n0_rule = TwoStepVariant::worst_case;
    else
      raw.fail(e->line, "n0_rule must be bagan or worst_case");
  }
  if (const RawEntry* e = raw.find("strategy", "shots_per_eval"))
    cfg.strategy.shots_per_eval = static_cast<int>(parse_long(raw, *e));
  if (const RawEntry* e = raw.find("strategy", "jitter_sigma"))
    cfg.jitter_sigma = parse_double(raw, *e);

  // Particle filter.
  if (const RawEntry* e = raw.find("particles", "count"))
    cfg.n_particles = static_cast<int>(parse_long(raw, *e));
  if (const RawEntry* e = raw.find("particles", "ess_threshold"))
    cfg.smc_policy.ess_fraction = parse_double(raw, *e);
  if (const RawEntry* e = raw.find("particles", "resampler")) {
    if (e->value == "liu_west")
      cfg.smc_policy.method = ResampleMethod::liu_west;
    else if (e->value == "metropolis_hastings")
      cfg.smc_policy.method = ResampleMethod::metropolis_hastings;
    else
      raw.fail(e->line, "unknown resampler '" + e->value + "'");
  }
  if (const RawEntry* e = raw.find("particles", "liu_west_a"))
    cfg.smc_policy.params.liu_west_a = parse_double(raw, *e);
  if (const RawEntry* e = raw.find("particles", "mh_steps"))
    cfg.smc_policy.params.mh_steps = static_cast<int>(parse_long(raw, *e));
  if (const RawEntry* e = raw.find("particles", "mh_step_scale"))
    cfg.smc_policy.params.mh_step_scale = parse_double(raw, *e);

  // Checkpoints.
  {
    const RawEntry* list = raw.find("experiment", "checkpoint_list");
    const RawEntry* count = raw.find("experiment", "checkpoint_count");
    if (list && count)
      raw.fail(list->line,
               "give either checkpoint_list or checkpoint_count, not both");
    if (list) {
      for (double v : parse_doubles(raw, *list))
        cfg.checkpoints.push_back(static_cast<long>(v));
    } else {
      const int n = count ? static_cast<int>(parse_long(raw, *count)) : 20;
      if (n < 1) raw.fail(count->line, "checkpoint_count must be >= 1");
      cfg.checkpoints = log_spaced_checkpoints(std::max<long>(cfg.n_max, 1), n);
    }
  }

  raw.check_all_used();
  try {
    validate_config(cfg);
  } catch (const std::exception& err) {
    throw ConfigurationError(origin + ": " + err.what());
  }

  ParsedConfig parsed;
  parsed.experiment = std::move(cfg);
  parsed.canonical = canonicalize(parsed.experiment);
  parsed.hash = fnv1a_hex(canonical_config_string(parsed.canonical));
  return parsed;
}

ParsedConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

void override_seed(ParsedConfig& cfg, std::uint64_t seed) {
  cfg.experiment.seed = seed;
  cfg.canonical = canonicalize(cfg.experiment);
  cfg.hash = fnv1a_hex(canonical_config_string(cfg.canonical));
}

void override_workers(ParsedConfig& cfg, int workers) {
  if (workers < 1) throw ConfigurationError("workers must be >= 1");
  cfg.experiment.workers = workers;
}

namespace {

OrderedJson config_json(const ParsedConfig& cfg) {
  OrderedJson sections = OrderedJson::object();
  for (const auto& [key, value] : cfg.canonical) {
    const auto dot = key.find('.');
    sections[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return sections;
}

OrderedJson fit_json(const ScalingFit& fit) {
  OrderedJson j;
  j["exponent"] = fit.exponent;
  j["prefactor"] = fit.prefactor;
  j["window"] = {fit.n_lo, fit.n_hi};
  j["points"] = fit.points;
  j["residual_rms"] = fit.residual_rms;
  return j;
}

}  // namespace

RunOutputs run_simulation_files(const ParsedConfig& cfg,
                                const std::string& out_dir, bool with_timing) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string started = iso8601_utc_now();

  const EnsembleResult result = run_ensemble(cfg.experiment);

  RunOutputs outputs;
  outputs.csv_path = (fs::path(out_dir) / "results.csv").string();
  outputs.summary_path = (fs::path(out_dir) / "summary.json").string();
  outputs.manifest_path = (fs::path(out_dir) / "manifest.json").string();

  {
    std::ofstream os(outputs.csv_path);
    if (!os) throw std::runtime_error("cannot write " + outputs.csv_path);
    write_trials_csv(os, result.trials, with_timing);
  }

  OrderedJson summary;
  summary["config"] = config_json(cfg);
  summary["config_hash"] = cfg.hash;
  summary["replicas"] = cfg.experiment.replicas;
  OrderedJson curve = OrderedJson::array();
  std::vector<std::pair<long, double>> mean_curve;
  for (const EnsembleCurvePoint& p : result.curve) {
    OrderedJson row;
    row["n"] = p.n;
    row["mean_infidelity"] = p.mean_infidelity;
    row["se_infidelity"] = p.se_infidelity;
    row["median_infidelity"] = p.median_infidelity;
    row["mean_bures_sq"] = p.mean_bures_sq;
    row["median_bures_sq"] = p.median_bures_sq;
    curve.push_back(row);
    mean_curve.emplace_back(p.n, p.mean_infidelity);
  }
  summary["curve"] = curve;

  // Default fit window: the last decade of N.
  const long n_max = cfg.experiment.n_max;
  try {
    const ScalingFit fit =
        fit_scaling(mean_curve, std::max<long>(1, n_max / 10), n_max);
    summary["fit"] = fit_json(fit);
  } catch (const std::exception&) {
    summary["fit"] = nullptr;
  }

  const BoundCurves bounds =
      bound_curves(cfg.experiment.dim, cfg.experiment.checkpoints);
  OrderedJson bounds_json;
  bounds_json["n"] = bounds.n;
  bounds_json["gill_massar"] = bounds.gill_massar;
  if (!bounds.massar_popescu.empty()) {
    bounds_json["massar_popescu"] = bounds.massar_popescu;
    bounds_json["collective_mixed"] = bounds.collective_mixed;
  }
  summary["bounds"] = bounds_json;
  if (!result.curve.empty()) {
    const EnsembleCurvePoint& last = result.curve.back();
    summary["gill_massar_ratio_at_n_max"] =
        last.mean_infidelity /
        gill_massar_infidelity(cfg.experiment.dim,
                               static_cast<double>(last.n));
  }

  {
    std::ofstream os(outputs.summary_path);
    if (!os) throw std::runtime_error("cannot write " + outputs.summary_path);
    os << summary.dump(2) << '\n';
  }

  OrderedJson manifest;
  manifest["config_hash"] = cfg.hash;
  manifest["master_seed"] = cfg.experiment.seed;
  manifest["code_version"] = kVersion;
  manifest["started_utc"] = started;
  manifest["finished_utc"] = iso8601_utc_now();
  manifest["wall_seconds"] = result.wall_seconds;
  manifest["outputs"] = {{"csv", outputs.csv_path},
                         {"summary", outputs.summary_path}};
  {
    std::ofstream os(outputs.manifest_path);
    if (!os) throw std::runtime_error("cannot write " + outputs.manifest_path);
    os << manifest.dump(2) << '\n';
  }
  return outputs;
}

std::string fit_report_json(const std::string& csv_path, long n_lo,
                            long n_hi) {
  std::ifstream is(csv_path);
  if (!is) throw DomainError("cannot open " + csv_path);
  const std::vector<TrialResult> trials = read_trials_csv(is);
  const ScalingFit fit =
      fit_scaling(mean_infidelity_curve(trials), n_lo, n_hi);
  OrderedJson j = fit_json(fit);
  j["source"] = csv_path;
  return j.dump(2);
}

}  // namespace qtomo

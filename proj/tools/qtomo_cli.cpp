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

// Command-line front end; talks to the simulator exclusively through the
// C API in qtomo.h. Exit codes: 0 success, 1 runtime failure, 2 invalid
// arguments/config.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qtomo.h"

namespace {

int exit_code_for(qtomo_status status) {
  switch (status) {
    case QTOMO_OK:
      return 0;
    case QTOMO_ERR_RUNTIME:
      return 1;
    default:
      return 2;
  }
}

int report(qtomo_status status) {
  if (status == QTOMO_OK) return 0;
  std::fprintf(stderr, "error: %s\n", qtomo_last_error());
  return exit_code_for(status);
}

bool parse_window(const std::string& window, long& lo, long& hi) {
  const auto colon = window.find(':');
  if (colon == std::string::npos) return false;
  try {
    size_t pos = 0;
    lo = std::stol(window.substr(0, colon), &pos);
    if (pos != colon) return false;
    const std::string rest = window.substr(colon + 1);
    hi = std::stol(rest, &pos);
    return pos == rest.size();
  } catch (...) {
    return false;
  }
}

int default_workers() {
  if (const char* env = std::getenv("QTOMO_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 0;  // keep the config value
}

std::vector<long> log_grid(long n_min, long n_max, int points) {
  std::vector<long> out;
  if (points <= 1 || n_min >= n_max) {
    out.push_back(n_min);
    return out;
  }
  const double lo = std::log10(static_cast<double>(n_min));
  const double hi = std::log10(static_cast<double>(n_max));
  for (int k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) / (points - 1);
    const long n = std::llround(std::pow(10.0, lo + t * (hi - lo)));
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qtomo - quantum state tomography simulation toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Run the experiment described by a config file");
  std::string config_path, out_dir = "out";
  long long seed_override = -1;
  int workers = default_workers();
  bool timing = false;
  simulate->add_option("--config", config_path, "experiment config file")
      ->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--seed", seed_override, "master seed override");
  simulate->add_option("--workers", workers,
                       "parallel replica workers (default: config or "
                       "QTOMO_WORKERS)");
  simulate->add_flag("--timing", timing,
                     "fill the CSV seconds column with wall time (makes "
                     "reruns non-identical)");

  // bounds
  auto* bounds = app.add_subcommand(
      "bounds", "Print theoretical infidelity bound curves");
  int bounds_dim = 2;
  long n_min = 10, n_max_opt = 100000;
  int points = 13;
  bounds->add_option("--dim", bounds_dim, "Hilbert space dimension (2 or 4)");
  bounds->add_option("--n-min", n_min, "smallest sample size");
  bounds->add_option("--n-max", n_max_opt, "largest sample size");
  bounds->add_option("--points", points, "log-spaced grid size");

  // fit
  auto* fit = app.add_subcommand(
      "fit", "Fit a power law to the mean infidelity of a results CSV");
  std::string csv_path, window;
  fit->add_option("--csv", csv_path, "results.csv from simulate")->required();
  fit->add_option("--window", window, "fit window as N_LO:N_HI")->required();

  // sample-prior
  auto* sample = app.add_subcommand(
      "sample-prior", "Draw random states and write a particle snapshot");
  std::string kind = "bures_uniform", states_path;
  int sample_dim = 2;
  long count = 1000;
  long long sample_seed = 0;
  sample->add_option("--kind", kind,
                     "bures_uniform | hs_uniform | haar_pure");
  sample->add_option("--dim", sample_dim, "Hilbert space dimension (2 or 4)");
  sample->add_option("--count", count, "number of states");
  sample->add_option("--seed", sample_seed, "random seed");
  sample->add_option("--out", states_path, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  if (simulate->parsed()) {
    char* manifest = nullptr;
    const qtomo_status status =
        qtomo_run_simulation(config_path.c_str(), out_dir.c_str(),
                             seed_override, workers, timing ? 1 : 0,
                             &manifest);
    if (status == QTOMO_OK && manifest) {
      std::printf("%s", manifest);
      qtomo_string_free(manifest);
    }
    return report(status);
  }

  if (bounds->parsed()) {
    if (n_min < 1 || n_max_opt < n_min) {
      std::fprintf(stderr, "error: need 1 <= n-min <= n-max\n");
      return 2;
    }
    const std::vector<long> grid = log_grid(n_min, n_max_opt, points);
    const int c = static_cast<int>(grid.size());
    std::vector<double> gm(grid.size()), mp(grid.size()), cm(grid.size());
    const bool qubit = bounds_dim == 2;
    const qtomo_status status =
        qtomo_bounds(bounds_dim, grid.data(), c, gm.data(),
                     qubit ? mp.data() : nullptr, qubit ? cm.data() : nullptr);
    if (status != QTOMO_OK) return report(status);
    if (qubit) {
      std::printf("N,gill_massar,massar_popescu,collective_mixed\n");
      for (int k = 0; k < c; ++k)
        std::printf("%ld,%.10g,%.10g,%.10g\n", grid[static_cast<size_t>(k)],
                    gm[static_cast<size_t>(k)], mp[static_cast<size_t>(k)],
                    cm[static_cast<size_t>(k)]);
    } else {
      std::printf("N,gill_massar\n");
      for (int k = 0; k < c; ++k)
        std::printf("%ld,%.10g\n", grid[static_cast<size_t>(k)],
                    gm[static_cast<size_t>(k)]);
    }
    return 0;
  }

  if (fit->parsed()) {
    long lo = 0, hi = 0;
    if (!parse_window(window, lo, hi)) {
      std::fprintf(stderr, "error: --window must look like 1000:30000\n");
      return 2;
    }
    char* json = nullptr;
    const qtomo_status status = qtomo_fit_csv(csv_path.c_str(), lo, hi, &json);
    if (status == QTOMO_OK && json) {
      std::printf("%s\n", json);
      qtomo_string_free(json);
    }
    return report(status);
  }

  if (sample->parsed()) {
    const qtomo_status status = qtomo_sample_prior(
        kind.c_str(), sample_dim, count,
        static_cast<unsigned long long>(sample_seed), states_path.c_str());
    return report(status);
  }

  return 2;
}

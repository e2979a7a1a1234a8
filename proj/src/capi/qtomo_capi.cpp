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

#include "qtomo.h"

#include <cstring>
#include <fstream>
#include <string>

#include "core/config.hpp"
#include "core/version.hpp"

using namespace qtomo;

struct qtomo_state {
  DensityMatrix value;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

/// Runs the body, translating exceptions into status codes + message.
template <typename Fn>
qtomo_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return QTOMO_OK;
  } catch (const DimensionError& err) {
    set_error(err.what());
    return QTOMO_ERR_DIMENSION;
  } catch (const ConfigurationError& err) {
    set_error(err.what());
    return QTOMO_ERR_CONFIG;
  } catch (const DomainError& err) {
    set_error(err.what());
    return QTOMO_ERR_DOMAIN;
  } catch (const std::invalid_argument& err) {
    set_error(err.what());
    return QTOMO_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& err) {
    set_error(err.what());
    return QTOMO_ERR_RUNTIME;
  }
}

qtomo_status require_args(bool ok) {
  if (ok) return QTOMO_OK;
  set_error("null argument");
  return QTOMO_ERR_INVALID_ARGUMENT;
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

using Metric = double (*)(const DensityMatrix&, const DensityMatrix&);

qtomo_status metric_call(const qtomo_state* a, const qtomo_state* b,
                         double* out, Metric metric) {
  if (require_args(a && b && out) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = metric(a->value, b->value); });
}

}  // namespace

extern "C" {

const char* qtomo_version(void) { return kVersion; }

const char* qtomo_last_error(void) { return g_last_error.c_str(); }

void qtomo_string_free(char* s) { std::free(s); }

qtomo_status qtomo_state_create(int dim, const double* elements,
                                qtomo_state** out) {
  if (require_args(elements && out) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    if (dim != 2 && dim != 4) throw DimensionError("dim must be 2 or 4");
    Matrix m(dim, dim);
    size_t k = 0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        m(i, j) = Complex(elements[k], elements[k + 1]);
        k += 2;
      }
    *out = new qtomo_state{DensityMatrix::validated(std::move(m))};
  });
}

qtomo_status qtomo_state_from_bloch(double s1, double s2, double s3,
                                    qtomo_state** out) {
  if (require_args(out) != QTOMO_OK) return QTOMO_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  return guarded(
      [&] { *out = new qtomo_state{density_from_bloch({s1, s2, s3})}; });
}

void qtomo_state_free(qtomo_state* state) { delete state; }

qtomo_status qtomo_state_dim(const qtomo_state* state, int* out) {
  if (require_args(state && out) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  *out = state->value.dim();
  g_last_error.clear();
  return QTOMO_OK;
}

qtomo_status qtomo_state_elements(const qtomo_state* state, double* out) {
  if (require_args(state && out) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  const Matrix& m = state->value.mat();
  size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out[k] = m(i, j).real();
      out[k + 1] = m(i, j).imag();
      k += 2;
    }
  g_last_error.clear();
  return QTOMO_OK;
}

qtomo_status qtomo_state_purity(const qtomo_state* state, double* out) {
  if (require_args(state && out) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = purity(state->value); });
}

qtomo_status qtomo_fidelity(const qtomo_state* a, const qtomo_state* b,
                            double* out) {
  return metric_call(a, b, out, fidelity);
}

qtomo_status qtomo_bures_distance(const qtomo_state* a, const qtomo_state* b,
                                  double* out) {
  return metric_call(a, b, out, bures_distance);
}

qtomo_status qtomo_bures_angle(const qtomo_state* a, const qtomo_state* b,
                               double* out) {
  return metric_call(a, b, out, bures_angle);
}

qtomo_status qtomo_trace_distance(const qtomo_state* a, const qtomo_state* b,
                                  double* out) {
  return metric_call(a, b, out, trace_distance);
}

qtomo_status qtomo_hs_distance(const qtomo_state* a, const qtomo_state* b,
                               double* out) {
  return metric_call(a, b, out, hs_distance);
}

qtomo_status qtomo_relative_entropy(const qtomo_state* a,
                                    const qtomo_state* b, double* out) {
  return metric_call(a, b, out, relative_entropy);
}

qtomo_status qtomo_sample_prior(const char* kind, int dim, long count,
                                unsigned long long seed, const char* path) {
  if (require_args(kind && path) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto prior_kind = prior_kind_from_name(kind);
    if (!prior_kind)
      throw std::invalid_argument(std::string("unknown prior kind '") + kind +
                                  "'");
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    const PriorSpec spec{*prior_kind, dim};
    Rng rng(seed);
    std::vector<DensityMatrix> states;
    states.reserve(static_cast<size_t>(count));
    for (long k = 0; k < count; ++k) states.push_back(sample_prior(spec, rng));
    const RealVector weights = RealVector::Constant(
        static_cast<Eigen::Index>(count), 1.0 / static_cast<double>(count));
    std::ofstream os(path);
    if (!os) throw std::runtime_error(std::string("cannot write ") + path);
    save_particles(os, states, weights);
  });
}

qtomo_status qtomo_bounds(int dim, const long* n_values, int count,
                          double* gill_massar, double* massar_popescu,
                          double* collective_mixed) {
  if (require_args(n_values && gill_massar && count > 0) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    if (dim == 4 && (massar_popescu || collective_mixed))
      throw DimensionError(
          "massar_popescu/collective_mixed are qubit-only bounds");
    const std::vector<long> ns(n_values, n_values + count);
    const BoundCurves curves = bound_curves(dim, ns);
    for (int k = 0; k < count; ++k) {
      gill_massar[k] = curves.gill_massar[static_cast<size_t>(k)];
      if (massar_popescu)
        massar_popescu[k] = curves.massar_popescu[static_cast<size_t>(k)];
      if (collective_mixed)
        collective_mixed[k] = curves.collective_mixed[static_cast<size_t>(k)];
    }
  });
}

qtomo_status qtomo_fit_csv(const char* csv_path, long n_lo, long n_hi,
                           char** json_report) {
  if (require_args(csv_path && json_report) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  *json_report = nullptr;
  return guarded([&] {
    const std::string report = fit_report_json(csv_path, n_lo, n_hi);
    *json_report = duplicate(report);
    if (*json_report == nullptr) throw std::runtime_error("out of memory");
  });
}

qtomo_status qtomo_run_simulation(const char* config_path, const char* out_dir,
                                  long long seed_override, int workers,
                                  int emit_timing, char** manifest_json) {
  if (require_args(config_path && out_dir) != QTOMO_OK)
    return QTOMO_ERR_INVALID_ARGUMENT;
  if (manifest_json) *manifest_json = nullptr;
  return guarded([&] {
    ParsedConfig cfg = parse_config_file(config_path);
    if (seed_override >= 0)
      override_seed(cfg, static_cast<std::uint64_t>(seed_override));
    if (workers >= 1) override_workers(cfg, workers);
    const RunOutputs outputs =
        run_simulation_files(cfg, out_dir, emit_timing != 0);
    if (manifest_json) {
      std::ifstream is(outputs.manifest_path);
      std::string text((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
      *manifest_json = duplicate(text);
      if (*manifest_json == nullptr) throw std::runtime_error("out of memory");
    }
  });
}

}  // extern "C"

// Copyright 2026 The Wideflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wideflow/wideflow.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "activations.hpp"
#include "conjecture.hpp"
#include "covariance_flow.hpp"
#include "error.hpp"
#include "gauss_hermite.hpp"
#include "simulator.hpp"

struct wf_activation {
  wideflow::act::ActivationSpec spec;
};

struct wf_cmap {
  wideflow::flow::CovarianceMap map;
};

namespace {

namespace act = wideflow::act;
namespace flow = wideflow::flow;
namespace sim = wideflow::sim;
namespace conj = wideflow::conj;
using wideflow::Error;
using wideflow::ErrorKind;

#ifndef WIDEFLOW_VERSION_STRING
#define WIDEFLOW_VERSION_STRING "0.0.0"
#endif

thread_local std::string last_error;

wf_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return WF_ERR_VALIDATION;
    case ErrorKind::kInconclusive:
      return WF_ERR_INCONCLUSIVE;
    case ErrorKind::kNonFinite:
      return WF_ERR_NON_FINITE;
    case ErrorKind::kIo:
      return WF_ERR_IO;
  }
  return WF_ERR_INTERNAL;
}

template <class Body>
wf_status guarded(Body&& body) {
  last_error.clear();
  try {
    body();
    return WF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    last_error = std::string("malformed JSON: ") + e.what();
    return WF_ERR_VALIDATION;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return WF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return WF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return WF_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) wideflow::fail_validation(std::string(what) + " must not be null");
}

char* copy_out(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse(const char* text, const char* what) {
  require(text, what);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    wideflow::fail_validation(std::string(what) + " is not valid JSON: " + e.what());
  }
}

act::ActivationSpec activation_from_text(const char* text) {
  require(text, "activation");
  const std::string s(text);
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && s[first] == '{') {
    return act::activation_from_json(parse(text, "activation"));
  }
  return act::by_name(s);
}

struct SimulationRequest {
  sim::NetworkConfig config;
  sim::Dataset dataset;
  bool kurtosis = false;
};

SimulationRequest read_request(const char* request_json, std::uint64_t seed) {
  const auto j = parse(request_json, "simulation request");
  if (!j.is_object() || !j.contains("network") || !j.contains("dataset")) {
    wideflow::fail_validation("simulation request needs \"network\" and \"dataset\" objects");
  }
  SimulationRequest r;
  r.config = sim::config_from_json(j.at("network"));
  r.config.seed = seed;
  r.dataset = sim::dataset_from_json(j.at("dataset"));
  r.kurtosis = j.value("kurtosis", false);
  return r;
}

}  // namespace

extern "C" {

const char* wf_version(void) { return WIDEFLOW_VERSION_STRING; }

const char* wf_last_error(void) { return last_error.c_str(); }

void wf_string_free(char* s) { std::free(s); }

wf_status wf_registry_names(char** json_out) {
  return guarded([&] {
    require(json_out, "json_out");
    *json_out = copy_out(nlohmann::json(act::registry_names()).dump());
  });
}

wf_status wf_activation_create(const char* spec, wf_activation** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    *out = new wf_activation{activation_from_text(spec)};
  });
}

void wf_activation_destroy(wf_activation* a) { delete a; }

wf_status wf_activation_zero_mean(const wf_activation* a, wf_activation** out) {
  return guarded([&] {
    require(a, "activation");
    require(out, "out");
    *out = nullptr;
    *out = new wf_activation{act::make_zero_mean(a->spec)};
  });
}

wf_status wf_activation_json(const wf_activation* a, char** json_out) {
  return guarded([&] {
    require(a, "activation");
    require(json_out, "json_out");
    *json_out = copy_out(act::to_json(a->spec).dump());
  });
}

wf_status wf_activation_eval(const wf_activation* a, double z, double* out) {
  return guarded([&] {
    require(a, "activation");
    require(out, "out");
    *out = a->spec(z);
  });
}

wf_status wf_activation_mean(const wf_activation* a, double* out) {
  return guarded([&] {
    require(a, "activation");
    require(out, "out");
    *out = act::gaussian_mean(a->spec);
  });
}

wf_status wf_activation_second_moment(const wf_activation* a, double* out) {
  return guarded([&] {
    require(a, "activation");
    require(out, "out");
    *out = act::gaussian_second_moment(a->spec);
  });
}

wf_status wf_decompose(const wf_activation* a, int degree, char** json_out) {
  return guarded([&] {
    require(a, "activation");
    require(json_out, "json_out");
    const auto series =
        act::hermite_coefficients(a->spec, degree > 0 ? degree : act::kDefaultTruncation);
    nlohmann::json j = act::to_json(series);
    j["activation"] = act::to_json(a->spec);
    j["mean"] = act::gaussian_mean(a->spec);
    j["classification"] = act::to_string(act::classify(a->spec, series));
    *json_out = copy_out(j.dump(2));
  });
}

wf_status wf_mehler_expectation(int n, int m, double k, int order, double* out) {
  return guarded([&] {
    require(out, "out");
    if (n < 0 || m < 0) wideflow::fail_validation("Hermite degrees must be non-negative");
    const auto rule = wideflow::gauss::make_rule(order > 0 ? order
                                                           : wideflow::gauss::kDefaultOrder);
    *out = wideflow::gauss::expect_2d_correlated(
        [n, m](double x, double y) {
          return wideflow::gauss::hermite_eval(n, x) * wideflow::gauss::hermite_eval(m, y);
        },
        wideflow::gauss::CorrelationCoefficient(k), rule);
  });
}

wf_status wf_cmap_create(const wf_activation* a, wf_cmap** out) {
  return guarded([&] {
    require(a, "activation");
    require(out, "out");
    *out = nullptr;
    *out = new wf_cmap{flow::CovarianceMap(a->spec)};
  });
}

void wf_cmap_destroy(wf_cmap* map) { delete map; }

wf_status wf_cmap_eval(const wf_cmap* map, double k, double* out) {
  return guarded([&] {
    require(map, "map");
    require(out, "out");
    *out = map->map(k);
  });
}

wf_status wf_cmap_second_moment(const wf_cmap* map, double* out) {
  return guarded([&] {
    require(map, "map");
    require(out, "out");
    *out = map->map.second_moment();
  });
}

wf_status wf_flow_report(const wf_activation* a, int degree, char** json_out) {
  return guarded([&] {
    require(a, "activation");
    require(json_out, "json_out");
    const flow::CovarianceMap map(a->spec);
    const auto series =
        act::hermite_coefficients(a->spec, degree > 0 ? degree : act::kDefaultTruncation);
    *json_out = copy_out(flow::to_json(flow::find_fixed_point(map, series)).dump(2));
  });
}

wf_status wf_flow_trajectory(const wf_activation* a, double k0, int depth, char** csv_out) {
  return guarded([&] {
    require(a, "activation");
    require(csv_out, "csv_out");
    const flow::CovarianceMap map(a->spec);
    *csv_out = copy_out(flow::trajectory_csv(flow::iterate_flow(k0, map, depth)));
  });
}

wf_status wf_figure1_curve(const wf_activation* a, size_t points, char** csv_out) {
  return guarded([&] {
    require(a, "activation");
    require(csv_out, "csv_out");
    if (points < 2) wideflow::fail_validation("figure grid needs at least 2 points");
    const flow::CovarianceMap map(a->spec);
    const auto grid = flow::linear_grid(-1.0, 1.0, points);
    *csv_out = copy_out(flow::curve_csv(flow::figure1_curve(map, grid)));
  });
}

wf_status wf_simulate(const char* request_json, uint64_t seed, size_t samples,
                      unsigned workers, char** json_out, char** csv_out, double* max_abs_z) {
  return guarded([&] {
    require(json_out, "json_out");
    require(csv_out, "csv_out");
    const auto req = read_request(request_json, seed);
    const auto cov = sim::estimate_covariance(req.config, req.dataset, samples, workers);
    nlohmann::json j;
    j["network"] = sim::to_json(req.config);
    j["dataset"] = sim::to_json(req.dataset);
    j["samples"] = samples;
    j["covariance"] = sim::to_json(cov);
    if (req.kurtosis) {
      auto k = nlohmann::json::array();
      for (const auto& est :
           sim::normality_diagnostics(req.config, req.dataset, samples, workers)) {
        k.push_back(sim::to_json(est));
      }
      j["kurtosis"] = std::move(k);
    }
    std::string csv = sim::covariance_csv(cov);
    std::string json = j.dump(2);
    *json_out = copy_out(json);
    *csv_out = copy_out(csv);
    if (max_abs_z != nullptr) *max_abs_z = cov.max_abs_z();
  });
}

wf_status wf_four_point_scaling(const char* request_json, uint64_t seed, int wide_width,
                                size_t samples, unsigned workers, char** json_out) {
  return guarded([&] {
    require(json_out, "json_out");
    const auto req = read_request(request_json, seed);
    const auto s =
        sim::four_point_scaling(req.config, wide_width, req.dataset.row(0), samples, workers);
    nlohmann::json j = {
        {"network", sim::to_json(req.config)},
        {"narrow", sim::to_json(s.narrow)},
        {"wide", sim::to_json(s.wide)},
        {"ratio", s.ratio},
        {"expected_ratio", static_cast<double>(req.config.width) / wide_width},
        {"discrepancy", s.discrepancy},
        {"band", s.band},
        {"consistent", s.consistent},
        {"inconclusive", s.inconclusive},
    };
    *json_out = copy_out(j.dump(2));
  });
}

wf_status wf_conjecture(int n, int m, size_t trials, double depth_constant, uint64_t seed,
                        const char* mode, const char* activation, unsigned workers,
                        char** json_out, int* underpowered) {
  return guarded([&] {
    require(json_out, "json_out");
    require(mode, "mode");
    const auto rarity_mode = conj::rarity_mode_from_string(mode);
    const auto config =
        conj::conjecture_network(n, depth_constant, activation_from_text(activation), seed);
    const auto dataset = conj::dataset_for(n, m, seed);
    const auto report = conj::estimate_rarity(config, dataset, trials, rarity_mode, workers);
    nlohmann::json j = conj::to_json(report);
    j["depth_constant"] = depth_constant;
    j["full_cube"] = dataset.full_cube;
    j["summary"] = conj::summary_line(report);
    *json_out = copy_out(j.dump(2));
    if (underpowered != nullptr) *underpowered = report.underpowered ? 1 : 0;
  });
}

}  // extern "C"

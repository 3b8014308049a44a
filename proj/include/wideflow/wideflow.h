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

#ifndef WIDEFLOW_WIDEFLOW_H_
#define WIDEFLOW_WIDEFLOW_H_

/* C interface to the wideflow library.
 *
 * Functions return a wf_status. On failure wf_last_error() describes the
 * problem for the calling thread. Strings returned through char** are owned
 * by the caller and released with wf_string_free. Handles are opaque. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(WIDEFLOW_BUILDING)
#define WF_API __declspec(dllexport)
#else
#define WF_API __declspec(dllimport)
#endif
#else
#define WF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wf_status {
  WF_OK = 0,
  WF_ERR_VALIDATION = 1,
  WF_ERR_INCONCLUSIVE = 2,
  WF_ERR_NON_FINITE = 3,
  WF_ERR_IO = 4,
  WF_ERR_INTERNAL = 5
} wf_status;

typedef struct wf_activation wf_activation;
typedef struct wf_cmap wf_cmap;

WF_API const char* wf_version(void);
/* Message for the last failed call on this thread; empty if none. */
WF_API const char* wf_last_error(void);
WF_API void wf_string_free(char* s);

/* JSON array of registry names. */
WF_API wf_status wf_registry_names(char** json_out);

/* `spec` is a registry name or a JSON activation object. */
WF_API wf_status wf_activation_create(const char* spec, wf_activation** out);
WF_API void wf_activation_destroy(wf_activation* a);
/* New handle for sigma - <sigma>. */
WF_API wf_status wf_activation_zero_mean(const wf_activation* a, wf_activation** out);
WF_API wf_status wf_activation_json(const wf_activation* a, char** json_out);
WF_API wf_status wf_activation_eval(const wf_activation* a, double z, double* out);
WF_API wf_status wf_activation_mean(const wf_activation* a, double* out);
WF_API wf_status wf_activation_second_moment(const wf_activation* a, double* out);

/* Hermite coefficients a_0..a_degree, moments and classification as JSON. */
WF_API wf_status wf_decompose(const wf_activation* a, int degree, char** json_out);

/* <He_n(z1) He_m(z2)> for unit Gaussians with correlation k, by quadrature
 * of the given order. */
WF_API wf_status wf_mehler_expectation(int n, int m, double k, int order, double* out);

WF_API wf_status wf_cmap_create(const wf_activation* a, wf_cmap** out);
WF_API void wf_cmap_destroy(wf_cmap* map);
WF_API wf_status wf_cmap_eval(const wf_cmap* map, double k, double* out);
WF_API wf_status wf_cmap_second_moment(const wf_cmap* map, double* out);

/* Fixed point, classification and (when decaying) the per-layer decay
 * factor. Series truncation `degree` <= 0 selects the default. */
WF_API wf_status wf_flow_report(const wf_activation* a, int degree, char** json_out);
/* CSV "layer,k" for `depth` applications of the map from k0 in (-1, 1). */
WF_API wf_status wf_flow_trajectory(const wf_activation* a, double k0, int depth,
                                   char** csv_out);
/* CSV "k_in,k_out,diagonal" on `points` >= 2 evenly spaced k in [-1, 1]. */
WF_API wf_status wf_figure1_curve(const wf_activation* a, size_t points, char** csv_out);

/* Monte Carlo covariance of a network. `request_json` holds "network"
 * (n0, width, depth, activation, optional hyperparams) and "dataset"
 * ("inputs" rows or "gram" with "n0"), optionally "kurtosis": true. Report
 * JSON and the per-entry CSV are returned; `max_abs_z` may be NULL. */
WF_API wf_status wf_simulate(const char* request_json, uint64_t seed, size_t samples,
                             unsigned workers, char** json_out, char** csv_out,
                             double* max_abs_z);

/* Connected four-point correlator at the network width and `wide_width`
 * for a single input, as JSON. `request_json` as for wf_simulate; the first
 * dataset row is used. */
WF_API wf_status wf_four_point_scaling(const char* request_json, uint64_t seed,
                                       int wide_width, size_t samples, unsigned workers,
                                       char** json_out);

/* Rarity of all-negative outputs. `mode` is "network" or "independent";
 * `activation` a registry name or JSON object. `underpowered` may be NULL. */
WF_API wf_status wf_conjecture(int n, int m, size_t trials, double depth_constant,
                               uint64_t seed, const char* mode, const char* activation,
                               unsigned workers, char** json_out, int* underpowered);

#ifdef __cplusplus
}
#endif

#endif /* WIDEFLOW_WIDEFLOW_H_ */

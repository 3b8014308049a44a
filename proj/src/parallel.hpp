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

#ifndef WIDEFLOW_PARALLEL_HPP_
#define WIDEFLOW_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wideflow {

/// Resolves a requested worker count: 0 means WIDEFLOW_WORKERS from the
/// environment, else hardware concurrency.
unsigned resolve_workers(unsigned requested);

/// Calls body(i) for i in [0, count) on up to `workers` threads. Work units
/// must write only to their own output slot; any reduction happens after
/// this returns, in index order, so results do not depend on `workers`.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(
                                                         std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Mean and standard error of the mean of per-draw values, accumulated in
/// index order.
struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;
};

template <class Get>
MeanAndError mean_and_error(std::size_t count, Get&& get) {
  CompensatedSum s;
  for (std::size_t i = 0; i < count; ++i) s.add(get(i));
  const double mean = s.value() / static_cast<double>(count);
  CompensatedSum ss;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = get(i) - mean;
    ss.add(d * d);
  }
  const double var = count > 1 ? ss.value() / static_cast<double>(count - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(count))};
}

}  // namespace wideflow

#endif  // WIDEFLOW_PARALLEL_HPP_

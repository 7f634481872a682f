// Copyright 2026 The rcsim Authors
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

#ifndef RCSIM_HISTORY_H_
#define RCSIM_HISTORY_H_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "rcsim/common.h"
#include "rcsim/resource_graph.h"

namespace rcsim {

struct UsageSample {
  int64_t invocation_id = 0;
  double peak_cpu = 0;  // vCPU
  Bytes peak_mem = 0;
  Seconds exec_time = 0;
  double mean_cpu_util = 0;

  friend bool operator==(const UsageSample&, const UsageSample&) = default;
};

struct WeightedPeak {
  Bytes peak_mem = 0;
  Seconds exec_time = 0;
  double weight = 0;
};

// Execution history of one component: a bounded window of samples with
// geometric recency weights, plus exponential moving averages that also
// remember samples already evicted from the window.
class ResourceProfile {
 public:
  static constexpr size_t kDefaultWindow = 1000;
  static constexpr double kDefaultAlpha = 0.5;
  static constexpr double kDefaultBeta = 0.98;

  explicit ResourceProfile(size_t window = kDefaultWindow, double alpha = kDefaultAlpha,
                           double beta = kDefaultBeta);

  // Throws kInvalidArgument on a sample violating its invariants.
  void Record(const UsageSample& s);

  // Samples in insertion order with weights proportional to beta^age,
  // normalized to sum to one. Throws kEmptyHistory.
  std::vector<WeightedPeak> WeightedPeaks() const;

  bool empty() const { return total_recorded_ == 0; }
  size_t size() const { return samples_.size(); }
  int64_t total_recorded() const { return total_recorded_; }
  const std::deque<UsageSample>& samples() const { return samples_; }
  size_t window() const { return window_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double ema_cpu() const { return ema_cpu_; }
  double ema_mem() const { return ema_mem_; }
  double ema_exec_time() const { return ema_exec_; }
  double ema_cpu_util() const { return ema_util_; }
  Bytes max_peak_mem() const;

  nlohmann::json ToJson() const;
  static ResourceProfile FromJson(const nlohmann::json& j);

  friend bool operator==(const ResourceProfile&, const ResourceProfile&) = default;

 private:
  size_t window_;
  double alpha_;
  double beta_;
  std::deque<UsageSample> samples_;
  int64_t total_recorded_ = 0;
  double ema_cpu_ = 0;
  double ema_mem_ = 0;
  double ema_exec_ = 0;
  double ema_util_ = 0;
};

// Value-returning form of ResourceProfile::Record.
ResourceProfile Record(ResourceProfile profile, const UsageSample& s);
std::vector<WeightedPeak> WeightedPeaks(const ResourceProfile& profile);

}  // namespace rcsim

#endif  // RCSIM_HISTORY_H_

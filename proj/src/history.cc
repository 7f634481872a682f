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

#include "rcsim/history.h"

#include <algorithm>
#include <cmath>

namespace rcsim {

ResourceProfile::ResourceProfile(size_t window, double alpha, double beta)
    : window_(window), alpha_(alpha), beta_(beta) {
  if (window_ == 0) throw Error(ErrorCode::kInvalidArgument, "profile window must be >= 1");
  if (!(alpha_ > 0 && alpha_ <= 1)) throw Error(ErrorCode::kInvalidArgument, "alpha must be in (0,1]");
  if (!(beta_ > 0 && beta_ <= 1)) throw Error(ErrorCode::kInvalidArgument, "beta must be in (0,1]");
}

void ResourceProfile::Record(const UsageSample& s) {
  if (s.peak_cpu < 0 || s.peak_mem < 0 || !(s.exec_time > 0) || s.mean_cpu_util < 0 ||
      s.mean_cpu_util > 1) {
    throw Error(ErrorCode::kInvalidArgument, "usage sample out of range");
  }
  const auto mem = static_cast<double>(s.peak_mem);
  if (total_recorded_ == 0) {
    ema_cpu_ = s.peak_cpu;
    ema_mem_ = mem;
    ema_exec_ = s.exec_time;
    ema_util_ = s.mean_cpu_util;
  } else {
    ema_cpu_ = alpha_ * s.peak_cpu + (1 - alpha_) * ema_cpu_;
    ema_mem_ = alpha_ * mem + (1 - alpha_) * ema_mem_;
    ema_exec_ = alpha_ * s.exec_time + (1 - alpha_) * ema_exec_;
    ema_util_ = alpha_ * s.mean_cpu_util + (1 - alpha_) * ema_util_;
  }
  samples_.push_back(s);
  while (samples_.size() > window_) samples_.pop_front();
  ++total_recorded_;
}

std::vector<WeightedPeak> ResourceProfile::WeightedPeaks() const {
  if (samples_.empty()) throw Error(ErrorCode::kEmptyHistory, "no samples recorded");
  const size_t n = samples_.size();
  std::vector<WeightedPeak> out(n);
  // Newest sample has weight 1 before normalization.
  double w = 1;
  double total = 0;
  for (size_t i = n; i-- > 0;) {
    out[i] = {samples_[i].peak_mem, samples_[i].exec_time, w};
    total += w;
    w *= beta_;
  }
  for (auto& p : out) p.weight /= total;
  return out;
}

Bytes ResourceProfile::max_peak_mem() const {
  Bytes m = 0;
  for (const auto& s : samples_) m = std::max(m, s.peak_mem);
  return m;
}

nlohmann::json ResourceProfile::ToJson() const {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : samples_) {
    samples.push_back({{"invocation_id", s.invocation_id},
                       {"peak_cpu", s.peak_cpu},
                       {"peak_mem", s.peak_mem},
                       {"exec_time", s.exec_time},
                       {"mean_cpu_util", s.mean_cpu_util}});
  }
  return {{"samples", samples},     {"alpha", alpha_},       {"beta", beta_},
          {"window", window_},      {"total_recorded", total_recorded_},
          {"ema_cpu", ema_cpu_},    {"ema_mem", ema_mem_},   {"ema_exec_time", ema_exec_},
          {"ema_cpu_util", ema_util_}};
}

ResourceProfile ResourceProfile::FromJson(const nlohmann::json& j) {
  try {
    ResourceProfile p(j.value("window", kDefaultWindow), j.at("alpha").get<double>(),
                      j.at("beta").get<double>());
    for (const auto& js : j.at("samples")) {
      p.samples_.push_back({js.at("invocation_id").get<int64_t>(), js.at("peak_cpu").get<double>(),
                            js.at("peak_mem").get<Bytes>(), js.at("exec_time").get<double>(),
                            js.at("mean_cpu_util").get<double>()});
    }
    if (p.samples_.size() > p.window_) {
      throw Error(ErrorCode::kConfigError, "profile holds more samples than its window");
    }
    if (j.contains("ema_mem")) {
      p.total_recorded_ = j.at("total_recorded").get<int64_t>();
      p.ema_cpu_ = j.at("ema_cpu").get<double>();
      p.ema_mem_ = j.at("ema_mem").get<double>();
      p.ema_exec_ = j.at("ema_exec_time").get<double>();
      p.ema_util_ = j.at("ema_cpu_util").get<double>();
    } else {
      // Only the window survived; rebuild the averages from it.
      auto samples = std::move(p.samples_);
      p.samples_.clear();
      for (const auto& s : samples) p.Record(s);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("malformed profile: ") + e.what());
  }
}

ResourceProfile Record(ResourceProfile profile, const UsageSample& s) {
  profile.Record(s);
  return profile;
}

std::vector<WeightedPeak> WeightedPeaks(const ResourceProfile& profile) {
  return profile.WeightedPeaks();
}

}  // namespace rcsim

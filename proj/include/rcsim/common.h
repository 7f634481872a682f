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

// Units, resource vectors and the error type shared by every module.

#ifndef RCSIM_COMMON_H_
#define RCSIM_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rcsim {

using Bytes = int64_t;
using Seconds = double;

inline constexpr Bytes kMiB = Bytes{1} << 20;
inline constexpr Bytes kGiB = Bytes{1} << 30;

inline constexpr Bytes MiB(double mb) {
  return static_cast<Bytes>(mb * static_cast<double>(kMiB) + (mb >= 0 ? 0.5 : -0.5));
}
inline constexpr double ToMiB(Bytes b) { return static_cast<double>(b) / kMiB; }
inline constexpr double ToGiB(Bytes b) { return static_cast<double>(b) / kGiB; }

// Rounds `value` up to the next multiple of `granule` (granule > 0).
inline constexpr Bytes RoundUp(Bytes value, Bytes granule) {
  if (value <= 0) return 0;
  return ((value + granule - 1) / granule) * granule;
}

// A (vCPU, memory) pair. vCPUs are whole cores.
struct Resources {
  int cpu = 0;
  Bytes mem = 0;

  bool Fits(const Resources& need) const {
    return need.cpu <= cpu && need.mem <= mem;
  }
  Resources& operator+=(const Resources& o) {
    cpu += o.cpu;
    mem += o.mem;
    return *this;
  }
  Resources& operator-=(const Resources& o) {
    cpu -= o.cpu;
    mem -= o.mem;
    return *this;
  }
  friend Resources operator+(Resources a, const Resources& b) { return a += b; }
  friend Resources operator-(Resources a, const Resources& b) { return a -= b; }
  friend bool operator==(const Resources&, const Resources&) = default;
};

enum class ErrorCode {
  kInvalidArgument,
  kConfigError,
  kIoError,
  kCyclicTriggers,
  kDanglingAccess,
  kNoRoot,
  kEmptyHistory,
  kInfeasible,
  kInsufficient,
  kDoubleRelease,
  kUnknownServer,
  kClusterFull,
  kDeadlock,
  kInvalidPhase,
  kKeyMismatch,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rcsim

#endif  // RCSIM_COMMON_H_

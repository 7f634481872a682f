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

// Command-line front end.
//
//   rcsim run --cluster F --workload F... --policy P... --seeds a..b
//             --out DIR [--jobs N] [--fail-inject [inv:]comp@t] [--sizing M]
//   rcsim compare SUMMARY... [--out DIR]
//
// Exit codes: 0 ok, 1 usage, 2 config error, 3 I/O error, 4 deadlock,
// 5 key mismatch, 6 anything else.

#ifndef RCSIM_CLI_H_
#define RCSIM_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rcsim/sim.h"

namespace rcsim {

struct ExperimentMatrix {
  std::filesystem::path cluster;
  std::vector<std::filesystem::path> workloads;
  std::vector<std::string> policies;
  std::vector<uint64_t> seeds;
  std::filesystem::path out;
  int jobs = 1;
  std::vector<std::string> fail_inject;
  std::string sizing = "history";
  double jitter = 0;
  bool check_invariants = false;
};

// "a..b" (inclusive), "a,b,c" or "a". Throws kConfigError.
std::vector<uint64_t> ParseSeeds(const std::string& text);
// "[inv:]comp@t". Throws kConfigError.
FailureSpec ParseFailInject(const std::string& text);

// Runs every (workload, policy, seed) cell. Nothing is written unless all
// inputs validate and every cell completes. Throws Error.
void CmdRun(const ExperimentMatrix& m);
// Prints the comparison table to `out` and writes DIR/savings.csv.
void CmdCompare(const std::vector<std::filesystem::path>& summaries, const std::filesystem::path& out_dir,
                std::ostream& out);

int ExitCodeFor(ErrorCode code);
// Applies RCSIM_LOG (off, info, debug; default off). Throws kConfigError.
void ConfigureLogging(const char* env_value);

int CliMain(int argc, char** argv);

}  // namespace rcsim

#endif  // RCSIM_CLI_H_

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

#include "rcsim/cli.h"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "rcsim/report.h"
#include "rcsim/workload.h"

namespace rcsim {

namespace {

[[noreturn]] void ConfigError(const std::string& msg) { throw Error(ErrorCode::kConfigError, msg); }

uint64_t ParseU64(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    ConfigError("bad " + what + " '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    ConfigError("bad " + what + " '" + s + "'");
  }
}

void WriteFile(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(data.data(), static_cast<std::streamsize>(data.size()))) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  }
}

struct Cell {
  size_t workload = 0;
  PolicyKind policy = PolicyKind::kAdaptive;
  uint64_t seed = 0;
  std::string events;
  std::string report;
  SummaryRow row;
  std::exception_ptr error;
};

}  // namespace

std::vector<uint64_t> ParseSeeds(const std::string& text) {
  std::vector<uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const uint64_t a = ParseU64(text.substr(0, dots), "seed");
    const uint64_t b = ParseU64(text.substr(dots + 2), "seed");
    if (b < a) ConfigError("seed range '" + text + "' is empty");
    if (b - a >= 1000000) ConfigError("seed range '" + text + "' is too large");
    for (uint64_t s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(ParseU64(part, "seed"));
  if (out.empty()) ConfigError("no seeds given");
  return out;
}

FailureSpec ParseFailInject(const std::string& text) {
  FailureSpec f;
  const auto at = text.rfind('@');
  if (at == std::string::npos || at == 0) ConfigError("fail-inject '" + text + "' must look like comp@t");
  std::string comp = text.substr(0, at);
  if (const auto colon = comp.find(':'); colon != std::string::npos) {
    f.invocation = static_cast<int64_t>(ParseU64(comp.substr(0, colon), "invocation"));
    comp = comp.substr(colon + 1);
  }
  if (comp.empty()) ConfigError("fail-inject '" + text + "' names no component");
  f.component = comp;
  try {
    size_t used = 0;
    const std::string t = text.substr(at + 1);
    f.after_start_s = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    ConfigError("fail-inject '" + text + "' has a bad time");
  }
  if (!(f.after_start_s >= 0)) ConfigError("fail-inject time must be >= 0");
  return f;
}

void CmdRun(const ExperimentMatrix& m) {
  if (m.workloads.empty() || m.policies.empty() || m.seeds.empty()) {
    ConfigError("need at least one workload, policy and seed");
  }
  if (m.jobs < 1) ConfigError("--jobs must be >= 1");
  if (m.out.empty()) ConfigError("--out is required");

  // Validate everything before any output exists.
  nlohmann::json cluster_json;
  {
    std::ifstream in(m.cluster);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + m.cluster.string());
    try {
      in >> cluster_json;
    } catch (const nlohmann::json::exception& e) {
      ConfigError(m.cluster.string() + " does not parse: " + e.what());
    }
  }
  const ClusterConfig cluster = ClusterConfig::FromJson(cluster_json);
  const CostModel cost = cluster_json.contains("cost") ? CostModel::FromJson(cluster_json["cost"]) : CostModel{};
  const SizingMode sizing = ParseSizingMode(m.sizing);
  if (m.jitter < 0 || m.jitter >= 1) ConfigError("--jitter must be in [0, 1)");

  std::vector<Workload> workloads;
  std::vector<std::string> names;
  for (const auto& p : m.workloads) {
    workloads.push_back(LoadWorkload(p));
    names.push_back(p.stem().string());
    for (size_t i = 0; i + 1 < names.size(); ++i) {
      if (names[i] == names.back()) ConfigError("two workloads share the name '" + names.back() + "'");
    }
  }
  std::vector<PolicyKind> policies;
  for (const auto& p : m.policies) policies.push_back(ParsePolicy(p));
  std::vector<FailureSpec> failures;
  for (const auto& f : m.fail_inject) {
    FailureSpec spec = ParseFailInject(f);
    bool found = false;
    for (const auto& w : workloads) {
      if (spec.invocation < static_cast<int64_t>(w.trace.size()) &&
          w.apps[w.AppIndex(w.trace[spec.invocation].app)].Find(spec.component)) {
        found = true;
      }
    }
    if (!found) ConfigError("fail-inject target '" + f + "' matches no invocation");
    failures.push_back(std::move(spec));
  }

  std::vector<Cell> cells;
  for (size_t w = 0; w < workloads.size(); ++w) {
    for (PolicyKind p : policies) {
      for (uint64_t s : m.seeds) cells.push_back({w, p, s, {}, {}, {}, nullptr});
    }
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < cells.size(); i = next++) {
      Cell& c = cells[i];
      try {
        SimOptions opt;
        opt.cost = cost;
        opt.policy = PolicyConfig::For(c.policy);
        opt.policy.sizing = sizing;
        opt.seed = c.seed;
        opt.jitter = m.jitter;
        opt.check_invariants = m.check_invariants;
        const Workload& w = workloads[c.workload];
        for (const auto& f : failures) {
          if (f.invocation < static_cast<int64_t>(w.trace.size()) &&
              w.apps[w.AppIndex(w.trace[f.invocation].app)].Find(f.component)) {
            opt.failures.push_back(f);
          }
        }
        std::ostringstream log;
        opt.event_log = &log;
        const RunReport r = Run(cluster, w, opt);
        c.events = log.str();
        c.report = r.ToJson().dump(2) + "\n";
        c.row = MakeSummaryRow(names[c.workload], r);
      } catch (...) {
        c.error = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(m.jobs, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& c : cells) {
    if (c.error) std::rethrow_exception(c.error);
  }

  std::error_code ec;
  std::filesystem::create_directories(m.out, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + m.out.string() + ": " + ec.message());
  std::vector<SummaryRow> rows;
  for (const auto& c : cells) {
    const std::string stem = names[c.workload] + "." + std::string(PolicyName(c.policy)) + ".s" + std::to_string(c.seed);
    WriteFile(m.out / (stem + ".report.json"), c.report);
    WriteFile(m.out / (stem + ".events.jsonl"), c.events);
    rows.push_back(c.row);
  }
  std::ostringstream summary;
  WriteSummaryCsv(summary, rows);
  WriteFile(m.out / "summary.csv", summary.str());
  spdlog::info("wrote {} cells to {}", cells.size(), m.out.string());
}

void CmdCompare(const std::vector<std::filesystem::path>& summaries, const std::filesystem::path& out_dir,
                std::ostream& out) {
  std::vector<std::vector<SummaryRow>> loaded;
  for (const auto& p : summaries) loaded.push_back(LoadSummaryCsv(p));
  const auto rows = Compare(loaded);
  std::ostringstream csv;
  WriteSavingsCsv(csv, rows);
  std::error_code ec;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());
  WriteFile(out_dir / "savings.csv", csv.str());
  PrintSavingsTable(out, rows);
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kCyclicTriggers:
    case ErrorCode::kDanglingAccess:
    case ErrorCode::kNoRoot:
    case ErrorCode::kInvalidPhase:
      return 2;
    case ErrorCode::kIoError:
      return 3;
    case ErrorCode::kDeadlock:
      return 4;
    case ErrorCode::kKeyMismatch:
      return 5;
    default:
      return 6;
  }
}

void ConfigureLogging(const char* env_value) {
  const std::string v = env_value ? env_value : "off";
  if (v == "off" || v.empty()) {
    spdlog::set_level(spdlog::level::off);
  } else if (v == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (v == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    ConfigError("RCSIM_LOG must be off, info or debug");
  }
}

int CliMain(int argc, char** argv) {
  CLI::App app{"resource-centric serverless scheduling simulator"};
  app.require_subcommand(1);

  ExperimentMatrix m;
  std::string cluster, out, seeds = "0";
  std::vector<std::string> workloads;
  auto* run = app.add_subcommand("run", "run a workload x policy x seed matrix");
  run->add_option("--cluster", cluster, "cluster config JSON")->required();
  run->add_option("--workload", workloads, "workload bundle or application spec")->required();
  run->add_option("--policy", m.policies, "adaptive, faas-peak, dag-fixed, always-remote, migration-best")
      ->required();
  run->add_option("--seeds", seeds, "a..b, a,b,c or a");
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--jobs", m.jobs, "parallel cells");
  run->add_option("--fail-inject", m.fail_inject, "[inv:]comp@t, seconds after the component starts");
  run->add_option("--sizing", m.sizing, "history, fixed or peak");
  run->add_option("--jitter", m.jitter, "runtime jitter in [0, 1)");
  run->add_flag("--check-invariants", m.check_invariants, "verify cluster accounting after every change");

  std::vector<std::string> summaries;
  std::string compare_out = ".";
  auto* compare = app.add_subcommand("compare", "compare policies against faas-peak");
  compare->add_option("summary", summaries, "summary.csv files")->required();
  compare->add_option("--out", compare_out, "directory for savings.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    ConfigureLogging(std::getenv("RCSIM_LOG"));
    if (*run) {
      m.cluster = cluster;
      for (const auto& w : workloads) m.workloads.emplace_back(w);
      m.seeds = ParseSeeds(seeds);
      m.out = out;
      CmdRun(m);
    } else {
      std::vector<std::filesystem::path> paths(summaries.begin(), summaries.end());
      CmdCompare(paths, compare_out, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "rcsim: " << e.what() << '\n';
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rcsim: " << e.what() << '\n';
    return 6;
  }
  return 0;
}

}  // namespace rcsim

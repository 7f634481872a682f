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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace rcsim {
namespace {

UsageSample Sample(Bytes mem, double cpu = 1, Seconds t = 1, double util = 0.5) {
  return {0, cpu, mem, t, util};
}

TEST(HistoryTest, FirstSampleSetsEma) {
  ResourceProfile p;
  p.Record(Sample(100));
  EXPECT_EQ(p.ema_mem(), 100);
}

TEST(HistoryTest, SecondSampleAverages) {
  ResourceProfile p;
  p.Record(Sample(100));
  p.Record(Sample(200));
  EXPECT_EQ(p.ema_mem(), 150);
}

TEST(HistoryTest, EmaMatchesUnrolledRecurrence) {
  std::mt19937_64 rng(3);
  std::vector<double> xs;
  ResourceProfile p;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(static_cast<double>(rng() % 10000));
    p.Record(Sample(static_cast<Bytes>(xs.back())));
  }
  // ema_n = a^0 (1-a) x_n ... written out as a closed sum.
  const double a = 0.5;
  double expect = std::pow(1 - a, 9) * xs[0];
  for (int i = 1; i < 10; ++i) expect += a * std::pow(1 - a, 9 - i) * xs[i];
  EXPECT_NEAR(p.ema_mem(), expect, 1e-9);
}

TEST(HistoryTest, InvalidSampleThrows) {
  ResourceProfile p;
  EXPECT_THROW(p.Record(Sample(1, 1, 0)), Error);
  EXPECT_THROW(p.Record(Sample(1, 1, 1, 1.5)), Error);
  EXPECT_THROW(p.Record(Sample(-1)), Error);
}

TEST(HistoryTest, WindowEvictsOldest) {
  ResourceProfile p(3);
  for (int i = 1; i <= 5; ++i) p.Record(Sample(i));
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.samples().front().peak_mem, 3);
  EXPECT_EQ(p.total_recorded(), 5);
}

TEST(HistoryTest, WeightedPeaksEmptyThrows) {
  ResourceProfile p;
  try {
    p.WeightedPeaks();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyHistory);
  }
}

TEST(HistoryTest, SingleSampleHasFullWeight) {
  ResourceProfile p;
  p.Record(Sample(7));
  EXPECT_EQ(p.WeightedPeaks()[0].weight, 1.0);
}

TEST(HistoryTest, TwoSamplesHalfDecay) {
  ResourceProfile p(1000, 0.5, 0.5);
  p.Record(Sample(1));
  p.Record(Sample(2));
  const auto w = p.WeightedPeaks();
  EXPECT_NEAR(w[0].weight, 1.0 / 3, 1e-15);
  EXPECT_NEAR(w[1].weight, 2.0 / 3, 1e-15);
}

TEST(HistoryTest, HundredSamplesMatchClosedForm) {
  ResourceProfile p;
  for (int i = 0; i < 100; ++i) p.Record(Sample(i));
  const auto w = p.WeightedPeaks();
  const double beta = 0.98;
  const double norm = (1 - std::pow(beta, 100)) / (1 - beta);
  double sum = 0;
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(w[i].weight, std::pow(beta, 99 - i) / norm, 1e-12);
    if (i > 0) EXPECT_GE(w[i].weight, w[i - 1].weight);
    sum += w[i].weight;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(HistoryTest, ConstantInputConverges) {
  ResourceProfile p;
  p.Record(Sample(1000));
  const double e0 = 1000, c = 200;
  for (int n = 1; n <= 30; ++n) {
    p.Record(Sample(200));
    EXPECT_LE(std::abs(p.ema_mem() - c), std::pow(0.5, n) * std::abs(e0 - c) + 1e-9);
  }
}

TEST(HistoryTest, ReplayIsBitIdenticalAndJsonRoundTrips) {
  ResourceProfile a, b;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const UsageSample s{i, static_cast<double>(rng() % 8), static_cast<Bytes>(rng() % 100000),
                        1.0 + static_cast<double>(rng() % 100) / 10, static_cast<double>(rng() % 101) / 100};
    a.Record(s);
    b = Record(b, s);
  }
  EXPECT_EQ(a, b);
  const ResourceProfile c = ResourceProfile::FromJson(a.ToJson());
  EXPECT_EQ(c.samples(), a.samples());
  EXPECT_EQ(c.alpha(), a.alpha());
  EXPECT_EQ(c.beta(), a.beta());
}

}  // namespace
}  // namespace rcsim

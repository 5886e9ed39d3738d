// Copyright 2026 The pegrl Authors.
//
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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "pegrl/report.h"

namespace pegrl {
namespace {

TEST_CASE("constant series gives a flat mean with zero-width bounds") {
  std::vector<double> v(50, 0.5);
  auto w = MovingWindow(v, 20);
  REQUIRE(w.size() == 31);
  for (const auto& s : w) {
    CHECK(s.mean == 0.5);
    CHECK(s.lo == 0.5);
    CHECK(s.hi == 0.5);
    CHECK(s.n == 20);
  }
  CHECK(w.front().last == 19);
  CHECK(w.back().last == 49);
}

TEST_CASE("window longer than the run gives one aggregate row") {
  std::vector<double> v{1.0, 2.0, 3.0};
  auto w = MovingWindow(v, 20);
  REQUIRE(w.size() == 1);
  CHECK(w[0].n == 3);
  CHECK(w[0].mean == 2.0);
  CHECK(w[0].hi - w[0].mean == doctest::Approx(1.645 * 1.0 / std::sqrt(3.0)));
}

TEST_CASE("spearman rank correlation") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> up{0.1, 0.3, 0.2, 0.8, 0.9};
  std::vector<double> down{5, 4, 3, 2, 1};
  CHECK(Spearman(x, x) == doctest::Approx(1.0));
  CHECK(Spearman(x, down) == doctest::Approx(-1.0));
  CHECK(Spearman(x, up) == doctest::Approx(0.9));
  std::vector<double> flat(5, 1.0);
  CHECK(Spearman(x, flat) == 0.0);
  std::vector<double> ties{1, 1, 2, 2, 3};
  CHECK(Spearman(x, ties) == doctest::Approx(9.0 / std::sqrt(90.0)));
}

TEST_CASE("episode csv round trip and per-stage report") {
  std::string text = EpisodeCsvHeader();
  for (int i = 0; i < 30; ++i) {
    EpisodeLog l;
    l.episode = i;
    l.steps = 100 - 2 * i;
    l.reward = -0.5 + i / 30.0;
    l.epsilon = EpsilonAt(i, 1);
    l.kind = i % 3 ? TerminalKind::kSuccess : TerminalKind::kTimeout;
    text += EpisodeCsvLine(i < 20 ? "a" : "b", l);
  }
  auto rows = ParseEpisodeCsv(text);
  REQUIRE(rows.size() == 30);
  CHECK(rows[7].reward == -0.5 + 7 / 30.0);
  CHECK(rows[7].terminal == "success");
  auto rep = BuildReport(rows, 20);
  REQUIRE(rep.size() == 2);
  CHECK(rep[0].stage == "a");
  CHECK(rep[0].reward.size() == 1);
  CHECK(rep[1].reward.size() == 1);
  CHECK(rep[1].reward[0].n == 10);
  CHECK(rep[0].reward_trend == doctest::Approx(1.0));
  CHECK_THROWS_AS(ParseEpisodeCsv("a,b\n"), DomainError);
}

}  // namespace
}  // namespace pegrl

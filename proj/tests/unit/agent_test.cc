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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pegrl/agent.h"
#include "pegrl/report.h"
#include "test_support.h"

namespace pegrl {
namespace {

using testing::ChainEnvironment;
using testing::ChainOptimum;
using testing::DelayedChainEnvironment;

Transition T(int64_t episode, int step, double tag) {
  Transition t;
  t.s[0] = tag;
  t.s_next[0] = tag + 0.5;
  t.episode_id = episode;
  t.step_index = step;
  t.a = step % 2;
  return t;
}

TEST_CASE("epsilon schedule") {
  CHECK(EpsilonAt(0, 1) == 1.0);
  CHECK(EpsilonAt(100, 1) == doctest::Approx(0.5));
  CHECK(EpsilonAt(180, 1) == doctest::Approx(0.1));
  CHECK(EpsilonAt(229, 1) == 0.1);
  CHECK(EpsilonAt(0, 2) == 0.5);
  CHECK(EpsilonAt(80, 2) == doctest::Approx(0.1));
  CHECK_THROWS_AS(EpsilonAt(0, 3), DomainError);
}

TEST_CASE("replay pool evicts the oldest entry first") {
  ReplayPool pool(20000);
  for (int i = 0; i < 20001; ++i) pool.Add(T(i / 100, i % 100, i));
  CHECK(pool.size() == 20000);
  CHECK(pool.total_added() == 20001);
  CHECK(pool.At(0).s[0] == 1.0);
  CHECK(pool.At(19999).s[0] == 20000.0);
  pool.Clear();
  CHECK(pool.size() == 0);
}

TEST_CASE("history windows stay inside one episode") {
  ReplayPool pool(100);
  for (int i = 0; i < 5; ++i) pool.Add(T(1, i, 10 + i));
  for (int i = 0; i < 12; ++i) pool.Add(T(2, i, 20 + i));

  ReplaySample first = pool.MakeSample(5, 8);
  REQUIRE(first.history.size() == 1);
  CHECK(first.history[0][0] == 20.0);
  REQUIRE(first.next_history.size() == 2);
  CHECK(first.next_history[1][0] == 20.5);

  ReplaySample mid = pool.MakeSample(7, 8);
  REQUIRE(mid.history.size() == 3);
  CHECK(mid.history[0][0] == 20.0);
  CHECK(mid.history[2][0] == 22.0);

  ReplaySample late = pool.MakeSample(16, 8);
  REQUIRE(late.history.size() == 8);
  CHECK(late.history.front()[0] == 24.0);
  CHECK(late.history.back()[0] == 31.0);
  REQUIRE(late.next_history.size() == 8);
  CHECK(late.next_history.front()[0] == 25.0);
  CHECK(late.next_history.back()[0] == 31.5);
}

TEST_CASE("history windows stop at an evicted predecessor") {
  ReplayPool pool(4);
  for (int i = 0; i < 6; ++i) pool.Add(T(0, i, i));
  ReplaySample s = pool.MakeSample(0, 8);
  CHECK(s.history.size() == 1);
  CHECK(s.history[0][0] == 2.0);
}

TEST_CASE("n-step samples sum discounted rewards and stop at the episode end") {
  ReplayPool pool(100);
  for (int i = 0; i < 4; ++i) {
    Transition t = T(3, i, 10 + i);
    t.r = 0.1 * (i + 1);
    t.terminal = i == 3;
    pool.Add(t);
  }
  pool.Add(T(4, 0, 50));

  ReplaySample s = pool.MakeSample(0, 8, 3, 0.5);
  CHECK(s.steps == 3);
  CHECK(s.reward == doctest::Approx(0.1 + 0.5 * 0.2 + 0.25 * 0.3));
  CHECK_FALSE(s.terminal);
  REQUIRE(s.next_history.size() == 4);
  CHECK(s.next_history.back()[0] == 12.5);

  ReplaySample tail = pool.MakeSample(2, 8, 3, 0.5);
  CHECK(tail.steps == 2);
  CHECK(tail.terminal);
  CHECK(tail.reward == doctest::Approx(0.3 + 0.5 * 0.4));

  ReplaySample one = pool.MakeSample(1, 8);
  CHECK(one.steps == 1);
  CHECK(one.reward == doctest::Approx(0.2));
  CHECK(one.next_history.back()[0] == 11.5);
}

TEST_CASE("two-step targets recover the action under a delayed observation") {
  auto train = [](int td_steps) {
    DelayedChainEnvironment env;
    auto table = std::make_unique<TabularQFunction>(DelayedChainEnvironment::kStates, 2, 0.05, 0.9);
    TrainOptions opts;
    opts.hp.gamma = 0.9;
    opts.hp.eps_init = 1.0;
    opts.hp.eps_decay = 0.0;
    opts.hp.eps_floor = 1.0;
    opts.hp.episodes = 3000;
    opts.hp.e_threshold = 1;
    opts.hp.batch = 4;
    opts.hp.replay_capacity = 5000;
    opts.hp.td_steps = td_steps;
    opts.seed = 9;
    TrainAgent(env, *table, opts);
    return table;
  };
  auto one = train(1);
  auto two = train(2);
  for (int s = 0; s < DelayedChainEnvironment::kStates - 1; ++s) {
    CHECK(std::abs(one->Q(s, 1) - one->Q(s, 0)) < 0.05);
    CHECK(two->Q(s, 1) - two->Q(s, 0) > 0.05);
  }
}

TEST_CASE("hyperparameter validation") {
  HyperParams hp;
  CHECK_NOTHROW(hp.Validate());
  hp.eps_floor = 0.9;
  hp.eps_init = 0.5;
  CHECK_THROWS_AS(hp.Validate(), DomainError);
  hp = HyperParams{};
  hp.gamma = 1.0;
  CHECK_THROWS_AS(hp.Validate(), DomainError);
}

TEST_CASE("tabular agent converges to the value-iteration optimum") {
  ChainEnvironment env(10);
  TabularQFunction table(ChainEnvironment::kStates, 2, 0.5, 0.9);
  TrainOptions opts;
  opts.hp.gamma = 0.9;
  opts.hp.eps_init = 1.0;
  opts.hp.eps_decay = 0.0;
  opts.hp.eps_floor = 1.0;
  opts.hp.episodes = 5000;
  opts.hp.e_threshold = 1;
  opts.hp.batch = 4;
  opts.hp.replay_capacity = 1000;
  opts.seed = 5;
  TrainStats stats = TrainAgent(env, table, opts);
  CHECK(stats.env_steps <= 50000);
  auto opt = ChainOptimum(0.9);
  double worst = 0.0;
  for (int s = 0; s < ChainEnvironment::kStates - 1; ++s) {
    for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(table.Q(s, a) - opt[s][a]));
  }
  CHECK(worst < 1e-6);
  CHECK(opt[3][1] == 1.0);
  CHECK(opt[0][1] == doctest::Approx(0.729));
}

TEST_CASE("deterministic training repeats exactly") {
  auto run = [] {
    ChainEnvironment env(10);
    TabularQFunction table(ChainEnvironment::kStates, 2, 0.3, 0.9);
    TrainOptions opts;
    opts.hp.episodes = 40;
    opts.hp.e_threshold = 2;
    opts.hp.batch = 8;
    opts.seed = 99;
    TrainStats st = TrainAgent(env, table, opts);
    std::string log;
    for (const auto& e : st.episodes) log += EpisodeCsvLine("chain", e);
    return log;
  };
  CHECK(run() == run());
}

TEST_CASE("learning waits for the episode threshold") {
  ChainEnvironment env(10);
  TabularQFunction table(ChainEnvironment::kStates, 2, 0.3, 0.9);
  TrainOptions opts;
  opts.hp.episodes = 5;
  opts.hp.e_threshold = 5;
  opts.hp.batch = 1;
  TrainStats st = TrainAgent(env, table, opts);
  CHECK(st.updates == 0);
  CHECK(table.Q(0, 0) == 0.0);
}

TEST_CASE("threaded training runs both loops and publishes snapshots") {
  ChainEnvironment env(10);
  TabularQFunction table(ChainEnvironment::kStates, 2, 0.5, 0.9);
  TrainOptions opts;
  opts.mode = ExecMode::kThreaded;
  opts.hp.episodes = 300;
  opts.hp.e_threshold = 10;
  opts.hp.batch = 4;
  opts.hp.eps_init = 1.0;
  opts.hp.eps_decay = 0.0;
  opts.hp.eps_floor = 1.0;
  opts.seed = 1;
  TrainStats st = TrainAgent(env, table, opts);
  CHECK(st.episodes.size() == 300);
  CHECK(st.updates > 0);
  CHECK(st.snapshots == st.updates / opts.hp.publish_every);
  CHECK(table.Q(3, 1) == doctest::Approx(1.0).epsilon(1e-3));
}

// Wraps the chain and fails with a transport error on chosen steps.
class FlakyChain : public Environment {
 public:
  int num_actions() const override { return 2; }
  StateVector Reset(uint64_t seed) override {
    ++episode_;
    return chain_.Reset(seed);
  }
  StepOutcome Step(int a) override {
    if (episode_ == 2) throw TransportError("link down");
    return chain_.Step(a);
  }

 private:
  ChainEnvironment chain_{10};
  int episode_ = 0;
};

TEST_CASE("episodes cut by transport failures are logged and not stored") {
  FlakyChain env;
  TabularQFunction table(ChainEnvironment::kStates, 2, 0.3, 0.9);
  TrainOptions opts;
  opts.hp.episodes = 3;
  opts.hp.e_threshold = 100;
  TrainStats st = TrainAgent(env, table, opts);
  REQUIRE(st.episodes.size() == 3);
  CHECK_FALSE(st.episodes[0].aborted);
  CHECK(st.episodes[1].aborted);
  CHECK_FALSE(st.episodes[2].aborted);
}

TEST_CASE("stored rewards lie in [-1, 1) and terminal flags match the environment") {
  ChainEnvironment env(10);
  ReplayPool pool(1000);
  Rng rng(2);
  for (int e = 0; e < 50; ++e) {
    StateVector s = env.Reset(rng());
    for (int k = 0;; ++k) {
      int a = static_cast<int>(rng() % 2);
      StepOutcome out = env.Step(a);
      Transition t{s, a, out.reward, out.next, out.terminal, e, k};
      pool.Add(t);
      if (out.terminal || out.truncated) break;
      s = out.next;
    }
  }
  for (size_t i = 0; i < pool.size(); ++i) {
    Transition t = pool.At(i);
    CHECK(t.r >= -1.0);
    CHECK(t.r <= 1.0);
    CHECK(t.terminal == (t.s_next[0] == 4.0));
  }
}

TEST_CASE("recent success rate") {
  std::vector<EpisodeLog> logs(10);
  for (int i = 0; i < 10; ++i) logs[i].kind = i >= 6 ? TerminalKind::kSuccess : TerminalKind::kTimeout;
  CHECK(RecentSuccessRate(logs, 4) == 1.0);
  CHECK(RecentSuccessRate(logs, 10) == doctest::Approx(0.4));
  CHECK(RecentSuccessRate(logs, 50) == doctest::Approx(0.4));
}

}  // namespace
}  // namespace pegrl

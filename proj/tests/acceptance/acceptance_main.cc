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

// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails. Arguments select a subset, e.g. "3 4 8".

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pegrl/agent.h"
#include "pegrl/config.h"
#include "pegrl/evaluation.h"
#include "pegrl/protocol.h"
#include "pegrl/report.h"
#include "test_support.h"

namespace pegrl {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

QNetwork InitialSearchNet(const CurriculumConfig& cc) {
  Rng init_rng = MakeStream(cc.seed, 10);
  QNetwork net = QNetwork::Initialized(cc.search_shape, init_rng);
  net.set_input_scale(cc.search_input_scale);
  return net;
}

StageResult TrainStageOne(uint64_t seed, int episodes = -1) {
  RunConfig c = ParseConfig("");
  c.seed = seed;
  CurriculumConfig cc = MakeCurriculum(c);
  if (episodes > 0) cc.search_hp.episodes = episodes;
  Controller controller = MakeController(c);
  InProcessLink link(controller);
  return TrainSearchStage(link, cc.stage1, InitialSearchNet(cc), cc.search_hp, cc.mode,
                          MakeStream(seed, 11)());
}

Outcome Criterion1() {
  auto start = std::chrono::steady_clock::now();
  int passed = 0;
  std::string detail;
  for (uint64_t seed : {1, 2, 3}) {
    StageResult r = TrainStageOne(seed);
    std::vector<double> reward, steps;
    for (const EpisodeLog& e : r.stats.episodes) {
      reward.push_back(e.reward);
      steps.push_back(e.steps);
    }
    WindowStat mr = MovingWindow(reward, 20).back();
    WindowStat ms = MovingWindow(steps, 20).back();
    bool ok = mr.last == 229 && mr.mean >= 0.5 && ms.mean <= 30.0;
    passed += ok;
    detail += Fmt("seed %d: reward %.3f steps %.1f; ", static_cast<int>(seed), mr.mean,
                  ms.mean);
  }
  double elapsed = Seconds(start);
  detail += Fmt("%d/3 seeds, %.0f s", passed, elapsed);
  return {passed >= 2 && elapsed <= 600.0, detail};
}

Outcome Criterion2() {
  std::vector<EvalReport> reports;
  for (const char* name : {"A", "B"}) {
    RunConfig c = ParseConfig("");
    c.seed = 1;
    c.train_case = name;
    c.Validate();
    RobotRig rig = MakeRig(c);
    CurriculumResult trained;
    try {
      trained = RunCurriculum(*rig.link, MakeCurriculum(c));
    } catch (const CurriculumGateError& e) {
      return {false, std::string("case ") + name + ": " + e.what()};
    }
    EvalOptions opts = MakeEvalOptions(c);
    opts.trials = 100;
    RobotRig eval_rig = MakeRig(c);
    reports.push_back(Evaluate(*eval_rig.link, trained.search_stage2.net,
                               trained.insertion.net, CaseSpec::Named(name), opts));
  }
  const EvalSummary& a = reports[0].summary;
  const EvalSummary& b = reports[1].summary;
  bool ok = a.success_rate >= 0.95 && b.success_rate >= 0.95 &&
            b.mean_insertion_s > a.mean_insertion_s;
  return {ok, Fmt("A success %.2f insertion %.3f s; B success %.2f insertion %.3f s",
                  a.success_rate, a.mean_insertion_s, b.success_rate, b.mean_insertion_s)};
}

Outcome Criterion3() {
  bool exact = RewardSuccess(25, 100) == 0.75 && RewardSearchFail(5.5, 1.0, 10.0) == -0.5 &&
               RewardInsertionFail(0.0, 19.0) == -1.0;
  Rng rng(2026);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double lo = 1.0, hi = -1.0;
  int64_t terminals = 0;
  for (int episode = 0; episode < 100000; ++episode) {
    PhaseSpec spec = episode % 2 ? PhaseSpec::Insertion()
                                 : PhaseSpec::Search(0.5 + 4.5 * u(rng), 3.0 + 2.0 * u(rng));
    PhaseProgress p;
    for (int k = 1;; ++k) {
      p.lateral_distance_mm = 12.0 * u(rng);
      p.z_drop_mm = (spec.phase == Phase::kSearch ? 0.6 : 20.0) * u(rng);
      if (auto end = CheckTerminal(spec, p, k)) {
        lo = std::min(lo, end->value);
        hi = std::max(hi, end->value);
        ++terminals;
        break;
      }
    }
  }
  bool bounded = lo >= -1.0 && hi < 1.0 && terminals == 100000;
  return {exact && bounded, Fmt("worked values %s, range [%.4f, %.4f] over %lld episodes",
                                exact ? "exact" : "WRONG", lo, hi,
                                static_cast<long long>(terminals))};
}

Outcome Criterion4() {
  auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    worst = std::max(worst, testing::MaxRelativeGradientError(seed));
  }
  double elapsed = Seconds(start);
  return {worst < 1e-4 && elapsed < 5.0,
          Fmt("max relative error %.2e over 50 networks, %.3f s", worst, elapsed)};
}

Outcome Criterion5() {
  testing::ChainEnvironment env(10);
  TabularQFunction table(testing::ChainEnvironment::kStates, 2, 0.5, 0.9);
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
  auto opt = testing::ChainOptimum(0.9);
  double worst = 0.0;
  for (int s = 0; s < testing::ChainEnvironment::kStates - 1; ++s) {
    for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(table.Q(s, a) - opt[s][a]));
  }
  return {worst < 1e-6 && stats.env_steps <= 50000,
          Fmt("max |Q - Q*| %.2e after %lld steps", worst,
              static_cast<long long>(stats.env_steps))};
}

struct MomentStats {
  double mean_norm = 0.0;
  double noise = 0.0;
};

// Raw 2 ms moment samples with an aligned peg held at `offset` from the hole
// under a vertical push of `fz`.
MomentStats SampleMoments(const Vec2& offset, double fz) {
  ContactSimulator sim(HoleSpec{}, ContactParams{}, SensorParams{}, EpisodeParams{});
  ResetInfo info = sim.Reset({StartMode::kSearch, 5.0, 0, 11});
  PegPose pose = sim.pose();
  pose.xy_mm = {info.hole_center_xy_mm[0] + offset[0], info.hole_center_xy_mm[1] + offset[1]};
  pose.rot_xy_deg = {0.0, 0.0};
  sim.set_pose(pose);
  sim.Advance({0.0, 0.0, -fz}, {0.0, 0.0}, 0.002);
  const int n = 20000;
  double sum[2] = {0, 0}, sum2[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    SensorSample s = sim.Sense();
    for (int k = 0; k < 2; ++k) {
      sum[k] += s.moment_nm[k];
      sum2[k] += s.moment_nm[k] * s.moment_nm[k];
    }
  }
  MomentStats out;
  double var = 0.0;
  for (int k = 0; k < 2; ++k) {
    double m = sum[k] / n;
    out.mean_norm += m * m;
    var += sum2[k] / n - m * m;
  }
  out.mean_norm = std::sqrt(out.mean_norm);
  out.noise = std::sqrt(var / 2.0);
  return out;
}

Outcome Criterion6() {
  MomentStats low = SampleMoments({1.1, 0.0}, 10.0);
  MomentStats high = SampleMoments({1.1, 0.0}, 20.0);
  MomentStats far = SampleMoments({1.3, 0.0}, 20.0);
  MomentStats centered = SampleMoments({0.0, 0.0}, 20.0);
  double snr_low = low.mean_norm / low.noise;
  double snr_high = high.mean_norm / high.noise;
  bool ok = snr_low < 1.0 && snr_high > 3.0 && high.mean_norm > far.mean_norm &&
            centered.mean_norm < centered.noise;
  return {ok, Fmt("SNR %.2f at 10 N, %.2f at 20 N; |M| %.4f at 1.1 mm, %.4f at 1.3 mm; "
                  "centered %.5f vs floor %.4f Nm",
                  snr_low, snr_high, high.mean_norm, far.mean_norm, centered.mean_norm,
                  centered.noise)};
}

Outcome Criterion7() {
  Controller c = testing::DefaultController();
  c.Reset({StartMode::kSearch, 5.0, 0, 1});
  for (int t = 0; t < 3; ++t) c.Poll();
  const double x0 = c.sim().pose().xy_mm[0];
  ActionVector push;
  push.force_n = {20.0, 0.0, -20.0};
  c.SubmitAction(push);
  c.Poll();
  bool unchanged = c.sim().pose().xy_mm[0] == x0;
  c.Poll();
  bool moved = c.sim().pose().xy_mm[0] > x0;

  bool exact = true;
  int frames = 0;
  c.Reset({StartMode::kSearch, 1.0, -1, 9});
  push.force_n = {20.0, -20.0, -20.0};
  for (int t = 0; t < 50; ++t) {
    c.SubmitAction(push);
    SensorFrame f = c.Poll();
    const auto& samples = c.last_samples();
    exact = exact && samples.size() == 20;
    std::array<double, 8> mean{};
    for (const SensorSample& s : samples) {
      double v[8] = {s.force_n[0], s.force_n[1], s.force_n[2], s.moment_nm[0],
                     s.moment_nm[1], s.pos_mm[0], s.pos_mm[1], s.pos_mm[2]};
      for (int k = 0; k < 8; ++k) mean[k] += v[k];
    }
    for (double& m : mean) m /= 20.0;
    double got[8] = {f.forces_n[0], f.forces_n[1], f.forces_n[2], f.moments_nm[0],
                     f.moments_nm[1], f.pos_mm[0], f.pos_mm[1], f.pos_mm[2]};
    exact = exact && std::memcmp(mean.data(), got, sizeof got) == 0;
    ++frames;
  }
  return {unchanged && moved && exact,
          Fmt("frame t+1 %s, frame t+2 %s, %d frames %s", unchanged ? "unchanged" : "CHANGED",
              moved ? "moved" : "NOT MOVED", frames, exact ? "bit-exact" : "DIFFER")};
}

Outcome Criterion8() {
  HyperParams hp;
  double e0 = EpsilonAt(0, hp.eps_init, hp.eps_decay, hp.eps_floor);
  double e180 = EpsilonAt(180, hp.eps_init, hp.eps_decay, hp.eps_floor);
  double s2 = EpsilonAt(0, CurriculumConfig{}.stage2_eps_init, hp.eps_decay, hp.eps_floor);
  ReplayPool pool(static_cast<size_t>(hp.replay_capacity));
  for (int i = 0; i < 20001; ++i) {
    Transition t;
    t.episode_id = i;
    pool.Add(t);
  }
  bool pool_ok = pool.size() == 20000 && pool.At(0).episode_id == 1 &&
                 pool.At(19999).episode_id == 20000;
  bool ok = e0 == 1.0 && e180 == 0.1 && s2 == 0.5 && pool_ok;
  return {ok, Fmt("eps(0) %.17g, eps(180) %.17g, stage-2 eps(0) %.17g; pool %zu, oldest %lld",
                  e0, e180, s2, pool.size(), static_cast<long long>(pool.At(0).episode_id))};
}

Message RandomMessage(Rng& rng) {
  std::uniform_int_distribution<int> type(1, 7);
  std::normal_distribution<double> g(0.0, 100.0);
  Message m;
  m.type = static_cast<MsgType>(type(rng));
  m.seq = static_cast<uint32_t>(rng());
  if (m.type == MsgType::kError) {
    m.error_code = static_cast<ErrorCode>(1 + rng() % 4);
    int len = static_cast<int>(rng() % 64);
    for (int i = 0; i < len; ++i) m.error_text.push_back(static_cast<char>(32 + rng() % 95));
  } else {
    for (int i = 0; i < PayloadFields(m.type); ++i) m.values.push_back(g(rng));
  }
  return m;
}

Outcome Criterion9() {
  Rng rng(99);
  int round_trips = 0;
  for (int i = 0; i < 10000; ++i) {
    Message m = RandomMessage(rng);
    round_trips += Decode(Encode(m)) == m;
  }

  Controller remote = testing::DefaultController();
  testing::ServerThread server(remote, 0.1, 21);
  ClientOptions co;
  co.server = server.address();
  co.timeout_ms = 20;
  co.drop_rate = 0.1;
  co.fault_seed = 22;
  UdpRobotClient client(co);
  testing::ShadowLink link(client, testing::DefaultController());

  CurriculumConfig cc = MakeCurriculum(ParseConfig(""));
  HyperParams hp = cc.search_hp;
  hp.episodes = 20;
  PegEnvironment env(link, cc.stage1);
  LstmQFunction q(InitialSearchNet(cc), hp);
  ReplayPool pool(static_cast<size_t>(hp.replay_capacity));
  TrainOptions opts;
  opts.hp = hp;
  opts.seed = 9;
  opts.pool = &pool;
  TrainStats stats = TrainAgent(env, q, opts);

  // Stored transitions must chain: s' of one step is s of the next.
  int64_t broken = 0;
  for (size_t i = 0; i + 1 < pool.size(); ++i) {
    const Transition& a = pool.At(i);
    const Transition& b = pool.At(i + 1);
    if (a.episode_id != b.episode_id) continue;
    if (b.step_index != a.step_index + 1 || a.s_next != b.s || a.terminal) ++broken;
  }
  int aborted = 0;
  for (const EpisodeLog& e : stats.episodes) aborted += e.aborted;
  bool ok = round_trips == 10000 && stats.episodes.size() == 20 && link.mismatches() == 0 &&
            broken == 0 && client.retries() > 0;
  return {ok, Fmt("%d/10000 round trips; %zu episodes (%d aborted), %zu transitions, "
                  "%lld frame mismatches, %lld broken links, %lld retries",
                  round_trips, stats.episodes.size(), aborted, pool.size(),
                  static_cast<long long>(link.mismatches()), static_cast<long long>(broken),
                  static_cast<long long>(client.retries()))};
}

Outcome Criterion10() {
  auto run = [] {
    StageResult r = TrainStageOne(7, 25);
    std::string log;
    for (const EpisodeLog& e : r.stats.episodes) log += EpisodeCsvLine("search_stage1", e);
    std::vector<uint8_t> w = SerializeWeights(r.net);
    return std::make_pair(log, w);
  };
  auto a = run();
  auto b = run();
  bool ok = a.first == b.first && a.second == b.second;
  return {ok, Fmt("episode logs %s (%zu bytes), weights %s",
                  a.first == b.first ? "identical" : "DIFFER", a.first.size(),
                  a.second == b.second ? "identical" : "DIFFER")};
}

}  // namespace
}  // namespace pegrl

int main(int argc, char** argv) {
  using pegrl::Outcome;
  std::vector<std::function<Outcome()>> criteria = {
      pegrl::Criterion1, pegrl::Criterion2, pegrl::Criterion3, pegrl::Criterion4,
      pegrl::Criterion5, pegrl::Criterion6, pegrl::Criterion7, pegrl::Criterion8,
      pegrl::Criterion9, pegrl::Criterion10};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome out;
    try {
      out = criteria[i]();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("criterion %d: %s - %s\n", id, out.pass ? "PASS" : "FAIL", out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

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

#include "pegrl/agent.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <thread>

namespace pegrl {

void HyperParams::Validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must be in [0, 1)");
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(eps_init >= 0.0 && eps_init <= 1.0) || !(eps_floor >= 0.0 && eps_floor <= 1.0) ||
      eps_decay < 0.0) {
    throw DomainError("epsilon schedule out of range");
  }
  if (eps_floor > eps_init) throw DomainError("eps_floor must not exceed eps_init");
  if (episodes <= 0) throw DomainError("episodes must be positive");
  if (e_threshold < 0) throw DomainError("e_threshold must be non-negative");
  if (batch <= 0 || window <= 0 || replay_capacity <= 0 || publish_every <= 0) {
    throw DomainError("batch, window, replay capacity and publish interval must be positive");
  }
  if (updates_per_step < 0) throw DomainError("updates_per_step must be non-negative");
  if (td_steps < 1) throw DomainError("td_steps must be at least 1");
  if (clip_norm < 0.0) throw DomainError("clip_norm must be non-negative");
}

HyperParams CurriculumHyperParams() {
  HyperParams hp;
  hp.gamma = 0.95;
  hp.alpha = 0.5;
  hp.td_steps = 8;
  return hp;
}

double EpsilonAt(int episode, double eps_init, double decay, double floor) {
  return std::max(eps_init - decay * episode, floor);
}

double EpsilonAt(int episode, int stage) {
  if (stage != 1 && stage != 2) throw DomainError("stage must be 1 or 2");
  return EpsilonAt(episode, stage == 1 ? 1.0 : 0.5, 0.005, 0.1);
}

LstmQFunction::LstmQFunction(QNetwork net, const HyperParams& hp, bool parallel)
    : net_(std::move(net)),
      gamma_(hp.gamma),
      alpha_(hp.alpha),
      clip_norm_(hp.clip_norm),
      window_(hp.window),
      parallel_(parallel) {}

std::vector<double> LstmQFunction::Values(std::span<const StateVector> history) const {
  if (history.empty()) throw DomainError("Values: empty history");
  if (static_cast<int>(history.size()) > window_) {
    history = history.subspan(history.size() - window_);
  }
  return Forward(net_, history).q;
}

std::unique_ptr<QFunction> LstmQFunction::Clone() const {
  return std::make_unique<LstmQFunction>(*this);
}

double LstmQFunction::Learn(std::span<const ReplaySample> batch) {
  BatchGradientResult g = parallel_ ? BatchGradient(net_, batch, gamma_)
                                    : BatchGradientSerial(net_, batch, gamma_);
  ApplyGradient(net_, g.grad, alpha_, clip_norm_);
  return g.mean_loss;
}

TabularQFunction::TabularQFunction(int num_states, int num_actions, double alpha, double gamma)
    : num_states_(num_states),
      num_actions_(num_actions),
      alpha_(alpha),
      gamma_(gamma),
      table_(static_cast<size_t>(num_states) * num_actions, 0.0) {
  if (num_states <= 0 || num_actions <= 0) throw DomainError("table dimensions must be positive");
}

int TabularQFunction::Index(const StateVector& s) const {
  long i = std::lround(s[0]);
  if (i < 0 || i >= num_states_) throw DomainError("tabular state out of range");
  return static_cast<int>(i);
}

std::vector<double> TabularQFunction::Values(std::span<const StateVector> history) const {
  if (history.empty()) throw DomainError("Values: empty history");
  int i = Index(history.back());
  return {table_.begin() + i * num_actions_, table_.begin() + (i + 1) * num_actions_};
}

std::unique_ptr<QFunction> TabularQFunction::Clone() const {
  return std::make_unique<TabularQFunction>(*this);
}

double TabularQFunction::Learn(std::span<const ReplaySample> batch) {
  double loss = 0.0;
  for (const ReplaySample& s : batch) {
    double target = s.reward;
    if (!s.terminal) {
      int j = Index(s.next_history.back());
      target += std::pow(gamma_, s.steps) * *std::max_element(table_.begin() + j * num_actions_,
                                           table_.begin() + (j + 1) * num_actions_);
    }
    double& q = table_[Index(s.history.back()) * num_actions_ + s.action];
    double td = target - q;
    q += alpha_ * td;
    loss += 0.5 * td * td;
  }
  return batch.empty() ? 0.0 : loss / batch.size();
}

namespace {

// Per-episode seeds stay below 2^53 so they survive a trip through f64.
uint64_t NextEpisodeSeed(Rng& rng) { return rng() >> 11; }

int ChooseAction(const QFunction& q, std::span<const StateVector> history, double eps,
                 Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < eps) {
    std::uniform_int_distribution<int> pick(0, q.num_actions() - 1);
    return pick(rng);
  }
  return GreedyAction(q.Values(history));
}

}  // namespace

TrainStats TrainAgent(Environment& env, QFunction& learner, const TrainOptions& options) {
  const HyperParams& hp = options.hp;
  hp.Validate();
  if (env.num_actions() != learner.num_actions()) {
    throw DomainError("environment and Q function disagree on the number of actions");
  }
  Rng episode_rng = MakeStream(options.seed, 1);
  Rng explore_rng = MakeStream(options.seed, 2);
  Rng replay_rng = MakeStream(options.seed, 3);

  ReplayPool owned_pool(options.pool != nullptr ? 1 : static_cast<size_t>(hp.replay_capacity));
  ReplayPool& pool = options.pool != nullptr ? *options.pool : owned_pool;
  TrainStats stats;

  std::mutex mu;  // guards snapshot, losses, counters below
  std::condition_variable cv;
  std::shared_ptr<const QFunction> snapshot = learner.Clone();
  int episodes_done = 0;
  int64_t budget = 0;  // updates the learner may run so far
  bool stop = false;

  auto gate_open = [&] {
    return episodes_done >= hp.e_threshold && pool.size() >= static_cast<size_t>(hp.batch);
  };

  // One learner update; returns false if it stopped the run.
  auto update = [&]() -> bool {
    std::vector<ReplaySample> batch = pool.SampleBatch(hp.batch, hp.window, replay_rng, hp.td_steps, hp.gamma);
    double loss;
    try {
      loss = learner.Learn(batch);
    } catch (const TrainingError& e) {
      std::lock_guard<std::mutex> lock(mu);
      stats.learner_stopped = true;
      stats.learner_error = e.what();
      stop = true;
      cv.notify_all();
      return false;
    }
    std::unique_ptr<QFunction> published;
    bool publish = (stats.updates + 1) % hp.publish_every == 0;
    if (publish) published = learner.Clone();
    std::lock_guard<std::mutex> lock(mu);
    stats.losses.push_back(loss);
    ++stats.updates;
    if (publish) {
      snapshot = std::move(published);
      ++stats.snapshots;
    }
    cv.notify_all();
    return true;
  };

  std::thread learner_thread;
  if (options.mode == ExecMode::kThreaded) {
    learner_thread = std::thread([&] {
      while (true) {
        {
          std::unique_lock<std::mutex> lock(mu);
          cv.wait(lock, [&] { return stop || stats.updates < budget; });
          if (stop) return;
        }
        if (!update()) return;
      }
    });
  }

  for (int e = 0; e < hp.episodes; ++e) {
    std::shared_ptr<const QFunction> policy;
    {
      std::lock_guard<std::mutex> lock(mu);
      if (stop) break;
      policy = snapshot;
    }
    EpisodeLog log;
    log.episode = e;
    log.epsilon = EpsilonAt(e, hp.eps_init, hp.eps_decay, hp.eps_floor);
    std::vector<Transition> episode;
    std::vector<StateVector> history;
    try {
      StateVector s = env.Reset(NextEpisodeSeed(episode_rng));
      history.push_back(s);
      for (int k = 0; k < options.max_steps; ++k) {
        int a = ChooseAction(*policy, history, log.epsilon, explore_rng);
        StepOutcome out = env.Step(a);
        episode.push_back({s, a, out.reward, out.next, out.terminal, e, k});
        ++stats.env_steps;
        ++log.steps;
        log.reward += out.reward;

        bool open;
        {
          std::lock_guard<std::mutex> lock(mu);
          open = gate_open();
          if (open) budget += hp.updates_per_step;
        }
        if (open && options.mode == ExecMode::kDeterministic) {
          for (int u = 0; u < hp.updates_per_step; ++u) {
            if (!update()) break;
          }
        } else if (open) {
          std::unique_lock<std::mutex> lock(mu);
          cv.notify_all();
          if (options.max_update_lag > 0) {
            cv.wait(lock, [&] {
              return stop || budget - stats.updates <= options.max_update_lag;
            });
          }
        }

        s = out.next;
        history.push_back(s);
        if (out.kind) log.kind = *out.kind;
        if (out.terminal || out.truncated) break;
      }
    } catch (const TransportError&) {
      log.aborted = true;
      episode.clear();
    }
    pool.AddEpisode(episode);
    {
      std::lock_guard<std::mutex> lock(mu);
      ++episodes_done;
      stats.episodes.push_back(log);
    }
    if (options.on_episode) options.on_episode(log);
  }

  if (learner_thread.joinable()) {
    {
      std::lock_guard<std::mutex> lock(mu);
      stop = true;
    }
    cv.notify_all();
    learner_thread.join();
  }
  return stats;
}

EpisodeLog RunGreedyEpisode(Environment& env, const QFunction& q, uint64_t episode_seed,
                            int max_steps) {
  EpisodeLog log;
  std::vector<StateVector> history{env.Reset(episode_seed)};
  for (int k = 0; k < max_steps; ++k) {
    StepOutcome out = env.Step(GreedyAction(q.Values(history)));
    ++log.steps;
    log.reward += out.reward;
    history.push_back(out.next);
    if (out.kind) log.kind = *out.kind;
    if (out.terminal || out.truncated) break;
  }
  return log;
}

double RecentSuccessRate(std::span<const EpisodeLog> episodes, int window) {
  if (episodes.empty() || window <= 0) return 0.0;
  size_t n = std::min(episodes.size(), static_cast<size_t>(window));
  auto tail = episodes.subspan(episodes.size() - n);
  size_t ok = std::count_if(tail.begin(), tail.end(), [](const EpisodeLog& l) {
    return !l.aborted && l.kind == TerminalKind::kSuccess;
  });
  return static_cast<double>(ok) / n;
}

InsertionEnvironment::InsertionEnvironment(RobotLink& link, const QNetwork& search_net,
                                           const PhaseSpec& search, const PhaseSpec& insertion,
                                           int window)
    : env_(link, search),
      search_q_(search_net, [&] {
        HyperParams hp;
        hp.window = window;
        return hp;
      }()),
      search_(search),
      insertion_(insertion) {
  if (search.phase != Phase::kSearch || insertion.phase != Phase::kInsertion) {
    throw DomainError("InsertionEnvironment needs a search and an insertion phase");
  }
  if (search_net.shape().actions != kSearchActions) {
    throw DomainError("search network must have 4 actions");
  }
}

StateVector InsertionEnvironment::Reset(uint64_t episode_seed) {
  ResetSpec r;
  r.mode = StartMode::kSearch;
  r.offset_mm = search_.d0_mm;
  r.seed = episode_seed;
  env_.ResetWith(r);
  std::vector<StateVector> history{env_.Continue(search_, env_.last_frame())};
  for (int k = 0; k < search_.k_max; ++k) {
    StepOutcome out = env_.Step(GreedyAction(search_q_.Values(history)));
    history.push_back(out.next);
    if (out.terminal) {
      if (out.kind == TerminalKind::kSuccess) {
        return env_.Continue(insertion_, env_.last_frame());
      }
      break;
    }
  }
  ++fallbacks_;
  r.mode = StartMode::kEngaged;
  r.offset_mm = 0.0;
  env_.ResetWith(r);
  return env_.Continue(insertion_, env_.last_frame());
}

StageResult TrainSearchStage(RobotLink& link, const PhaseSpec& spec, const QNetwork& init,
                             const HyperParams& hp, ExecMode mode, uint64_t seed,
                             const std::function<void(const EpisodeLog&)>& hook) {
  if (spec.phase != Phase::kSearch) throw DomainError("search stage needs a search phase");
  PegEnvironment env(link, spec);
  LstmQFunction q(init, hp);
  TrainOptions opts;
  opts.hp = hp;
  opts.mode = mode;
  opts.seed = seed;
  opts.on_episode = hook;
  TrainStats stats = TrainAgent(env, q, opts);
  return {q.net(), std::move(stats)};
}

CurriculumResult RunCurriculum(RobotLink& link, const CurriculumConfig& config,
                               const StageEpisodeHook& hook) {
  auto stage_hook = [&](const std::string& name) -> std::function<void(const EpisodeLog&)> {
    if (!hook) return {};
    return [&hook, name](const EpisodeLog& log) { hook(name, log); };
  };
  Rng init_rng = MakeStream(config.seed, 10);
  CurriculumResult result;

  QNetwork search_net = QNetwork::Initialized(config.search_shape, init_rng);
  search_net.set_input_scale(config.search_input_scale);
  result.search_stage1 =
      TrainSearchStage(link, config.stage1, search_net, config.search_hp, config.mode,
                       MakeStream(config.seed, 11)(), stage_hook("search_stage1"));
  if (result.search_stage1.stats.learner_stopped) {
    throw TrainingError("stage 1 learner stopped: " + result.search_stage1.stats.learner_error);
  }
  double rate = RecentSuccessRate(result.search_stage1.stats.episodes, config.gate_window);
  if (rate < config.gate_success_rate) {
    throw CurriculumGateError("stage 1 success rate " + std::to_string(rate) +
                                  " over the last " + std::to_string(config.gate_window) +
                                  " episodes is below the gate " +
                                  std::to_string(config.gate_success_rate),
                              result.search_stage1);
  }

  HyperParams hp2 = config.search_hp;
  hp2.eps_init = config.stage2_eps_init;
  result.search_stage2 =
      TrainSearchStage(link, config.stage2, result.search_stage1.net, hp2, config.mode,
                       MakeStream(config.seed, 12)(), stage_hook("search_stage2"));
  if (result.search_stage2.stats.learner_stopped) {
    throw TrainingError("stage 2 learner stopped: " + result.search_stage2.stats.learner_error);
  }

  QNetwork insertion_net = QNetwork::Initialized(config.insertion_shape, init_rng);
  insertion_net.set_input_scale(config.insertion_input_scale);
  InsertionEnvironment ienv(link, result.search_stage2.net, config.stage2, config.insertion,
                            config.search_hp.window);
  LstmQFunction q(insertion_net, config.insertion_hp);
  TrainOptions opts;
  opts.hp = config.insertion_hp;
  opts.mode = config.mode;
  opts.seed = MakeStream(config.seed, 13)();
  opts.on_episode = stage_hook("insertion");
  result.insertion.stats = TrainAgent(ienv, q, opts);
  result.insertion.net = q.net();
  if (result.insertion.stats.learner_stopped) {
    throw TrainingError("insertion learner stopped: " + result.insertion.stats.learner_error);
  }
  return result;
}

}  // namespace pegrl

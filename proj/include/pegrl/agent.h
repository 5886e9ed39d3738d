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

#ifndef PEGRL_AGENT_H_
#define PEGRL_AGENT_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pegrl/batch_gradient.h"
#include "pegrl/env.h"
#include "pegrl/lstm_q.h"

namespace pegrl {

struct Transition {
  StateVector s{};
  int a = 0;
  double r = 0.0;
  StateVector s_next{};
  bool terminal = false;
  int64_t episode_id = 0;
  int step_index = 0;
};

// FIFO experience pool. Appends and sampling may come from different
// threads; every access holds the pool lock, so a reader never sees a
// half-written transition.
class ReplayPool {
 public:
  explicit ReplayPool(size_t capacity = 20000);

  void Add(const Transition& t);
  void AddEpisode(std::span<const Transition> episode);
  void Clear();

  size_t size() const;
  size_t capacity() const { return capacity_; }
  uint64_t total_added() const;
  // 0 is the oldest stored transition.
  Transition At(size_t index) const;

  // Rebuilds the recurrent context of transition `index`: up to `window`
  // states ending at s, and up to `window` states ending at the state the
  // target bootstraps from. With `td_steps` > 1 the rewards of the following
  // transitions of the same episode are added with discount `gamma` until a
  // terminal, a gap or `td_steps` transitions.
  ReplaySample MakeSample(size_t index, int window, int td_steps = 1,
                          double gamma = 1.0) const;

  // `n` uniform draws with replacement.
  std::vector<ReplaySample> SampleBatch(size_t n, int window, Rng& rng, int td_steps = 1,
                                        double gamma = 1.0) const;

 private:
  const Transition& AtLocked(size_t index) const;
  ReplaySample MakeSampleLocked(size_t index, int window, int td_steps, double gamma) const;

  size_t capacity_;
  mutable std::mutex mu_;
  std::vector<Transition> ring_;
  size_t head_ = 0;
  size_t size_ = 0;
  uint64_t added_ = 0;
};

struct HyperParams {
  double gamma = 0.9;
  double alpha = 1e-3;
  double eps_init = 1.0;
  double eps_decay = 0.005;
  double eps_floor = 0.1;
  int episodes = 230;
  int e_threshold = 10;
  int batch = 64;
  int window = 8;
  int replay_capacity = 20000;
  double clip_norm = 1.0;
  // Learner publishes a snapshot every this many updates.
  int publish_every = 10;
  // Learner updates per environment step once learning has started.
  int updates_per_step = 1;
  // Transitions summed into one target before bootstrapping.
  int td_steps = 1;

  void Validate() const;
};

// Settings the curriculum trains the LSTM learners with.
HyperParams CurriculumHyperParams();

// max(eps_init - decay * episode, floor), with episodes counted from 0.
double EpsilonAt(int episode, double eps_init, double decay, double floor);
// Stage 1 starts from 1.0, stage 2 from 0.5; decay 0.005, floor 0.1.
double EpsilonAt(int episode, int stage);

// Action-value function used by the training loop.
class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual int num_actions() const = 0;
  // Q values after observing `history` (oldest first).
  virtual std::vector<double> Values(std::span<const StateVector> history) const = 0;
  virtual std::unique_ptr<QFunction> Clone() const = 0;
  // One update on a minibatch; returns the mean loss.
  virtual double Learn(std::span<const ReplaySample> batch) = 0;
};

class LstmQFunction : public QFunction {
 public:
  LstmQFunction(QNetwork net, const HyperParams& hp, bool parallel = true);

  int num_actions() const override { return net_.shape().actions; }
  std::vector<double> Values(std::span<const StateVector> history) const override;
  std::unique_ptr<QFunction> Clone() const override;
  double Learn(std::span<const ReplaySample> batch) override;

  const QNetwork& net() const { return net_; }

 private:
  QNetwork net_;
  double gamma_;
  double alpha_;
  double clip_norm_;
  int window_;
  bool parallel_;
};

// Lookup table keyed by the integer in state component 0; Learn applies the
// Bellman table update sample by sample.
class TabularQFunction : public QFunction {
 public:
  TabularQFunction(int num_states, int num_actions, double alpha, double gamma);

  int num_actions() const override { return num_actions_; }
  std::vector<double> Values(std::span<const StateVector> history) const override;
  std::unique_ptr<QFunction> Clone() const override;
  double Learn(std::span<const ReplaySample> batch) override;

  double Q(int state, int action) const { return table_[state * num_actions_ + action]; }

 private:
  int Index(const StateVector& s) const;

  int num_states_;
  int num_actions_;
  double alpha_;
  double gamma_;
  std::vector<double> table_;
};

enum class ExecMode { kDeterministic, kThreaded };

struct EpisodeLog {
  int episode = 0;
  int steps = 0;
  double reward = 0.0;
  double epsilon = 0.0;
  TerminalKind kind = TerminalKind::kTimeout;
  bool aborted = false;
};

struct TrainOptions {
  HyperParams hp;
  ExecMode mode = ExecMode::kDeterministic;
  uint64_t seed = 0;
  // Safety cap on steps per episode for environments that never end.
  int max_steps = 100000;
  // Threaded mode: the action loop waits while the learner is more than
  // this many updates behind its budget (0 disables the wait).
  int max_update_lag = 64;
  std::function<void(const EpisodeLog&)> on_episode;
  // Replaces the internal pool when set; must be empty and sized by the caller.
  ReplayPool* pool = nullptr;
};

struct TrainStats {
  std::vector<EpisodeLog> episodes;
  std::vector<double> losses;
  int64_t updates = 0;
  int64_t env_steps = 0;
  int64_t snapshots = 0;
  // Set when the learner hit a non-finite update and stopped the run.
  bool learner_stopped = false;
  std::string learner_error;
};

// Runs the action loop (episodes, epsilon-greedy, replay storage) and the
// learning loop (minibatch updates, snapshot publication) until hp.episodes
// episodes are done. `learner` ends up holding the trained function.
// Deterministic mode alternates both loops on the calling thread; threaded
// mode runs them on two threads with the same update budget per env step.
TrainStats TrainAgent(Environment& env, QFunction& learner, const TrainOptions& options);

// Greedy rollout of one episode; returns its log (epsilon 0).
EpisodeLog RunGreedyEpisode(Environment& env, const QFunction& q, uint64_t episode_seed,
                            int max_steps = 100000);

// Fraction of successes among the last `window` episodes.
double RecentSuccessRate(std::span<const EpisodeLog> episodes, int window);

// Insertion episodes: the search network drives the peg into the hole and
// the insertion phase starts from there. If the search times out the robot
// is reset straight into an engaged start.
class InsertionEnvironment : public Environment {
 public:
  InsertionEnvironment(RobotLink& link, const QNetwork& search_net, const PhaseSpec& search,
                       const PhaseSpec& insertion, int window);

  int num_actions() const override { return kInsertionActions; }
  StateVector Reset(uint64_t episode_seed) override;
  StepOutcome Step(int action) override { return env_.Step(action); }

  int fallbacks() const { return fallbacks_; }

 private:
  PegEnvironment env_;
  LstmQFunction search_q_;
  PhaseSpec search_;
  PhaseSpec insertion_;
  int fallbacks_ = 0;
};

struct CurriculumConfig {
  PhaseSpec stage1 = PhaseSpec::Search(1.0, 3.0);
  PhaseSpec stage2 = PhaseSpec::Search(3.0, 5.0);
  PhaseSpec insertion = PhaseSpec::Insertion();
  HyperParams search_hp = CurriculumHyperParams();
  HyperParams insertion_hp = CurriculumHyperParams();
  double stage2_eps_init = 0.5;
  double gate_success_rate = 0.6;
  int gate_window = 50;
  LstmShape search_shape{kStateDim, 20, 15, kSearchActions};
  LstmShape insertion_shape{kStateDim, 20, 15, kInsertionActions};
  std::array<double, kStateDim> search_input_scale{0.25, 0.25, 0.05, 7.5, 7.5, 0.33, 0.33};
  std::array<double, kStateDim> insertion_input_scale{1, 1, 0.05, 7.5, 7.5, 1, 1};
  ExecMode mode = ExecMode::kDeterministic;
  uint64_t seed = 0;
};

struct StageResult {
  QNetwork net;
  TrainStats stats;
};

struct CurriculumResult {
  StageResult search_stage1;
  StageResult search_stage2;
  StageResult insertion;
};

class CurriculumGateError : public TrainingError {
 public:
  CurriculumGateError(const std::string& what, StageResult stage1)
      : TrainingError(what), stage1_(std::move(stage1)) {}
  const StageResult& stage1() const { return stage1_; }

 private:
  StageResult stage1_;
};

// Called after each finished episode with the stage name.
using StageEpisodeHook = std::function<void(const std::string& stage, const EpisodeLog&)>;

// Search stage 1, search stage 2 (warm start), then insertion training with
// entries produced by the stage 2 search network. Throws CurriculumGateError
// when stage 1 ends below the success gate.
CurriculumResult RunCurriculum(RobotLink& link, const CurriculumConfig& config,
                               const StageEpisodeHook& hook = {});

StageResult TrainSearchStage(RobotLink& link, const PhaseSpec& spec, const QNetwork& init,
                             const HyperParams& hp, ExecMode mode, uint64_t seed,
                             const std::function<void(const EpisodeLog&)>& hook = {});

}  // namespace pegrl

#endif  // PEGRL_AGENT_H_

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

#ifndef PEGRL_CONFIG_H_
#define PEGRL_CONFIG_H_

#include <memory>
#include <stdexcept>
#include <string>

#include "pegrl/agent.h"
#include "pegrl/contact_sim.h"
#include "pegrl/controller.h"
#include "pegrl/env.h"
#include "pegrl/evaluation.h"
#include "pegrl/robot_service.h"

namespace pegrl {

// Invalid configuration. what() reads "<file>:<line>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct RunConfig {
  // Simulator.
  HoleSpec hole;
  ContactParams contact;
  SensorParams sensor;
  EpisodeParams episode;
  ControllerParams controller;

  // Curriculum.
  CurriculumConfig curriculum;

  // Evaluation.
  int eval_trials = 100;
  double histogram_bin_s = 0.2;

  // "in-process" or "udp:<host>:<port>".
  std::string transport = "in-process";
  ClientOptions client;
  ServerOptions server;

  // "deterministic" or "threaded".
  std::string mode = "deterministic";
  // Case whose clearance and tilt replace the hole block ("" keeps it).
  std::string train_case;
  uint64_t seed = 0;
  std::string out_dir = "runs/default";

  // Throws DomainError naming the offending block.
  void Validate() const;
  HoleSpec EffectiveHole() const;
};

// Simulator plus the link the agent talks through. For a UDP transport the
// controller is absent and the link is a client.
struct RobotRig {
  std::unique_ptr<Controller> controller;
  std::unique_ptr<RobotLink> link;
};

Controller MakeController(const RunConfig& config);
RobotRig MakeRig(const RunConfig& config);

// Curriculum settings with the run's seed and execution mode applied.
CurriculumConfig MakeCurriculum(const RunConfig& config);

// Evaluation settings: stage-2 search and insertion phases, trial count,
// window, seed and cycle time from the config.
EvalOptions MakeEvalOptions(const RunConfig& config);

// Missing keys keep their defaults; unknown keys are rejected.
RunConfig LoadConfig(const std::string& path);
RunConfig ParseConfig(const std::string& text, const std::string& name = "<config>");
std::string SaveConfig(const RunConfig& config);
void SaveConfigFile(const RunConfig& config, const std::string& path);

}  // namespace pegrl

#endif  // PEGRL_CONFIG_H_

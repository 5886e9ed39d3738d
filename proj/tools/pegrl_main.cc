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

// pegrl: train, evaluate, serve and report.
//
// Every flag can also be given through the environment with the PEGRL_
// prefix, e.g. PEGRL_SEED=3 or PEGRL_TRANSPORT=udp:127.0.0.1:5005.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pegrl/agent.h"
#include "pegrl/config.h"
#include "pegrl/evaluation.h"
#include "pegrl/lstm_q.h"
#include "pegrl/report.h"
#include "pegrl/robot_service.h"

namespace {

using pegrl::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitGate = 3;

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop.store(true); }

struct CommonFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::string transport;
};

void AddCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "YAML run configuration")->envname("PEGRL_CONFIG");
  cmd->add_option("--seed", f.seed, "master seed")->envname("PEGRL_SEED");
  cmd->add_option("--out", f.out, "output directory")->envname("PEGRL_OUT");
  cmd->add_option("--transport", f.transport, "in-process or udp:<host>:<port>")
      ->envname("PEGRL_TRANSPORT");
}

// Loads the config and applies flag overrides; revalidates afterwards.
RunConfig ResolveConfig(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? pegrl::ParseConfig("") : pegrl::LoadConfig(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.transport.empty()) c.transport = f.transport;
  c.Validate();
  return c;
}

nlohmann::json HyperJson(const pegrl::HyperParams& h) {
  return {{"gamma", h.gamma},
          {"alpha", h.alpha},
          {"eps_init", h.eps_init},
          {"eps_decay", h.eps_decay},
          {"eps_floor", h.eps_floor},
          {"episodes", h.episodes},
          {"e_threshold", h.e_threshold},
          {"batch", h.batch},
          {"window", h.window},
          {"replay_capacity", h.replay_capacity},
          {"clip_norm", h.clip_norm},
          {"publish_every", h.publish_every},
          {"updates_per_step", h.updates_per_step},
          {"td_steps", h.td_steps}};
}

nlohmann::json PhaseJson(const pegrl::PhaseSpec& p) {
  return {{"phase", p.phase == pegrl::Phase::kSearch ? "search" : "insertion"},
          {"k_max", p.k_max},
          {"d0_mm", p.d0_mm},
          {"grid_c_mm", p.grid_c_mm},
          {"safe_d_mm", p.safe_d_mm},
          {"dz_entry_mm", p.dz_entry_mm},
          {"z_goal_mm", p.z_goal_mm}};
}

void WriteManifest(const RunConfig& c, const std::string& command, const nlohmann::json& extra) {
  const pegrl::CurriculumConfig& cc = c.curriculum;
  nlohmann::json m;
  m["command"] = command;
  m["seed"] = c.seed;
  m["streams"] = {{"episode", 1}, {"exploration", 2}, {"replay", 3}, {"eval", 4},
                  {"init", 10},   {"stage1", 11},     {"stage2", 12}, {"insertion", 13}};
  m["mode"] = c.mode;
  m["transport"] = c.transport;
  m["case"] = c.train_case;
  m["stages"] = {{"stage1", PhaseJson(cc.stage1)},
                 {"stage2", PhaseJson(cc.stage2)},
                 {"insertion", PhaseJson(cc.insertion)}};
  m["hyperparameters"] = {{"search", HyperJson(cc.search_hp)},
                          {"insertion", HyperJson(cc.insertion_hp)},
                          {"stage2_eps_init", cc.stage2_eps_init},
                          {"gate_success_rate", cc.gate_success_rate},
                          {"gate_window", cc.gate_window}};
  m["config"] = pegrl::SaveConfig(c);
  if (extra.is_object()) m.update(extra);
  std::ofstream(c.out_dir + "/manifest_" + command + ".json") << m.dump(2) << "\n";
}

int CmdTrain(const CommonFlags& flags, const std::string& case_name) {
  RunConfig c = ResolveConfig(flags);
  if (!case_name.empty()) {
    c.train_case = case_name;
    c.Validate();
  }
  std::filesystem::create_directories(c.out_dir);
  pegrl::SaveConfigFile(c, c.out_dir + "/config.yaml");
  WriteManifest(c, "train", {});

  pegrl::RobotRig rig = pegrl::MakeRig(c);
  std::ofstream csv(c.out_dir + "/episodes.csv");
  csv << pegrl::EpisodeCsvHeader();
  auto hook = [&](const std::string& stage, const pegrl::EpisodeLog& log) {
    csv << pegrl::EpisodeCsvLine(stage, log);
    csv.flush();
    if (log.episode % 10 == 0) {
      std::cerr << stage << " episode " << log.episode << " steps " << log.steps << " reward "
                << log.reward << "\n";
    }
  };
  try {
    pegrl::CurriculumResult r = pegrl::RunCurriculum(*rig.link, pegrl::MakeCurriculum(c), hook);
    pegrl::SaveWeights(r.search_stage1.net, c.out_dir + "/search_stage1.wts");
    pegrl::SaveWeights(r.search_stage2.net, c.out_dir + "/search_stage2.wts");
    pegrl::SaveWeights(r.insertion.net, c.out_dir + "/insertion.wts");
  } catch (const pegrl::CurriculumGateError& e) {
    pegrl::SaveWeights(e.stage1().net, c.out_dir + "/search_stage1.wts");
    std::cerr << "curriculum gate: " << e.what() << "\n";
    return kExitGate;
  }
  std::cout << "wrote " << c.out_dir << "\n";
  return kExitOk;
}

int CmdEval(const CommonFlags& flags, const std::string& weights_dir, const std::string& case_name,
            std::optional<int> trials, std::optional<double> offset) {
  RunConfig c = ResolveConfig(flags);
  pegrl::CaseSpec spec;
  if (case_name == "custom") {
    spec.name = "custom";
    spec.clearance_um = c.hole.clearance_um;
    spec.tilt_deg = c.hole.tilt_deg;
    spec.offset_mm = offset.value_or(c.curriculum.stage2.d0_mm);
  } else {
    spec = pegrl::CaseSpec::Named(case_name);
    if (offset) spec.offset_mm = *offset;
  }
  c.hole = pegrl::ApplyCase(c.hole, spec);
  c.train_case.clear();
  std::string dir = weights_dir.empty() ? c.out_dir : weights_dir;
  pegrl::QNetwork search = pegrl::LoadWeights(dir + "/search_stage2.wts");
  pegrl::QNetwork insertion = pegrl::LoadWeights(dir + "/insertion.wts");

  pegrl::EvalOptions opts = pegrl::MakeEvalOptions(c);
  if (trials) opts.trials = *trials;

  pegrl::RobotRig rig = pegrl::MakeRig(c);
  pegrl::EvalReport report = pegrl::Evaluate(*rig.link, search, insertion, spec, opts);
  std::filesystem::create_directories(c.out_dir);
  pegrl::WriteEvalReport(report, opts.histogram_bin_s, c.out_dir);
  WriteManifest(c, "eval", {{"weights", dir}, {"trials", opts.trials}});
  std::cout << pegrl::SummaryTable({report});
  return kExitOk;
}

int CmdServe(const CommonFlags& flags, const std::string& bind, const std::string& case_name) {
  RunConfig c = ResolveConfig(flags);
  if (!bind.empty()) c.server.bind = bind;
  if (!case_name.empty()) c.train_case = case_name;
  c.Validate();
  pegrl::Controller controller = pegrl::MakeController(c);
  std::optional<pegrl::RobotServer> server;
  try {
    server.emplace(controller, c.server);
  } catch (const pegrl::TransportError& e) {
    std::cerr << "serve: " << e.what() << "\n";
    return kExitInvalid;
  }
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  std::cerr << "serving on port " << server->port() << "\n";
  server->Serve(g_stop);
  std::cerr << "served " << server->handled() << " requests (" << server->cache_hits()
            << " repeats)\n";
  return kExitOk;
}

int CmdReport(const std::string& run_dir, int window, const std::string& out) {
  std::vector<pegrl::EpisodeRow> rows = pegrl::ReadEpisodeCsv(run_dir + "/episodes.csv");
  std::vector<pegrl::StageReport> reports = pegrl::BuildReport(rows, window);
  pegrl::WriteReport(reports, out.empty() ? run_dir : out);
  for (const pegrl::StageReport& s : reports) {
    std::cout << s.stage << ": final reward " << s.reward.back().mean << " ["
              << s.reward.back().lo << ", " << s.reward.back().hi << "], steps "
              << s.steps.back().mean << ", spearman " << s.reward_trend << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peg-in-hole reinforcement learning on a simulated force-controlled robot"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, serve_flags;
  std::string train_case, eval_case = "A", eval_weights, serve_bind, serve_case;
  std::optional<int> trials;
  std::optional<double> offset;
  std::string report_dir, report_out;
  int report_window = 20;

  CLI::App* train = app.add_subcommand("train", "run the curriculum and write weights and logs");
  AddCommon(train, train_flags);
  train->add_option("--case", train_case, "train on the geometry of case A or B")
      ->envname("PEGRL_CASE");

  CLI::App* eval = app.add_subcommand("eval", "greedy evaluation of trained weights");
  AddCommon(eval, eval_flags);
  eval->add_option("--case", eval_case, "A, B or custom")->envname("PEGRL_CASE");
  eval->add_option("--trials", trials, "number of trials")->envname("PEGRL_TRIALS");
  eval->add_option("--weights", eval_weights, "directory with .wts files")
      ->envname("PEGRL_WEIGHTS");
  eval->add_option("--offset", offset, "initial offset in mm");

  CLI::App* serve = app.add_subcommand("serve", "run the simulated robot behind UDP");
  AddCommon(serve, serve_flags);
  serve->add_option("--bind", serve_bind, "host:port")->envname("PEGRL_BIND");
  serve->add_option("--case", serve_case, "simulate the geometry of case A or B")
      ->envname("PEGRL_CASE");

  CLI::App* report = app.add_subcommand("report", "moving-window statistics of a run");
  report->add_option("run_dir", report_dir, "run directory with episodes.csv")->required();
  report->add_option("--window", report_window, "episodes per window")->check(CLI::PositiveNumber);
  report->add_option("--out", report_out, "output directory (default: run_dir)")
      ->envname("PEGRL_OUT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return CmdTrain(train_flags, train_case);
    if (*eval) return CmdEval(eval_flags, eval_weights, eval_case, trials, offset);
    if (*serve) return CmdServe(serve_flags, serve_bind, serve_case);
    if (*report) return CmdReport(report_dir, report_window, report_out);
  } catch (const pegrl::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const pegrl::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const pegrl::ProtocolError& e) {
    std::cerr << "protocol: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

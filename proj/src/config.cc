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

#include "pegrl/config.h"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

namespace pegrl {

ConfigError::ConfigError(const std::string& file, int line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

// Shortest text that parses back to the same double.
std::string ShortestDouble(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

using InputScale = std::array<double, kStateDim>;
using FieldPtr = std::variant<double*, int*, bool*, std::string*, uint64_t*, InputScale*>;

struct Field {
  const char* key;
  FieldPtr ptr;
};

struct Section {
  const char* name;
  std::vector<Field> fields;
  // Checks the block once all of its keys are read.
  std::function<void()> validate;
};

void ValidateEpisode(const EpisodeParams& e) {
  if (e.center_error_max_mm < 0.0 || e.peg_rot_jitter_deg < 0.0) {
    throw DomainError("episode randomization ranges must be non-negative");
  }
  if (!(e.engaged_min_mm > 0.0) || e.engaged_max_mm < e.engaged_min_mm) {
    throw DomainError("engaged depth range must satisfy 0 < min <= max");
  }
}

void ValidateScale(const InputScale& s) {
  for (double v : s) {
    if (!std::isfinite(v) || v == 0.0) throw DomainError("input scale entries must be finite and non-zero");
  }
}

void ValidateSearch(const PhaseSpec& p) {
  if (p.phase != Phase::kSearch) throw DomainError("expected a search phase");
  p.Validate();
}

std::vector<Section> Sections(RunConfig& c) {
  CurriculumConfig& cc = c.curriculum;
  auto hp_fields = [](HyperParams& h) {
    return std::vector<Field>{{"gamma", &h.gamma},
                              {"alpha", &h.alpha},
                              {"eps_init", &h.eps_init},
                              {"eps_decay", &h.eps_decay},
                              {"eps_floor", &h.eps_floor},
                              {"episodes", &h.episodes},
                              {"e_threshold", &h.e_threshold},
                              {"batch", &h.batch},
                              {"window", &h.window},
                              {"replay_capacity", &h.replay_capacity},
                              {"clip_norm", &h.clip_norm},
                              {"publish_every", &h.publish_every},
                              {"updates_per_step", &h.updates_per_step},
                              {"td_steps", &h.td_steps}};
  };
  auto search_fields = [](PhaseSpec& p) {
    return std::vector<Field>{{"k_max", &p.k_max},
                              {"d0_mm", &p.d0_mm},
                              {"grid_c_mm", &p.grid_c_mm},
                              {"safe_d_mm", &p.safe_d_mm},
                              {"dz_entry_mm", &p.dz_entry_mm}};
  };
  return {
      {"hole",
       {{"diameter_mm", &c.hole.diameter_mm},
        {"clearance_um", &c.hole.clearance_um},
        {"depth_mm", &c.hole.depth_mm},
        {"tilt_deg", &c.hole.tilt_deg},
        {"tilt_axis_deg", &c.hole.tilt_axis_deg}},
       [&c] { c.hole.Validate(); }},
      {"contact",
       {{"friction_mu", &c.contact.friction_mu},
        {"mobility_mm_per_n_cycle", &c.contact.mobility_mm_per_n_cycle},
        {"capture_radius_mm", &c.contact.capture_radius_mm},
        {"moment_lever_m", &c.contact.moment_lever_m},
        {"moment_onset_n", &c.contact.moment_onset_n},
        {"entry_depth_mm", &c.contact.entry_depth_mm},
        {"insertion_mobility_mm_per_n_cycle", &c.contact.insertion_mobility_mm_per_n_cycle},
        {"wall_friction_ratio", &c.contact.wall_friction_ratio},
        {"wall_moment_lever_m", &c.contact.wall_moment_lever_m},
        {"compliance_deg", &c.contact.compliance_deg},
        {"cycle_s", &c.contact.cycle_s}},
       [&c] { c.contact.Validate(); }},
      {"sensor",
       {{"force_noise_n", &c.sensor.force_noise_n},
        {"moment_noise_nm", &c.sensor.moment_noise_nm},
        {"position_noise_mm", &c.sensor.position_noise_mm},
        {"force_resolution_n", &c.sensor.force_resolution_n},
        {"position_bias_mm", &c.sensor.position_bias_mm}},
       [&c] { c.sensor.Validate(); }},
      {"episode",
       {{"center_error_max_mm", &c.episode.center_error_max_mm},
        {"peg_rot_jitter_deg", &c.episode.peg_rot_jitter_deg},
        {"engaged_min_mm", &c.episode.engaged_min_mm},
        {"engaged_max_mm", &c.episode.engaged_max_mm}},
       [&c] { ValidateEpisode(c.episode); }},
      {"controller",
       {{"sample_period_s", &c.controller.sample_period_s},
        {"rot_increment_deg", &c.controller.rot_increment_deg},
        {"hold_force_n", &c.controller.hold_force_n},
        {"realtime", &c.controller.realtime}},
       [&c] { c.controller.Validate(); }},
      {"stage1", search_fields(cc.stage1), [&cc] { ValidateSearch(cc.stage1); }},
      {"stage2", search_fields(cc.stage2), [&cc] { ValidateSearch(cc.stage2); }},
      {"insertion",
       {{"k_max", &cc.insertion.k_max}, {"z_goal_mm", &cc.insertion.z_goal_mm}},
       [&cc] { cc.insertion.Validate(); }},
      {"search_hp", hp_fields(cc.search_hp), [&cc] { cc.search_hp.Validate(); }},
      {"insertion_hp", hp_fields(cc.insertion_hp), [&cc] { cc.insertion_hp.Validate(); }},
      {"curriculum",
       {{"stage2_eps_init", &cc.stage2_eps_init},
        {"gate_success_rate", &cc.gate_success_rate},
        {"gate_window", &cc.gate_window}},
       [&cc] {
         if (!(cc.stage2_eps_init >= 0.0 && cc.stage2_eps_init <= 1.0)) {
           throw DomainError("stage2_eps_init must be in [0, 1]");
         }
         if (cc.stage2_eps_init < cc.search_hp.eps_floor) {
           throw DomainError("stage2_eps_init must not be below search_hp.eps_floor");
         }
         if (!(cc.gate_success_rate >= 0.0 && cc.gate_success_rate <= 1.0)) {
           throw DomainError("gate_success_rate must be in [0, 1]");
         }
         if (cc.gate_window <= 0) throw DomainError("gate_window must be positive");
       }},
      {"network",
       {{"search_h1", &cc.search_shape.h1},
        {"search_h2", &cc.search_shape.h2},
        {"insertion_h1", &cc.insertion_shape.h1},
        {"insertion_h2", &cc.insertion_shape.h2},
        {"search_input_scale", &cc.search_input_scale},
        {"insertion_input_scale", &cc.insertion_input_scale}},
       [&cc] {
         if (cc.search_shape.h1 <= 0 || cc.search_shape.h2 <= 0 || cc.insertion_shape.h1 <= 0 ||
             cc.insertion_shape.h2 <= 0) {
           throw DomainError("hidden sizes must be positive");
         }
         ValidateScale(cc.search_input_scale);
         ValidateScale(cc.insertion_input_scale);
       }},
      {"eval",
       {{"trials", &c.eval_trials}, {"histogram_bin_s", &c.histogram_bin_s}},
       [&c] {
         if (c.eval_trials <= 0) throw DomainError("trials must be positive");
         if (!(c.histogram_bin_s > 0.0)) throw DomainError("histogram_bin_s must be positive");
       }},
      {"transport",
       {{"link", &c.transport},
        {"timeout_ms", &c.client.timeout_ms},
        {"attempts", &c.client.attempts},
        {"client_drop_rate", &c.client.drop_rate},
        {"client_fault_seed", &c.client.fault_seed},
        {"bind", &c.server.bind},
        {"server_drop_rate", &c.server.drop_rate},
        {"server_fault_seed", &c.server.fault_seed}},
       [&c] {
         if (c.transport != "in-process") {
           if (c.transport.rfind("udp:", 0) != 0) {
             throw DomainError("link must be 'in-process' or 'udp:<host>:<port>'");
           }
           ParseEndpoint(c.transport.substr(4));
         }
         ParseEndpoint(c.server.bind);
         if (c.client.timeout_ms <= 0 || c.client.attempts <= 0) {
           throw DomainError("timeout_ms and attempts must be positive");
         }
         for (double r : {c.client.drop_rate, c.server.drop_rate}) {
           if (!(r >= 0.0 && r < 1.0)) throw DomainError("drop rates must be in [0, 1)");
         }
       }},
      {"run",
       {{"mode", &c.mode}, {"case", &c.train_case}, {"seed", &c.seed}, {"out_dir", &c.out_dir}},
       [&c] {
         if (c.mode != "deterministic" && c.mode != "threaded") {
           throw DomainError("mode must be 'deterministic' or 'threaded'");
         }
         if (!c.train_case.empty()) CaseSpec::Named(c.train_case);
         if (c.out_dir.empty()) throw DomainError("out_dir must not be empty");
       }},
  };
}

int Line(const YAML::Node& n) { return n.Mark().line + 1; }

void ReadField(const YAML::Node& node, const FieldPtr& ptr) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InputScale>) {
          if (!node.IsSequence() || node.size() != kStateDim) {
            throw DomainError("expected a list of 7 numbers");
          }
          for (int i = 0; i < kStateDim; ++i) (*p)[i] = node[i].as<double>();
        } else {
          if (!node.IsScalar()) throw DomainError("expected a scalar value");
          *p = node.as<T>();
        }
      },
      ptr);
}

}  // namespace

void RunConfig::Validate() const {
  RunConfig copy = *this;
  for (Section& s : Sections(copy)) {
    try {
      s.validate();
    } catch (const DomainError& e) {
      throw DomainError(std::string(s.name) + ": " + e.what());
    }
  }
}

HoleSpec RunConfig::EffectiveHole() const {
  if (train_case.empty()) return hole;
  return ApplyCase(hole, CaseSpec::Named(train_case));
}

Controller MakeController(const RunConfig& config) {
  ContactSimulator sim(config.EffectiveHole(), config.contact, config.sensor, config.episode);
  return Controller(std::move(sim), config.controller);
}

RobotRig MakeRig(const RunConfig& config) {
  RobotRig rig;
  if (config.transport == "in-process") {
    rig.controller = std::make_unique<Controller>(MakeController(config));
    rig.link = std::make_unique<InProcessLink>(*rig.controller);
    return rig;
  }
  ClientOptions client = config.client;
  client.server = config.transport.substr(4);
  rig.link = std::make_unique<UdpRobotClient>(client);
  return rig;
}

CurriculumConfig MakeCurriculum(const RunConfig& config) {
  CurriculumConfig c = config.curriculum;
  c.seed = config.seed;
  c.mode = config.mode == "threaded" ? ExecMode::kThreaded : ExecMode::kDeterministic;
  return c;
}

EvalOptions MakeEvalOptions(const RunConfig& config) {
  EvalOptions opts;
  opts.search = config.curriculum.stage2;
  opts.insertion = config.curriculum.insertion;
  opts.trials = config.eval_trials;
  opts.window = config.curriculum.search_hp.window;
  opts.seed = config.seed;
  opts.cycle_s = config.contact.cycle_s;
  opts.histogram_bin_s = config.histogram_bin_s;
  return opts;
}

RunConfig ParseConfig(const std::string& text, const std::string& name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(name, e.mark.line + 1, e.msg);
  }
  RunConfig c;
  if (root.IsNull()) {
    c.Validate();
    return c;
  }
  if (!root.IsMap()) throw ConfigError(name, Line(root), "top level must be a mapping");

  std::vector<Section> sections = Sections(c);
  std::map<std::string, Section*> by_name;
  for (Section& s : sections) by_name[s.name] = &s;

  std::vector<std::pair<Section*, int>> seen;
  for (const auto& kv : root) {
    std::string key = kv.first.as<std::string>();
    auto it = by_name.find(key);
    if (it == by_name.end()) throw ConfigError(name, Line(kv.first), "unknown block '" + key + "'");
    if (!kv.second.IsMap()) {
      throw ConfigError(name, Line(kv.first), "block '" + key + "' must be a mapping");
    }
    for (const auto& field : kv.second) {
      std::string fkey = field.first.as<std::string>();
      const Field* f = nullptr;
      for (const Field& cand : it->second->fields) {
        if (fkey == cand.key) f = &cand;
      }
      if (f == nullptr) {
        throw ConfigError(name, Line(field.first), "unknown key '" + key + "." + fkey + "'");
      }
      try {
        ReadField(field.second, f->ptr);
      } catch (const YAML::Exception&) {
        throw ConfigError(name, Line(field.second), key + "." + fkey + ": wrong value type");
      } catch (const DomainError& e) {
        throw ConfigError(name, Line(field.second), key + "." + fkey + ": " + e.what());
      }
    }
    seen.emplace_back(it->second, Line(kv.first));
  }
  // Blocks are validated in declaration order so cross-block checks see the
  // final values; errors point at the block header when present.
  for (Section& s : sections) {
    int line = 1;
    for (auto& [sec, l] : seen) {
      if (sec == &s) line = l;
    }
    try {
      s.validate();
    } catch (const DomainError& e) {
      throw ConfigError(name, line, std::string(s.name) + ": " + e.what());
    }
  }
  return c;
}

RunConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path);
}

std::string SaveConfig(const RunConfig& config) {
  RunConfig c = config;
  YAML::Emitter out;
  out << YAML::BeginMap;
  for (Section& s : Sections(c)) {
    out << YAML::Key << s.name << YAML::Value << YAML::BeginMap;
    for (const Field& f : s.fields) {
      out << YAML::Key << f.key << YAML::Value;
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, InputScale>) {
              out << YAML::Flow << YAML::BeginSeq;
              for (double v : *p) out << ShortestDouble(v);
              out << YAML::EndSeq;
            } else if constexpr (std::is_same_v<T, std::string>) {
              out << YAML::DoubleQuoted << *p;
            } else if constexpr (std::is_same_v<T, double>) {
              out << ShortestDouble(*p);
            } else {
              out << *p;
            }
          },
          f.ptr);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void SaveConfigFile(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << SaveConfig(config);
}

}  // namespace pegrl

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

#include "pegrl/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pegrl/agent.h"

namespace pegrl {

void CaseSpec::Validate() const {
  if (!(offset_mm > 0.0)) throw DomainError("case offset must be positive");
  if (!(clearance_um > 0.0)) throw DomainError("case clearance must be positive");
  if (!(tilt_deg >= 0.0 && tilt_deg < 10.0)) throw DomainError("case tilt must be in [0, 10)");
}

CaseSpec CaseSpec::A() { return {"A", 3.0, 10.0, 0.0}; }
CaseSpec CaseSpec::B() { return {"B", 1.0, 20.0, 1.6}; }

CaseSpec CaseSpec::Named(const std::string& name) {
  if (name == "A" || name == "a") return A();
  if (name == "B" || name == "b") return B();
  throw DomainError("unknown case '" + name + "' (expected A or B)");
}

HoleSpec ApplyCase(const HoleSpec& base, const CaseSpec& c) {
  c.Validate();
  HoleSpec h = base;
  h.clearance_um = c.clearance_um;
  h.tilt_deg = c.tilt_deg;
  h.Validate();
  return h;
}

EvalSummary Summarize(const std::vector<TrialRecord>& trials) {
  EvalSummary s;
  s.trials = static_cast<int>(trials.size());
  int n_search = 0, n_ins = 0;
  for (const TrialRecord& t : trials) {
    if (t.search_success) {
      s.mean_search_s += t.search_s;
      ++n_search;
    }
    if (t.insertion_success) {
      s.mean_insertion_s += t.insertion_s;
      ++n_ins;
    }
    if (t.success()) {
      s.mean_total_s += t.total_s;
      ++s.successes;
    }
  }
  if (n_search > 0) s.mean_search_s /= n_search;
  if (n_ins > 0) s.mean_insertion_s /= n_ins;
  if (s.successes > 0) s.mean_total_s /= s.successes;
  if (s.trials > 0) s.success_rate = static_cast<double>(s.successes) / s.trials;
  return s;
}

EvalReport Evaluate(RobotLink& link, const QNetwork& search_net, const QNetwork& insertion_net,
                    const CaseSpec& spec, const EvalOptions& options) {
  spec.Validate();
  if (options.trials <= 0) throw DomainError("trials must be positive");
  if (search_net.shape().actions != kSearchActions) {
    throw DomainError("search weights have " + std::to_string(search_net.shape().actions) +
                      " actions, expected 4");
  }
  if (insertion_net.shape().actions != kInsertionActions) {
    throw DomainError("insertion weights have " +
                      std::to_string(insertion_net.shape().actions) + " actions, expected 5");
  }
  PhaseSpec search = options.search;
  search.d0_mm = spec.offset_mm;
  HyperParams hp;
  hp.window = options.window;
  LstmQFunction search_q(search_net, hp);
  LstmQFunction insertion_q(insertion_net, hp);
  PegEnvironment env(link, search);
  Rng seeds = MakeStream(options.seed, 4);

  EvalReport report;
  report.spec = spec;
  for (int t = 0; t < options.trials; ++t) {
    TrialRecord rec;
    rec.trial = t;
    ResetSpec r;
    r.mode = StartMode::kSearch;
    r.offset_mm = spec.offset_mm;
    r.seed = seeds() >> 11;
    env.ResetWith(r);
    std::vector<StateVector> history{env.Continue(search, env.last_frame())};
    for (int k = 0; k < search.k_max; ++k) {
      StepOutcome out = env.Step(GreedyAction(search_q.Values(history)));
      history.push_back(out.next);
      ++rec.search_steps;
      if (out.terminal) {
        rec.search_success = out.kind == TerminalKind::kSuccess;
        break;
      }
    }
    if (rec.search_success) {
      history = {env.Continue(options.insertion, env.last_frame())};
      for (int k = 0; k < options.insertion.k_max; ++k) {
        StepOutcome out = env.Step(GreedyAction(insertion_q.Values(history)));
        history.push_back(out.next);
        ++rec.insertion_steps;
        if (out.terminal) {
          rec.insertion_success = out.kind == TerminalKind::kSuccess;
          break;
        }
      }
    }
    rec.search_s = rec.search_steps * options.cycle_s;
    rec.insertion_s = rec.insertion_steps * options.cycle_s;
    rec.total_s = rec.search_s + rec.insertion_s;
    report.trials.push_back(rec);
  }
  report.summary = Summarize(report.trials);
  return report;
}

std::vector<HistogramRow> TimeHistogram(const EvalReport& report, double bin_s) {
  if (!(bin_s > 0.0)) throw DomainError("histogram bin width must be positive");
  double max_t = 0.0;
  for (const TrialRecord& t : report.trials) {
    if (t.search_success) max_t = std::max(max_t, t.search_s);
    if (t.insertion_success) max_t = std::max(max_t, t.insertion_s);
    if (t.success()) max_t = std::max(max_t, t.total_s);
  }
  size_t bins = static_cast<size_t>(std::floor(max_t / bin_s)) + 1;
  std::vector<HistogramRow> rows(bins);
  for (size_t i = 0; i < bins; ++i) {
    rows[i].lo_s = i * bin_s;
    rows[i].hi_s = (i + 1) * bin_s;
  }
  auto bin = [&](double t) { return std::min(bins - 1, static_cast<size_t>(t / bin_s)); };
  for (const TrialRecord& t : report.trials) {
    if (t.search_success) ++rows[bin(t.search_s)].search;
    if (t.insertion_success) ++rows[bin(t.insertion_s)].insertion;
    if (t.success()) ++rows[bin(t.total_s)].total;
  }
  return rows;
}

std::string SummaryTable(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %12s %15s %11s %9s\n", "case", "search [s]",
                "insertion [s]", "total [s]", "success");
  os << line;
  for (const EvalReport& r : reports) {
    std::snprintf(line, sizeof line, "%-6s %12.3f %15.3f %11.3f %8.1f%%\n",
                  r.spec.name.c_str(), r.summary.mean_search_s, r.summary.mean_insertion_s,
                  r.summary.mean_total_s, 100.0 * r.summary.success_rate);
    os << line;
  }
  return os.str();
}

void WriteEvalReport(const EvalReport& report, double bin_s, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string tag = report.spec.name;
  nlohmann::json j;
  j["case"] = {{"name", report.spec.name},
               {"offset_mm", report.spec.offset_mm},
               {"clearance_um", report.spec.clearance_um},
               {"tilt_deg", report.spec.tilt_deg}};
  j["trials"] = report.summary.trials;
  j["successes"] = report.summary.successes;
  j["success_rate"] = report.summary.success_rate;
  j["mean_search_s"] = report.summary.mean_search_s;
  j["mean_insertion_s"] = report.summary.mean_insertion_s;
  j["mean_total_s"] = report.summary.mean_total_s;
  std::ofstream(dir + "/eval_" + tag + ".json") << j.dump(2) << "\n";

  std::ofstream trials(dir + "/trials_" + tag + ".csv");
  trials << "trial,search_success,insertion_success,search_steps,insertion_steps,search_s,"
            "insertion_s,total_s\n";
  for (const TrialRecord& t : report.trials) {
    trials << t.trial << ',' << t.search_success << ',' << t.insertion_success << ','
           << t.search_steps << ',' << t.insertion_steps << ',' << t.search_s << ','
           << t.insertion_s << ',' << t.total_s << '\n';
  }

  std::ofstream hist(dir + "/histogram_" + tag + ".csv");
  hist << "bin_lo_s,bin_hi_s,search,insertion,total\n";
  for (const HistogramRow& r : TimeHistogram(report, bin_s)) {
    hist << r.lo_s << ',' << r.hi_s << ',' << r.search << ',' << r.insertion << ',' << r.total
         << '\n';
  }
}

}  // namespace pegrl

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

#ifndef PEGRL_EVALUATION_H_
#define PEGRL_EVALUATION_H_

#include <string>
#include <vector>

#include "pegrl/contact_sim.h"
#include "pegrl/env.h"
#include "pegrl/lstm_q.h"
#include "pegrl/robot_service.h"

namespace pegrl {

// Evaluation condition: initial offset and hole geometry.
struct CaseSpec {
  std::string name = "custom";
  double offset_mm = 3.0;
  double clearance_um = 10.0;
  double tilt_deg = 0.0;

  void Validate() const;

  // 3 mm offset, 10 um clearance, level plate.
  static CaseSpec A();
  // 1 mm offset, 20 um clearance, plate tilted 1.6 deg.
  static CaseSpec B();
  // "A" or "B"; anything else throws DomainError.
  static CaseSpec Named(const std::string& name);
};

// `base` with the case clearance and tilt.
HoleSpec ApplyCase(const HoleSpec& base, const CaseSpec& c);

struct EvalOptions {
  // Search phase template; its d0 is replaced by the case offset.
  PhaseSpec search = PhaseSpec::Search(3.0, 5.0);
  PhaseSpec insertion = PhaseSpec::Insertion();
  int trials = 100;
  int window = 8;
  uint64_t seed = 0;
  double cycle_s = 0.04;
  double histogram_bin_s = 0.2;
};

struct TrialRecord {
  int trial = 0;
  bool search_success = false;
  bool insertion_success = false;
  int search_steps = 0;
  int insertion_steps = 0;
  double search_s = 0.0;
  double insertion_s = 0.0;
  double total_s = 0.0;

  bool success() const { return search_success && insertion_success; }
};

struct EvalSummary {
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  // Means over trials where the phase (or both, for total) succeeded.
  double mean_search_s = 0.0;
  double mean_insertion_s = 0.0;
  double mean_total_s = 0.0;
};

struct EvalReport {
  CaseSpec spec;
  std::vector<TrialRecord> trials;
  EvalSummary summary;
};

EvalSummary Summarize(const std::vector<TrialRecord>& trials);

// Greedy search then greedy insertion for each trial. `link` must drive a
// simulator built with ApplyCase(..., spec).
EvalReport Evaluate(RobotLink& link, const QNetwork& search_net, const QNetwork& insertion_net,
                    const CaseSpec& spec, const EvalOptions& options);

struct HistogramRow {
  double lo_s = 0.0;
  double hi_s = 0.0;
  int search = 0;
  int insertion = 0;
  int total = 0;
};

// Raw counts of successful phase times in fixed-width bins from zero.
std::vector<HistogramRow> TimeHistogram(const EvalReport& report, double bin_s);

// Plain-text table with one row per case: search, insertion, total time
// and success rate.
std::string SummaryTable(const std::vector<EvalReport>& reports);

// Writes eval_<case>.json, trials_<case>.csv and histogram_<case>.csv.
void WriteEvalReport(const EvalReport& report, double bin_s, const std::string& dir);

}  // namespace pegrl

#endif  // PEGRL_EVALUATION_H_

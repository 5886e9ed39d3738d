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

#ifndef PEGRL_REPORT_H_
#define PEGRL_REPORT_H_

#include <span>
#include <string>
#include <vector>

#include "pegrl/agent.h"

namespace pegrl {

// One line of the episode log.
struct EpisodeRow {
  std::string stage;
  int episode = 0;
  int steps = 0;
  double reward = 0.0;
  double epsilon = 0.0;
  std::string terminal;
  bool aborted = false;
};

std::string EpisodeCsvHeader();
// Values are printed with 17 significant digits so logs compare exactly.
std::string EpisodeCsvLine(const std::string& stage, const EpisodeLog& log);
std::vector<EpisodeRow> ParseEpisodeCsv(const std::string& text);
std::vector<EpisodeRow> ReadEpisodeCsv(const std::string& path);

struct WindowStat {
  // Index of the last episode in the window.
  int last = 0;
  int n = 0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Mean and 90% bounds mean +- 1.645 * s / sqrt(n) (s = sample standard
// deviation) over every full window. A series shorter than the window gives
// a single row over all of it.
std::vector<WindowStat> MovingWindow(std::span<const double> values, int window);

// Rank correlation with average ranks for ties; 0 when either side is constant.
double Spearman(std::span<const double> x, std::span<const double> y);

struct StageReport {
  std::string stage;
  std::vector<WindowStat> reward;
  std::vector<WindowStat> steps;
  double reward_trend = 0.0;
};

std::vector<StageReport> BuildReport(const std::vector<EpisodeRow>& rows, int window);

// Writes report_<stage>.csv per stage and report.json under `dir`.
void WriteReport(const std::vector<StageReport>& reports, const std::string& dir);

}  // namespace pegrl

#endif  // PEGRL_REPORT_H_

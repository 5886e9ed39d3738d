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

#include "pegrl/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace pegrl {

std::string EpisodeCsvHeader() { return "stage,episode,steps,reward,epsilon,terminal,aborted\n"; }

std::string EpisodeCsvLine(const std::string& stage, const EpisodeLog& log) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%d,%d,%.17g,%.17g,%s,%d\n", stage.c_str(), log.episode,
                log.steps, log.reward, log.epsilon, ToString(log.kind).c_str(),
                log.aborted ? 1 : 0);
  return buf;
}

std::vector<EpisodeRow> ParseEpisodeCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<EpisodeRow> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("stage,", 0) == 0)) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) {
      throw DomainError("episode log line " + std::to_string(lineno) + ": expected 7 fields");
    }
    try {
      rows.push_back({f[0], std::stoi(f[1]), std::stoi(f[2]), std::stod(f[3]), std::stod(f[4]),
                      f[5], f[6] == "1"});
    } catch (const std::logic_error&) {
      throw DomainError("episode log line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

std::vector<EpisodeRow> ReadEpisodeCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseEpisodeCsv(ss.str());
}

namespace {

WindowStat Stat(std::span<const double> v, int last) {
  WindowStat s;
  s.last = last;
  s.n = static_cast<int>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / s.n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  double sd = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
  double half = 1.645 * sd / std::sqrt(static_cast<double>(s.n));
  s.lo = s.mean - half;
  s.hi = s.mean + half;
  return s;
}

std::vector<double> Ranks(std::span<const double> v) {
  std::vector<size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = 0.5 * (i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

std::vector<WindowStat> MovingWindow(std::span<const double> values, int window) {
  if (window <= 0) throw DomainError("window must be positive");
  std::vector<WindowStat> out;
  if (values.empty()) return out;
  size_t w = static_cast<size_t>(window);
  if (values.size() < w) {
    out.push_back(Stat(values, static_cast<int>(values.size()) - 1));
    return out;
  }
  for (size_t end = w; end <= values.size(); ++end) {
    out.push_back(Stat(values.subspan(end - w, w), static_cast<int>(end) - 1));
  }
  return out;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("Spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  std::vector<double> rx = Ranks(x), ry = Ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<StageReport> BuildReport(const std::vector<EpisodeRow>& rows, int window) {
  std::vector<std::string> order;
  for (const EpisodeRow& r : rows) {
    if (std::find(order.begin(), order.end(), r.stage) == order.end()) order.push_back(r.stage);
  }
  std::vector<StageReport> out;
  for (const std::string& stage : order) {
    std::vector<double> reward, steps, index;
    for (const EpisodeRow& r : rows) {
      if (r.stage != stage) continue;
      reward.push_back(r.reward);
      steps.push_back(r.steps);
      index.push_back(r.episode);
    }
    StageReport s;
    s.stage = stage;
    s.reward = MovingWindow(reward, window);
    s.steps = MovingWindow(steps, window);
    s.reward_trend = Spearman(index, reward);
    out.push_back(std::move(s));
  }
  return out;
}

void WriteReport(const std::vector<StageReport>& reports, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json summary = nlohmann::json::array();
  for (const StageReport& s : reports) {
    std::ofstream csv(dir + "/report_" + s.stage + ".csv");
    csv << "last_episode,n,reward_mean,reward_lo,reward_hi,steps_mean,steps_lo,steps_hi\n";
    for (size_t i = 0; i < s.reward.size(); ++i) {
      const WindowStat& r = s.reward[i];
      const WindowStat& k = s.steps[i];
      csv << r.last << ',' << r.n << ',' << r.mean << ',' << r.lo << ',' << r.hi << ','
          << k.mean << ',' << k.lo << ',' << k.hi << '\n';
    }
    nlohmann::json j;
    j["stage"] = s.stage;
    j["episodes"] = s.reward.empty() ? 0 : s.reward.back().last + 1;
    j["reward_spearman"] = s.reward_trend;
    j["trend"] = s.reward_trend > 0.0 ? "increasing" : "not increasing";
    if (!s.reward.empty()) {
      j["final_reward_mean"] = s.reward.back().mean;
      j["final_steps_mean"] = s.steps.back().mean;
    }
    summary.push_back(j);
  }
  std::ofstream(dir + "/report.json") << summary.dump(2) << "\n";
}

}  // namespace pegrl

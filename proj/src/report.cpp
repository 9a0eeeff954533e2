/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The cfmec Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "cfmec/campaign.hpp"

namespace cfmec {

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(values.size());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.emplace_back(values[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q / 100.0 * n)));
  return values[std::min(rank, values.size()) - 1];
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  std::string s(buf, res.ptr);
  if (std::isfinite(value) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

ModeSummary summarize(const MetricsTable& metrics, Mode mode) {
  ModeSummary out;
  out.mode = mode;
  for (const auto& s : metrics.snapshots) {
    if (s.mode != mode) continue;
    if (s.status == AllocationStatus::infeasible) {
      ++out.infeasible;
      continue;
    }
    ++out.feasible;
    out.total_power.push_back(s.total_power_w);
    out.total_compute.push_back(s.total_compute_ghz);
  }
  for (const auto& u : metrics.users) {
    if (u.mode != mode || u.status == AllocationStatus::infeasible) continue;
    out.user_power.push_back(u.p_mw);
    out.user_compute.push_back(u.f_total_ghz);
    out.se.push_back(u.se_ergodic);
    out.energy.push_back(u.energy);
  }
  return out;
}

namespace {

std::ofstream open_file(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_file(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("error while writing " + path.string());
}

void write_cdf(const std::filesystem::path& path, const std::vector<double>& values) {
  std::ofstream out = open_file(path);
  for (const auto& [v, prob] : empirical_cdf(values)) {
    out << format_number(v) << ", " << format_number(prob) << '\n';
  }
  close_file(out, path);
}

}  // namespace

void emit_report(const MetricsTable& metrics, const std::filesystem::path& dir) {
  if (metrics.snapshots.empty()) throw std::invalid_argument("emit_report: empty metrics");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "users.csv";
    std::ofstream out = open_file(path);
    out << "mode,snapshot,user,status,bits,p_mw,se,se_ergodic,energy_j_per_mbit,f_total_ghz,f_cpu_ghz,"
           "f_nodes_ghz,t_tx,t_comp,t_fh,latency,deadline\n";
    for (const auto& u : metrics.users) {
      out << to_string(u.mode) << ',' << u.snapshot << ',' << u.user << ',' << to_string(u.status) << ','
          << format_number(u.bits) << ',' << format_number(u.p_mw) << ',' << format_number(u.se) << ','
          << format_number(u.se_ergodic) << ',' << format_number(u.energy) << ','
          << format_number(u.f_total_ghz) << ',' << format_number(u.f_cpu_ghz) << ','
          << format_number(u.f_nodes_ghz) << ',' << format_number(u.t_tx) << ',' << format_number(u.t_comp)
          << ',' << format_number(u.t_fh) << ',' << format_number(u.latency) << ','
          << format_number(u.deadline) << '\n';
    }
    close_file(out, path);
  }
  {
    const auto path = dir / "snapshots.csv";
    std::ofstream out = open_file(path);
    out << "mode,snapshot,status,total_power_w,total_compute_ghz,compute_budget_ghz,sca_iters,newton_iters,"
           "rejected_iters,safeguarded_users,rounding_repairs,restarts,kkt_residual,final_objective\n";
    for (const auto& s : metrics.snapshots) {
      const double obj =
          s.objective_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : s.objective_trace.back();
      out << to_string(s.mode) << ',' << s.snapshot << ',' << to_string(s.status) << ','
          << format_number(s.total_power_w) << ',' << format_number(s.total_compute_ghz) << ','
          << format_number(s.compute_budget_ghz) << ',' << s.sca_iters << ',' << s.newton_iters << ','
          << s.rejected_iters << ',' << s.safeguarded_users << ',' << s.rounding_repairs << ',' << s.restarts << ','
          << format_number(s.kkt_residual) << ',' << format_number(obj) << '\n';
    }
    close_file(out, path);
  }

  std::map<Mode, ModeSummary> summaries;
  for (Mode mode : {Mode::cellfree, Mode::cellular, Mode::fullpower}) {
    ModeSummary s = summarize(metrics, mode);
    if (s.feasible + s.infeasible == 0) continue;
    const std::string m = to_string(mode);
    write_cdf(dir / ("cdf_" + m + "_total_power.csv"), s.total_power);
    write_cdf(dir / ("cdf_" + m + "_user_power.csv"), s.user_power);
    write_cdf(dir / ("cdf_" + m + "_user_compute.csv"), s.user_compute);
    write_cdf(dir / ("cdf_" + m + "_total_compute.csv"), s.total_compute);
    write_cdf(dir / ("cdf_" + m + "_ergodic_se.csv"), s.se);
    write_cdf(dir / ("cdf_" + m + "_energy.csv"), s.energy);
    summaries.emplace(mode, std::move(s));
  }

  const auto path = dir / "summary.csv";
  std::ofstream out = open_file(path);
  out << "section,mode,metric,percentile,value\n";
  const std::vector<double> levels{5.0, 25.0, 50.0, 75.0, 95.0};
  for (const auto& [mode, s] : summaries) {
    const std::string m = to_string(mode);
    out << "count," << m << ",feasible,," << s.feasible << '\n';
    out << "count," << m << ",infeasible,," << s.infeasible << '\n';
    const std::vector<std::pair<const char*, const std::vector<double>*>> series{
        {"total_power_w", &s.total_power}, {"total_compute_ghz", &s.total_compute},
        {"user_power_mw", &s.user_power},  {"user_compute_ghz", &s.user_compute},
        {"ergodic_se", &s.se},             {"energy_j_per_mbit", &s.energy}};
    for (const auto& [name, values] : series) {
      for (double q : levels) {
        out << "percentile," << m << ',' << name << ',' << format_number(q) << ','
            << format_number(percentile(*values, q)) << '\n';
      }
    }
  }
  // Cell-free against the other modes, percentile by percentile.
  const auto cf = summaries.find(Mode::cellfree);
  if (cf != summaries.end()) {
    for (const auto& [mode, s] : summaries) {
      if (mode == Mode::cellfree) continue;
      const std::string m = "cellfree_over_" + to_string(mode);
      for (double q : levels) {
        out << "ratio," << m << ",total_power," << format_number(q) << ','
            << format_number(percentile(cf->second.total_power, q) / percentile(s.total_power, q)) << '\n';
        out << "ratio," << m << ",total_compute," << format_number(q) << ','
            << format_number(percentile(cf->second.total_compute, q) / percentile(s.total_compute, q))
            << '\n';
        out << "ratio," << m << ",ergodic_se," << format_number(q) << ','
            << format_number(percentile(cf->second.se, q) / percentile(s.se, q)) << '\n';
      }
    }
  }
  close_file(out, path);
}

}  // namespace cfmec

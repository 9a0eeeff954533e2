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

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cfmec/config.hpp"
#include "cfmec/sca.hpp"

namespace cfmec {

struct UserRow {
  Mode mode = Mode::cellfree;
  int snapshot = 0;
  int user = 0;
  AllocationStatus status = AllocationStatus::infeasible;
  double bits = 0.0;
  double p_mw = 0.0;
  double se = 0.0;          // realization used by the optimizer
  double se_ergodic = 0.0;  // mean over realizations at fixed p
  double energy = 0.0;      // J/Mbit, p / (B * se) * 1e6
  double f_total_ghz = 0.0;
  double f_cpu_ghz = 0.0;
  double f_nodes_ghz = 0.0;
  double t_tx = 0.0;
  double t_comp = 0.0;
  double t_fh = 0.0;
  double latency = 0.0;
  double deadline = 0.0;
};

struct SnapshotRow {
  Mode mode = Mode::cellfree;
  int snapshot = 0;
  AllocationStatus status = AllocationStatus::infeasible;
  double total_power_w = 0.0;
  double total_compute_ghz = 0.0;
  double compute_budget_ghz = 0.0;  // area total available to the mode
  int sca_iters = 0;
  int newton_iters = 0;
  int rejected_iters = 0;
  int safeguarded_users = 0;
  int rounding_repairs = 0;
  int restarts = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;
};

struct MetricsTable {
  std::vector<UserRow> users;
  std::vector<SnapshotRow> snapshots;

  int feasible(Mode mode) const;
  int infeasible(Mode mode) const;
};

/// Everything drawn for one snapshot id, shared by all modes.
struct SnapshotInputs {
  NetworkSnapshot cellfree;
  NetworkSnapshot cellular;
  std::vector<OffloadTask> tasks;
  ComputeBudgets cellfree_budgets;
  ComputeBudgets cellular_budgets;
};

SnapshotInputs draw_snapshot(const CampaignConfig& config, int snapshot_id);

/// Seeds of the per-snapshot random streams.
std::uint64_t cluster_order_seed(const CampaignConfig& config, int snapshot_id);
std::uint64_t channel_seed(const CampaignConfig& config, int snapshot_id, Mode mode);
std::uint64_t pilot_noise_seed(const CampaignConfig& config, int snapshot_id, Mode mode);

/// Allocator settings derived from a campaign and a deployment.
AllocatorConfig allocator_config(const CampaignConfig& config, Mode mode, Exec exec);

/// Per-BS budget that equalizes the area compute of both architectures.
double cellular_node_budget(const ComputeBudgets& cellfree, int num_bs);

struct ModeResult {
  Allocation allocation;
  ClusterAssignment assignment;
  Vector se_ergodic;
};

/// Runs one mode on one snapshot, including the extra ergodic realizations.
ModeResult run_mode(const CampaignConfig& config, const SnapshotInputs& inputs, int snapshot_id, Mode mode,
                    Exec exec);

/// Adds the snapshot row and one row per user of `result` to `table`.
void append_rows(MetricsTable& table, const CampaignConfig& config, const SnapshotInputs& inputs,
                 int snapshot_id, Mode mode, const ModeResult& result);

/// Snapshots are distributed over OpenMP threads in parallel mode; results are
/// identical to the serial path.
MetricsTable run_campaign(const CampaignConfig& config, Exec exec = Exec::parallel);

/// Column means of a realizations x users SE matrix.
Vector ergodic_se(const Matrix& per_realization_se);

/// Sorted samples with empirical probabilities i/n.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);

/// Nearest-rank percentile, q in (0, 100].
double percentile(std::vector<double> values, double q);

/// Shortest round-trip text; integral values get a trailing ".0".
std::string format_number(double value);

struct ModeSummary {
  Mode mode = Mode::cellfree;
  int feasible = 0;
  int infeasible = 0;
  std::vector<double> total_power;    // W per feasible snapshot
  std::vector<double> total_compute;  // GHz per feasible snapshot
  std::vector<double> user_power;     // mW
  std::vector<double> user_compute;   // GHz
  std::vector<double> se;             // ergodic, pooled over snapshots and users
  std::vector<double> energy;         // J/Mbit
};

ModeSummary summarize(const MetricsTable& metrics, Mode mode);

/// Writes users.csv, snapshots.csv, per-metric CDF files and summary.csv.
/// Throws IoError when a file cannot be written.
void emit_report(const MetricsTable& metrics, const std::filesystem::path& out_dir);

}  // namespace cfmec

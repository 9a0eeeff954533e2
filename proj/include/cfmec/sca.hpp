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

#include <ostream>
#include <string>
#include <vector>

#include "cfmec/clustering.hpp"
#include "cfmec/config.hpp"
#include "cfmec/convex.hpp"
#include "cfmec/estimation.hpp"

namespace cfmec {

struct OffloadTask {
  double bits = 0.0;               // b_k
  double cycles = 0.0;             // w_k
  double deadline = 0.5;           // s, cell-free
  double deadline_cellular = 0.7;  // s
};

/// Compute capacity of every node (cycles/s).
struct ComputeBudgets {
  double cpu = 0.0;  // cloud CPU; unused in cellular mode
  Vector node;       // per AP (cell-free) or per BS (cellular)
};

struct AllocatorConfig {
  double bandwidth = 20e6;
  double p_max = 0.1;
  double noise_power = 0.0;
  int tau_u = 190;
  int tau_c = 200;
  int antennas = 4;  // per AP, enters the fronthaul delay
  double weight = 1.0;
  double fronthaul_capacity = 10e9;
  double quantization_bits = 16.0;
  ComputePolicy policy = ComputePolicy::tight;
  int max_sca_iters = 30;
  int max_restarts = 10;  // expansion moves when no feasible start exists
  double sca_rel_tol = 1e-5;
  BarrierOptions barrier;
  Exec exec = Exec::parallel;
};

/// Mapping between the compressed compute vector and physical nodes.
struct ComputeLayout {
  int compute_dim = 0;
  std::vector<int> entry_user;  // owner of each entry
  std::vector<int> entry_node;  // AP/BS index, -1 for the cloud CPU
  std::vector<std::vector<int>> user_entries;
  std::vector<ComputeBudget> budgets;
  std::vector<int> group_of_user;
  int num_groups = 1;
};

/// Cell-free: one CPU entry per user, then one entry per serving pair (k, l in M_k).
ComputeLayout cellfree_layout(const ClusterAssignment& assignment, const ComputeBudgets& budgets);
/// Cellular: one entry per user at its BS, one min-SE group per non-empty cell.
ComputeLayout cellular_layout(const ClusterAssignment& assignment, const ComputeBudgets& budgets);

/// Fronthaul delay 2 b M xi / C_FH (seconds).
double fronthaul_delay(double bits, const AllocatorConfig& config);

/// Inner problem around `expansion` with the given SINR coefficients.
ConvexSubproblem make_subproblem(const SinrCoefficients& coeffs, const Vector& expansion,
                                 const ComputeLayout& layout, const std::vector<OffloadTask>& tasks,
                                 const AllocatorConfig& config, Mode mode);

enum class AllocationStatus { optimal, infeasible, max_iter };
std::string to_string(AllocationStatus status);

struct LatencyParts {
  Vector transmission;
  Vector computation;
  Vector fronthaul;
  Vector total() const { return transmission + computation + fronthaul; }
};

struct Allocation {
  Mode mode = Mode::cellfree;
  AllocationStatus status = AllocationStatus::infeasible;
  Vector p;       // W
  Vector f_user;  // total compute per user (cycles/s, post-rounding)
  Vector f_cpu;   // cloud share per user
  Matrix f_node;  // L x K share of each AP/BS
  Vector nu;      // min-SE variable(s)
  Vector se;      // true SE at p with the final combiners
  LatencyParts latency;
  std::vector<double> objective_trace;
  int sca_iters = 0;
  int newton_iters = 0;
  int rejected_iters = 0;     // inner solutions discarded by the descent check
  int safeguarded_users = 0;  // combiner updates kept from the previous iterate
  int rounding_repairs = 0;
  int restarts = 0;           // expansion moved off full power to find a feasible start
  double kkt_residual = 0.0;  // of the last accepted inner solution
  CombinerSet combiners;      // frozen combiners that produced `se`

  double total_power() const;
  double total_compute() const;
};

/// Outer SCA loop for the cell-free problem (P-MMSE combining).
Allocation sca_solve_cellfree(const ChannelEstimates& estimates, const ClusterAssignment& assignment,
                              const std::vector<OffloadTask>& tasks, const ComputeBudgets& budgets,
                              const AllocatorConfig& config);

/// Outer SCA loop for the cellular benchmark (L-MMSE combining, per-cell min-SE).
Allocation sca_solve_cellular(const ChannelEstimates& estimates, const ClusterAssignment& assignment,
                              const std::vector<OffloadTask>& tasks, const ComputeBudgets& budgets,
                              const AllocatorConfig& config);

/// Cell-free reference with p = p_max and compute sized to meet the deadlines.
Allocation full_power_allocation(const ChannelEstimates& estimates, const ClusterAssignment& assignment,
                                 const std::vector<OffloadTask>& tasks, const ComputeBudgets& budgets,
                                 const AllocatorConfig& config);

/// Floors compute rates to integers, then adds cycles/s from budget slack to
/// any user whose compute latency w_k / f_k exceeds time_left_k by more than
/// 1e-6 s. Returns the number of repaired users; throws std::runtime_error if
/// the budgets cannot cover the deficit.
int round_compute(Vector& f, const ComputeLayout& layout, const Vector& cycles,
                  const Vector& time_left);

LatencyParts latency_breakdown(const Allocation& allocation, const std::vector<OffloadTask>& tasks,
                               const AllocatorConfig& config);

/// One row per user: p, compute split, SE, latency parts, status.
void write_allocation_csv(std::ostream& out, const Allocation& allocation);

}  // namespace cfmec

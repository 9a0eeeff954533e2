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

#include "cfmec/campaign.hpp"

#include <cmath>
#include <exception>
#include <random>

#include "cfmec/estimation.hpp"

namespace cfmec {

namespace {

// Random stream identifiers per snapshot id.
enum Stream : std::uint64_t {
  kTasks = 3,
  kClusterOrder = 4,
  kChannel = 5,
  kPilotNoise = 6,
  kErgodic = 100,
};

std::uint64_t architecture_tag(Mode mode) { return mode == Mode::cellular ? 1 : 0; }

}  // namespace

std::uint64_t cluster_order_seed(const CampaignConfig& config, int id) {
  return derive_seed(config.sim.seed, static_cast<std::uint64_t>(id), kClusterOrder);
}

std::uint64_t channel_seed(const CampaignConfig& config, int id, Mode mode) {
  return derive_seed(config.sim.seed ^ architecture_tag(mode), static_cast<std::uint64_t>(id), kChannel);
}

std::uint64_t pilot_noise_seed(const CampaignConfig& config, int id, Mode mode) {
  return derive_seed(config.sim.seed ^ architecture_tag(mode), static_cast<std::uint64_t>(id), kPilotNoise);
}

int MetricsTable::feasible(Mode mode) const {
  int n = 0;
  for (const auto& s : snapshots) n += s.mode == mode && s.status != AllocationStatus::infeasible;
  return n;
}

int MetricsTable::infeasible(Mode mode) const {
  int n = 0;
  for (const auto& s : snapshots) n += s.mode == mode && s.status == AllocationStatus::infeasible;
  return n;
}

double cellular_node_budget(const ComputeBudgets& cellfree, int num_bs) {
  const double total = cellfree.cpu + cellfree.node.sum();
  return std::ceil(total / num_bs);
}

SnapshotInputs draw_snapshot(const CampaignConfig& config, int id) {
  SnapshotInputs in;
  const SimConfig cf = config.deployment(Mode::cellfree);
  const SimConfig cell = config.deployment(Mode::cellular);
  const auto users = drop_users(cf, id);
  in.cellfree = build_network(cf, users, id);
  in.cellular = build_network(cell, users, id);

  std::mt19937_64 rng(derive_seed(config.sim.seed, static_cast<std::uint64_t>(id), kTasks));
  std::uniform_int_distribution<long long> mbit(static_cast<long long>(std::ceil(config.bits_min_mbit)),
                                                static_cast<long long>(std::floor(config.bits_max_mbit)));
  in.tasks.resize(cf.num_users);
  for (auto& task : in.tasks) {
    task.bits = static_cast<double>(mbit(rng)) * 1e6;
    task.cycles = config.cycles_per_bit * task.bits;
    task.deadline = config.deadline;
    task.deadline_cellular = config.deadline_cellular;
  }
  std::uniform_int_distribution<long long> fap(static_cast<long long>(config.f_ap_min),
                                               static_cast<long long>(config.f_ap_max));
  in.cellfree_budgets.cpu = config.f_cpu;
  in.cellfree_budgets.node.resize(cf.num_aps);
  for (int l = 0; l < cf.num_aps; ++l) in.cellfree_budgets.node(l) = static_cast<double>(fap(rng));
  in.cellular_budgets.cpu = 0.0;
  in.cellular_budgets.node =
      Vector::Constant(cell.num_aps, cellular_node_budget(in.cellfree_budgets, cell.num_aps));
  return in;
}

AllocatorConfig allocator_config(const CampaignConfig& config, Mode mode, Exec exec) {
  const SimConfig sim = config.deployment(mode);
  AllocatorConfig out;
  out.bandwidth = sim.bandwidth;
  out.p_max = sim.p_max;
  out.noise_power = sim.noise_power;
  out.tau_u = sim.tau_u;
  out.tau_c = sim.tau_c;
  out.antennas = sim.antennas;
  out.weight = config.weight;
  out.fronthaul_capacity = config.fronthaul_capacity;
  out.quantization_bits = config.quantization_bits;
  out.policy = config.compute_policy;
  out.exec = exec;
  return out;
}

Vector ergodic_se(const Matrix& per_realization_se) {
  return per_realization_se.colwise().mean().transpose();
}

ModeResult run_mode(const CampaignConfig& config, const SnapshotInputs& in, int id, Mode mode, Exec exec) {
  const bool cellular = mode == Mode::cellular;
  const NetworkSnapshot& net = cellular ? in.cellular : in.cellfree;
  const SimConfig sim = config.deployment(mode);
  const AllocatorConfig ac = allocator_config(config, mode, exec);
  const auto uid = static_cast<std::uint64_t>(id);
  const std::uint64_t tag = architecture_tag(mode);

  ModeResult out;
  const std::uint64_t order_seed = cluster_order_seed(config, id);
  out.assignment = cellular ? assign_cellular(net, sim.tau_p, order_seed)
                            : assign_pilots_and_clusters(net, sim.tau_p, order_seed);
  const PilotParams pilot{sim.pilot_power, sim.noise_power, sim.tau_p};

  // Realization 0 drives the optimization; fullpower shares it with cellfree.
  std::mt19937_64 channel_rng(channel_seed(config, id, mode));
  std::mt19937_64 noise_rng(pilot_noise_seed(config, id, mode));
  const ChannelRealization h = realize_channels(net, channel_rng);
  const ChannelEstimates est = mmse_estimate(h, net, out.assignment, pilot, noise_rng, exec);

  const ComputeBudgets& budgets = cellular ? in.cellular_budgets : in.cellfree_budgets;
  switch (mode) {
    case Mode::cellfree:
      out.allocation = sca_solve_cellfree(est, out.assignment, in.tasks, budgets, ac);
      break;
    case Mode::cellular:
      out.allocation = sca_solve_cellular(est, out.assignment, in.tasks, budgets, ac);
      break;
    case Mode::fullpower:
      out.allocation = full_power_allocation(est, out.assignment, in.tasks, budgets, ac);
      break;
  }

  const Allocation& a = out.allocation;
  if (a.status == AllocationStatus::infeasible) {
    out.se_ergodic = a.se;
    return out;
  }
  Matrix se(config.realizations, net.num_users);
  se.row(0) = a.se.transpose();
  for (int r = 1; r < config.realizations; ++r) {
    std::mt19937_64 rng(derive_seed(config.sim.seed ^ tag, uid, kErgodic + static_cast<std::uint64_t>(r)));
    const ChannelRealization hr = realize_channels(net, rng);
    const ChannelEstimates er = mmse_estimate(hr, net, out.assignment, pilot, rng, exec);
    const CombinerSet comb = cellular ? lmmse_combiner(er, out.assignment, a.p, sim.noise_power, exec)
                                      : pmmse_combiner(er, out.assignment, a.p, sim.noise_power, exec);
    const SinrCoefficients coeffs = sinr_coefficients(er, comb, out.assignment, sim.noise_power, exec);
    se.row(r) = instantaneous_se(coeffs, a.p, sim.tau_u, sim.tau_c).transpose();
  }
  out.se_ergodic = ergodic_se(se);
  return out;
}

void append_rows(MetricsTable& table, const CampaignConfig& config, const SnapshotInputs& in, int id,
                 Mode mode, const ModeResult& r) {
  const Allocation& a = r.allocation;
  const ComputeBudgets& budgets = mode == Mode::cellular ? in.cellular_budgets : in.cellfree_budgets;

  SnapshotRow s;
  s.mode = mode;
  s.snapshot = id;
  s.status = a.status;
  s.total_power_w = a.total_power();
  s.total_compute_ghz = a.total_compute() / 1e9;
  s.compute_budget_ghz = (budgets.cpu + budgets.node.sum()) / 1e9;
  s.sca_iters = a.sca_iters;
  s.newton_iters = a.newton_iters;
  s.rejected_iters = a.rejected_iters;
  s.safeguarded_users = a.safeguarded_users;
  s.rounding_repairs = a.rounding_repairs;
  s.restarts = a.restarts;
  s.kkt_residual = a.kkt_residual;
  s.objective_trace = a.objective_trace;
  table.snapshots.push_back(std::move(s));

  const double bandwidth = config.deployment(mode).bandwidth;
  const Vector total = a.latency.total();
  for (int k = 0; k < static_cast<int>(in.tasks.size()); ++k) {
    UserRow u;
    u.mode = mode;
    u.snapshot = id;
    u.user = k;
    u.status = a.status;
    u.bits = in.tasks[k].bits;
    u.p_mw = a.p(k) * 1e3;
    u.se = a.se(k);
    u.se_ergodic = r.se_ergodic(k);
    u.energy = a.p(k) / (bandwidth * a.se(k)) * 1e6;
    u.f_total_ghz = a.f_user(k) / 1e9;
    u.f_cpu_ghz = a.f_cpu(k) / 1e9;
    u.f_nodes_ghz = a.f_node.col(k).sum() / 1e9;
    u.t_tx = a.latency.transmission(k);
    u.t_comp = a.latency.computation(k);
    u.t_fh = a.latency.fronthaul(k);
    u.latency = total(k);
    u.deadline = mode == Mode::cellular ? in.tasks[k].deadline_cellular : in.tasks[k].deadline;
    table.users.push_back(u);
  }
}

MetricsTable run_campaign(const CampaignConfig& config, Exec exec) {
  config.validate();
  std::vector<MetricsTable> parts(config.snapshots);
  std::vector<std::exception_ptr> errors(config.snapshots);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int id = 0; id < config.snapshots; ++id) {
    try {
      const SnapshotInputs in = draw_snapshot(config, id);
      for (Mode mode : config.modes) {
        append_rows(parts[id], config, in, id, mode, run_mode(config, in, id, mode, Exec::serial));
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  MetricsTable table;
  for (auto& p : parts) {
    table.users.insert(table.users.end(), p.users.begin(), p.users.end());
    table.snapshots.insert(table.snapshots.end(), p.snapshots.begin(), p.snapshots.end());
  }
  return table;
}

}  // namespace cfmec

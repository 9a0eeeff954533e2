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

#include "cfmec/sca.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace cfmec {

ComputeLayout cellfree_layout(const ClusterAssignment& a, const ComputeBudgets& budgets) {
  const int K = a.num_users;
  ComputeLayout out;
  out.user_entries.resize(K);
  for (int k = 0; k < K; ++k) {
    out.user_entries[k].push_back(k);
    out.entry_user.push_back(k);
    out.entry_node.push_back(-1);
  }
  std::vector<std::vector<int>> of_node(a.num_aps);
  for (int k = 0; k < K; ++k) {
    for (int l : a.aps_of_user[k]) {
      const int j = static_cast<int>(out.entry_user.size());
      out.user_entries[k].push_back(j);
      out.entry_user.push_back(k);
      out.entry_node.push_back(l);
      of_node[l].push_back(j);
    }
  }
  out.compute_dim = static_cast<int>(out.entry_user.size());
  ComputeBudget cpu{budgets.cpu, {}};
  for (int k = 0; k < K; ++k) cpu.entries.push_back(k);
  out.budgets.push_back(std::move(cpu));
  for (int l = 0; l < a.num_aps; ++l) {
    if (!of_node[l].empty()) out.budgets.push_back({budgets.node(l), of_node[l]});
  }
  out.group_of_user.assign(K, 0);
  out.num_groups = 1;
  return out;
}

ComputeLayout cellular_layout(const ClusterAssignment& a, const ComputeBudgets& budgets) {
  const int K = a.num_users;
  ComputeLayout out;
  out.compute_dim = K;
  out.user_entries.resize(K);
  out.group_of_user.assign(K, -1);
  for (int k = 0; k < K; ++k) {
    out.user_entries[k].push_back(k);
    out.entry_user.push_back(k);
    out.entry_node.push_back(a.master[k]);
  }
  out.num_groups = 0;
  for (int l = 0; l < a.num_aps; ++l) {
    if (a.users_of_ap[l].empty()) continue;
    ComputeBudget b{budgets.node(l), {}};
    for (int k : a.users_of_ap[l]) {
      if (a.master[k] != l) throw std::invalid_argument("cellular_layout: user served by a non-master BS");
      b.entries.push_back(k);
      out.group_of_user[k] = out.num_groups;
    }
    out.budgets.push_back(std::move(b));
    ++out.num_groups;
  }
  return out;
}

double fronthaul_delay(double bits, const AllocatorConfig& config) {
  return 2.0 * bits * config.antennas * config.quantization_bits / config.fronthaul_capacity;
}

namespace {

double time_budget(const OffloadTask& task, const AllocatorConfig& config, Mode mode) {
  if (mode == Mode::cellular) return task.deadline_cellular;
  return task.deadline - fronthaul_delay(task.bits, config);
}

}  // namespace

ConvexSubproblem make_subproblem(const SinrCoefficients& coeffs, const Vector& expansion,
                                 const ComputeLayout& layout, const std::vector<OffloadTask>& tasks,
                                 const AllocatorConfig& config, Mode mode) {
  const int K = coeffs.users();
  ConvexSubproblem sub;
  sub.users = K;
  sub.gain = coeffs.gain;
  sub.interference = coeffs.interference;
  sub.noise = coeffs.noise;
  sub.expansion = expansion;
  sub.prefactor = se_prefactor(config.tau_u, config.tau_c);
  sub.latency_budget.resize(K);
  sub.bits.resize(K);
  sub.cycles.resize(K);
  for (int k = 0; k < K; ++k) {
    sub.latency_budget(k) = time_budget(tasks[k], config, mode);
    sub.bits(k) = tasks[k].bits;
    sub.cycles(k) = tasks[k].cycles;
  }
  sub.bandwidth = config.bandwidth;
  sub.p_max = config.p_max;
  sub.weight = config.weight;
  sub.compute_dim = layout.compute_dim;
  sub.user_entries = layout.user_entries;
  sub.budgets = layout.budgets;
  sub.group_of_user = layout.group_of_user;
  sub.num_groups = layout.num_groups;
  return sub;
}

std::string to_string(AllocationStatus status) {
  switch (status) {
    case AllocationStatus::optimal: return "optimal";
    case AllocationStatus::infeasible: return "infeasible";
    case AllocationStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

double Allocation::total_power() const {
  return accurate_sum(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

double Allocation::total_compute() const {
  return accurate_sum(std::span<const double>(f_user.data(), static_cast<std::size_t>(f_user.size())));
}

int round_compute(Vector& f, const ComputeLayout& layout, const Vector& cycles, const Vector& time_left) {
  for (Eigen::Index j = 0; j < f.size(); ++j) f(j) = std::max(0.0, std::floor(f(j)));

  std::vector<int> budget_of(layout.compute_dim, -1);
  for (std::size_t b = 0; b < layout.budgets.size(); ++b) {
    for (int j : layout.budgets[b].entries) budget_of[j] = static_cast<int>(b);
  }
  auto slack = [&](int b) {
    double used = 0.0;
    for (int j : layout.budgets[b].entries) used += f(j);
    return std::floor(layout.budgets[b].capacity) - used;
  };

  int repairs = 0;
  for (std::size_t k = 0; k < layout.user_entries.size(); ++k) {
    double total = 0.0;
    for (int j : layout.user_entries[k]) total += f(j);
    if (total > 0.0 && cycles(k) / total - time_left(k) <= 1e-6) continue;
    double deficit = std::ceil(cycles(k) / time_left(k)) - total;
    for (int j : layout.user_entries[k]) {
      if (deficit <= 0.0) break;
      const double room = budget_of[j] < 0 ? deficit : std::max(0.0, slack(budget_of[j]));
      const double add = std::min(room, deficit);
      f(j) += add;
      deficit -= add;
    }
    if (deficit > 0.0 || !(time_left(k) > 0.0)) {
      throw std::runtime_error("round_compute: budgets cannot restore the deadline of user " +
                               std::to_string(k));
    }
    ++repairs;
  }
  return repairs;
}

LatencyParts latency_breakdown(const Allocation& alloc, const std::vector<OffloadTask>& tasks,
                               const AllocatorConfig& config) {
  const auto K = static_cast<Eigen::Index>(tasks.size());
  LatencyParts out{Vector(K), Vector(K), Vector::Zero(K)};
  for (Eigen::Index k = 0; k < K; ++k) {
    const double rate = config.bandwidth * alloc.se(k);
    out.transmission(k) = rate > 0.0 ? tasks[k].bits / rate : std::numeric_limits<double>::infinity();
    out.computation(k) = alloc.f_user(k) > 0.0 ? tasks[k].cycles / alloc.f_user(k)
                                               : std::numeric_limits<double>::infinity();
    if (alloc.mode != Mode::cellular) out.fronthaul(k) = fronthaul_delay(tasks[k].bits, config);
  }
  return out;
}

namespace {

using CombinerFn = std::function<CombinerSet(const Vector&)>;

// Infeasible result: zero compute and SE, infinite latency.
Allocation& mark_infeasible(Allocation& out, int num_users, int num_nodes) {
  out.status = AllocationStatus::infeasible;
  out.se = Vector::Zero(num_users);
  out.f_user = Vector::Zero(num_users);
  out.f_cpu = Vector::Zero(num_users);
  out.f_node = Matrix::Zero(num_nodes, num_users);
  const Vector inf = Vector::Constant(num_users, std::numeric_limits<double>::infinity());
  out.latency = {inf, inf, Vector::Zero(num_users)};
  return out;
}

// Fills p, compute, SE and latency of `out` from a point with frozen combiners.
void finalize(Allocation& out, const Vector& p, Vector f, const SinrCoefficients& coeffs,
              const ComputeLayout& layout, const std::vector<OffloadTask>& tasks,
              const AllocatorConfig& config, int num_nodes) {
  const int K = static_cast<int>(tasks.size());
  out.p = p;
  out.se = instantaneous_se(coeffs, p, config.tau_u, config.tau_c);

  Vector cycles(K), time_left(K);
  for (int k = 0; k < K; ++k) {
    cycles(k) = tasks[k].cycles;
    const double tx = tasks[k].bits / (config.bandwidth * out.se(k));
    time_left(k) = time_budget(tasks[k], config, out.mode) - tx;
  }
  if ((time_left.array() <= 0.0).any() || !time_left.allFinite()) {
    out.status = AllocationStatus::infeasible;
  }
  if (config.policy == ComputePolicy::tight && out.status != AllocationStatus::infeasible) {
    for (int k = 0; k < K; ++k) {
      double total = 0.0;
      for (int j : layout.user_entries[k]) total += f(j);
      const double scale = std::min(1.0, cycles(k) / time_left(k) / total);
      for (int j : layout.user_entries[k]) f(j) *= scale;
    }
  }
  if (out.status != AllocationStatus::infeasible) {
    out.rounding_repairs = round_compute(f, layout, cycles, time_left);
  }

  out.f_user = Vector::Zero(K);
  out.f_cpu = Vector::Zero(K);
  out.f_node = Matrix::Zero(num_nodes, K);
  for (int j = 0; j < layout.compute_dim; ++j) {
    const int k = layout.entry_user[j];
    out.f_user(k) += f(j);
    if (layout.entry_node[j] < 0) {
      out.f_cpu(k) += f(j);
    } else {
      out.f_node(layout.entry_node[j], k) += f(j);
    }
  }
  out.latency = latency_breakdown(out, tasks, config);
}

Allocation run_sca(const ChannelEstimates& est, const ClusterAssignment& a,
                   const std::vector<OffloadTask>& tasks, const ComputeLayout& layout,
                   const AllocatorConfig& config, Mode mode, const CombinerFn& make_combiners) {
  const int K = a.num_users;
  Allocation out;
  out.mode = mode;
  out.p = Vector::Constant(K, config.p_max);

  Vector expansion = out.p;
  CombinerSet comb = make_combiners(expansion);
  SinrCoefficients coeffs = sinr_coefficients(est, comb, a, config.noise_power, config.exec);
  ConvexSubproblem sub = make_subproblem(coeffs, expansion, layout, tasks, config, mode);
  out.combiners = comb;

  InnerSolution init = phase1_init(sub);
  // The bound around full power can be too loose. Power control on the exact
  // SE moves the expansion point; combiners are redesigned there and the
  // search repeats. Fresh combiners first, then the previous ones.
  for (int restart = 0; restart < config.max_restarts && init.status != InnerStatus::optimal; ++restart) {
    Vector moved;
    const bool met = feasible_powers(sub, moved);
    expansion = moved;
    CombinerSet fresh = make_combiners(expansion);
    SinrCoefficients fresh_coeffs = sinr_coefficients(est, fresh, a, config.noise_power, config.exec);
    ConvexSubproblem fresh_sub = make_subproblem(fresh_coeffs, expansion, layout, tasks, config, mode);
    init = phase1_init(fresh_sub);
    if (init.status != InnerStatus::optimal && met) {
      // Exact SE at the previous combiners meets every deadline here, so the
      // bound tight at this point does too.
      sub = make_subproblem(coeffs, expansion, layout, tasks, config, mode);
      init = phase1_init(sub);
      if (init.status == InnerStatus::optimal) {
        ++out.restarts;
        break;
      }
    }
    sub = std::move(fresh_sub);
    comb = std::move(fresh);
    coeffs = std::move(fresh_coeffs);
    ++out.restarts;
  }
  out.combiners = comb;
  if (init.status != InnerStatus::optimal) return mark_infeasible(out, K, a.num_aps);
  InnerSolution cur = barrier_solve(sub, init, config.barrier);
  out.newton_iters += cur.newton_iters;
  if (cur.status == InnerStatus::infeasible || !(cur.objective <= init.objective)) {
    return mark_infeasible(out, K, a.num_aps);
  }
  out.objective_trace.push_back(cur.objective);
  out.sca_iters = 1;

  while (out.sca_iters < config.max_sca_iters) {
    expansion = cur.p;
    CombinerSet fresh = make_combiners(expansion);
    SinrCoefficients next_coeffs = sinr_coefficients(est, fresh, a, config.noise_power, config.exec);
    // Keep a user's previous combiner if the update would lower its SINR at the
    // expansion point; this keeps the current iterate feasible for the new bound.
    for (int k = 0; k < K; ++k) {
      if (next_coeffs.sinr(k, expansion) < coeffs.sinr(k, expansion)) {
        fresh.v[k] = comb.v[k];
        next_coeffs.gain(k) = coeffs.gain(k);
        next_coeffs.interference.row(k) = coeffs.interference.row(k);
        next_coeffs.noise(k) = coeffs.noise(k);
        ++out.safeguarded_users;
      }
    }
    const ConvexSubproblem next = make_subproblem(next_coeffs, expansion, layout, tasks, config, mode);
    const InnerSolution cand = barrier_solve(next, cur, config.barrier);
    ++out.sca_iters;
    out.newton_iters += cand.newton_iters;
    if (cand.status == InnerStatus::infeasible || !(cand.objective <= cur.objective)) {
      ++out.rejected_iters;
      break;
    }
    const bool converged =
        std::abs(cand.objective - cur.objective) <= config.sca_rel_tol * std::abs(cur.objective);
    cur = cand;
    comb = std::move(fresh);
    coeffs = std::move(next_coeffs);
    out.objective_trace.push_back(cur.objective);
    if (converged) break;
  }

  out.status = cur.status == InnerStatus::max_iter ? AllocationStatus::max_iter : AllocationStatus::optimal;
  out.nu = cur.nu;
  out.kkt_residual = cur.kkt_residual;
  out.combiners = comb;
  finalize(out, cur.p, cur.f, coeffs, layout, tasks, config, a.num_aps);
  return out;
}

}  // namespace

Allocation sca_solve_cellfree(const ChannelEstimates& est, const ClusterAssignment& a,
                              const std::vector<OffloadTask>& tasks, const ComputeBudgets& budgets,
                              const AllocatorConfig& config) {
  const ComputeLayout layout = cellfree_layout(a, budgets);
  return run_sca(est, a, tasks, layout, config, Mode::cellfree, [&](const Vector& p) {
    return pmmse_combiner(est, a, p, config.noise_power, config.exec);
  });
}

Allocation sca_solve_cellular(const ChannelEstimates& est, const ClusterAssignment& a,
                              const std::vector<OffloadTask>& tasks, const ComputeBudgets& budgets,
                              const AllocatorConfig& config) {
  const ComputeLayout layout = cellular_layout(a, budgets);
  return run_sca(est, a, tasks, layout, config, Mode::cellular, [&](const Vector& p) {
    return lmmse_combiner(est, a, p, config.noise_power, config.exec);
  });
}

Allocation full_power_allocation(const ChannelEstimates& est, const ClusterAssignment& a,
                                 const std::vector<OffloadTask>& tasks, const ComputeBudgets& budgets,
                                 const AllocatorConfig& config) {
  const int K = a.num_users;
  const ComputeLayout layout = cellfree_layout(a, budgets);
  Allocation out;
  out.mode = Mode::fullpower;
  out.p = Vector::Constant(K, config.p_max);
  out.combiners = pmmse_combiner(est, a, out.p, config.noise_power, config.exec);
  const SinrCoefficients coeffs = sinr_coefficients(est, out.combiners, a, config.noise_power, config.exec);
  // Phase 1 at (almost) full power yields a compute split meeting every deadline.
  AllocatorConfig no_weight = config;
  no_weight.weight = 0.0;
  const ConvexSubproblem sub = make_subproblem(coeffs, out.p, layout, tasks, no_weight, Mode::cellfree);
  const InnerSolution init = phase1_init(sub);
  if (init.status != InnerStatus::optimal) return mark_infeasible(out, K, a.num_aps);
  out.status = AllocationStatus::optimal;
  finalize(out, out.p, init.f, coeffs, layout, tasks, config, a.num_aps);
  out.nu = Vector::Constant(1, out.se.minCoeff());
  out.objective_trace.push_back(out.total_power() - config.weight * out.nu(0));
  return out;
}

void write_allocation_csv(std::ostream& out, const Allocation& alloc) {
  out << "user,mode,status,p_w,se,f_total,f_cpu,f_nodes,t_tx,t_comp,t_fh,latency\n";
  out.precision(17);
  const Vector total = alloc.latency.total();
  for (Eigen::Index k = 0; k < alloc.p.size(); ++k) {
    out << k << ',' << to_string(alloc.mode) << ',' << to_string(alloc.status) << ',' << alloc.p(k) << ','
        << alloc.se(k) << ',' << alloc.f_user(k) << ',' << alloc.f_cpu(k) << ',';
    bool first = true;
    for (Eigen::Index l = 0; l < alloc.f_node.rows(); ++l) {
      if (alloc.f_node(l, k) == 0.0) continue;
      out << (first ? "" : " ") << l << ':' << alloc.f_node(l, k);
      first = false;
    }
    out << ',' << alloc.latency.transmission(k) << ',' << alloc.latency.computation(k) << ','
        << alloc.latency.fronthaul(k) << ',' << total(k) << '\n';
  }
}

}  // namespace cfmec

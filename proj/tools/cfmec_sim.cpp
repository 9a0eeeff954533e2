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

// Monte Carlo campaign driver: cell-free vs cellular joint power and compute allocation.

#include <omp.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cfmec/campaign.hpp"

using namespace cfmec;

namespace {

void dump_assignments(const CampaignConfig& config) {
  for (int id = 0; id < config.snapshots; ++id) {
    const SnapshotInputs in = draw_snapshot(config, id);
    for (Mode mode : config.modes) {
      if (mode == Mode::fullpower) continue;
      const SimConfig sim = config.deployment(mode);
      const std::uint64_t order = cluster_order_seed(config, id);
      const ClusterAssignment a = mode == Mode::cellular ? assign_cellular(in.cellular, sim.tau_p, order)
                                                         : assign_pilots_and_clusters(in.cellfree, sim.tau_p, order);
      const auto path = config.out_dir / ("assignment_" + to_string(mode) + "_" + std::to_string(id) + ".csv");
      std::ofstream out(path);
      if (!out) throw IoError("cannot write " + path.string());
      write_assignment_csv(out, a);
    }
  }
}

// Barrier trace of the first inner problem of snapshot 0 in cell-free mode.
void dump_solver_trace(const CampaignConfig& config) {
  const SnapshotInputs in = draw_snapshot(config, 0);
  const SimConfig sim = config.deployment(Mode::cellfree);
  const ClusterAssignment a = assign_pilots_and_clusters(in.cellfree, sim.tau_p, cluster_order_seed(config, 0));
  std::mt19937_64 channel_rng(channel_seed(config, 0, Mode::cellfree));
  std::mt19937_64 noise_rng(pilot_noise_seed(config, 0, Mode::cellfree));
  const ChannelRealization h = realize_channels(in.cellfree, channel_rng);
  const ChannelEstimates est =
      mmse_estimate(h, in.cellfree, a, {sim.pilot_power, sim.noise_power, sim.tau_p}, noise_rng);
  const AllocatorConfig ac = allocator_config(config, Mode::cellfree, Exec::parallel);
  const Vector p0 = Vector::Constant(sim.num_users, sim.p_max);
  const CombinerSet comb = pmmse_combiner(est, a, p0, sim.noise_power);
  const SinrCoefficients coeffs = sinr_coefficients(est, comb, a, sim.noise_power);
  const ConvexSubproblem sub =
      make_subproblem(coeffs, p0, cellfree_layout(a, in.cellfree_budgets), in.tasks, ac, Mode::cellfree);
  const InnerSolution init = phase1_init(sub);
  const auto path = config.out_dir / "barrier_trace.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (init.status != InnerStatus::optimal) {
    std::cerr << "solver trace: first inner problem is infeasible\n";
    write_barrier_trace_csv(out, {});
    return;
  }
  BarrierOptions opts = ac.barrier;
  opts.record_trace = true;
  write_barrier_trace_csv(out, barrier_solve(sub, init, opts).trace);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint uplink power and edge compute allocation: cell-free vs cellular campaign"};
  std::string config_path;
  std::string mode = "all";
  std::optional<int> snapshots;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> realizations;
  std::optional<int> threads;
  bool serial = false;
  bool assignments = false;
  bool solver_trace = false;

  app.add_option("--config", config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "cellfree | cellular | fullpower | all")
      ->check(CLI::IsMember({"cellfree", "cellular", "fullpower", "all"}));
  app.add_option("--snapshots", snapshots, "Number of user drops")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Base random seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--realizations", realizations, "Channel draws per drop for the ergodic SE")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--serial", serial, "Use the serial reference path");
  app.add_flag("--dump-assignments", assignments, "Write pilot/cluster CSV per snapshot");
  app.add_flag("--solver-trace", solver_trace, "Write the barrier trace of the first cell-free inner solve");
  CLI11_PARSE(app, argc, argv);

  try {
    CampaignConfig config = config_path.empty() ? CampaignConfig{} : load_campaign_config(config_path);
    if (mode == "all") {
      config.modes = {Mode::cellfree, Mode::cellular, Mode::fullpower};
    } else {
      config.modes = {parse_mode(mode)};
    }
    if (snapshots) config.snapshots = *snapshots;
    if (seed) config.sim.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;
    if (realizations) config.realizations = *realizations;
    if (threads) config.threads = *threads;
    config.validate();
    if (config.threads > 0) omp_set_num_threads(config.threads);

    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create " + config.out_dir.string() + ": " + ec.message());

    if (assignments) dump_assignments(config);
    if (solver_trace) dump_solver_trace(config);

    const auto start = std::chrono::steady_clock::now();
    const MetricsTable metrics = run_campaign(config, serial ? Exec::serial : Exec::parallel);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit_report(metrics, config.out_dir);

    for (Mode m : config.modes) {
      const ModeSummary s = summarize(metrics, m);
      std::cout << to_string(m) << ": feasible " << s.feasible << ", infeasible " << s.infeasible;
      if (s.feasible > 0) {
        std::cout << ", median total power " << percentile(s.total_power, 50) << " W"
                  << ", median SE " << percentile(s.se, 50) << ", 5% SE " << percentile(s.se, 5)
                  << ", median compute " << percentile(s.total_compute, 50) << " GHz";
      }
      std::cout << '\n';
    }
    std::cout << "wrote " << config.out_dir.string() << " in " << seconds << " s\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

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

// Serial reference vs OpenMP kernels, and structured vs dense Newton solves.

#include <benchmark/benchmark.h>

#include "cfmec/barrier.hpp"
#include "cfmec/campaign.hpp"

using namespace cfmec;

namespace {

struct Fixture {
  CampaignConfig config;
  SnapshotInputs inputs;
  ClusterAssignment assignment;
  ChannelRealization realization;
  ChannelEstimates estimates;
  ConvexSubproblem sub;
  InnerSolution init;

  Fixture() {
    config.snapshots = 1;
    inputs = draw_snapshot(config, 0);
    const SimConfig sim = config.deployment(Mode::cellfree);
    assignment = assign_pilots_and_clusters(inputs.cellfree, sim.tau_p, cluster_order_seed(config, 0));
    std::mt19937_64 rng(channel_seed(config, 0, Mode::cellfree));
    realization = realize_channels(inputs.cellfree, rng);
    estimates = mmse_estimate(realization, inputs.cellfree, assignment,
                              {sim.pilot_power, sim.noise_power, sim.tau_p}, rng);
    const Vector p = Vector::Constant(sim.num_users, sim.p_max);
    const CombinerSet comb = pmmse_combiner(estimates, assignment, p, sim.noise_power);
    const SinrCoefficients coeffs = sinr_coefficients(estimates, comb, assignment, sim.noise_power);
    sub = make_subproblem(coeffs, p, cellfree_layout(assignment, inputs.cellfree_budgets), inputs.tasks,
                          allocator_config(config, Mode::cellfree, Exec::serial), Mode::cellfree);
    init = phase1_init(sub);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_MmseEstimate(benchmark::State& state) {
  const Fixture& f = fixture();
  const SimConfig sim = f.config.deployment(Mode::cellfree);
  for (auto _ : state) {
    std::mt19937_64 rng(7);
    benchmark::DoNotOptimize(mmse_estimate(f.realization, f.inputs.cellfree, f.assignment,
                                           {sim.pilot_power, sim.noise_power, sim.tau_p}, rng,
                                           exec_of(state)));
  }
}
BENCHMARK(BM_MmseEstimate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PmmseCombiner(benchmark::State& state) {
  const Fixture& f = fixture();
  const SimConfig sim = f.config.deployment(Mode::cellfree);
  const Vector p = Vector::Constant(sim.num_users, sim.p_max);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pmmse_combiner(f.estimates, f.assignment, p, sim.noise_power, exec_of(state)));
  }
}
BENCHMARK(BM_PmmseCombiner)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SinrCoefficients(benchmark::State& state) {
  const Fixture& f = fixture();
  const SimConfig sim = f.config.deployment(Mode::cellfree);
  const Vector p = Vector::Constant(sim.num_users, sim.p_max);
  const CombinerSet comb = pmmse_combiner(f.estimates, f.assignment, p, sim.noise_power);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinr_coefficients(f.estimates, comb, f.assignment, sim.noise_power, exec_of(state)));
  }
}
BENCHMARK(BM_SinrCoefficients)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NewtonStep(benchmark::State& state) {
  const Fixture& f = fixture();
  if (f.init.status != InnerStatus::optimal) {
    state.SkipWithError("phase 1 infeasible on the benchmark snapshot");
    return;
  }
  const BarrierModel model(f.sub);
  const Vector x = model.pack(f.init.p, f.init.f, f.init.nu);
  const auto sys = model.assemble(x, 10.0);
  const NewtonSolver solver = state.range(0) ? NewtonSolver::structured : NewtonSolver::dense;
  for (auto _ : state) benchmark::DoNotOptimize(model.solve(sys, -sys.grad, solver));
  state.counters["dim"] = model.dim();
}
BENCHMARK(BM_NewtonStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Campaign(benchmark::State& state) {
  CampaignConfig config;
  config.snapshots = 2;
  config.realizations = 2;
  config.modes = {Mode::cellfree};
  for (auto _ : state) benchmark::DoNotOptimize(run_campaign(config, exec_of(state)));
}
BENCHMARK(BM_Campaign)->Arg(0)->Arg(1)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();

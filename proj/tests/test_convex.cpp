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

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cfmec/barrier.hpp"

using namespace cfmec;

namespace {

constexpr double kB = 20e6;

// K users with one private entry each, optionally plus one entry each on a shared pool.
ConvexSubproblem make_problem(int K, std::uint64_t seed, bool interference, bool shared, double weight) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ConvexSubproblem s;
  s.users = K;
  s.gain.resize(K);
  s.noise = Vector::Ones(K);
  s.interference = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    s.gain(k) = 50.0 + 150.0 * u(rng);
    for (int i = 0; i < K && interference; ++i) s.interference(k, i) = (i == k ? 0.2 : 5.0) * u(rng);
  }
  s.expansion = Vector::Constant(K, 0.1);
  s.prefactor = 0.95;
  s.bandwidth = kB;
  s.p_max = 0.1;
  s.weight = weight;
  s.latency_budget = Vector::Constant(K, 0.4);
  s.bits.resize(K);
  for (int k = 0; k < K; ++k) s.bits(k) = std::floor(1.0 + 5.0 * u(rng)) * 1e6;
  s.cycles = 50.0 * s.bits;
  s.compute_dim = shared ? 2 * K : K;
  s.user_entries.resize(K);
  for (int k = 0; k < K; ++k) {
    s.user_entries[k] = {k};
    if (shared) s.user_entries[k].push_back(K + k);
    s.budgets.push_back({2e9 + 3e9 * u(rng), {k}});
  }
  if (shared) {
    ComputeBudget pool{1e10, {}};
    for (int k = 0; k < K; ++k) pool.entries.push_back(K + k);
    s.budgets.push_back(pool);
  }
  s.group_of_user.assign(K, 0);
  s.num_groups = 1;
  return s;
}

double required_se(const ConvexSubproblem& s, int k, double compute) {
  return s.bits(k) / (s.bandwidth * (s.latency_budget(k) - s.cycles(k) / compute));
}

// Least p in [0, p_max] with SE(p) >= target; the SE is increasing without self-interference.
double bisect_power(const ConvexSubproblem& s, int k, double target) {
  double lo = 0.0, hi = s.p_max;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    Vector p = Vector::Zero(s.users);
    p(k) = mid;
    (se_lower_bound(p, s, k) >= target ? hi : lo) = mid;
  }
  return hi;
}

InnerSolution solve(const ConvexSubproblem& s, NewtonSolver solver = NewtonSolver::structured,
                    bool trace = false) {
  const InnerSolution init = phase1_init(s);
  REQUIRE(init.status == InnerStatus::optimal);
  BarrierOptions opt;
  opt.solver = solver;
  opt.record_trace = trace;
  return barrier_solve(s, init, opt);
}

Vector interior_point(const BarrierModel& model, const ConvexSubproblem& s, std::mt19937_64& rng) {
  // Random perturbation of the phase-1 point, kept strictly feasible.
  const InnerSolution init = phase1_init(s);
  std::uniform_real_distribution<double> u(0.9, 1.0);
  for (;;) {
    Vector p = init.p, f = init.f, nu = init.nu;
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) *= u(rng);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) *= u(rng);
    for (Eigen::Index i = 0; i < nu.size(); ++i) nu(i) *= u(rng);
    const Vector x = model.pack(p, f, nu);
    if (model.strictly_feasible(x)) return x;
  }
}

}  // namespace

TEST_CASE("lower bound: minorant, tight and tangent at the expansion point") {
  const ConvexSubproblem s = make_problem(5, 1, true, false, 1.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    Vector p(5);
    for (int k = 0; k < 5; ++k) p(k) = u(rng);
    for (int k = 0; k < 5; ++k) CHECK(se_lower_bound(p, s, k) <= se_exact(p, s, k) + 1e-12);
  }
  for (int k = 0; k < 5; ++k) {
    CHECK(se_lower_bound(s.expansion, s, k) == doctest::Approx(se_exact(s.expansion, s, k)).epsilon(1e-14));
    const Vector grad = se_lower_bound_gradient(s.expansion, s, k);
    for (int i = 0; i < 5; ++i) {
      const double h = 1e-7;
      Vector pp = s.expansion, pm = s.expansion;
      pp(i) += h;
      pm(i) -= h;
      const double fd = (se_exact(pp, s, k) - se_exact(pm, s, k)) / (2 * h);
      CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("lower bound gradient matches finite differences away from the expansion point") {
  const ConvexSubproblem s = make_problem(4, 3, true, false, 1.0);
  const Vector p = Vector::LinSpaced(4, 0.01, 0.08);
  for (int k = 0; k < 4; ++k) {
    const Vector grad = se_lower_bound_gradient(p, s, k);
    for (int i = 0; i < 4; ++i) {
      const double h = 1e-7;
      Vector pp = p, pm = p;
      pp(i) += h;
      pm(i) -= h;
      CHECK(grad(i) == doctest::Approx((se_lower_bound(pp, s, k) - se_lower_bound(pm, s, k)) / (2 * h))
                           .epsilon(1e-6));
    }
  }
}

TEST_CASE("constraints are convex along random segments") {
  const ConvexSubproblem s = make_problem(4, 5, true, true, 1.0);
  const BarrierModel model(s);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x1 = interior_point(model, s, rng);
    const Vector x2 = interior_point(model, s, rng);
    const Vector mid = model.constraints(0.5 * (x1 + x2));
    const Vector avg = 0.5 * (model.constraints(x1) + model.constraints(x2));
    CHECK((mid - avg).maxCoeff() <= 1e-12);
  }
}

TEST_CASE("barrier gradient and Hessian match finite differences") {
  const ConvexSubproblem s = make_problem(3, 7, true, true, 1.0);
  const BarrierModel model(s);
  std::mt19937_64 rng(8);
  const Vector x = interior_point(model, s, rng);
  const double t = 10.0;
  const auto sys = model.assemble(x, t);
  const Matrix H = model.dense_hessian(sys);
  const int n = model.dim();
  for (int i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1e-2, std::abs(x(i)));
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fd = (model.barrier_value(xp, t) - model.barrier_value(xm, t)) / (2 * h);
    CHECK(sys.grad(i) == doctest::Approx(fd).epsilon(1e-5).scale(1e-3 * sys.grad.cwiseAbs().maxCoeff()));
    const Vector col = (model.assemble(xp, t).grad - model.assemble(xm, t).grad) / (2 * h);
    for (int j = 0; j < n; ++j) {
      CHECK(H(j, i) == doctest::Approx(col(j)).epsilon(1e-4).scale(1e-4 * H.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("structured Newton solve agrees with the dense factorization") {
  for (int K : {1, 3, 8}) {
    const ConvexSubproblem s = make_problem(K, 11 + K, true, true, 1.0);
    const BarrierModel model(s);
    std::mt19937_64 rng(K);
    const Vector x = interior_point(model, s, rng);
    const auto sys = model.assemble(x, 100.0);
    const Vector rhs = -sys.grad;
    const Vector a = model.solve(sys, rhs, NewtonSolver::structured);
    const Vector b = model.solve(sys, rhs, NewtonSolver::dense);
    CHECK((a - b).norm() <= 1e-9 * b.norm());
    CHECK((model.dense_hessian(sys) * a - rhs).norm() <= 1e-9 * rhs.norm());
  }
}

TEST_CASE("Hessian product matches the dense Hessian") {
  const ConvexSubproblem s = make_problem(5, 21, true, true, 1.0);
  const BarrierModel model(s);
  std::mt19937_64 rng(21);
  const Vector x = interior_point(model, s, rng);
  const auto sys = model.assemble(x, 50.0);
  const Matrix H = model.dense_hessian(sys);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector v = Vector::Random(model.dim());
    CHECK((model.hessian_product(sys, v) - H * v).norm() <= 1e-12 * (H * v).norm());
  }
}

TEST_CASE("structured solve stays accurate near the end of the central path") {
  // One power far below the other and a large t give a badly scaled system.
  ConvexSubproblem s = make_problem(2, 66, false, false, 1.0);
  s.gain << 100.0, 100.0;
  s.interference(0, 1) = 50.0;
  s.bits << 9e6, 1e6;
  s.cycles = 50.0 * s.bits;
  for (auto& b : s.budgets) b.capacity = 5e9;
  const InnerSolution sol = barrier_solve(s, phase1_init(s), {});
  REQUIRE(sol.status == InnerStatus::optimal);
  const BarrierModel model(s);
  const Vector x = model.pack(sol.p, sol.f, sol.nu);
  for (double t : {1e6, 1e9, 1e12}) {
    const auto sys = model.assemble(x, t);
    const Vector rhs = -sys.grad;
    const Vector dx = model.solve(sys, rhs, NewtonSolver::structured);
    CHECK((model.dense_hessian(sys) * dx - rhs).norm() <= 1e-9 * rhs.norm());
  }
}

TEST_CASE("single user: grid search oracle") {
  for (double weight : {0.0, 0.02, 1.0}) {
    ConvexSubproblem s = make_problem(1, 21, false, false, weight);
    const InnerSolution sol = solve(s);
    REQUIRE(sol.status == InnerStatus::optimal);
    // With one pool the whole capacity goes to the user, leaving a scalar problem in p.
    const double cap = s.budgets[0].capacity;
    const double p_lo = bisect_power(s, 0, required_se(s, 0, cap));
    double best = std::numeric_limits<double>::infinity();
    const int n = 200000;
    for (int i = 0; i <= n; ++i) {
      const double p = p_lo + (s.p_max - p_lo) * i / n;
      const double se = se_lower_bound(Vector::Constant(1, p), s, 0);
      best = std::min(best, p - weight * se);
    }
    CHECK(sol.objective == doctest::Approx(best).epsilon(1e-6).scale(1e-6));
    // Grid points are feasible, so the solver may exceed them only by its duality gap.
    CHECK(sol.objective <= best + 1e-8 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("decoupled users without min-SE term: bisection oracle") {
  const ConvexSubproblem s = make_problem(4, 31, false, false, 0.0);
  for (NewtonSolver solver : {NewtonSolver::structured, NewtonSolver::dense}) {
    const InnerSolution sol = solve(s, solver);
    REQUIRE(sol.status == InnerStatus::optimal);
    CHECK(sol.nu.size() == 0);
    for (int k = 0; k < 4; ++k) {
      const double oracle = bisect_power(s, k, required_se(s, k, s.budgets[k].capacity));
      CHECK(sol.p(k) == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
}

TEST_CASE("optimality certificate and its negative control") {
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    const ConvexSubproblem s = make_problem(6, seed, true, true, 1.0);
    const InnerSolution a = solve(s, NewtonSolver::structured);
    const InnerSolution b = solve(s, NewtonSolver::dense);
    REQUIRE(a.status == InnerStatus::optimal);
    CHECK(a.kkt_residual < 1e-6);
    CHECK(b.kkt_residual < 1e-6);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-8));

    // A random interior point must be far from stationary.
    const BarrierModel model(s);
    std::mt19937_64 rng(seed);
    const Vector x = interior_point(model, s, rng);
    InnerSolution probe;
    probe.p = model.power(x);
    probe.f = model.compute_cycles(x);
    probe.nu = model.nu(x);
    CHECK(kkt_residual(s, probe) > 1e-3);
  }
}

TEST_CASE("solution is primal feasible and the central path descends") {
  const ConvexSubproblem s = make_problem(5, 51, true, true, 1.0);
  const InnerSolution sol = solve(s, NewtonSolver::structured, true);
  const BarrierModel model(s);
  CHECK(model.constraints(model.pack(sol.p, sol.f, sol.nu)).maxCoeff() <= 1e-8);
  CHECK((sol.p.array() >= 0.0).all());
  CHECK((sol.p.array() <= s.p_max).all());
  for (const auto& b : s.budgets) {
    double used = 0.0;
    for (int j : b.entries) used += sol.f(j);
    CHECK(used <= b.capacity * (1 + 1e-12));
  }

  // Objective at the end of each centering phase.
  REQUIRE(sol.trace.size() > 2);
  std::vector<double> centers;
  for (std::size_t i = 0; i + 1 < sol.trace.size(); ++i) {
    if (sol.trace[i + 1].t > sol.trace[i].t) centers.push_back(sol.trace[i].objective);
  }
  centers.push_back(sol.trace.back().objective);
  for (std::size_t i = 1; i < centers.size(); ++i) CHECK(centers[i] <= centers[i - 1] + 1e-9);

  std::ostringstream csv;
  write_barrier_trace_csv(csv, sol.trace);
  CHECK(csv.str().rfind("iteration,objective,t,newton_decrement\n", 0) == 0);
}

TEST_CASE("phase one") {
  SUBCASE("feasible start is strictly interior") {
    const ConvexSubproblem s = make_problem(6, 61, true, true, 1.0);
    const InnerSolution init = phase1_init(s);
    REQUIRE(init.status == InnerStatus::optimal);
    const BarrierModel model(s);
    CHECK(model.strictly_feasible(model.pack(init.p, init.f, init.nu)));
  }
  SUBCASE("computation alone exceeds the deadline") {
    ConvexSubproblem s = make_problem(2, 62, false, false, 1.0);
    s.cycles(1) = 0.5 * s.budgets[1].capacity;  // 0.5 s > 0.4 s budget
    CHECK(phase1_init(s).status == InnerStatus::infeasible);
  }
  SUBCASE("SE at full power is too low") {
    ConvexSubproblem s = make_problem(2, 63, false, false, 1.0);
    s.gain(0) = 1e-3;
    CHECK(phase1_init(s).status == InnerStatus::infeasible);
  }
  SUBCASE("no positive latency budget") {
    ConvexSubproblem s = make_problem(2, 64, false, false, 1.0);
    s.latency_budget(0) = -0.01;
    CHECK(phase1_init(s).status == InnerStatus::infeasible);
  }
  SUBCASE("shared pool needs reweighting") {
    // Private pools are tiny, so user 0 needs most of the shared pool.
    ConvexSubproblem s = make_problem(3, 65, false, true, 1.0);
    for (int k = 0; k < 3; ++k) s.budgets[k].capacity = 1e8;
    s.bits << 6e6, 1e6, 1e6;
    s.cycles = 50.0 * s.bits;
    s.budgets[3].capacity = 1.3e9;
    const InnerSolution init = phase1_init(s);
    REQUIRE(init.status == InnerStatus::optimal);
    CHECK(init.f(3) > init.f(4));
  }
  SUBCASE("an interferer backs off") {
    // User 1 drowns user 0 at full power but needs little SE itself.
    ConvexSubproblem s = make_problem(2, 66, false, false, 1.0);
    s.gain << 100.0, 100.0;
    s.interference(0, 1) = 50.0;
    s.bits << 9e6, 1e6;
    s.cycles = 50.0 * s.bits;
    for (auto& b : s.budgets) b.capacity = 5e9;
    CHECK(se_exact(s.expansion, s, 0) < required_se(s, 0, 5e9));
    const InnerSolution init = phase1_init(s);
    REQUIRE(init.status == InnerStatus::optimal);
    CHECK(init.p(1) < 0.1 * s.p_max);
    const BarrierModel model(s);
    CHECK(model.strictly_feasible(model.pack(init.p, init.f, init.nu)));
  }
}

TEST_CASE("exact-SE power search beyond the bound") {
  // As above with a stronger interferer: the bound around full power cannot
  // serve user 0 at any power, the exact SE can.
  ConvexSubproblem s = make_problem(2, 66, false, false, 1.0);
  s.gain << 100.0, 100.0;
  s.interference(0, 1) = 200.0;
  s.bits << 9e6, 1e6;
  s.cycles = 50.0 * s.bits;
  for (auto& b : s.budgets) b.capacity = 5e9;
  CHECK(phase1_init(s).status == InnerStatus::infeasible);
  Vector p;
  REQUIRE(feasible_powers(s, p));
  for (int k = 0; k < 2; ++k) {
    CHECK(p(k) > 0.0);
    CHECK(p(k) < s.p_max);
    CHECK(se_exact(p, s, k) > required_se(s, k, 5e9));
  }
  // Re-expanded at p the bound is tight, so a start exists.
  s.expansion = p;
  CHECK(phase1_init(s).status == InnerStatus::optimal);

  SUBCASE("no power vector helps") {
    s.gain(0) = 1e-3;
    Vector q;
    CHECK_FALSE(feasible_powers(s, q));
    CHECK(q.size() == 2);
  }
}

TEST_CASE("malformed subproblems are rejected") {
  const ConvexSubproblem base = make_problem(3, 71, true, true, 1.0);
  ConvexSubproblem s = base;
  s.noise(1) = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base;
  s.gain.resize(2);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base;
  s.budgets[0].entries.push_back(4);  // also in the shared pool
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base;
  s.user_entries[1].push_back(0);  // owned by user 0
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base;
  s.num_groups = 2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base;
  s.weight = 0.0;
  s.num_groups = 2;
  CHECK_NOTHROW(s.validate());
  CHECK_NOTHROW(base.validate());
}

TEST_CASE("status names") {
  CHECK(to_string(InnerStatus::optimal) == "optimal");
  CHECK(to_string(InnerStatus::infeasible) == "infeasible");
  CHECK(to_string(InnerStatus::max_iter) == "max_iter");
}

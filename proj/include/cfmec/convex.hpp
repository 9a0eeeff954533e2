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
#include <vector>

#include "cfmec/common.hpp"

namespace cfmec {

/// One shared compute pool (cloud CPU, an AP or a BS).
struct ComputeBudget {
  double capacity = 0.0;     // cycles/s
  std::vector<int> entries;  // indices into the compressed compute vector
};

/// Convex inner problem of one SCA iteration.
///
/// Variables are the uplink powers p (W), a compressed compute vector f
/// holding only structurally non-zero rates, and one min-SE variable per
/// group (a single group in the cell-free problem, one per cell otherwise).
///
///   minimize    1^T p - weight * sum(nu)
///   subject to  b_k / (B * SE~_k(p)) + w_k / f_k <= latency_budget_k
///               SE~_k(p) >= nu_{group(k)}
///               sum of each budget's entries <= capacity
///               0 <= p <= p_max,  f > 0
///
/// where SE~_k is the concave minorant of the SE around `expansion` and
/// f_k is the sum of user k's compute entries.
struct ConvexSubproblem {
  int users = 0;
  Vector gain;          // g_k
  Matrix interference;  // row k: a_k
  Vector noise;         // c_k
  Vector expansion;     // p0
  double prefactor = 1.0;

  Vector latency_budget;  // s, deadline minus fronthaul delay
  Vector bits;            // b_k
  Vector cycles;          // w_k
  double bandwidth = 1.0;
  double p_max = 1.0;
  double weight = 1.0;

  int compute_dim = 0;
  std::vector<std::vector<int>> user_entries;
  std::vector<ComputeBudget> budgets;
  std::vector<int> group_of_user;
  int num_groups = 1;

  /// Compute rates are handled in these units inside the solver.
  static constexpr double compute_unit = 1e9;

  /// Throws std::invalid_argument on malformed data.
  void validate() const;
  bool has_min_se() const { return weight > 0.0; }
};

/// True SE of user k at fixed combiners.
double se_exact(const Vector& p, const ConvexSubproblem& sub, int k);

/// Concave lower bound of SE_k around sub.expansion.
double se_lower_bound(const Vector& p, const ConvexSubproblem& sub, int k);

/// Gradient of se_lower_bound with respect to p.
Vector se_lower_bound_gradient(const Vector& p, const ConvexSubproblem& sub, int k);

enum class InnerStatus { optimal, infeasible, max_iter };

std::string to_string(InnerStatus status);

struct BarrierTraceRow {
  int newton_iter = 0;
  double objective = 0.0;
  double t = 0.0;
  double decrement = 0.0;
};

struct InnerSolution {
  Vector p;
  Vector f;   // cycles/s, compressed layout
  Vector nu;  // one per group; empty when weight == 0
  double objective = 0.0;
  double kkt_residual = 0.0;
  int newton_iters = 0;
  InnerStatus status = InnerStatus::infeasible;
  Vector duals;  // barrier multipliers at the returned point, constraint order of BarrierModel
  std::vector<BarrierTraceRow> trace;

  double min_nu() const { return nu.size() ? nu.minCoeff() : 0.0; }
};

enum class NewtonSolver {
  structured,  // Woodbury / Schur complement over the compute block
  dense,       // full Hessian factorization; reference path
};

struct BarrierOptions {
  double mu = 10.0;
  double armijo = 0.25;
  double backtrack = 0.5;
  double gap_tol = 1e-8;        // stop when m / t < gap_tol * max(1, |objective|)
  double decrement_tol = 1e-9;  // centering stop on lambda^2 / 2
  int max_newton = 500;
  NewtonSolver solver = NewtonSolver::structured;
  bool record_trace = false;
};

/// Strictly feasible starting point: p at the expansion point (clipped below
/// p_max), compute split by need, nu just below the smallest bound. When a
/// deadline is missed there, powers are lowered by target-SE power control on
/// the bound. Status is `infeasible` when no such point was found.
InnerSolution phase1_init(const ConvexSubproblem& sub);

/// Same search on the exact SE at the fixed combiners. True when `p` meets
/// every deadline; otherwise `p` holds the last powers tried. Used to move the
/// expansion point when the bound around it admits no feasible point.
bool feasible_powers(const ConvexSubproblem& sub, Vector& p);

/// Log-barrier interior-point solve from a strictly feasible point.
InnerSolution barrier_solve(const ConvexSubproblem& sub, const InnerSolution& init,
                            const BarrierOptions& options = {});

/// Scaled KKT violation: max of stationarity, complementary slackness and
/// primal infeasibility. Uses `solution.duals` when present, otherwise
/// estimates multipliers by non-negative least squares.
double kkt_residual(const ConvexSubproblem& sub, const InnerSolution& solution);

void write_barrier_trace_csv(std::ostream& out, const std::vector<BarrierTraceRow>& trace);

}  // namespace cfmec

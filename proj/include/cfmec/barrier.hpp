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

#include <vector>

#include "cfmec/convex.hpp"

namespace cfmec {

/// Log-barrier view of a ConvexSubproblem.
///
/// Packed variable x = [p (W); f (GHz); nu]. Constraints g_i(x) <= 0 are
/// ordered: latency (K), min-SE (K, only with weight > 0), budgets,
/// p >= 0 (K), p <= p_max (K), f >= 0 (F). All are scaled to be
/// dimensionless.
class BarrierModel {
 public:
  explicit BarrierModel(const ConvexSubproblem& sub);

  int users() const { return K_; }
  int compute_dim() const { return F_; }
  int groups() const { return G_; }
  int dim() const { return K_ + F_ + G_; }
  int num_constraints() const { return m_; }

  Vector pack(const Vector& p, const Vector& f_cycles, const Vector& nu) const;
  Vector power(const Vector& x) const { return x.head(K_); }
  Vector compute_cycles(const Vector& x) const {
    return x.segment(K_, F_) * ConvexSubproblem::compute_unit;
  }
  Vector nu(const Vector& x) const { return x.tail(G_); }

  double objective(const Vector& x) const;
  Vector objective_gradient() const;

  /// g_i(x) for all constraints (NaN-free only inside the SE domain).
  Vector constraints(const Vector& x) const;
  /// Dense m x n Jacobian of the constraints.
  Matrix jacobian(const Vector& x) const;

  bool strictly_feasible(const Vector& x) const;

  /// t * objective - sum log(-g_i); +inf outside the domain.
  double barrier_value(const Vector& x, double t) const;

  /// Gradient and Hessian of the barrier function in structured form.
  struct System {
    Vector grad;  // n
    Matrix hyy;   // (K+G)^2, power and nu block
    Vector diag;  // F, compute diagonal
    Vector user_weight;    // K, rank-one weight on each user's compute entries
    Vector budget_weight;  // B, rank-one weight on each budget's entries
    Matrix coupling;       // K x (K+G), row k couples user k's compute entries to (p, nu)
  };
  System assemble(const Vector& x, double t) const;

  /// Dense Hessian equivalent to `system`.
  Matrix dense_hessian(const System& system) const;

  /// H x without forming H.
  Vector hessian_product(const System& system, const Vector& x) const;

  /// Solves H dx = rhs with the given system.
  Vector solve(const System& system, const Vector& rhs, NewtonSolver solver) const;

  /// Largest step in (0, 1] keeping the linear constraints strictly satisfied (times 0.99).
  double max_linear_step(const Vector& x, const Vector& dx) const;

 private:
  struct UserTerms {
    double n = 0.0;   // normalized SINR denominator plus numerator
    double se = 0.0;  // lower bound value
    Vector grad;      // gradient of lower bound
    Vector u;         // g_k e_k + a_k (normalized)
  };
  UserTerms user_terms(const Vector& p, int k) const;
  double user_compute(const Vector& x, int k) const;

  Vector solve_structured(const System& s, const Vector& rhs) const;

  const ConvexSubproblem* sub_;
  int K_, F_, G_, B_, m_;
  Vector norm_gain_;
  Matrix norm_interference_;
  Vector d0_;        // normalized denominator at the expansion point
  Vector bits_term_;     // b_k / (B * latency_budget_k)
  Vector cycles_term_;   // w_k / (unit * latency_budget_k)
  std::vector<int> entry_user_;
  std::vector<int> entry_budget_;
};

}  // namespace cfmec

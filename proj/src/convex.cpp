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

#include "cfmec/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cfmec/barrier.hpp"

namespace cfmec {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("ConvexSubproblem: ") + what);
}

}  // namespace

void ConvexSubproblem::validate() const {
  const Eigen::Index K = users;
  check(K >= 1, "no users");
  check(gain.size() == K && noise.size() == K && expansion.size() == K, "coefficient sizes");
  check(interference.rows() == K && interference.cols() == K, "interference size");
  check(latency_budget.size() == K && bits.size() == K && cycles.size() == K, "task sizes");
  check((noise.array() > 0.0).all(), "noise coefficients must be positive");
  check((gain.array() >= 0.0).all() && (interference.array() >= 0.0).all(), "negative coefficients");
  check((bits.array() > 0.0).all() && (cycles.array() > 0.0).all(), "task sizes must be positive");
  check(bandwidth > 0.0 && p_max > 0.0 && weight >= 0.0, "scalars");
  check(static_cast<Eigen::Index>(user_entries.size()) == K, "user_entries size");
  check(static_cast<Eigen::Index>(group_of_user.size()) == K, "group_of_user size");
  std::vector<int> owner(compute_dim, -1);
  for (int k = 0; k < users; ++k) {
    check(!user_entries[k].empty(), "user without compute entries");
    for (int j : user_entries[k]) {
      check(j >= 0 && j < compute_dim && owner[j] < 0, "compute entry owned twice or out of range");
      owner[j] = k;
    }
    check(group_of_user[k] >= 0 && group_of_user[k] < num_groups, "group index");
  }
  check(std::find(owner.begin(), owner.end(), -1) == owner.end(), "compute entry without owner");
  std::vector<int> budget_of(compute_dim, -1);
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    check(budgets[b].capacity > 0.0, "budget capacity must be positive");
    for (int j : budgets[b].entries) {
      check(j >= 0 && j < compute_dim && budget_of[j] < 0, "compute entry in two budgets");
      budget_of[j] = static_cast<int>(b);
    }
  }
  if (has_min_se()) {
    std::vector<int> members(num_groups, 0);
    for (int g : group_of_user) ++members[g];
    check(std::find(members.begin(), members.end(), 0) == members.end(), "empty min-SE group");
  }
}

double se_exact(const Vector& p, const ConvexSubproblem& sub, int k) {
  const double den = sub.interference.row(k).dot(p) + sub.noise(k);
  return sub.prefactor * std::log2(1.0 + p(k) * sub.gain(k) / den);
}

double se_lower_bound(const Vector& p, const ConvexSubproblem& sub, int k) {
  const auto a = sub.interference.row(k);
  const double total = sub.gain(k) * p(k) + a.dot(p) + sub.noise(k);
  const double den0 = a.dot(sub.expansion) + sub.noise(k);
  return sub.prefactor * (std::log2(total) - std::log2(den0) -
                          a.dot(p - sub.expansion) / (std::numbers::ln2 * den0));
}

Vector se_lower_bound_gradient(const Vector& p, const ConvexSubproblem& sub, int k) {
  Vector a = sub.interference.row(k).transpose();
  Vector u = a;
  u(k) += sub.gain(k);
  const double total = u.dot(p) + sub.noise(k);
  const double den0 = a.dot(sub.expansion) + sub.noise(k);
  return (sub.prefactor / std::numbers::ln2) * (u / total - a / den0);
}

std::string to_string(InnerStatus status) {
  switch (status) {
    case InnerStatus::optimal: return "optimal";
    case InnerStatus::infeasible: return "infeasible";
    case InnerStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

namespace {

// Splits each budget in proportion to per-user weights, reweighted toward users
// below `required`. Returns per-user totals; f is filled in place.
Vector split_compute(const ConvexSubproblem& sub, const std::vector<int>& entry_user, const Vector& required,
                     Vector& f) {
  const int K = sub.users;
  Vector total(K);
  // A nearly exhausted split is the fallback for problems feasible only close
  // to the budget limits.
  for (double fill : {0.99, 1.0 - 1e-6}) {
    Vector weight = required;
    for (int round = 0; round < 200; ++round) {
      for (const auto& b : sub.budgets) {
        double wsum = 0.0;
        for (int j : b.entries) wsum += weight(entry_user[j]);
        for (int j : b.entries) f(j) = fill * b.capacity * weight(entry_user[j]) / wsum;
      }
      for (int k = 0; k < K; ++k) {
        total(k) = 0.0;
        for (int j : sub.user_entries[k]) total(k) += f(j);
      }
      bool ok = true;
      for (int k = 0; k < K; ++k) {
        if (total(k) <= required(k) * (1.0 + 1e-9)) {
          ok = false;
          weight(k) *= 1.01 * required(k) / std::max(total(k), 1e-300);
        }
      }
      if (ok) return total;
    }
  }
  return total;
}

// Least powers in [0, cap] whose bound meets `target`, by best-response sweeps
// from the cap. The bound falls in the other users' powers, so a user that
// cannot reach its target yet sits at its peak until the others back off.
// Returns false when the sweeps settle with some target unmet.
bool power_for_targets(const ConvexSubproblem& sub, const Vector& target, double cap, bool exact, Vector& p) {
  const auto se = exact ? se_exact : se_lower_bound;
  const int K = sub.users;
  p = Vector::Constant(K, cap);
  for (int sweep = 0; sweep < 2000; ++sweep) {
    double change = 0.0;
    for (int k = 0; k < K; ++k) {
      const double a = sub.interference(k, k);
      const double g = sub.gain(k);
      const double den0 = sub.interference.row(k).dot(sub.expansion) + sub.noise(k);
      const double rest = sub.interference.row(k).dot(p) - a * p(k) + sub.noise(k);
      // The bound is concave in p_k; search below its peak.
      double hi = cap;
      if (!exact && a > 0.0) hi = std::clamp(den0 / a - rest / (g + a), 0.0, cap);
      Vector q = p;
      q(k) = hi;
      if (se(q, sub, k) >= target(k)) {
        double lo = 0.0;
        for (int it = 0; it < 100 && hi - lo > 1e-15 * cap; ++it) {
          q(k) = 0.5 * (lo + hi);
          (se(q, sub, k) >= target(k) ? hi : lo) = q(k);
        }
      }
      change = std::max(change, std::abs(p(k) - hi));
      p(k) = hi;
    }
    if (change <= 1e-13 * cap) break;
  }
  for (int k = 0; k < K; ++k) {
    if (se(p, sub, k) < target(k)) return false;
  }
  return true;
}

// Alternates a compute split with power control until every user meets its
// deadline. Starts from `p0`; on success fills p, f and the SE at p.
bool search_start(const ConvexSubproblem& sub, bool exact, const Vector& p0, InnerSolution& out, Vector& se) {
  const int K = sub.users;
  const double cap = sub.p_max * (1.0 - 1e-4);
  const auto se_fn = exact ? se_exact : se_lower_bound;
  out.p = p0.cwiseMin(cap).cwiseMax(1e-12 * cap);
  out.f = Vector::Zero(sub.compute_dim);
  if ((sub.latency_budget.array() <= 0.0).any()) return false;

  std::vector<int> entry_user(sub.compute_dim, -1);
  for (int k = 0; k < K; ++k) {
    for (int j : sub.user_entries[k]) entry_user[j] = k;
  }

  // When some user misses its deadline, compute is split by need and powers
  // are lowered to the least vector meeting the SE each user can use with its
  // share.
  se.resize(K);
  Vector required(K), total(K);
  for (int round = 0; round < 50; ++round) {
    for (int k = 0; k < K; ++k) se(k) = se_fn(out.p, sub, k);
    bool finite = true;
    for (int k = 0; k < K; ++k) {
      // Least total compute (cycles/s) that meets the deadline at this SE.
      const double left = se(k) > 0.0 ? sub.latency_budget(k) - sub.bits(k) / (sub.bandwidth * se(k)) : 0.0;
      finite = finite && left > 0.0;
      required(k) = left > 0.0 ? sub.cycles(k) / left : std::numeric_limits<double>::infinity();
    }
    if (finite) {
      total = split_compute(sub, entry_user, required, out.f);
      if ((total.array() > required.array()).all()) return true;
    } else {
      // Unknown need: share in proportion to the work.
      Vector weight = sub.cycles;
      for (int k = 0; k < K; ++k) {
        if (std::isfinite(required(k))) weight(k) = std::min(weight(k), required(k));
      }
      total = split_compute(sub, entry_user, weight, out.f);
    }
    Vector target(K);
    for (int k = 0; k < K; ++k) {
      // Sized for 98% of the share so the next split has room.
      double left = sub.latency_budget(k) - sub.cycles(k) / (0.98 * total(k));
      if (left <= 0.0) left = (sub.latency_budget(k) - sub.cycles(k) / total(k)) / (1.0 + 1e-6);
      if (left <= 0.0) return false;
      target(k) = sub.bits(k) / (sub.bandwidth * left);
    }
    Vector p;
    const bool reached = power_for_targets(sub, target, cap, exact, p);
    out.p = p.cwiseMax(1e-12 * cap);
    if (!reached) return false;
  }
  return false;
}

}  // namespace

bool feasible_powers(const ConvexSubproblem& sub, Vector& p) {
  sub.validate();
  InnerSolution trial;
  Vector se;
  const bool met = search_start(sub, true, Vector::Constant(sub.users, sub.p_max), trial, se);
  p = trial.p;
  return met;
}

InnerSolution phase1_init(const ConvexSubproblem& sub) {
  sub.validate();
  const int K = sub.users;
  InnerSolution out;
  out.status = InnerStatus::infeasible;
  Vector se;
  const bool met = search_start(sub, false, sub.expansion, out, se);
  if (!met) return out;

  if (sub.has_min_se()) {
    out.nu = Vector::Constant(sub.num_groups, std::numeric_limits<double>::infinity());
    for (int k = 0; k < K; ++k) {
      const int g = sub.group_of_user[k];
      out.nu(g) = std::min(out.nu(g), se(k) - 1e-6);
    }
  }
  const BarrierModel model(sub);
  const Vector x = model.pack(out.p, out.f, out.nu);
  if (!model.strictly_feasible(x)) return out;
  out.objective = model.objective(x);
  out.status = InnerStatus::optimal;
  return out;
}

namespace {

double initial_t(const BarrierModel& model, const Vector& x, NewtonSolver solver) {
  // Most central t for x: minimizes the Newton decrement of t*c + grad(phi).
  const auto sys = model.assemble(x, 0.0);
  const Vector c = model.objective_gradient();
  const Vector hc = model.solve(sys, c, solver);
  const double denom = c.dot(hc);
  const double cg = sys.grad.dot(hc);
  double t = -cg / denom;
  if (!std::isfinite(t) || t < 1.0) t = 1.0;
  // Far from every central point the damped phase is long at a large t; fall
  // back to a gap of about one per constraint.
  const Vector hg = model.solve(sys, sys.grad, solver);
  const double dec2 = sys.grad.dot(hg) - cg * cg / denom;
  if (!(dec2 / 2.0 <= 1.0)) {
    t = std::min(t, std::max(1.0, model.num_constraints() / std::max(1.0, std::abs(model.objective(x)))));
  }
  return t;
}

}  // namespace

InnerSolution barrier_solve(const ConvexSubproblem& sub, const InnerSolution& init,
                            const BarrierOptions& opt) {
  const BarrierModel model(sub);
  InnerSolution out = init;
  out.trace.clear();
  out.newton_iters = 0;
  Vector x = model.pack(init.p, init.f, init.nu);
  if (!model.strictly_feasible(x)) {
    out.status = InnerStatus::infeasible;
    return out;
  }

  const double m = model.num_constraints();
  double t = std::min(initial_t(model, x, opt.solver),
                      m / (opt.gap_tol * std::max(1.0, std::abs(model.objective(x)))));
  int newton = 0;
  int restarts = 0;
  bool capped = false;

  auto newton_step = [&](double tt, Vector& dx, double& dec2) {
    const auto sys = model.assemble(x, tt);
    dx = model.solve(sys, -sys.grad, opt.solver);
    dec2 = -sys.grad.dot(dx);
    return sys.grad;
  };

  auto line_search = [&](const Vector& grad, const Vector& dx, double tt) {
    const double phi = model.barrier_value(x, tt);
    const double slope = grad.dot(dx);
    double step = std::min(1.0, model.max_linear_step(x, dx));
    while (step > 1e-14) {
      const Vector trial = x + step * dx;
      const double value = model.barrier_value(trial, tt);
      if (std::isfinite(value) &&
          value <= phi + opt.armijo * step * slope + 1e-13 * std::abs(phi)) {
        x = trial;
        return true;
      }
      step *= opt.backtrack;
    }
    return false;
  };

  for (;;) {
    // Centering.
    bool finite = true;
    for (;;) {
      Vector dx;
      double dec2 = 0.0;
      const Vector grad = newton_step(t, dx, dec2);
      if (!dx.allFinite() || !std::isfinite(dec2)) {
        finite = false;
        break;
      }
      if (opt.record_trace) out.trace.push_back({newton, model.objective(x), t, dec2});
      if (dec2 / 2.0 <= opt.decrement_tol) break;
      if (newton >= opt.max_newton) {
        capped = true;
        break;
      }
      ++newton;
      if (!line_search(grad, dx, t)) break;
    }
    if (capped) break;
    if (!finite) {
      if (++restarts > 3) {
        capped = true;
        break;
      }
      t = std::max(1.0, t / 100.0);
      continue;
    }
    const double scale = std::max(1.0, std::abs(model.objective(x)));
    if (m / t < opt.gap_tol * scale) break;
    t *= opt.mu;
  }

  // Polish: a few extra Newton steps at the final t tighten stationarity.
  for (int extra = 0; extra < 8 && !capped; ++extra) {
    Vector dx;
    double dec2 = 0.0;
    const Vector grad = newton_step(t, dx, dec2);
    if (!dx.allFinite() || dec2 / 2.0 <= 1e-18) break;
    const double step = std::min(1.0, model.max_linear_step(x, dx));
    const Vector trial = x + step * dx;
    if (!model.strictly_feasible(trial)) break;
    x = trial;
    ++newton;
  }

  out.p = model.power(x);
  out.f = model.compute_cycles(x);
  out.nu = model.nu(x);
  out.objective = model.objective(x);
  out.newton_iters = newton;
  out.status = capped ? InnerStatus::max_iter : InnerStatus::optimal;
  const Vector g = model.constraints(x);
  out.duals = (-g).cwiseInverse() / t;
  out.kkt_residual = kkt_residual(sub, out);
  return out;
}

namespace {

// Lawson-Hanson non-negative least squares: min ||A x - b||, x >= 0.
Vector nnls(const Matrix& A, const Vector& b) {
  const Eigen::Index n = A.cols();
  Vector x = Vector::Zero(n);
  std::vector<char> passive(n, 0);
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const Vector w = A.transpose() * (b - A * x);
    Eigen::Index best = -1;
    double wmax = 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[best] = 1;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j]) idx.push_back(j);
      }
      Matrix Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
      const Vector z = Ap.colPivHouseholderQr().solve(b);
      if ((z.array() > 0.0).all()) {
        x.setZero();
        for (std::size_t c = 0; c < idx.size(); ++c) x(idx[c]) = z(c);
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        if (z(c) <= 0.0) alpha = std::min(alpha, x(idx[c]) / (x(idx[c]) - z(c)));
      }
      for (std::size_t c = 0; c < idx.size(); ++c) {
        x(idx[c]) += alpha * (z(c) - x(idx[c]));
        if (x(idx[c]) <= 1e-15) {
          x(idx[c]) = 0.0;
          passive[idx[c]] = 0;
        }
      }
    }
  }
  return x;
}

}  // namespace

double kkt_residual(const ConvexSubproblem& sub, const InnerSolution& sol) {
  const BarrierModel model(sub);
  const Vector x = model.pack(sol.p, sol.f, sol.nu);
  const Vector g = model.constraints(x);
  const Matrix J = model.jacobian(x);
  const Vector c = model.objective_gradient();
  const int m = model.num_constraints();

  Vector lambda;
  if (sol.duals.size() == m) {
    // Barrier duals 1/(t r) lose precision where r is tiny, so multipliers of
    // nearly active constraints are re-fit by least squares on stationarity.
    lambda = sol.duals;
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (-g(i) < 1e-6) active.push_back(i);
    }
    if (!active.empty()) {
      Vector rest = c;
      Matrix JA(J.cols(), static_cast<Eigen::Index>(active.size()));
      std::vector<char> is_active(m, 0);
      for (std::size_t a = 0; a < active.size(); ++a) {
        JA.col(a) = J.row(active[a]).transpose();
        is_active[active[a]] = 1;
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!is_active[i]) rest += lambda(i) * J.row(i).transpose();
      }
      // Multipliers are non-negative; a plain least-squares fit can go
      // negative when the nearly active gradients are close to dependent.
      const Vector fit = nnls(JA, -rest);
      for (std::size_t a = 0; a < active.size(); ++a) lambda(active[a]) = fit(a);
    }
  } else {
    Matrix A(J.cols() + m, m);
    A.topRows(J.cols()) = J.transpose();
    A.bottomRows(m) = (-g).asDiagonal();
    Vector b = Vector::Zero(J.cols() + m);
    b.head(J.cols()) = -c;
    lambda = nnls(A, b);
  }
  const double stationarity = (c + J.transpose() * lambda).cwiseAbs().maxCoeff() /
                              std::max(1.0, c.cwiseAbs().maxCoeff());
  const double slackness = lambda.cwiseProduct(g).cwiseAbs().maxCoeff();
  const double primal = std::max(0.0, g.maxCoeff());
  const double dual = std::max(0.0, -lambda.minCoeff());
  return std::max({stationarity, slackness, primal, dual});
}

void write_barrier_trace_csv(std::ostream& out, const std::vector<BarrierTraceRow>& trace) {
  out << "iteration,objective,t,newton_decrement\n";
  out.precision(17);
  for (const auto& row : trace) {
    out << row.newton_iter << ',' << row.objective << ',' << row.t << ',' << row.decrement << '\n';
  }
}

}  // namespace cfmec

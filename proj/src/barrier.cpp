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

#include "cfmec/barrier.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace cfmec {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BarrierModel::BarrierModel(const ConvexSubproblem& sub)
    : sub_(&sub),
      K_(sub.users),
      F_(sub.compute_dim),
      G_(sub.has_min_se() ? sub.num_groups : 0),
      B_(static_cast<int>(sub.budgets.size())) {
  sub.validate();
  m_ = K_ + (G_ > 0 ? K_ : 0) + B_ + 2 * K_ + F_;
  norm_gain_ = sub.gain.cwiseQuotient(sub.noise);
  norm_interference_ = sub.noise.cwiseInverse().asDiagonal() * sub.interference;
  d0_ = norm_interference_ * sub.expansion + Vector::Ones(K_);
  bits_term_ = sub.bits.cwiseQuotient(sub.bandwidth * sub.latency_budget);
  cycles_term_ = sub.cycles.cwiseQuotient(ConvexSubproblem::compute_unit * sub.latency_budget);
  entry_user_.assign(F_, -1);
  entry_budget_.assign(F_, -1);
  for (int k = 0; k < K_; ++k) {
    for (int j : sub.user_entries[k]) entry_user_[j] = k;
  }
  for (int b = 0; b < B_; ++b) {
    for (int j : sub.budgets[b].entries) entry_budget_[j] = b;
  }
}

Vector BarrierModel::pack(const Vector& p, const Vector& f_cycles, const Vector& nu) const {
  Vector x(dim());
  x.head(K_) = p;
  x.segment(K_, F_) = f_cycles / ConvexSubproblem::compute_unit;
  if (G_ > 0) x.tail(G_) = nu;
  return x;
}

BarrierModel::UserTerms BarrierModel::user_terms(const Vector& p, int k) const {
  const double kappa = sub_->prefactor / std::numbers::ln2;
  UserTerms t;
  t.u = norm_interference_.row(k).transpose();
  t.u(k) += norm_gain_(k);
  t.n = t.u.dot(p) + 1.0;
  const double lin = norm_interference_.row(k).dot(p - sub_->expansion) / d0_(k);
  t.se = sub_->prefactor * (std::log2(t.n) - std::log2(d0_(k))) - kappa * lin;
  t.grad = kappa * (t.u / t.n - norm_interference_.row(k).transpose() / d0_(k));
  return t;
}

double BarrierModel::user_compute(const Vector& x, int k) const {
  double sum = 0.0;
  for (int j : sub_->user_entries[k]) sum += x(K_ + j);
  return sum;
}

double BarrierModel::objective(const Vector& x) const {
  double obj = x.head(K_).sum();
  if (G_ > 0) obj -= sub_->weight * x.tail(G_).sum();
  return obj;
}

Vector BarrierModel::objective_gradient() const {
  Vector c = Vector::Zero(dim());
  c.head(K_).setOnes();
  if (G_ > 0) c.tail(G_).setConstant(-sub_->weight);
  return c;
}

Vector BarrierModel::constraints(const Vector& x) const {
  Vector g(m_);
  const Vector p = x.head(K_);
  int row = 0;
  std::vector<double> se(K_);
  for (int k = 0; k < K_; ++k) {
    se[k] = user_terms(p, k).se;
    const double fk = user_compute(x, k);
    g(row++) = (se[k] > 0.0 && fk > 0.0) ? bits_term_(k) / se[k] + cycles_term_(k) / fk - 1.0 : kInf;
  }
  if (G_ > 0) {
    for (int k = 0; k < K_; ++k) g(row++) = x(K_ + F_ + sub_->group_of_user[k]) - se[k];
  }
  for (int b = 0; b < B_; ++b) {
    double sum = 0.0;
    for (int j : sub_->budgets[b].entries) sum += x(K_ + j);
    g(row++) = sum / (sub_->budgets[b].capacity / ConvexSubproblem::compute_unit) - 1.0;
  }
  for (int k = 0; k < K_; ++k) g(row++) = -p(k) / sub_->p_max;
  for (int k = 0; k < K_; ++k) g(row++) = p(k) / sub_->p_max - 1.0;
  for (int j = 0; j < F_; ++j) g(row++) = -x(K_ + j);
  return g;
}

Matrix BarrierModel::jacobian(const Vector& x) const {
  Matrix J = Matrix::Zero(m_, dim());
  const Vector p = x.head(K_);
  int row = 0;
  std::vector<UserTerms> terms;
  terms.reserve(K_);
  for (int k = 0; k < K_; ++k) terms.push_back(user_terms(p, k));
  for (int k = 0; k < K_; ++k) {
    const double s = terms[k].se;
    const double fk = user_compute(x, k);
    J.row(row).head(K_) = -bits_term_(k) / (s * s) * terms[k].grad.transpose();
    for (int j : sub_->user_entries[k]) J(row, K_ + j) = -cycles_term_(k) / (fk * fk);
    ++row;
  }
  if (G_ > 0) {
    for (int k = 0; k < K_; ++k) {
      J.row(row).head(K_) = -terms[k].grad.transpose();
      J(row, K_ + F_ + sub_->group_of_user[k]) = 1.0;
      ++row;
    }
  }
  for (int b = 0; b < B_; ++b) {
    const double cap = sub_->budgets[b].capacity / ConvexSubproblem::compute_unit;
    for (int j : sub_->budgets[b].entries) J(row, K_ + j) = 1.0 / cap;
    ++row;
  }
  for (int k = 0; k < K_; ++k) J(row++, k) = -1.0 / sub_->p_max;
  for (int k = 0; k < K_; ++k) J(row++, k) = 1.0 / sub_->p_max;
  for (int j = 0; j < F_; ++j) J(row++, K_ + j) = -1.0;
  return J;
}

bool BarrierModel::strictly_feasible(const Vector& x) const {
  if (!x.allFinite()) return false;
  const Vector g = constraints(x);
  return g.allFinite() && (g.array() < 0.0).all();
}

double BarrierModel::barrier_value(const Vector& x, double t) const {
  if (!x.allFinite()) return kInf;
  const Vector g = constraints(x);
  double value = t * objective(x);
  for (int i = 0; i < m_; ++i) {
    if (!(g(i) < 0.0)) return kInf;
    value -= std::log(-g(i));
  }
  return value;
}

BarrierModel::System BarrierModel::assemble(const Vector& x, double t) const {
  const int ny = K_ + G_;
  const double kappa = sub_->prefactor / std::numbers::ln2;
  System s;
  s.grad = t * objective_gradient();
  s.hyy = Matrix::Zero(ny, ny);
  s.diag = Vector::Zero(F_);
  s.user_weight = Vector::Zero(K_);
  s.budget_weight = Vector::Zero(B_);
  s.coupling = Matrix::Zero(K_, ny);
  const Vector p = x.head(K_);
  auto hpp = s.hyy.topLeftCorner(K_, K_);

  for (int k = 0; k < K_; ++k) {
    const UserTerms ut = user_terms(p, k);
    const double se = ut.se;
    const double fk = user_compute(x, k);
    const double beta = bits_term_(k);
    const double omega = cycles_term_(k);
    const Vector curv = ut.u / ut.n;  // -Hessian of the bound is kappa * curv curv^T

    // Latency.
    const double r = 1.0 - beta / se - omega / fk;
    const Vector gp = (-beta / (se * se)) * ut.grad;
    const double gf = -omega / (fk * fk);
    s.grad.head(K_) += gp / r;
    for (int j : sub_->user_entries[k]) s.grad(K_ + j) += gf / r;
    hpp += gp * gp.transpose() / (r * r);
    hpp += (2.0 * beta / (se * se * se * r)) * ut.grad * ut.grad.transpose();
    hpp += (beta * kappa / (se * se * r)) * curv * curv.transpose();
    s.user_weight(k) = gf * gf / (r * r) + 2.0 * omega / (fk * fk * fk * r);
    s.coupling.row(k).head(K_) = (gf / (r * r)) * gp.transpose();

    // Min-SE.
    if (G_ > 0) {
      const int gi = K_ + sub_->group_of_user[k];
      const double rs = se - x(K_ + F_ + sub_->group_of_user[k]);
      Vector grad = Vector::Zero(ny);
      grad.head(K_) = -ut.grad;
      grad(gi) = 1.0;
      s.grad.head(K_) += grad.head(K_) / rs;
      s.grad(K_ + F_ + sub_->group_of_user[k]) += 1.0 / rs;
      s.hyy += grad * grad.transpose() / (rs * rs);
      hpp += (kappa / rs) * curv * curv.transpose();
    }
  }

  for (int b = 0; b < B_; ++b) {
    const double cap = sub_->budgets[b].capacity / ConvexSubproblem::compute_unit;
    double sum = 0.0;
    for (int j : sub_->budgets[b].entries) sum += x(K_ + j);
    const double r = 1.0 - sum / cap;
    for (int j : sub_->budgets[b].entries) s.grad(K_ + j) += 1.0 / (cap * r);
    s.budget_weight(b) = 1.0 / (cap * cap * r * r);
  }

  for (int k = 0; k < K_; ++k) {
    const double lo = p(k);
    const double hi = sub_->p_max - p(k);
    s.grad(k) += -1.0 / lo + 1.0 / hi;
    s.hyy(k, k) += 1.0 / (lo * lo) + 1.0 / (hi * hi);
  }
  for (int j = 0; j < F_; ++j) {
    const double f = x(K_ + j);
    s.grad(K_ + j) += -1.0 / f;
    s.diag(j) = 1.0 / (f * f);
  }
  return s;
}

Matrix BarrierModel::dense_hessian(const System& s) const {
  const int ny = K_ + G_;
  Matrix H = Matrix::Zero(dim(), dim());
  // y block lives at indices [0, K) and [K+F, K+F+G).
  auto y_index = [&](int i) { return i < K_ ? i : K_ + F_ + (i - K_); };
  for (int i = 0; i < ny; ++i) {
    for (int j = 0; j < ny; ++j) H(y_index(i), y_index(j)) = s.hyy(i, j);
  }
  for (int j = 0; j < F_; ++j) H(K_ + j, K_ + j) += s.diag(j);
  for (int k = 0; k < K_; ++k) {
    const auto& e = sub_->user_entries[k];
    for (int a : e) {
      for (int b : e) H(K_ + a, K_ + b) += s.user_weight(k);
      for (int i = 0; i < ny; ++i) {
        H(K_ + a, y_index(i)) += s.coupling(k, i);
        H(y_index(i), K_ + a) += s.coupling(k, i);
      }
    }
  }
  for (int b = 0; b < B_; ++b) {
    const auto& e = sub_->budgets[b].entries;
    for (int i : e) {
      for (int j : e) H(K_ + i, K_ + j) += s.budget_weight(b);
    }
  }
  return H;
}

Vector BarrierModel::hessian_product(const System& s, const Vector& x) const {
  const int ny = K_ + G_;
  Vector xy(ny);
  xy.head(K_) = x.head(K_);
  if (G_ > 0) xy.tail(G_) = x.tail(G_);
  const Vector xf = x.segment(K_, F_);

  Vector user_sum = Vector::Zero(K_);
  Vector budget_sum = Vector::Zero(B_);
  for (int j = 0; j < F_; ++j) {
    user_sum(entry_user_[j]) += xf(j);
    if (entry_budget_[j] >= 0) budget_sum(entry_budget_[j]) += xf(j);
  }
  const Vector hy = s.hyy * xy + s.coupling.transpose() * user_sum;
  const Vector qy = s.coupling * xy;
  Vector out(dim());
  out.head(K_) = hy.head(K_);
  if (G_ > 0) out.tail(G_) = hy.tail(G_);
  for (int j = 0; j < F_; ++j) {
    const int k = entry_user_[j];
    const int b = entry_budget_[j];
    out(K_ + j) = s.diag(j) * xf(j) + s.user_weight(k) * user_sum(k) + qy(k) +
                  (b >= 0 ? s.budget_weight(b) * budget_sum(b) : 0.0);
  }
  return out;
}

Vector BarrierModel::solve(const System& s, const Vector& rhs, NewtonSolver solver) const {
  const double rhs_max = rhs.cwiseAbs().maxCoeff();
  if (solver == NewtonSolver::structured) {
    // The Schur complement loses digits when the power block is badly
    // scaled. Refinement against the exact product recovers small losses;
    // when it cannot, the dense factorization takes over.
    Vector dx = solve_structured(s, rhs);
    double res = 0.0;
    for (int it = 0; it < 3; ++it) {
      const Vector r = rhs - hessian_product(s, dx);
      res = r.cwiseAbs().maxCoeff();
      if (!(res > 1e-14 * rhs_max)) return dx;
      dx += solve_structured(s, r);
    }
    res = (rhs - hessian_product(s, dx)).cwiseAbs().maxCoeff();
    if (res <= 1e-10 * rhs_max) return dx;
  }
  const Matrix H = dense_hessian(s);
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  return H.ldlt().solve(rhs);
}

// Compute block: H_ff = D + V W V^T with V = [user indicators, budget
// indicators]. Woodbury handles H_ff^{-1}; the (p, nu) block is solved via
// its Schur complement.
Vector BarrierModel::solve_structured(const System& s, const Vector& rhs) const {
  const int ny = K_ + G_;
  const int nv = K_ + B_;

  Vector ry(ny);
  ry.head(K_) = rhs.head(K_);
  if (G_ > 0) ry.tail(G_) = rhs.tail(G_);
  const Vector rf = rhs.segment(K_, F_);

  const Vector dinv = s.diag.cwiseInverse();
  Vector winv(nv);
  winv.head(K_) = s.user_weight.cwiseInverse();
  winv.tail(B_) = s.budget_weight.cwiseInverse();

  // P = V^T D^{-1} V.
  Matrix P = Matrix::Zero(nv, nv);
  for (int j = 0; j < F_; ++j) {
    const int k = entry_user_[j];
    const int b = entry_budget_[j];
    P(k, k) += dinv(j);
    if (b >= 0) {
      P(K_ + b, K_ + b) += dinv(j);
      P(k, K_ + b) += dinv(j);
      P(K_ + b, k) += dinv(j);
    }
  }
  auto vt = [&](const Vector& z) {  // V^T z
    Vector out = Vector::Zero(nv);
    for (int j = 0; j < F_; ++j) {
      out(entry_user_[j]) += z(j);
      if (entry_budget_[j] >= 0) out(K_ + entry_budget_[j]) += z(j);
    }
    return out;
  };
  auto v = [&](const Vector& c) {  // V c
    Vector out(F_);
    for (int j = 0; j < F_; ++j) {
      out(j) = c(entry_user_[j]) + (entry_budget_[j] >= 0 ? c(K_ + entry_budget_[j]) : 0.0);
    }
    return out;
  };

  Matrix Mmat = P;
  Mmat.diagonal() += winv;
  const Vector scale = Mmat.diagonal().cwiseSqrt().cwiseInverse();
  const Matrix Ms = scale.asDiagonal() * Mmat * scale.asDiagonal();
  Eigen::LLT<Matrix> mllt(Ms);
  auto msolve = [&](const Matrix& B) -> Matrix {
    return scale.asDiagonal() * Matrix(mllt.solve(scale.asDiagonal() * B));
  };

  // S^T H_ff^{-1} S = (W^{-1} M^{-1} P) restricted to user rows/cols.
  const Matrix X = msolve(P);
  Matrix Y = winv.asDiagonal() * X;
  Matrix Syy = Y.topLeftCorner(K_, K_);
  Syy = (0.5 * (Syy + Syy.transpose())).eval();

  // S^T H_ff^{-1} rf = E^T W^{-1} M^{-1} V^T D^{-1} rf.
  const Vector z = vt(dinv.cwiseProduct(rf));
  const Vector mz = msolve(z);
  const Vector sz = winv.head(K_).cwiseProduct(mz.head(K_));

  const Matrix& Q = s.coupling;
  Matrix Ay = s.hyy - Q.transpose() * Syy * Q;
  Ay = (0.5 * (Ay + Ay.transpose())).eval();
  const Vector by = ry - Q.transpose() * sz;
  Vector dy;
  Eigen::LLT<Matrix> yllt(Ay);
  if (yllt.info() == Eigen::Success) {
    dy = yllt.solve(by);
  } else {
    dy = Ay.ldlt().solve(by);
  }

  // df = H_ff^{-1} (rf - S Q dy).
  const Vector qdy = Q * dy;
  Vector w(F_);
  for (int j = 0; j < F_; ++j) w(j) = rf(j) - qdy(entry_user_[j]);
  const Vector dw = dinv.cwiseProduct(w);
  Vector coef = Vector::Zero(nv);
  coef = msolve(vt(dw));
  const Vector df = dw - dinv.cwiseProduct(v(coef));

  Vector out(dim());
  out.head(K_) = dy.head(K_);
  out.segment(K_, F_) = df;
  if (G_ > 0) out.tail(G_) = dy.tail(G_);
  return out;
}

double BarrierModel::max_linear_step(const Vector& x, const Vector& dx) const {
  double step = 1.0 / 0.99;
  for (int k = 0; k < K_; ++k) {
    if (dx(k) < 0.0) step = std::min(step, -x(k) / dx(k));
    if (dx(k) > 0.0) step = std::min(step, (sub_->p_max - x(k)) / dx(k));
  }
  for (int j = 0; j < F_; ++j) {
    if (dx(K_ + j) < 0.0) step = std::min(step, -x(K_ + j) / dx(K_ + j));
  }
  for (int b = 0; b < B_; ++b) {
    const double cap = sub_->budgets[b].capacity / ConvexSubproblem::compute_unit;
    double sum = 0.0;
    double dsum = 0.0;
    for (int j : sub_->budgets[b].entries) {
      sum += x(K_ + j);
      dsum += dx(K_ + j);
    }
    if (dsum > 0.0) step = std::min(step, (cap - sum) / dsum);
  }
  return 0.99 * step;
}

}  // namespace cfmec

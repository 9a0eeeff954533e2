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

#include "cfmec/estimation.hpp"

#include <cmath>

namespace cfmec {

namespace {

// Hermitian positive (semi)definite solve; falls back to a ridge when the
// factorization fails or is badly conditioned. Returns true if a ridge was used.
bool factor_hpd(const CMatrix& A, Eigen::LLT<CMatrix>& llt) {
  llt.compute(A);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) return false;
  const Eigen::Index n = A.rows();
  double ridge = 1e-12 * A.trace().real() / static_cast<double>(n);
  if (!(ridge > 0.0)) ridge = 1e-300;
  CMatrix B = A;
  B.diagonal().array() += ridge;
  llt.compute(B);
  return true;
}

}  // namespace

ChannelEstimates mmse_estimate(const ChannelRealization& realization, const NetworkSnapshot& snapshot,
                               const ClusterAssignment& assignment, const PilotParams& params,
                               std::mt19937_64& rng, Exec exec) {
  const int L = snapshot.num_aps;
  const int K = snapshot.num_users;
  const int M = snapshot.antennas;
  const int tau_p = params.tau_p;
  const double scale = params.pilot_power * tau_p;
  const double amplitude = std::sqrt(scale);

  // Noise is drawn up front in a fixed order so the parallel path stays deterministic.
  PairArray<CVector> noise(L, tau_p);
  const double sigma = std::sqrt(params.noise_power);
  for (int l = 0; l < L; ++l) {
    for (int t = 0; t < tau_p; ++t) noise(l, t) = sigma * complex_gaussian(M, rng);
  }

  std::vector<std::vector<int>> on_pilot(tau_p);
  for (int k = 0; k < K; ++k) on_pilot[assignment.pilot_of[k]].push_back(k);

  ChannelEstimates est;
  est.h_hat = PairArray<CVector>(L, K);
  est.C = PairArray<CMatrix>(L, K);
  est.antennas = M;
  int regularized = 0;

#pragma omp parallel for schedule(dynamic) reduction(+ : regularized) if (exec == Exec::parallel)
  for (int l = 0; l < L; ++l) {
    Eigen::LLT<CMatrix> llt;
    for (int t = 0; t < tau_p; ++t) {
      const auto& users = on_pilot[t];
      if (users.empty()) continue;
      CMatrix psi = params.noise_power * CMatrix::Identity(M, M);
      CVector y = noise(l, t);
      for (int i : users) {
        psi += scale * snapshot.R(l, i);
        y += amplitude * realization.h(l, i);
      }
      regularized += factor_hpd(psi, llt) ? 1 : 0;
      const CVector psi_inv_y = llt.solve(y);
      for (int k : users) {
        const CMatrix& R = snapshot.R(l, k);
        est.h_hat(l, k) = amplitude * (R * psi_inv_y);
        CMatrix C = R - scale * (R * llt.solve(R));
        est.C(l, k) = 0.5 * (C + C.adjoint());
      }
    }
  }
  est.regularized = regularized;
  return est;
}

CombinerSet pmmse_combiner(const ChannelEstimates& est, const ClusterAssignment& a, const Vector& p,
                           double noise_power, Exec exec) {
  const int K = a.num_users;
  const int L = a.num_aps;
  const int M = est.antennas;
  CombinerSet out{std::vector<CVector>(K, CVector::Zero(static_cast<Eigen::Index>(L) * M)),
                  CombinerScheme::pmmse, M};

#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int k = 0; k < K; ++k) {
    const auto& serving = a.aps_of_user[k];
    const int n = static_cast<int>(serving.size()) * M;
    if (n == 0) continue;

    auto compress = [&](int i) {
      CVector x(n);
      for (std::size_t j = 0; j < serving.size(); ++j) x.segment(j * M, M) = est.h_hat(serving[j], i);
      return x;
    };

    CMatrix A = noise_power * CMatrix::Identity(n, n);
    for (int i : a.partial_set[k]) {
      if (p(i) <= 0.0) continue;
      const CVector hi = compress(i);
      A.selfadjointView<Eigen::Lower>().rankUpdate(hi, p(i));
      for (std::size_t j = 0; j < serving.size(); ++j) {
        A.block(j * M, j * M, M, M).triangularView<Eigen::Lower>() += p(i) * est.C(serving[j], i);
      }
    }
    A.triangularView<Eigen::StrictlyUpper>() = A.adjoint().eval();

    const CVector hk = compress(k);
    CVector vc;
    if (A.cwiseAbs().maxCoeff() == 0.0) {
      vc = hk;  // degenerate system: MRC direction
    } else {
      Eigen::LLT<CMatrix> llt(A);
      if (llt.info() == Eigen::Success) {
        vc = llt.solve(hk);
      } else {
        vc = A.ldlt().solve(hk);
      }
      if (p(k) > 0.0) vc *= p(k);
      if (!vc.allFinite()) vc = hk;
    }
    for (std::size_t j = 0; j < serving.size(); ++j) {
      out.v[k].segment(static_cast<Eigen::Index>(serving[j]) * M, M) = vc.segment(j * M, M);
    }
  }
  return out;
}

CombinerSet lmmse_combiner(const ChannelEstimates& est, const ClusterAssignment& a, const Vector& p,
                           double noise_power, Exec exec) {
  const int K = a.num_users;
  const int L = a.num_aps;
  const int M = est.antennas;
  CombinerSet out{std::vector<CVector>(K, CVector::Zero(static_cast<Eigen::Index>(L) * M)),
                  CombinerScheme::lmmse, M};

#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int l = 0; l < L; ++l) {
    if (a.users_of_ap[l].empty()) continue;
    CMatrix A = noise_power * CMatrix::Identity(M, M);
    for (int i = 0; i < K; ++i) {
      if (p(i) <= 0.0) continue;
      A.selfadjointView<Eigen::Lower>().rankUpdate(est.h_hat(l, i), p(i));
      A.triangularView<Eigen::Lower>() += p(i) * est.C(l, i);
    }
    A.triangularView<Eigen::StrictlyUpper>() = A.adjoint().eval();
    Eigen::LLT<CMatrix> llt(A);
    const bool ok = llt.info() == Eigen::Success;
    for (int k : a.users_of_ap[l]) {
      CVector v = ok ? CVector(llt.solve(est.h_hat(l, k))) : CVector(A.ldlt().solve(est.h_hat(l, k)));
      if (p(k) > 0.0) v *= p(k);
      if (!v.allFinite()) v = est.h_hat(l, k);
      out.v[k].segment(static_cast<Eigen::Index>(l) * M, M) = v;
    }
  }
  return out;
}

CombinerSet mrc_combiner(const ChannelEstimates& est, const ClusterAssignment& a) {
  const int K = a.num_users;
  const int M = est.antennas;
  CombinerSet out{std::vector<CVector>(K, CVector::Zero(static_cast<Eigen::Index>(a.num_aps) * M)),
                  CombinerScheme::mrc, M};
  for (int k = 0; k < K; ++k) {
    for (int l : a.aps_of_user[k]) {
      out.v[k].segment(static_cast<Eigen::Index>(l) * M, M) = est.h_hat(l, k);
    }
  }
  return out;
}

double SinrCoefficients::sinr(int k, const Vector& p) const {
  return p(k) * gain(k) / (interference.row(k).dot(p) + noise(k));
}

Vector SinrCoefficients::sinr(const Vector& p) const {
  Vector out(users());
  for (int k = 0; k < users(); ++k) out(k) = sinr(k, p);
  return out;
}

SinrCoefficients sinr_coefficients(const ChannelEstimates& est, const CombinerSet& comb,
                                   const ClusterAssignment& a, double noise_power, Exec exec) {
  const int K = a.num_users;
  SinrCoefficients out{Vector::Zero(K), Matrix::Zero(K, K), Vector::Zero(K)};

#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int k = 0; k < K; ++k) {
    double norm2 = 0.0;
    for (int l : a.aps_of_user[k]) norm2 += comb.block(k, l).squaredNorm();
    out.noise(k) = noise_power * norm2;
    for (int i = 0; i < K; ++i) {
      cdouble inner{0.0, 0.0};
      double quad = 0.0;
      for (int l : a.aps_of_user[k]) {
        const auto v = comb.block(k, l);
        inner += v.dot(est.h_hat(l, i));
        quad += (v.adjoint() * est.C(l, i) * v)(0, 0).real();
      }
      if (i == k) {
        out.gain(k) = std::norm(inner);
        out.interference(k, i) = std::max(quad, 0.0);
      } else {
        out.interference(k, i) = std::norm(inner) + std::max(quad, 0.0);
      }
    }
  }
  return out;
}

Vector instantaneous_se(const SinrCoefficients& coeffs, const Vector& p, int tau_u, int tau_c) {
  const double pre = se_prefactor(tau_u, tau_c);
  Vector se(coeffs.users());
  for (int k = 0; k < coeffs.users(); ++k) {
    const double den = coeffs.interference.row(k).dot(p) + coeffs.noise(k);
    const double num = p(k) * coeffs.gain(k);
    se(k) = num > 0.0 ? pre * std::log2(1.0 + num / den) : 0.0;
  }
  return se;
}

}  // namespace cfmec

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

#include <random>
#include <vector>

#include "cfmec/clustering.hpp"
#include "cfmec/common.hpp"
#include "cfmec/geometry.hpp"

namespace cfmec {

/// MMSE channel estimates and error covariances for every (AP, user) pair.
struct ChannelEstimates {
  PairArray<CVector> h_hat;
  PairArray<CMatrix> C;
  int antennas = 0;
  int regularized = 0;  // pilot covariance solves that needed a ridge
};

struct PilotParams {
  double pilot_power = 0.1;
  double noise_power = 0.0;
  int tau_p = 1;
};

/// Centralized MMSE estimation from one pilot transmission.
ChannelEstimates mmse_estimate(const ChannelRealization& realization, const NetworkSnapshot& snapshot,
                               const ClusterAssignment& assignment, const PilotParams& params,
                               std::mt19937_64& rng, Exec exec = Exec::parallel);

enum class CombinerScheme { pmmse, lmmse, mrc };

/// Receive combiners, stored as L*M stacked vectors that are zero outside
/// the serving blocks of each user.
struct CombinerSet {
  std::vector<CVector> v;
  CombinerScheme scheme = CombinerScheme::pmmse;
  int antennas = 0;

  /// Block of v_k at AP l.
  auto block(int k, int l) const { return v[k].segment(static_cast<Eigen::Index>(l) * antennas, antennas); }
};

/// Partial MMSE over the serving subspace of each user, suppressing users in S_k.
CombinerSet pmmse_combiner(const ChannelEstimates& estimates, const ClusterAssignment& assignment,
                           const Vector& p, double noise_power, Exec exec = Exec::parallel);

/// Local MMSE at each serving AP/BS using that node's estimates of all users.
CombinerSet lmmse_combiner(const ChannelEstimates& estimates, const ClusterAssignment& assignment,
                           const Vector& p, double noise_power, Exec exec = Exec::parallel);

/// Maximum-ratio combining, v_k = D_k h_hat_k.
CombinerSet mrc_combiner(const ChannelEstimates& estimates, const ClusterAssignment& assignment);

/// Affine form of the uplink SINR at fixed combiners:
/// SINR_k(p) = p_k g_k / (a_k^T p + c_k).
struct SinrCoefficients {
  Vector gain;         // g_k
  Matrix interference; // row k is a_k
  Vector noise;        // c_k

  int users() const { return static_cast<int>(gain.size()); }
  double sinr(int k, const Vector& p) const;
  Vector sinr(const Vector& p) const;
};

SinrCoefficients sinr_coefficients(const ChannelEstimates& estimates, const CombinerSet& combiners,
                                   const ClusterAssignment& assignment, double noise_power,
                                   Exec exec = Exec::parallel);

/// Pre-log factor tau_u / tau_c.
inline double se_prefactor(int tau_u, int tau_c) { return static_cast<double>(tau_u) / tau_c; }

/// Instantaneous SE in bit/s/Hz.
Vector instantaneous_se(const SinrCoefficients& coeffs, const Vector& p, int tau_u, int tau_c);

}  // namespace cfmec

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

#include <cstdint>
#include <random>
#include <vector>

#include "cfmec/common.hpp"
#include "cfmec/config.hpp"

namespace cfmec {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Displacement from `from` to `to` on the torus of the given side length.
Point wrapped_offset(Point from, Point to, double side);
double wrapped_distance(Point from, Point to, double side);

/// Large-scale gain in dB for a fixed shadowing draw. Distance clamped at min_distance.
double pathloss_db(double distance, double shadow_db, const SimConfig& config);

/// Linear large-scale gain with a fresh N(0, shadow_sigma^2) dB shadowing draw.
double pathloss(double distance, std::mt19937_64& rng, const SimConfig& config);

struct CorrelationMatrix {
  CMatrix R;
  bool repaired = false;  // negative eigenvalues were clipped
};

/// Gaussian local-scattering model for a half-wavelength ULA.
/// `angle` and `asd` are in radians.
CorrelationMatrix spatial_correlation(double beta, double angle, double asd, int antennas);

/// Returns F with F F^H = R (Cholesky, or clipped eigendecomposition on failure).
CMatrix correlation_factor(const CMatrix& R);

/// Immutable description of one user drop.
struct NetworkSnapshot {
  int num_aps = 0;
  int antennas = 0;
  int num_users = 0;
  double side = 0.0;
  std::vector<Point> ap_positions;
  std::vector<Point> user_positions;
  Matrix beta;                // L x K, linear
  PairArray<CMatrix> R;       // M x M per pair
  PairArray<CMatrix> factor;  // correlation_factor(R)
  std::int64_t snapshot_id = 0;
  int repaired_correlations = 0;
};

/// Regular sqrt(L) x sqrt(L) grid, cell centers.
std::vector<Point> ap_grid(const SimConfig& config);

/// Uniform user drop; depends only on (seed, snapshot_id, side, K).
std::vector<Point> drop_users(const SimConfig& config, std::int64_t snapshot_id);

/// Large-scale fading and correlation for given user positions.
NetworkSnapshot build_network(const SimConfig& config, std::vector<Point> users,
                              std::int64_t snapshot_id);

NetworkSnapshot drop_network(const SimConfig& config, std::int64_t snapshot_id);

/// Small-scale fading for one coherence block.
struct ChannelRealization {
  PairArray<CVector> h;
};

ChannelRealization realize_channels(const NetworkSnapshot& snapshot, std::mt19937_64& rng);

/// Standard circularly-symmetric complex Gaussian vector.
CVector complex_gaussian(int size, std::mt19937_64& rng);

}  // namespace cfmec

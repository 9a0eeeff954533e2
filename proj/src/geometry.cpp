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

#include "cfmec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cfmec {

Point wrapped_offset(Point from, Point to, double side) {
  double dx = to.x - from.x;
  double dy = to.y - from.y;
  dx -= side * std::round(dx / side);
  dy -= side * std::round(dy / side);
  return {dx, dy};
}

double wrapped_distance(Point from, Point to, double side) {
  const Point d = wrapped_offset(from, to, side);
  return std::hypot(d.x, d.y);
}

double pathloss_db(double distance, double shadow_db, const SimConfig& config) {
  const double d = std::max(distance, config.min_distance);
  return config.pathloss_intercept_db - config.pathloss_slope_db * std::log10(d) + shadow_db;
}

double pathloss(double distance, std::mt19937_64& rng, const SimConfig& config) {
  std::normal_distribution<double> shadow(0.0, config.shadow_sigma_db);
  const double s = config.shadow_sigma_db > 0.0 ? shadow(rng) : 0.0;
  return db_to_linear(pathloss_db(distance, s, config));
}

CorrelationMatrix spatial_correlation(double beta, double angle, double asd, int antennas) {
  const double pi = std::numbers::pi;
  CMatrix R(antennas, antennas);
  for (int m = 0; m < antennas; ++m) {
    for (int n = 0; n < antennas; ++n) {
      const double d = m - n;
      const double spread = pi * d * std::cos(angle);
      const double envelope = std::exp(-0.5 * asd * asd * spread * spread);
      R(m, n) = beta * envelope * std::polar(1.0, pi * d * std::sin(angle));
    }
  }
  R = (0.5 * (R + R.adjoint())).eval();

  CorrelationMatrix out{R, false};
  if (antennas == 1) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(R);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
    out.R = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().adjoint();
    out.R = (0.5 * (out.R + out.R.adjoint())).eval();
    out.repaired = true;
  }
  return out;
}

CMatrix correlation_factor(const CMatrix& R) {
  if (R.rows() == 0) return R;
  Eigen::LLT<CMatrix> llt(R);
  if (llt.info() == Eigen::Success) {
    CMatrix L = llt.matrixL();
    if (L.allFinite() && L.diagonal().real().minCoeff() > 1e-9 * std::sqrt(R.diagonal().real().maxCoeff())) {
      return L;
    }
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(R);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

std::vector<Point> ap_grid(const SimConfig& config) {
  const int per_side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(config.num_aps))));
  if (per_side * per_side != config.num_aps) {
    throw ConfigError("number of APs is not a perfect square; grid undefined");
  }
  const double spacing = config.coverage_side / per_side;
  std::vector<Point> aps;
  aps.reserve(config.num_aps);
  for (int row = 0; row < per_side; ++row) {
    for (int col = 0; col < per_side; ++col) {
      aps.push_back({(col + 0.5) * spacing, (row + 0.5) * spacing});
    }
  }
  return aps;
}

std::vector<Point> drop_users(const SimConfig& config, std::int64_t snapshot_id) {
  std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(snapshot_id), 1));
  std::uniform_real_distribution<double> coord(0.0, config.coverage_side);
  std::vector<Point> users(config.num_users);
  for (auto& u : users) {
    u.x = coord(rng);
    u.y = coord(rng);
  }
  return users;
}

NetworkSnapshot build_network(const SimConfig& config, std::vector<Point> users,
                              std::int64_t snapshot_id) {
  config.validate();
  if (snapshot_id < 0) throw ConfigError("snapshot id must be non-negative");
  NetworkSnapshot s;
  s.num_aps = config.num_aps;
  s.antennas = config.antennas;
  s.num_users = static_cast<int>(users.size());
  s.side = config.coverage_side;
  s.ap_positions = ap_grid(config);
  s.user_positions = std::move(users);
  s.snapshot_id = snapshot_id;
  s.beta = Matrix::Zero(s.num_aps, s.num_users);
  s.R = PairArray<CMatrix>(s.num_aps, s.num_users);
  s.factor = PairArray<CMatrix>(s.num_aps, s.num_users);

  // Shadowing stream is tied to the deployment so both architectures see independent draws.
  const std::uint64_t deployment_tag =
      (static_cast<std::uint64_t>(config.num_aps) << 32) ^ static_cast<std::uint64_t>(config.antennas);
  std::mt19937_64 rng(derive_seed(config.seed ^ deployment_tag, static_cast<std::uint64_t>(snapshot_id), 2));
  const double asd = config.asd_deg * std::numbers::pi / 180.0;

  for (int l = 0; l < s.num_aps; ++l) {
    for (int k = 0; k < s.num_users; ++k) {
      const Point d = wrapped_offset(s.ap_positions[l], s.user_positions[k], s.side);
      const double beta = pathloss(std::hypot(d.x, d.y), rng, config);
      const double angle = std::atan2(d.y, d.x);
      CorrelationMatrix corr = spatial_correlation(beta, angle, asd, s.antennas);
      s.repaired_correlations += corr.repaired ? 1 : 0;
      s.beta(l, k) = beta;
      s.factor(l, k) = correlation_factor(corr.R);
      s.R(l, k) = std::move(corr.R);
    }
  }
  return s;
}

NetworkSnapshot drop_network(const SimConfig& config, std::int64_t snapshot_id) {
  config.validate();
  return build_network(config, drop_users(config, snapshot_id), snapshot_id);
}

CVector complex_gaussian(int size, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CVector z(size);
  for (int i = 0; i < size; ++i) {
    const double re = n(rng);
    const double im = n(rng);
    z(i) = {re, im};
  }
  return z;
}

ChannelRealization realize_channels(const NetworkSnapshot& snapshot, std::mt19937_64& rng) {
  ChannelRealization out{PairArray<CVector>(snapshot.num_aps, snapshot.num_users)};
  for (int l = 0; l < snapshot.num_aps; ++l) {
    for (int k = 0; k < snapshot.num_users; ++k) {
      const CMatrix& F = snapshot.factor(l, k);
      out.h(l, k) = F * complex_gaussian(static_cast<int>(F.cols()), rng);
    }
  }
  return out;
}

}  // namespace cfmec

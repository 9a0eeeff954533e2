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
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "cfmec/common.hpp"

namespace cfmec {

/// Radio-side parameters of one network deployment.
struct SimConfig {
  double coverage_side = 1000.0;  // m, square area with wrap-around
  int num_aps = 100;
  int antennas = 4;
  int num_users = 20;
  double bandwidth = 20e6;                    // Hz
  double noise_power = dbm_to_watt(-94.0);    // W
  double carrier_freq = 2e9;                  // Hz
  int tau_c = 200;
  int tau_p = 10;
  int tau_u = 190;
  int tau_d = 0;
  double p_max = 0.1;        // W
  double pilot_power = 0.1;  // W
  double shadow_sigma_db = 4.0;
  double asd_deg = 15.0;
  // beta[dB] = intercept - slope * log10(d / 1 m) + shadowing
  double pathloss_intercept_db = -30.5;
  double pathloss_slope_db = 36.7;
  double min_distance = 1.0;  // m
  int total_antennas = 0;     // 0 disables the L*M check
  std::uint64_t seed = 1;
  Mode mode = Mode::cellfree;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// How compute is chosen among allocations with the same objective value.
enum class ComputePolicy {
  tight,   // each user receives the least compute that meets its deadline
  center,  // keep the interior-point (analytic-center) compute split
};

std::string to_string(ComputePolicy policy);

/// Everything a Monte Carlo campaign needs.
struct CampaignConfig {
  SimConfig sim;  // cell-free deployment; mode field unused here
  int cellular_aps = 4;
  int cellular_antennas = 100;
  int snapshots = 200;
  int realizations = 10;  // channel draws averaged for the ergodic SE
  double bits_min_mbit = 1.0;
  double bits_max_mbit = 10.0;
  double cycles_per_bit = 50.0;
  double f_cpu = 1e11;     // cycles/s
  double f_ap_min = 1e9;   // cycles/s
  double f_ap_max = 1e10;  // cycles/s
  double fronthaul_capacity = 10e9;  // bit/s
  double quantization_bits = 16.0;
  double deadline = 0.5;            // s, cell-free
  double deadline_cellular = 0.7;   // s
  double weight = 1.0;              // W per bit/s/Hz of min-SE
  ComputePolicy compute_policy = ComputePolicy::tight;
  std::vector<Mode> modes{Mode::cellfree, Mode::cellular, Mode::fullpower};
  std::filesystem::path out_dir = "results";
  int threads = 0;  // 0 = OpenMP default

  /// Radio config of the deployment used by `mode`.
  SimConfig deployment(Mode mode) const;
  void validate() const;
};

/// Parses flat `key = value` lines; '#' starts a comment.
CampaignConfig parse_campaign_config(std::istream& in);
CampaignConfig load_campaign_config(const std::filesystem::path& path);

/// Applies one key to the config. Throws ConfigError for unknown keys or bad values.
void apply_config_key(CampaignConfig& config, const std::string& key, const std::string& value);

}  // namespace cfmec

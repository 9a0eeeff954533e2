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

#include "cfmec/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cfmec {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& value) {
  long long out = 0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void SimConfig::validate() const {
  require(coverage_side > 0.0, "coverage_side must be positive");
  require(num_aps >= 1 && antennas >= 1 && num_users >= 1, "aps, antennas and users must be >= 1");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(num_aps))));
  require(side * side == num_aps,
          "number of APs (" + std::to_string(num_aps) + ") is not a perfect square; grid undefined");
  require(tau_p >= 1 && tau_u >= 1 && tau_d >= 0, "tau_p, tau_u must be >= 1 and tau_d >= 0");
  require(tau_p + tau_u + tau_d == tau_c, "tau_p + tau_u + tau_d must equal tau_c");
  require(num_users <= 2 * tau_p, "users must not exceed 2 * tau_p");
  require(bandwidth > 0.0 && noise_power > 0.0 && p_max > 0.0 && pilot_power > 0.0,
          "bandwidth, noise power and powers must be positive");
  require(shadow_sigma_db >= 0.0 && asd_deg >= 0.0, "shadow sigma and ASD must be non-negative");
  require(min_distance > 0.0, "min_distance must be positive");
  require(total_antennas == 0 || total_antennas == num_aps * antennas,
          "aps * antennas does not match total_antennas");
}

std::string to_string(ComputePolicy policy) {
  return policy == ComputePolicy::tight ? "tight" : "center";
}

SimConfig CampaignConfig::deployment(Mode mode) const {
  SimConfig out = sim;
  out.mode = mode;
  if (mode == Mode::cellular) {
    out.num_aps = cellular_aps;
    out.antennas = cellular_antennas;
  }
  return out;
}

void CampaignConfig::validate() const {
  sim.validate();
  for (Mode m : modes) deployment(m).validate();
  require(snapshots >= 1, "snapshots must be >= 1");
  require(realizations >= 1, "realizations must be >= 1");
  require(bits_min_mbit > 0.0 && bits_max_mbit >= bits_min_mbit, "need 0 < bits_min <= bits_max");
  require(cycles_per_bit > 0.0, "cycles_per_bit must be positive");
  require(f_cpu > 0.0 && f_ap_min > 0.0 && f_ap_max >= f_ap_min, "compute budgets must be positive");
  require(fronthaul_capacity > 0.0 && quantization_bits > 0.0, "fronthaul parameters must be positive");
  require(deadline > 0.0 && deadline_cellular > 0.0, "deadlines must be positive");
  require(weight >= 0.0, "weight must be non-negative");
  require(!modes.empty(), "at least one mode is required");
}

void apply_config_key(CampaignConfig& c, const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  auto real = [&](double& field) { return Setter([&field, key](const std::string& v) { field = to_double(key, v); }); };
  auto integer = [&](int& field) {
    return Setter([&field, key](const std::string& v) { field = static_cast<int>(to_integer(key, v)); });
  };
  SimConfig& s = c.sim;
  const std::map<std::string, Setter> setters{
      {"coverage_side", real(s.coverage_side)},
      {"aps", integer(s.num_aps)},
      {"antennas", integer(s.antennas)},
      {"users", integer(s.num_users)},
      {"bandwidth", real(s.bandwidth)},
      {"noise_power_dbm", [&s, key](const std::string& v) { s.noise_power = dbm_to_watt(to_double(key, v)); }},
      {"carrier_freq", real(s.carrier_freq)},
      {"tau_c", integer(s.tau_c)},
      {"tau_p", integer(s.tau_p)},
      {"tau_u", integer(s.tau_u)},
      {"tau_d", integer(s.tau_d)},
      {"p_max", real(s.p_max)},
      {"pilot_power", real(s.pilot_power)},
      {"shadow_sigma_db", real(s.shadow_sigma_db)},
      {"asd_deg", real(s.asd_deg)},
      {"pathloss_intercept_db", real(s.pathloss_intercept_db)},
      {"pathloss_slope_db", real(s.pathloss_slope_db)},
      {"min_distance", real(s.min_distance)},
      {"total_antennas", integer(s.total_antennas)},
      {"seed", [&s, key](const std::string& v) { s.seed = static_cast<std::uint64_t>(to_integer(key, v)); }},
      {"cellular_aps", integer(c.cellular_aps)},
      {"cellular_antennas", integer(c.cellular_antennas)},
      {"snapshots", integer(c.snapshots)},
      {"realizations", integer(c.realizations)},
      {"bits_min_mbit", real(c.bits_min_mbit)},
      {"bits_max_mbit", real(c.bits_max_mbit)},
      {"cycles_per_bit", real(c.cycles_per_bit)},
      {"f_cpu", real(c.f_cpu)},
      {"f_ap_min", real(c.f_ap_min)},
      {"f_ap_max", real(c.f_ap_max)},
      {"fronthaul_capacity", real(c.fronthaul_capacity)},
      {"quantization_bits", real(c.quantization_bits)},
      {"deadline", real(c.deadline)},
      {"deadline_cellular", real(c.deadline_cellular)},
      {"weight", real(c.weight)},
      {"threads", integer(c.threads)},
      {"out_dir", [&c](const std::string& v) { c.out_dir = v; }},
      {"compute_policy",
       [&c, key](const std::string& v) {
         if (v == "tight") c.compute_policy = ComputePolicy::tight;
         else if (v == "center") c.compute_policy = ComputePolicy::center;
         else throw ConfigError("config key '" + key + "': expected tight|center");
       }},
      {"mode",
       [&c](const std::string& v) {
         if (v == "all") c.modes = {Mode::cellfree, Mode::cellular, Mode::fullpower};
         else c.modes = {parse_mode(v)};
       }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(value);
}

CampaignConfig parse_campaign_config(std::istream& in) {
  CampaignConfig config;
  bool tau_p_set = false;
  bool tau_u_set = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    apply_config_key(config, key, value);
    tau_p_set |= key == "tau_p";
    tau_u_set |= key == "tau_u";
  }
  SimConfig& s = config.sim;
  if (!tau_p_set) s.tau_p = std::max(1, s.num_users / 2);
  if (!tau_u_set) s.tau_u = s.tau_c - s.tau_p - s.tau_d;
  config.validate();
  return config;
}

CampaignConfig load_campaign_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_campaign_config(in);
}

}  // namespace cfmec

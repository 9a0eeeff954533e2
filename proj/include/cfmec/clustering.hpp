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
#include <ostream>
#include <vector>

#include "cfmec/common.hpp"
#include "cfmec/geometry.hpp"

namespace cfmec {

/// Pilot map and user-centric serving clusters.
///
/// `serving(l, k)` is true iff AP l serves user k with all its antennas
/// (D_lk = I). The derived sets are kept sorted in ascending index order.
struct ClusterAssignment {
  int num_aps = 0;
  int num_users = 0;
  int tau_p = 0;
  std::vector<int> pilot_of;                  // K
  std::vector<int> master;                    // K, master AP per user
  std::vector<char> serving_mask;             // L*K, AP-major
  std::vector<std::vector<int>> aps_of_user;  // M_k
  std::vector<std::vector<int>> users_of_ap;  // K_l
  std::vector<std::vector<int>> partial_set;  // S_k = {i : M_k and M_i intersect}

  bool serves(int l, int k) const {
    return serving_mask[static_cast<std::size_t>(l) * num_users + k] != 0;
  }

  /// b_k = [e_k ; b_hat_k], length K + K*L; entry K + k*L + l flags AP l serving k.
  Vector selector_b(int k) const;
  /// c_l = [0_K ; c_hat_l], same layout.
  Vector selector_c(int l) const;
};

/// Builds the derived sets (M_k, K_l, S_k) from pilots, masters and a serving mask.
ClusterAssignment make_assignment(int num_aps, int num_users, int tau_p, std::vector<int> pilot_of,
                                  std::vector<int> master, std::vector<char> serving_mask);

/// Joint pilot assignment and user-centric clustering (cell-free).
///
/// Users are visited in a seeded random order. Each appoints the AP with the
/// largest gain as master; the master picks the pilot with the least summed
/// gain of users already on it. Afterwards every AP that does not yet serve
/// anyone on a pilot serves the strongest user on that pilot.
ClusterAssignment assign_pilots_and_clusters(const NetworkSnapshot& snapshot, int tau_p,
                                             std::uint64_t order_seed);

/// Cellular association: same pilot rule, but each user is served by its master BS only.
ClusterAssignment assign_cellular(const NetworkSnapshot& snapshot, int tau_p, std::uint64_t order_seed);

/// CSV dump: user,pilot,master,serving_aps (space-separated list).
void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment);

}  // namespace cfmec

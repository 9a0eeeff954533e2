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

#include "cfmec/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace cfmec {

Vector ClusterAssignment::selector_b(int k) const {
  Vector b = Vector::Zero(num_users + num_users * num_aps);
  b(k) = 1.0;
  for (int l : aps_of_user[k]) b(num_users + k * num_aps + l) = 1.0;
  return b;
}

Vector ClusterAssignment::selector_c(int l) const {
  Vector c = Vector::Zero(num_users + num_users * num_aps);
  for (int k : users_of_ap[l]) c(num_users + k * num_aps + l) = 1.0;
  return c;
}

ClusterAssignment make_assignment(int num_aps, int num_users, int tau_p, std::vector<int> pilot_of,
                                  std::vector<int> master, std::vector<char> serving_mask) {
  ClusterAssignment a;
  a.num_aps = num_aps;
  a.num_users = num_users;
  a.tau_p = tau_p;
  a.pilot_of = std::move(pilot_of);
  a.master = std::move(master);
  a.serving_mask = std::move(serving_mask);
  a.aps_of_user.assign(num_users, {});
  a.users_of_ap.assign(num_aps, {});
  for (int l = 0; l < num_aps; ++l) {
    for (int k = 0; k < num_users; ++k) {
      if (a.serves(l, k)) {
        a.aps_of_user[k].push_back(l);
        a.users_of_ap[l].push_back(k);
      }
    }
  }
  a.partial_set.assign(num_users, {});
  for (int k = 0; k < num_users; ++k) {
    for (int i = 0; i < num_users; ++i) {
      const auto& mk = a.aps_of_user[k];
      const auto& mi = a.aps_of_user[i];
      const bool overlap = std::any_of(mk.begin(), mk.end(), [&](int l) {
        return std::binary_search(mi.begin(), mi.end(), l);
      });
      if (overlap || i == k) a.partial_set[k].push_back(i);
    }
  }
  return a;
}

namespace {

struct PilotMasters {
  std::vector<int> pilot_of;
  std::vector<int> master;
};

PilotMasters assign_pilots(const NetworkSnapshot& s, int tau_p, std::uint64_t order_seed) {
  const int K = s.num_users;
  const int L = s.num_aps;
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(order_seed);
  std::shuffle(order.begin(), order.end(), rng);

  PilotMasters out{std::vector<int>(K, -1), std::vector<int>(K, -1)};
  for (int k : order) {
    int best_ap = 0;
    for (int l = 1; l < L; ++l) {
      if (s.beta(l, k) > s.beta(best_ap, k)) best_ap = l;
    }
    out.master[k] = best_ap;

    // Pilots already used by users mastered at this AP are avoided when possible.
    std::vector<double> interference(tau_p, 0.0);
    std::vector<char> taken_here(tau_p, 0);
    for (int i = 0; i < K; ++i) {
      if (out.pilot_of[i] < 0) continue;
      interference[out.pilot_of[i]] += s.beta(best_ap, i);
      if (out.master[i] == best_ap) taken_here[out.pilot_of[i]] = 1;
    }
    const bool any_free = std::find(taken_here.begin(), taken_here.end(), 0) != taken_here.end();
    int best_pilot = -1;
    double least = std::numeric_limits<double>::infinity();
    for (int t = 0; t < tau_p; ++t) {
      if (any_free && taken_here[t]) continue;
      if (interference[t] < least) {
        least = interference[t];
        best_pilot = t;
      }
    }
    out.pilot_of[k] = best_pilot;
  }
  return out;
}

}  // namespace

ClusterAssignment assign_pilots_and_clusters(const NetworkSnapshot& s, int tau_p,
                                             std::uint64_t order_seed) {
  if (tau_p < 1) throw ConfigError("tau_p must be >= 1");
  const int K = s.num_users;
  const int L = s.num_aps;
  PilotMasters pm = assign_pilots(s, tau_p, order_seed);

  std::vector<char> mask(static_cast<std::size_t>(L) * K, 0);
  for (int k = 0; k < K; ++k) mask[static_cast<std::size_t>(pm.master[k]) * K + k] = 1;

  for (int l = 0; l < L; ++l) {
    for (int t = 0; t < tau_p; ++t) {
      int strongest = -1;
      bool already = false;
      for (int k = 0; k < K; ++k) {
        if (pm.pilot_of[k] != t) continue;
        already |= mask[static_cast<std::size_t>(l) * K + k] != 0;
        if (strongest < 0 || s.beta(l, k) > s.beta(l, strongest)) strongest = k;
      }
      if (strongest >= 0 && !already) mask[static_cast<std::size_t>(l) * K + strongest] = 1;
    }
  }
  return make_assignment(L, K, tau_p, std::move(pm.pilot_of), std::move(pm.master), std::move(mask));
}

ClusterAssignment assign_cellular(const NetworkSnapshot& s, int tau_p, std::uint64_t order_seed) {
  if (tau_p < 1) throw ConfigError("tau_p must be >= 1");
  const int K = s.num_users;
  const int L = s.num_aps;
  PilotMasters pm = assign_pilots(s, tau_p, order_seed);
  std::vector<char> mask(static_cast<std::size_t>(L) * K, 0);
  for (int k = 0; k < K; ++k) mask[static_cast<std::size_t>(pm.master[k]) * K + k] = 1;
  return make_assignment(L, K, tau_p, std::move(pm.pilot_of), std::move(pm.master), std::move(mask));
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& a) {
  out << "user,pilot,master,serving_aps\n";
  for (int k = 0; k < a.num_users; ++k) {
    out << k << ',' << a.pilot_of[k] << ',' << a.master[k] << ',';
    for (std::size_t j = 0; j < a.aps_of_user[k].size(); ++j) {
      out << (j ? " " : "") << a.aps_of_user[k][j];
    }
    out << '\n';
  }
}

}  // namespace cfmec

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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cfmec/geometry.hpp"

using namespace cfmec;

namespace {

SimConfig small_config(int aps, int antennas, int users) {
  SimConfig c;
  c.num_aps = aps;
  c.antennas = antennas;
  c.num_users = users;
  c.tau_p = std::max(1, users / 2);
  c.tau_u = c.tau_c - c.tau_p;
  return c;
}

// Smallest distance over the 9 neighbouring replicas of `to`.
double replica_distance(Point a, Point b, double side) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      best = std::min(best, std::hypot(b.x + i * side - a.x, b.y + j * side - a.y));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("AP grid spacing is side / sqrt(L)") {
  const SimConfig c;  // 100 APs on 1 km
  const auto grid = ap_grid(c);
  REQUIRE(grid.size() == 100);
  CHECK(grid[1].x - grid[0].x == doctest::Approx(100.0));
  CHECK(grid[10].y - grid[0].y == doctest::Approx(100.0));
  CHECK(grid[0].x == doctest::Approx(50.0));
}

TEST_CASE("non-square AP count is a configuration error") {
  SimConfig c = small_config(10, 4, 4);
  CHECK_THROWS_AS(drop_network(c, 0), ConfigError);
}

TEST_CASE("wrap-around distance matches the nearest of nine replicas") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int n = 0; n < 2000; ++n) {
    const Point a{u(rng), u(rng)};
    const Point b{u(rng), u(rng)};
    const double w = wrapped_distance(a, b, 1000.0);
    CHECK(w == doctest::Approx(replica_distance(a, b, 1000.0)).epsilon(1e-12));
    CHECK(w <= std::hypot(a.x - b.x, a.y - b.y) + 1e-9);
  }
}

TEST_CASE("wrap-around shortens a corner-to-corner distance") {
  const Point a{5.0, 5.0};
  const Point b{995.0, 990.0};
  const double naive = std::hypot(b.x - a.x, b.y - a.y);
  const double w = wrapped_distance(a, b, 1000.0);
  CHECK(w < naive);
  CHECK(w == doctest::Approx(std::hypot(10.0, 15.0)));
  // Interior pair: both metrics agree.
  CHECK(wrapped_distance({400, 400}, {600, 550}, 1000.0) == doctest::Approx(std::hypot(200.0, 150.0)));
}

TEST_CASE("pathloss arithmetic") {
  const SimConfig c;
  CHECK(pathloss_db(100.0, 0.0, c) == doctest::Approx(-30.5 - 36.7 * 2.0));
  CHECK(pathloss_db(100.0, 0.0, c) == doctest::Approx(-103.9));
  CHECK(pathloss_db(1.0, 0.0, c) == doctest::Approx(-30.5));
  CHECK(pathloss_db(0.2, 0.0, c) == doctest::Approx(-30.5));
  CHECK(pathloss_db(100.0, 4.0, c) == doctest::Approx(-99.9));
}

TEST_CASE("shadowing draws have the configured spread") {
  SimConfig c;
  std::mt19937_64 rng(11);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double db = 10.0 * std::log10(pathloss(100.0, rng, c)) + 103.9;
    sum += db;
    sum2 += db * db;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.1);
  CHECK(std::sqrt(sum2 / n - mean * mean) == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("local scattering correlation") {
  const double beta = 3.7e-9;
  const double phi = 30.0 * std::numbers::pi / 180.0;
  const double asd = 15.0 * std::numbers::pi / 180.0;

  SUBCASE("closed form entries, trace and Hermitian PSD") {
    const auto corr = spatial_correlation(beta, phi, asd, 4);
    CHECK(corr.R.trace().real() / 4.0 == doctest::Approx(beta).epsilon(1e-12));
    CHECK((corr.R - corr.R.adjoint()).norm() <= 1e-24);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(corr.R);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * beta);
    for (int m = 0; m < 4; ++m) {
      for (int n = 0; n < 4; ++n) {
        const double d = m - n;
        const cdouble expect = beta * std::exp(cdouble(0.0, std::numbers::pi * d * std::sin(phi))) *
                               std::exp(-asd * asd / 2.0 * std::pow(std::numbers::pi * d * std::cos(phi), 2));
        CHECK(std::abs(corr.R(m, n) - expect) <= 1e-12 * beta);
      }
    }
  }
  SUBCASE("zero angular spread is rank one") {
    const auto corr = spatial_correlation(beta, phi, 0.0, 4);
    CVector a(4);
    for (int m = 0; m < 4; ++m) a(m) = std::exp(cdouble(0.0, std::numbers::pi * m * std::sin(phi)));
    CHECK((corr.R - beta * a * a.adjoint()).norm() <= 1e-12 * beta);
  }
  SUBCASE("single antenna is the scalar gain") {
    const auto corr = spatial_correlation(beta, phi, asd, 1);
    CHECK(corr.R(0, 0).real() == doctest::Approx(beta));
    CHECK(corr.R(0, 0).imag() == 0.0);
  }
}

TEST_CASE("snapshot invariants and determinism") {
  const SimConfig c = small_config(16, 4, 6);
  const NetworkSnapshot a = drop_network(c, 5);
  const NetworkSnapshot b = drop_network(c, 5);
  const NetworkSnapshot other = drop_network(c, 6);
  CHECK(a.beta == b.beta);
  CHECK(a.beta != other.beta);
  for (int l = 0; l < a.num_aps; ++l) {
    for (int k = 0; k < a.num_users; ++k) {
      CHECK(a.R(l, k) == b.R(l, k));
      CHECK(a.R(l, k).trace().real() / c.antennas == doctest::Approx(a.beta(l, k)).epsilon(1e-9));
      CHECK((a.R(l, k) - a.R(l, k).adjoint()).norm() == 0.0);
      CHECK((a.factor(l, k) * a.factor(l, k).adjoint() - a.R(l, k)).norm() <= 1e-9 * a.R(l, k).norm());
    }
  }
  for (const auto& u : a.user_positions) {
    CHECK(u.x >= 0.0);
    CHECK(u.x < c.coverage_side);
    CHECK(u.y >= 0.0);
    CHECK(u.y < c.coverage_side);
  }
}

TEST_CASE("channel sample covariance matches R") {
  NetworkSnapshot s;
  s.num_aps = 1;
  s.num_users = 1;
  s.antennas = 4;
  s.R = PairArray<CMatrix>(1, 1);
  s.factor = PairArray<CMatrix>(1, 1);
  const double beta = 2e-8;
  s.R(0, 0) = spatial_correlation(beta, 0.4, 0.2, 4).R;
  s.factor(0, 0) = correlation_factor(s.R(0, 0));

  std::mt19937_64 rng(21);
  CMatrix cov = CMatrix::Zero(4, 4);
  const int draws = 10000;
  for (int n = 0; n < draws; ++n) {
    const CVector h = realize_channels(s, rng).h(0, 0);
    cov += h * h.adjoint();
  }
  cov /= draws;
  CHECK((cov - s.R(0, 0)).norm() / s.R(0, 0).norm() <= 0.05);
}

TEST_CASE("white correlation gives i.i.d. entries of variance beta") {
  NetworkSnapshot s;
  s.num_aps = 1;
  s.num_users = 1;
  s.antennas = 3;
  s.R = PairArray<CMatrix>(1, 1, 5.0 * CMatrix::Identity(3, 3));
  s.factor = PairArray<CMatrix>(1, 1, correlation_factor(s.R(0, 0)));
  std::mt19937_64 rng(2);
  Vector var = Vector::Zero(3);
  const int draws = 20000;
  for (int n = 0; n < draws; ++n) var += realize_channels(s, rng).h(0, 0).cwiseAbs2();
  var /= draws;
  for (int m = 0; m < 3; ++m) CHECK(var(m) == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("rank-one correlation gives draws collinear with the steering vector") {
  const double phi = 0.7;
  const CMatrix R = spatial_correlation(1.0, phi, 0.0, 4).R;
  NetworkSnapshot s;
  s.num_aps = 1;
  s.num_users = 1;
  s.antennas = 4;
  s.R = PairArray<CMatrix>(1, 1, R);
  s.factor = PairArray<CMatrix>(1, 1, correlation_factor(R));
  CVector a(4);
  for (int m = 0; m < 4; ++m) a(m) = std::exp(cdouble(0.0, std::numbers::pi * m * std::sin(phi)));
  std::mt19937_64 rng(9);
  for (int n = 0; n < 50; ++n) {
    const CVector h = realize_channels(s, rng).h(0, 0);
    const cdouble proj = a.dot(h) / a.squaredNorm();
    CHECK((h - proj * a).norm() <= 1e-6 * h.norm());
  }
}

TEST_CASE("non-PSD input falls back to clipped eigendecomposition") {
  CMatrix R(2, 2);
  R << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  const CMatrix F = correlation_factor(R);
  const CMatrix RR = F * F.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(RR);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(3.0));
}

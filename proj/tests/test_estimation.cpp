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

#include <algorithm>
#include <random>

#include "cfmec/estimation.hpp"

using namespace cfmec;

namespace {

struct Setup {
  SimConfig config;
  NetworkSnapshot net;
  ClusterAssignment assignment;
  ChannelRealization h;
  ChannelEstimates est;
};

Setup small_setup(int aps, int antennas, int users, int tau_p, std::uint64_t seed = 3) {
  Setup s;
  s.config.num_aps = aps;
  s.config.antennas = antennas;
  s.config.num_users = users;
  s.config.tau_p = tau_p;
  s.config.tau_u = s.config.tau_c - tau_p;
  s.config.coverage_side = 400.0;
  s.config.seed = seed;
  s.net = drop_network(s.config, 0);
  s.assignment = assign_pilots_and_clusters(s.net, tau_p, seed);
  std::mt19937_64 rng(seed);
  s.h = realize_channels(s.net, rng);
  s.est = mmse_estimate(s.h, s.net, s.assignment, {s.config.pilot_power, s.config.noise_power, tau_p}, rng);
  return s;
}

ClusterAssignment everyone_served(int aps, int users, std::vector<int> pilots) {
  std::vector<int> master(users, 0);
  const int tau_p = *std::max_element(pilots.begin(), pilots.end()) + 1;
  return make_assignment(aps, users, tau_p, std::move(pilots),
                         std::move(master), std::vector<char>(static_cast<std::size_t>(aps) * users, 1));
}

double min_eigenvalue(const CMatrix& A) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (A + A.adjoint()));
  return es.eigenvalues().minCoeff();
}

// SINR evaluated in the full L*M space with block-diagonal serving masks.
double sinr_oracle(const ChannelEstimates& est, const ClusterAssignment& a, const CVector& v, int k,
                   const Vector& p, double noise) {
  const int L = a.num_aps, K = a.num_users, M = est.antennas;
  const Eigen::Index n = static_cast<Eigen::Index>(L) * M;
  CMatrix D = CMatrix::Zero(n, n);
  for (int l = 0; l < L; ++l) {
    if (a.serves(l, k)) D.block(l * M, l * M, M, M).setIdentity();
  }
  const CVector w = D * v;
  double interf = noise * w.squaredNorm();
  double signal = 0.0;
  for (int i = 0; i < K; ++i) {
    CVector hi(n);
    CMatrix Ci = CMatrix::Zero(n, n);
    for (int l = 0; l < L; ++l) {
      hi.segment(l * M, M) = est.h_hat(l, i);
      Ci.block(l * M, l * M, M, M) = est.C(l, i);
    }
    const double proj = std::norm(w.dot(hi));
    if (i == k) {
      signal = p(i) * proj;
    } else {
      interf += p(i) * proj;
    }
    interf += p(i) * (w.adjoint() * Ci * w)(0, 0).real();
  }
  return signal / interf;
}

double max_abs_diff(const CVector& a, const CVector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("noiseless single user: the estimate is exact") {
  Setup s = small_setup(4, 3, 1, 1);
  std::mt19937_64 rng(11);
  const ChannelEstimates est = mmse_estimate(s.h, s.net, s.assignment, {0.1, 0.0, 1}, rng);
  for (int l = 0; l < 4; ++l) {
    const double scale = s.net.beta(l, 0);
    CHECK(est.C(l, 0).cwiseAbs().maxCoeff() < 1e-8 * scale);
    CHECK(max_abs_diff(est.h_hat(l, 0), s.h.h(l, 0)) < 1e-6 * std::sqrt(scale));
  }
}

TEST_CASE("error covariance bounds and pilot contamination") {
  Setup s = small_setup(4, 4, 2, 2);
  const ClusterAssignment separate = everyone_served(4, 2, {0, 1});
  const ClusterAssignment shared = everyone_served(4, 2, {0, 0});
  const PilotParams pp{0.1, s.config.noise_power, 2};
  std::mt19937_64 r1(5), r2(5);
  const ChannelEstimates e_sep = mmse_estimate(s.h, s.net, separate, pp, r1);
  const ChannelEstimates e_sh = mmse_estimate(s.h, s.net, shared, pp, r2);
  for (int l = 0; l < 4; ++l) {
    for (int k = 0; k < 2; ++k) {
      const double tol = 1e-10 * s.net.beta(l, k);
      CHECK(min_eigenvalue(e_sep.C(l, k)) > -tol);
      CHECK(min_eigenvalue(s.net.R(l, k) - e_sep.C(l, k)) > -tol);
      CHECK(min_eigenvalue(e_sh.C(l, k) - e_sep.C(l, k)) > -tol);
      CHECK((e_sh.C(l, k) - e_sep.C(l, k)).norm() > 0.0);
    }
  }
}

TEST_CASE("zero correlation gives zero estimate and error") {
  Setup s = small_setup(4, 2, 2, 2);
  s.net.R(1, 0).setZero();
  s.h.h(1, 0).setZero();
  std::mt19937_64 rng(2);
  const ChannelEstimates est =
      mmse_estimate(s.h, s.net, s.assignment, {0.1, s.config.noise_power, 2}, rng);
  CHECK(est.h_hat(1, 0).isZero());
  CHECK(est.C(1, 0).isZero());
}

TEST_CASE("estimate statistics: orthogonality and covariance split") {
  Setup s = small_setup(1, 2, 2, 1);
  const ClusterAssignment a = everyone_served(1, 2, {0, 0});
  const PilotParams pp{0.1, s.config.noise_power * 1e6, 1};  // noisy enough to make C sizable
  std::mt19937_64 rng(123);
  const int draws = 20000;
  CMatrix cross = CMatrix::Zero(2, 2), hh = CMatrix::Zero(2, 2);
  CMatrix C;
  for (int n = 0; n < draws; ++n) {
    const ChannelRealization h = realize_channels(s.net, rng);
    const ChannelEstimates e = mmse_estimate(h, s.net, a, pp, rng, Exec::serial);
    const CVector err = h.h(0, 0) - e.h_hat(0, 0);
    cross += err * e.h_hat(0, 0).adjoint();
    hh += e.h_hat(0, 0) * e.h_hat(0, 0).adjoint();
    C = e.C(0, 0);
  }
  cross /= draws;
  hh /= draws;
  const CMatrix& R = s.net.R(0, 0);
  CHECK(C.norm() > 0.05 * R.norm());
  CHECK(cross.norm() < 0.05 * R.norm());
  CHECK((hh - (R - C)).norm() < 0.05 * R.norm());
}

TEST_CASE("partial MMSE collapses to maximum ratio without interferers or errors") {
  const int L = 3, K = 3, M = 2;
  std::vector<char> mask(L * K, 0);
  for (int k = 0; k < K; ++k) mask[k * K + k] = 1;  // AP k serves only user k
  const ClusterAssignment a = make_assignment(L, K, 1, {0, 0, 0}, {0, 1, 2}, mask);
  REQUIRE(a.partial_set[1].size() == 1);
  ChannelEstimates est;
  est.antennas = M;
  est.h_hat = PairArray<CVector>(L, K);
  est.C = PairArray<CMatrix>(L, K, CMatrix::Zero(M, M));
  std::mt19937_64 rng(1);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) est.h_hat(l, k) = complex_gaussian(M, rng);
  }
  const Vector p = Vector::Constant(K, 0.05);
  const CombinerSet pm = pmmse_combiner(est, a, p, 1e-3);
  const CombinerSet mr = mrc_combiner(est, a);
  for (int k = 0; k < K; ++k) {
    const cdouble ratio = mr.v[k].dot(pm.v[k]) / mr.v[k].squaredNorm();
    CHECK(max_abs_diff(pm.v[k], ratio * mr.v[k]) < 1e-12 * pm.v[k].norm());
  }
}

TEST_CASE("coefficients match a direct full-space SINR evaluation") {
  Setup s = small_setup(9, 2, 6, 3);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  const double noise = s.config.noise_power;
  for (CombinerScheme scheme : {CombinerScheme::pmmse, CombinerScheme::lmmse, CombinerScheme::mrc}) {
    const Vector p0 = Vector::Constant(6, 0.1);
    const CombinerSet comb = scheme == CombinerScheme::pmmse   ? pmmse_combiner(s.est, s.assignment, p0, noise)
                             : scheme == CombinerScheme::lmmse ? lmmse_combiner(s.est, s.assignment, p0, noise)
                                                               : mrc_combiner(s.est, s.assignment);
    const SinrCoefficients c = sinr_coefficients(s.est, comb, s.assignment, noise);
    for (int trial = 0; trial < 100; ++trial) {
      Vector p(6);
      for (int k = 0; k < 6; ++k) p(k) = u(rng);
      for (int k = 0; k < 6; ++k) {
        const double oracle = sinr_oracle(s.est, s.assignment, comb.v[k], k, p, noise);
        CHECK(c.sinr(k, p) == doctest::Approx(oracle).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("single user with maximum ratio: closed form") {
  Setup s = small_setup(4, 3, 1, 1);
  const double noise = s.config.noise_power, p = 0.07;
  const CombinerSet comb = mrc_combiner(s.est, s.assignment);
  const SinrCoefficients c = sinr_coefficients(s.est, comb, s.assignment, noise);
  double h2 = 0.0, quad = 0.0;
  for (int l : s.assignment.aps_of_user[0]) {
    const CVector& hh = s.est.h_hat(l, 0);
    h2 += hh.squaredNorm();
    quad += (hh.adjoint() * s.est.C(l, 0) * hh)(0, 0).real();
  }
  CHECK(c.sinr(0, Vector::Constant(1, p)) == doctest::Approx(p * h2 * h2 / (p * quad + noise * h2)).epsilon(1e-12));
}

TEST_CASE("MMSE combiners dominate maximum ratio and random directions") {
  std::mt19937_64 rng(9);
  Setup s = small_setup(4, 2, 5, 3);
  const double noise = s.config.noise_power;
  const Vector p = Vector::Constant(5, 0.1);

  SUBCASE("partial MMSE with every AP serving everyone") {
    const ClusterAssignment a = everyone_served(4, 5, {0, 1, 2, 1, 0});
    std::mt19937_64 r(4);
    const ChannelEstimates est = mmse_estimate(s.h, s.net, a, {0.1, noise, 3}, r);
    const CombinerSet pm = pmmse_combiner(est, a, p, noise);
    const SinrCoefficients cp = sinr_coefficients(est, pm, a, noise);
    const SinrCoefficients cm = sinr_coefficients(est, mrc_combiner(est, a), a, noise);
    for (int k = 0; k < 5; ++k) {
      CHECK(cp.sinr(k, p) >= cm.sinr(k, p) * (1 - 1e-12));
      for (int trial = 0; trial < 20; ++trial) {
        const CVector v = complex_gaussian(8, rng);
        CHECK(cp.sinr(k, p) >= sinr_oracle(est, a, v, k, p, noise) * (1 - 1e-12));
      }
    }
  }
  SUBCASE("local MMSE with a single serving node") {
    const ClusterAssignment a = assign_cellular(s.net, 3, 1);
    std::mt19937_64 r(4);
    const ChannelEstimates est = mmse_estimate(s.h, s.net, a, {0.1, noise, 3}, r);
    const SinrCoefficients cl = sinr_coefficients(est, lmmse_combiner(est, a, p, noise), a, noise);
    const SinrCoefficients cm = sinr_coefficients(est, mrc_combiner(est, a), a, noise);
    for (int k = 0; k < 5; ++k) {
      CHECK(cl.sinr(k, p) >= cm.sinr(k, p) * (1 - 1e-12));
      for (int trial = 0; trial < 20; ++trial) {
        const CVector v = complex_gaussian(8, rng);
        CHECK(cl.sinr(k, p) >= sinr_oracle(est, a, v, k, p, noise) * (1 - 1e-12));
      }
    }
  }
}

TEST_CASE("SINR is invariant to combiner scaling") {
  Setup s = small_setup(4, 2, 4, 2);
  const double noise = s.config.noise_power;
  const Vector p = Vector::Constant(4, 0.03);
  CombinerSet comb = pmmse_combiner(s.est, s.assignment, p, noise);
  const Vector before = sinr_coefficients(s.est, comb, s.assignment, noise).sinr(p);
  for (auto& v : comb.v) v *= cdouble(3.7, -1.2);
  const Vector after = sinr_coefficients(s.est, comb, s.assignment, noise).sinr(p);
  for (int k = 0; k < 4; ++k) CHECK(after(k) == doctest::Approx(before(k)).epsilon(1e-12));
}

TEST_CASE("spectral efficiency from SINR coefficients") {
  SinrCoefficients c{Vector::Ones(2), Matrix::Zero(2, 2), Vector::Ones(2)};
  c.interference(0, 1) = 2.0;
  c.interference(1, 0) = 0.5;
  CHECK(se_prefactor(190, 200) == doctest::Approx(0.95));

  Vector p(2);
  p << 1.0, 0.0;
  Vector se = instantaneous_se(c, p, 190, 200);
  CHECK(se(0) == doctest::Approx(0.95));  // SINR = 1
  CHECK(se(1) == 0.0);

  p << 1.0, 1.0;
  const Vector base = instantaneous_se(c, p, 190, 200);
  CHECK(base(0) == doctest::Approx(0.95 * std::log2(1.0 + 1.0 / 3.0)));
  p(0) = 2.0;
  const Vector more = instantaneous_se(c, p, 190, 200);
  CHECK(more(0) > base(0));
  CHECK(more(1) < base(1));
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  Setup s = small_setup(16, 2, 8, 4);
  const PilotParams pp{0.1, s.config.noise_power, 4};
  std::mt19937_64 r1(8), r2(8);
  const ChannelEstimates a = mmse_estimate(s.h, s.net, s.assignment, pp, r1, Exec::serial);
  const ChannelEstimates b = mmse_estimate(s.h, s.net, s.assignment, pp, r2, Exec::parallel);
  for (int l = 0; l < 16; ++l) {
    for (int k = 0; k < 8; ++k) {
      CHECK(a.h_hat(l, k) == b.h_hat(l, k));
      CHECK(a.C(l, k) == b.C(l, k));
    }
  }
  const Vector p = Vector::LinSpaced(8, 0.01, 0.1);
  const double noise = s.config.noise_power;
  const CombinerSet ps = pmmse_combiner(a, s.assignment, p, noise, Exec::serial);
  const CombinerSet pp2 = pmmse_combiner(a, s.assignment, p, noise, Exec::parallel);
  const CombinerSet ls = lmmse_combiner(a, s.assignment, p, noise, Exec::serial);
  const CombinerSet lp = lmmse_combiner(a, s.assignment, p, noise, Exec::parallel);
  for (int k = 0; k < 8; ++k) {
    CHECK(ps.v[k] == pp2.v[k]);
    CHECK(ls.v[k] == lp.v[k]);
  }
  const SinrCoefficients cs = sinr_coefficients(a, ps, s.assignment, noise, Exec::serial);
  const SinrCoefficients cp = sinr_coefficients(a, ps, s.assignment, noise, Exec::parallel);
  CHECK(cs.gain == cp.gain);
  CHECK(cs.interference == cp.interference);
  CHECK(cs.noise == cp.noise);
}

TEST_CASE("singular pilot covariance falls back to a ridge") {
  Setup s = small_setup(4, 3, 1, 1);
  const CVector u = CVector::Ones(3);
  for (int l = 0; l < 4; ++l) {
    s.net.R(l, 0) = s.net.beta(l, 0) / 3.0 * u * u.adjoint();
    s.h.h(l, 0) = std::sqrt(s.net.beta(l, 0) / 3.0) * u;
  }
  std::mt19937_64 rng(1);
  const ChannelEstimates est = mmse_estimate(s.h, s.net, s.assignment, {0.1, 0.0, 1}, rng);
  CHECK(est.regularized > 0);
  for (int l = 0; l < 4; ++l) {
    CHECK(est.h_hat(l, 0).allFinite());
    CHECK(est.C(l, 0).allFinite());
    CHECK(max_abs_diff(est.h_hat(l, 0), s.h.h(l, 0)) < 1e-6 * std::sqrt(s.net.beta(l, 0)));
  }
}

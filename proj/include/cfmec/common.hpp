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

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfmec {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Selects the OpenMP kernel or its serial reference.
enum class Exec { serial, parallel };

/// Network architecture / allocation strategy.
enum class Mode { cellfree, cellular, fullpower };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

/// Dense per (AP, user) storage, AP-major.
template <class T>
class PairArray {
 public:
  PairArray() = default;
  PairArray(int aps, int users, const T& init = T{})
      : aps_(aps), users_(users), data_(static_cast<std::size_t>(aps) * users, init) {}

  T& operator()(int l, int k) { return data_[index(l, k)]; }
  const T& operator()(int l, int k) const { return data_[index(l, k)]; }

  int aps() const { return aps_; }
  int users() const { return users_; }

 private:
  std::size_t index(int l, int k) const {
    return static_cast<std::size_t>(l) * users_ + k;
  }

  int aps_ = 0;
  int users_ = 0;
  std::vector<T> data_;
};

/// Mixes a base seed with stream identifiers (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Compensated (Neumaier) summation.
double accurate_sum(std::span<const double> values);

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace cfmec

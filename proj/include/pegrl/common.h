// Copyright 2026 The pegrl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PEGRL_COMMON_H_
#define PEGRL_COMMON_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pegrl {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

using Rng = std::mt19937_64;

// Precondition violated on a numeric operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed datagram or vector length mismatch on the robot link.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The link to the robot could not deliver a response.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Controller used before it produced any samples.
class StartupError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite gradients, curriculum gate failures and similar.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double Norm(const Vec2& v) { return std::hypot(v[0], v[1]); }

inline Vec2 Sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }

inline Vec2 Add(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }

inline Vec2 Scale(const Vec2& a, double s) { return {a[0] * s, a[1] * s}; }

inline double DegToRad(double deg) { return deg * M_PI / 180.0; }

inline double RadToDeg(double rad) { return rad * 180.0 / M_PI; }

// Seeds a generator from a (master seed, stream id) pair so that independent
// streams never share state.
inline Rng MakeStream(uint64_t master_seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(master_seed),
                    static_cast<uint32_t>(master_seed >> 32),
                    static_cast<uint32_t>(stream),
                    static_cast<uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace pegrl

#endif  // PEGRL_COMMON_H_

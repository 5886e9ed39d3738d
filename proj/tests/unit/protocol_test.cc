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

#include <bit>
#include <cstring>

#include "doctest.h"
#include "pegrl/protocol.h"

namespace pegrl {
namespace {

Message RandomMessage(Rng& rng) {
  static const MsgType kTypes[] = {MsgType::kPollReq,  MsgType::kPollResp, MsgType::kActionReq,
                                   MsgType::kActionAck, MsgType::kResetReq, MsgType::kResetAck,
                                   MsgType::kError};
  Message m;
  m.type = kTypes[rng() % 7];
  m.seq = static_cast<uint32_t>(rng());
  if (m.type == MsgType::kError) {
    m.error_code = static_cast<ErrorCode>(1 + rng() % 4);
    size_t n = rng() % 40;
    for (size_t i = 0; i < n; ++i) m.error_text.push_back(static_cast<char>(32 + rng() % 95));
    return m;
  }
  for (int i = 0; i < PayloadFields(m.type); ++i) {
    // Arbitrary bit patterns, NaNs and infinities included.
    m.values.push_back(std::bit_cast<double>(static_cast<uint64_t>(rng())));
  }
  return m;
}

TEST_CASE("encode/decode round trip on random messages") {
  Rng rng(2024);
  for (int n = 0; n < 10000; ++n) {
    Message m = RandomMessage(rng);
    std::vector<uint8_t> bytes = Encode(m);
    Message back = Decode(bytes);
    REQUIRE(back.type == m.type);
    REQUIRE(back.seq == m.seq);
    REQUIRE(back.values.size() == m.values.size());
    REQUIRE(std::memcmp(back.values.data(), m.values.data(),
                        m.values.size() * sizeof(double)) == 0);
    REQUIRE(back.error_text == m.error_text);
    if (m.type == MsgType::kError) REQUIRE(back.error_code == m.error_code);
    REQUIRE(Encode(back) == bytes);
  }
}

TEST_CASE("wire layout is little-endian with a 9-byte header") {
  Message m;
  m.type = MsgType::kActionReq;
  m.seq = 0x01020304;
  m.values = {1.0, 0.0, -20.0, 0.0, 0.0};
  std::vector<uint8_t> b = Encode(m);
  REQUIRE(b.size() == kHeaderSize + 5 * 8);
  CHECK(std::memcmp(b.data(), "PGH1", 4) == 0);
  CHECK(b[4] == 3);
  CHECK(b[5] == 0x04);
  CHECK(b[8] == 0x01);
  // 1.0 = 0x3FF0000000000000
  CHECK(b[9 + 7] == 0x3F);
  CHECK(b[9 + 6] == 0xF0);
}

TEST_CASE("malformed datagrams are reported with a code") {
  Message m;
  m.type = MsgType::kPollResp;
  m.seq = 77;
  m.values.assign(9, 1.5);
  std::vector<uint8_t> good = Encode(m);

  std::vector<uint8_t> short_header(good.begin(), good.begin() + 6);
  CHECK_THROWS_AS(Decode(short_header), MalformedDatagram);

  std::vector<uint8_t> bad_magic = good;
  bad_magic[0] = 'X';
  try {
    Decode(bad_magic);
    FAIL("expected throw");
  } catch (const MalformedDatagram& e) {
    CHECK(e.code() == ErrorCode::kMalformed);
  }

  std::vector<uint8_t> truncated(good.begin(), good.end() - 3);
  try {
    Decode(truncated);
    FAIL("expected throw");
  } catch (const MalformedDatagram& e) {
    CHECK(e.code() == ErrorCode::kLengthViolation);
    CHECK(e.seq() == 77);
  }

  std::vector<uint8_t> unknown = good;
  unknown[4] = 42;
  try {
    Decode(unknown);
    FAIL("expected throw");
  } catch (const MalformedDatagram& e) {
    CHECK(e.code() == ErrorCode::kUnknownType);
  }
}

TEST_CASE("random byte strings never crash the decoder") {
  Rng rng(5);
  int accepted = 0;
  for (int n = 0; n < 10000; ++n) {
    std::vector<uint8_t> b(rng() % 90);
    for (auto& x : b) x = static_cast<uint8_t>(rng());
    if (b.size() >= 4 && n % 2 == 0) std::memcpy(b.data(), "PGH1", 4);
    try {
      Decode(b);
      ++accepted;
    } catch (const MalformedDatagram&) {
    }
  }
  CHECK(accepted >= 0);
}

}  // namespace
}  // namespace pegrl

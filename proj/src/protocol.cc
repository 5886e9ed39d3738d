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

#include "pegrl/protocol.h"

#include <bit>
#include <cstring>

namespace pegrl {
namespace {

static_assert(std::endian::native == std::endian::little,
              "wire format assumes a little-endian host");

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void PutF64(std::vector<uint8_t>& out, double v) {
  uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
}

uint32_t GetU32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}

double GetF64(const uint8_t* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

int PayloadFields(MsgType type) {
  switch (type) {
    case MsgType::kPollReq: return 0;
    case MsgType::kPollResp: return 9;
    case MsgType::kActionReq: return 5;
    case MsgType::kActionAck: return 0;
    case MsgType::kResetReq: return 4;
    case MsgType::kResetAck: return 2;
    case MsgType::kError: return -1;
  }
  return -2;
}

std::vector<uint8_t> Encode(const Message& msg) {
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  out.push_back(static_cast<uint8_t>(msg.type));
  PutU32(out, msg.seq);
  if (msg.type == MsgType::kError) {
    out.push_back(static_cast<uint8_t>(msg.error_code));
    out.insert(out.end(), msg.error_text.begin(), msg.error_text.end());
    return out;
  }
  int fields = PayloadFields(msg.type);
  if (fields < 0 || static_cast<size_t>(fields) != msg.values.size()) {
    throw ProtocolError("Encode: payload length does not match message type");
  }
  for (double v : msg.values) PutF64(out, v);
  return out;
}

Message Decode(std::span<const uint8_t> bytes) {
  uint32_t seq = bytes.size() >= kHeaderSize ? GetU32(bytes.data() + 5) : 0;
  if (bytes.size() < kHeaderSize) {
    throw MalformedDatagram("datagram shorter than header", ErrorCode::kMalformed, seq);
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw MalformedDatagram("bad magic", ErrorCode::kMalformed, seq);
  }
  uint8_t raw_type = bytes[4];
  if (raw_type < 1 || raw_type > 7) {
    throw MalformedDatagram("unknown message type " + std::to_string(raw_type),
                            ErrorCode::kUnknownType, seq);
  }
  Message msg;
  msg.type = static_cast<MsgType>(raw_type);
  msg.seq = seq;
  std::span<const uint8_t> payload = bytes.subspan(kHeaderSize);
  if (msg.type == MsgType::kError) {
    if (payload.empty()) {
      throw MalformedDatagram("error message without code", ErrorCode::kLengthViolation, seq);
    }
    msg.error_code = static_cast<ErrorCode>(payload[0]);
    msg.error_text.assign(payload.begin() + 1, payload.end());
    return msg;
  }
  size_t fields = static_cast<size_t>(PayloadFields(msg.type));
  if (payload.size() != fields * 8) {
    throw MalformedDatagram("payload of " + std::to_string(payload.size()) +
                                " bytes, expected " + std::to_string(fields * 8),
                            ErrorCode::kLengthViolation, seq);
  }
  msg.values.resize(fields);
  for (size_t i = 0; i < fields; ++i) msg.values[i] = GetF64(payload.data() + 8 * i);
  return msg;
}

Message MakeError(uint32_t seq, ErrorCode code, const std::string& text) {
  Message m;
  m.type = MsgType::kError;
  m.seq = seq;
  m.error_code = code;
  m.error_text = text;
  return m;
}

}  // namespace pegrl

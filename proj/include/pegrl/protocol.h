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

#ifndef PEGRL_PROTOCOL_H_
#define PEGRL_PROTOCOL_H_

// Datagram layout (all integers and floats little-endian):
//
//   offset 0  magic    "PGH1"
//   offset 4  msg_type u8
//   offset 5  seq      u32
//   offset 9  payload
//
// Payloads:
//   POLL_REQ    empty
//   POLL_RESP   9 x f64  F_x F_y F_z M_x M_y P_x P_y P_z cycle
//   ACTION_REQ  5 x f64  F_x^d F_y^d F_z^d R_x^d R_y^d
//   ACTION_ACK  empty
//   RESET_REQ   4 x f64  start_mode offset_mm direction_index episode_seed
//   RESET_ACK   2 x f64  hole_center_x_mm hole_center_y_mm
//   ERROR       u8 error code, then UTF-8 text

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pegrl/common.h"

namespace pegrl {

enum class MsgType : uint8_t {
  kPollReq = 1,
  kPollResp = 2,
  kActionReq = 3,
  kActionAck = 4,
  kResetReq = 5,
  kResetAck = 6,
  kError = 7,
};

enum class ErrorCode : uint8_t {
  kMalformed = 1,
  kUnknownType = 2,
  kLengthViolation = 3,
  kServerFault = 4,
};

inline constexpr char kMagic[4] = {'P', 'G', 'H', '1'};
inline constexpr size_t kHeaderSize = 9;

struct Message {
  MsgType type = MsgType::kPollReq;
  uint32_t seq = 0;
  std::vector<double> values;
  ErrorCode error_code = ErrorCode::kMalformed;
  std::string error_text;

  bool operator==(const Message&) const = default;
};

// Number of f64 fields a message type carries; -1 for ERROR.
int PayloadFields(MsgType type);

std::vector<uint8_t> Encode(const Message& msg);

// Thrown by Decode; carries the seq when the header was readable.
class MalformedDatagram : public ProtocolError {
 public:
  MalformedDatagram(const std::string& what, ErrorCode code, uint32_t seq)
      : ProtocolError(what), code_(code), seq_(seq) {}
  ErrorCode code() const { return code_; }
  uint32_t seq() const { return seq_; }

 private:
  ErrorCode code_;
  uint32_t seq_;
};

Message Decode(std::span<const uint8_t> bytes);

Message MakeError(uint32_t seq, ErrorCode code, const std::string& text);

}  // namespace pegrl

#endif  // PEGRL_PROTOCOL_H_

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

#include "pegrl/robot_service.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <random>

namespace pegrl {
namespace {

sockaddr_in Resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  int rc = getaddrinfo(ep.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw TransportError("cannot resolve " + ep.host + ": " + gai_strerror(rc));
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

// Waits up to `timeout_ms` for a datagram; empty on timeout.
std::vector<uint8_t> Receive(int fd, int timeout_ms, sockaddr_in* from) {
  pollfd pfd{fd, POLLIN, 0};
  int rc = ::poll(&pfd, 1, timeout_ms);
  if (rc <= 0) return {};
  std::vector<uint8_t> buf(2048);
  socklen_t len = sizeof(sockaddr_in);
  ssize_t n = recvfrom(fd, buf.data(), buf.size(), 0,
                       reinterpret_cast<sockaddr*>(from), &len);
  if (n < 0) return {};
  buf.resize(static_cast<size_t>(n));
  return buf;
}

}  // namespace

bool FaultInjector::ShouldDrop() {
  if (drop_rate_ <= 0.0) return false;
  bool drop = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < drop_rate_;
  if (drop) ++dropped_;
  return drop;
}

Endpoint ParseEndpoint(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw DomainError("endpoint needs host:port: " + text);
  Endpoint ep;
  if (colon > 0) ep.host = text.substr(0, colon);
  std::string port = text.substr(colon + 1);
  char* end = nullptr;
  long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) {
    throw DomainError("bad port in endpoint: " + text);
  }
  ep.port = static_cast<uint16_t>(p);
  return ep;
}

SensorFrame FrameFromValues(std::span<const double> values) {
  if (values.size() != 9) throw ProtocolError("poll response must carry 9 fields");
  SensorFrame f;
  f.forces_n = {values[0], values[1], values[2]};
  f.moments_nm = {values[3], values[4]};
  f.pos_mm = {values[5], values[6], values[7]};
  f.cycle_index = static_cast<int64_t>(values[8]);
  f.sample_count = ControllerParams::kSamplesPerCycle;
  return f;
}

std::vector<double> FrameToValues(const SensorFrame& f) {
  return {f.forces_n[0], f.forces_n[1], f.forces_n[2], f.moments_nm[0], f.moments_nm[1],
          f.pos_mm[0],   f.pos_mm[1],   f.pos_mm[2],   static_cast<double>(f.cycle_index)};
}

RobotServer::RobotServer(Controller& controller, const ServerOptions& options)
    : controller_(controller), faults_(options.drop_rate, options.fault_seed) {
  Endpoint ep = ParseEndpoint(options.bind);
  sockaddr_in addr = Resolve(ep);
  fd_ = socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
  if (bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    std::string err = std::strerror(errno);
    close(fd_);
    fd_ = -1;
    throw TransportError("cannot bind " + options.bind + ": " + err);
  }
  socklen_t len = sizeof(addr);
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

RobotServer::~RobotServer() {
  if (fd_ >= 0) close(fd_);
}

void RobotServer::Serve(const std::atomic<bool>& stop) {
  while (!stop.load()) {
    sockaddr_in from{};
    std::vector<uint8_t> request = Receive(fd_, 50, &from);
    if (request.empty()) continue;
    std::vector<uint8_t> response = Handle(request);
    if (faults_.ShouldDrop()) continue;
    sendto(fd_, response.data(), response.size(), 0,
           reinterpret_cast<sockaddr*>(&from), sizeof(from));
  }
}

std::vector<uint8_t> RobotServer::Handle(std::span<const uint8_t> request) {
  if (!last_request_.empty() && request.size() == last_request_.size() &&
      std::equal(request.begin(), request.end(), last_request_.begin())) {
    ++cache_hits_;
    return last_response_;
  }
  Message response;
  try {
    response = Dispatch(Decode(request));
  } catch (const MalformedDatagram& e) {
    response = MakeError(e.seq(), e.code(), e.what());
  }
  ++handled_;
  last_request_.assign(request.begin(), request.end());
  last_response_ = Encode(response);
  return last_response_;
}

Message RobotServer::Dispatch(const Message& request) {
  Message out;
  out.seq = request.seq;
  try {
    switch (request.type) {
      case MsgType::kPollReq:
        out.type = MsgType::kPollResp;
        out.values = FrameToValues(controller_.Poll());
        return out;
      case MsgType::kActionReq:
        controller_.SubmitAction(request.values);
        out.type = MsgType::kActionAck;
        return out;
      case MsgType::kResetReq: {
        ResetSpec spec;
        spec.mode = request.values[0] == 1.0 ? StartMode::kEngaged : StartMode::kSearch;
        spec.offset_mm = request.values[1];
        spec.direction_index = static_cast<int>(request.values[2]);
        spec.seed = static_cast<uint64_t>(request.values[3]);
        ResetInfo info = controller_.Reset(spec);
        out.type = MsgType::kResetAck;
        out.values = {info.hole_center_xy_mm[0], info.hole_center_xy_mm[1]};
        return out;
      }
      default:
        return MakeError(request.seq, ErrorCode::kUnknownType,
                         "message type is not a request");
    }
  } catch (const std::exception& e) {
    return MakeError(request.seq, ErrorCode::kServerFault, e.what());
  }
}

UdpRobotClient::UdpRobotClient(const ClientOptions& options)
    : options_(options),
      faults_(options.drop_rate, options.fault_seed),
      next_seq_(static_cast<uint32_t>(std::random_device{}())) {
  sockaddr_in addr = Resolve(ParseEndpoint(options.server));
  fd_ = socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
  if (connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    std::string err = std::strerror(errno);
    close(fd_);
    throw TransportError("cannot connect to " + options.server + ": " + err);
  }
}

UdpRobotClient::~UdpRobotClient() {
  if (fd_ >= 0) close(fd_);
}

Message UdpRobotClient::Roundtrip(MsgType type, std::vector<double> values) {
  Message req;
  req.type = type;
  req.seq = ++next_seq_;
  req.values = std::move(values);
  std::vector<uint8_t> bytes = Encode(req);
  for (int attempt = 0; attempt < options_.attempts; ++attempt) {
    if (attempt > 0) ++retries_;
    if (!faults_.ShouldDrop()) send(fd_, bytes.data(), bytes.size(), 0);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(options_.timeout_ms);
    while (true) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                      deadline - std::chrono::steady_clock::now())
                      .count();
      if (left <= 0) break;
      sockaddr_in from{};
      std::vector<uint8_t> raw = Receive(fd_, static_cast<int>(left), &from);
      if (raw.empty()) continue;
      Message resp;
      try {
        resp = Decode(raw);
      } catch (const MalformedDatagram&) {
        ++stale_;
        continue;
      }
      if (resp.seq != req.seq) {
        ++stale_;
        continue;
      }
      if (resp.type == MsgType::kError) {
        throw ProtocolError("robot service error: " + resp.error_text);
      }
      return resp;
    }
  }
  throw TransportError("no response after " + std::to_string(options_.attempts) +
                       " attempts");
}

std::vector<uint8_t> UdpRobotClient::SendRaw(std::span<const uint8_t> bytes) {
  send(fd_, bytes.data(), bytes.size(), 0);
  sockaddr_in from{};
  for (int attempt = 0; attempt < options_.attempts; ++attempt) {
    std::vector<uint8_t> raw = Receive(fd_, options_.timeout_ms, &from);
    if (!raw.empty()) return raw;
  }
  throw TransportError("no response to raw datagram");
}

ResetInfo UdpRobotClient::Reset(const ResetSpec& spec) {
  Message resp = Roundtrip(MsgType::kResetReq,
                           {static_cast<double>(static_cast<int>(spec.mode)), spec.offset_mm,
                            static_cast<double>(spec.direction_index),
                            static_cast<double>(spec.seed)});
  if (resp.type != MsgType::kResetAck) throw ProtocolError("expected RESET_ACK");
  return ResetInfo{{resp.values[0], resp.values[1]}};
}

void UdpRobotClient::Submit(const ActionVector& action) {
  auto a = action.ToArray();
  Message resp = Roundtrip(MsgType::kActionReq, {a.begin(), a.end()});
  if (resp.type != MsgType::kActionAck) throw ProtocolError("expected ACTION_ACK");
}

SensorFrame UdpRobotClient::Poll() {
  Message resp = Roundtrip(MsgType::kPollReq, {});
  if (resp.type != MsgType::kPollResp) throw ProtocolError("expected POLL_RESP");
  return FrameFromValues(resp.values);
}

}  // namespace pegrl

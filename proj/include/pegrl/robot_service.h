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

#ifndef PEGRL_ROBOT_SERVICE_H_
#define PEGRL_ROBOT_SERVICE_H_

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pegrl/controller.h"
#include "pegrl/protocol.h"

namespace pegrl {

// What the agent side sees of the robot, whether in-process or over UDP.
class RobotLink {
 public:
  virtual ~RobotLink() = default;
  virtual ResetInfo Reset(const ResetSpec& spec) = 0;
  virtual void Submit(const ActionVector& action) = 0;
  virtual SensorFrame Poll() = 0;
};

class InProcessLink : public RobotLink {
 public:
  explicit InProcessLink(Controller& controller) : controller_(controller) {}
  ResetInfo Reset(const ResetSpec& spec) override { return controller_.Reset(spec); }
  void Submit(const ActionVector& action) override { controller_.SubmitAction(action); }
  SensorFrame Poll() override { return controller_.Poll(); }

 private:
  Controller& controller_;
};

// Drops datagrams with a fixed probability; used to exercise retries.
class FaultInjector {
 public:
  FaultInjector(double drop_rate, uint64_t seed) : drop_rate_(drop_rate), rng_(seed) {}
  bool ShouldDrop();
  uint64_t dropped() const { return dropped_; }

 private:
  double drop_rate_;
  Rng rng_;
  uint64_t dropped_ = 0;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = 5005;
};

// Parses "host:port" (or ":port"). Throws DomainError on bad input.
Endpoint ParseEndpoint(const std::string& text);

struct ServerOptions {
  std::string bind = "127.0.0.1:5005";
  double drop_rate = 0.0;
  uint64_t fault_seed = 0;
};

// Single-client UDP front end for a Controller. Requests are handled one at a
// time; a repeated request (same bytes) is answered from a one-entry cache
// without re-executing it, so client retries never advance the robot twice.
class RobotServer {
 public:
  // Binds immediately; throws TransportError when the address is unavailable.
  RobotServer(Controller& controller, const ServerOptions& options);
  ~RobotServer();
  RobotServer(const RobotServer&) = delete;
  RobotServer& operator=(const RobotServer&) = delete;

  uint16_t port() const { return port_; }

  // Runs until `stop` becomes true.
  void Serve(const std::atomic<bool>& stop);

  // Request -> response bytes, without the socket.
  std::vector<uint8_t> Handle(std::span<const uint8_t> request);

  uint64_t handled() const { return handled_; }
  uint64_t cache_hits() const { return cache_hits_; }

 private:
  Message Dispatch(const Message& request);

  Controller& controller_;
  FaultInjector faults_;
  int fd_ = -1;
  uint16_t port_ = 0;
  std::vector<uint8_t> last_request_;
  std::vector<uint8_t> last_response_;
  uint64_t handled_ = 0;
  uint64_t cache_hits_ = 0;
};

struct ClientOptions {
  std::string server = "127.0.0.1:5005";
  int timeout_ms = 100;
  int attempts = 5;
  double drop_rate = 0.0;
  uint64_t fault_seed = 1;
};

class UdpRobotClient : public RobotLink {
 public:
  explicit UdpRobotClient(const ClientOptions& options);
  ~UdpRobotClient() override;
  UdpRobotClient(const UdpRobotClient&) = delete;
  UdpRobotClient& operator=(const UdpRobotClient&) = delete;

  ResetInfo Reset(const ResetSpec& spec) override;
  void Submit(const ActionVector& action) override;
  SensorFrame Poll() override;

  // Sends a request and waits for the response carrying the same seq.
  // Retries on timeout; throws TransportError once attempts run out and
  // ProtocolError when the server answers with ERROR.
  Message Roundtrip(MsgType type, std::vector<double> values);
  // Sends raw bytes and returns the first response (no retry); for tests.
  std::vector<uint8_t> SendRaw(std::span<const uint8_t> bytes);

  uint64_t retries() const { return retries_; }
  uint64_t stale_discarded() const { return stale_; }

 private:
  ClientOptions options_;
  FaultInjector faults_;
  int fd_ = -1;
  uint32_t next_seq_;
  uint64_t retries_ = 0;
  uint64_t stale_ = 0;
};

SensorFrame FrameFromValues(std::span<const double> values);
std::vector<double> FrameToValues(const SensorFrame& frame);

}  // namespace pegrl

#endif  // PEGRL_ROBOT_SERVICE_H_

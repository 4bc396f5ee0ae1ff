// Copyright 2026 The forgeci Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Master/agent wire protocol. Agents dial the master and keep one TCP
// connection open; every frame is one UTF-8 JSON object on its own line:
//
//   {"kind":"HEARTBEAT","seq":5,"body":{}}
//
// `seq` starts at 1 and grows by exactly one per direction per connection.

#ifndef FORGECI_PROTOCOL_HPP_
#define FORGECI_PROTOCOL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forgeci/model.hpp"
#include "forgeci/pipeline.hpp"
#include "json.hpp"

namespace forgeci::protocol {

using json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7478;
inline constexpr std::size_t kMaxChunkPayload = 64 * 1024;
inline constexpr std::size_t kChunkWindow = 32;
inline constexpr std::size_t kMaxFrameBytes = 1 << 20;

enum class MessageKind {
  kHello,
  kHelloAck,
  kHeartbeat,
  kAssign,
  kAccept,
  kLogChunk,
  kResult,
  kCancel,
  kError,
};

std::string_view to_string(MessageKind kind);
std::optional<MessageKind> parse_kind(std::string_view s);

struct WireMessage {
  MessageKind kind = MessageKind::kHeartbeat;
  std::uint64_t seq = 0;
  json body = json::object();

  bool operator==(const WireMessage&) const = default;
};

// One newline-terminated frame.
std::string encode(const WireMessage& msg);
// Accepts a frame with or without its trailing newline.
// Throws Error{MalformedFrame, UnknownKind}.
WireMessage decode(std::string_view frame);

// Writer side: hands out 1, 2, 3, ...
class SeqCounter {
 public:
  std::uint64_t next() { return ++last_; }

 private:
  std::uint64_t last_ = 0;
};

// Reader side: enforces strictly increasing, gapless seq numbers.
// Throws Error{SeqRegression} when seq <= last, Error{SeqGap} when seq skips.
class SeqTracker {
 public:
  void observe(std::uint64_t seq);
  std::uint64_t last() const { return last_; }

 private:
  std::uint64_t last_ = 0;
};

// Enforces gapless chunk_index from 0 per build. Throws Error{ChunkGap}.
class ChunkTracker {
 public:
  void observe(model::BuildId build, std::uint64_t chunk_index);
  std::uint64_t received(model::BuildId build) const;
  void forget(model::BuildId build) { next_.erase(build); }

 private:
  std::map<model::BuildId, std::uint64_t> next_;
};

// Splits a byte stream into frames. Throws Error{MalformedFrame} when a
// line exceeds kMaxFrameBytes.
class FrameReader {
 public:
  void feed(std::string_view bytes);
  std::optional<std::string> next_frame();

 private:
  std::string buffer_;
};

struct AgentHello {
  std::string agent_name;
  model::PlatformLabel platform;
  int cores = 0;
  std::int64_t memory_mb = 0;
  std::string os_descriptor;
  int protocol_version = kProtocolVersion;

  bool operator==(const AgentHello&) const = default;
};

enum class WorkspacePolicy { kCleanAfter, kKeep };

struct Assignment {
  model::BuildId build_id = 0;
  std::string job_name;
  std::uint64_t build_number = 0;
  model::RuntimeVersion version;
  model::PlatformLabel platform;
  model::CommitRef commit;
  pipeline::HudsonScript hudson_script;
  std::vector<pipeline::EnvBinding> bindings;
  WorkspacePolicy workspace_policy = WorkspacePolicy::kCleanAfter;

  const pipeline::EnvBinding* binding(std::string_view name) const;
};

struct LogChunk {
  model::BuildId build_id = 0;
  std::uint64_t chunk_index = 0;
  std::string bytes;
};

struct BuildResult {
  model::BuildId build_id = 0;
  int exit_code = 0;
  std::uint64_t log_bytes = 0;
  std::uint64_t chunk_count = 0;
  std::string cause;  // non-empty when the agent failed before or around the script
};

struct HelloAck {
  std::int64_t heartbeat_interval_ms = 10'000;
  std::int64_t heartbeat_timeout_ms = 30'000;
};

struct ErrorBody {
  std::string error;
  std::string detail;
};

json to_json(const model::CommitRef& c);
model::CommitRef commit_from_json(const json& j);

json to_json(const AgentHello& h);
AgentHello hello_from_json(const json& j);
json to_json(const Assignment& a);
Assignment assignment_from_json(const json& j);
json to_json(const LogChunk& c);
LogChunk chunk_from_json(const json& j);
json to_json(const BuildResult& r);
BuildResult result_from_json(const json& j);
json to_json(const HelloAck& a);
HelloAck ack_from_json(const json& j);
json to_json(const ErrorBody& e);
ErrorBody error_from_json(const json& j);

// What the master accepts at handshake time.
struct HandshakePolicy {
  int protocol_version = kProtocolVersion;
  // agent_name -> platform. An agent must be listed with its own platform.
  std::map<std::string, model::PlatformLabel> agents;
  HelloAck ack;
};

// Returns a HELLO_ACK or an ERROR body (VersionMismatch, UnknownPlatform).
// The superseding of an existing registration is the master's job.
WireMessage handshake(const AgentHello& hello, const HandshakePolicy& policy);

// Splits `bytes` into LOG_CHUNK payloads of at most kMaxChunkPayload.
std::vector<std::string_view> chunk_payloads(std::string_view bytes,
                                             std::size_t max = kMaxChunkPayload);

}  // namespace forgeci::protocol

#endif  // FORGECI_PROTOCOL_HPP_

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

#include "forgeci/protocol.hpp"

#include "forgeci/crypto.hpp"
#include "forgeci/error.hpp"

namespace forgeci::protocol {
namespace {

constexpr MessageKind kAllKinds[] = {
    MessageKind::kHello,    MessageKind::kHelloAck, MessageKind::kHeartbeat,
    MessageKind::kAssign,   MessageKind::kAccept,   MessageKind::kLogChunk,
    MessageKind::kResult,   MessageKind::kCancel,   MessageKind::kError,
};

// Runs a body decoder, turning JSON type/key errors into MalformedFrame.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedFrame, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kHello: return "HELLO";
    case MessageKind::kHelloAck: return "HELLO_ACK";
    case MessageKind::kHeartbeat: return "HEARTBEAT";
    case MessageKind::kAssign: return "ASSIGN";
    case MessageKind::kAccept: return "ACCEPT";
    case MessageKind::kLogChunk: return "LOG_CHUNK";
    case MessageKind::kResult: return "RESULT";
    case MessageKind::kCancel: return "CANCEL";
    case MessageKind::kError: return "ERROR";
  }
  return "";
}

std::optional<MessageKind> parse_kind(std::string_view s) {
  for (MessageKind k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string encode(const WireMessage& msg) {
  json j = json::object();
  j["kind"] = to_string(msg.kind);
  j["seq"] = msg.seq;
  j["body"] = msg.body.is_null() ? json::object() : msg.body;
  std::string line = j.dump(-1, ' ', false, json::error_handler_t::replace);
  line += '\n';
  return line;
}

WireMessage decode(std::string_view frame) {
  if (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
  if (frame.find('\n') != std::string_view::npos) {
    throw Error(Errc::MalformedFrame, "embedded newline");
  }
  json j = json::parse(frame, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::MalformedFrame, "not a JSON object");
  }
  auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string()) {
    throw Error(Errc::MalformedFrame, "missing kind");
  }
  auto kind = parse_kind(kind_it->get<std::string>());
  if (!kind) throw Error(Errc::UnknownKind, kind_it->get<std::string>());
  auto seq_it = j.find("seq");
  if (seq_it == j.end() || !seq_it->is_number_unsigned()) {
    throw Error(Errc::MalformedFrame, "missing or negative seq");
  }
  auto body_it = j.find("body");
  if (body_it == j.end() || !body_it->is_object()) {
    throw Error(Errc::MalformedFrame, "missing body object");
  }
  return WireMessage{*kind, seq_it->get<std::uint64_t>(), std::move(*body_it)};
}

void SeqTracker::observe(std::uint64_t seq) {
  if (seq <= last_) {
    throw Error(Errc::SeqRegression, std::to_string(seq) + " after " +
                                         std::to_string(last_));
  }
  if (seq != last_ + 1) {
    throw Error(Errc::SeqGap, "expected " + std::to_string(last_ + 1) + ", got " +
                                  std::to_string(seq));
  }
  last_ = seq;
}

void ChunkTracker::observe(model::BuildId build, std::uint64_t chunk_index) {
  std::uint64_t& expected = next_[build];
  if (chunk_index != expected) {
    throw Error(Errc::ChunkGap, "build " + std::to_string(build) + ": expected " +
                                    std::to_string(expected) + ", got " +
                                    std::to_string(chunk_index));
  }
  ++expected;
}

std::uint64_t ChunkTracker::received(model::BuildId build) const {
  auto it = next_.find(build);
  return it == next_.end() ? 0 : it->second;
}

void FrameReader::feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<std::string> FrameReader::next_frame() {
  const auto nl = buffer_.find('\n');
  if (nl == std::string::npos) {
    if (buffer_.size() > kMaxFrameBytes) {
      throw Error(Errc::MalformedFrame, "frame exceeds size limit");
    }
    return std::nullopt;
  }
  std::string frame = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  return frame;
}

json to_json(const model::CommitRef& c) {
  json j = {{"repo_id", c.repo_id}, {"sha", c.sha}};
  j["branch"] = c.branch ? json(*c.branch) : json(nullptr);
  j["pr_number"] = c.pr_number ? json(*c.pr_number) : json(nullptr);
  return j;
}

model::CommitRef commit_from_json(const json& j) {
  return guarded("commit", [&] {
    model::CommitRef c;
    c.repo_id = j.at("repo_id").get<std::string>();
    c.sha = j.at("sha").get<std::string>();
    if (j.contains("branch") && !j["branch"].is_null()) {
      c.branch = j["branch"].get<std::string>();
    }
    if (j.contains("pr_number") && !j["pr_number"].is_null()) {
      c.pr_number = j["pr_number"].get<int>();
    }
    return c;
  });
}

json to_json(const AgentHello& h) {
  return {{"agent_name", h.agent_name},       {"platform", h.platform.value},
          {"cores", h.cores},                 {"memory_mb", h.memory_mb},
          {"os_descriptor", h.os_descriptor}, {"protocol_version", h.protocol_version}};
}

AgentHello hello_from_json(const json& j) {
  return guarded("HELLO", [&] {
    AgentHello h;
    h.agent_name = j.at("agent_name").get<std::string>();
    h.platform.value = j.at("platform").get<std::string>();
    h.cores = j.value("cores", 0);
    h.memory_mb = j.value("memory_mb", std::int64_t{0});
    h.os_descriptor = j.value("os_descriptor", std::string{});
    h.protocol_version = j.at("protocol_version").get<int>();
    return h;
  });
}

const pipeline::EnvBinding* Assignment::binding(std::string_view name) const {
  for (const auto& b : bindings) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

json to_json(const Assignment& a) {
  json bindings = json::array();
  for (const auto& b : a.bindings) bindings.push_back({{"name", b.name}, {"value", b.value}});
  return {{"build_id", a.build_id},
          {"job_name", a.job_name},
          {"build_number", a.build_number},
          {"version", a.version.value},
          {"platform", a.platform.value},
          {"commit", to_json(a.commit)},
          {"script", {{"text", a.hudson_script.text},
                      {"spec_hash", a.hudson_script.spec_hash}}},
          {"bindings", bindings},
          {"workspace_policy",
           a.workspace_policy == WorkspacePolicy::kKeep ? "keep" : "clean_after"}};
}

Assignment assignment_from_json(const json& j) {
  return guarded("ASSIGN", [&] {
    Assignment a;
    a.build_id = j.at("build_id").get<model::BuildId>();
    a.job_name = j.at("job_name").get<std::string>();
    a.build_number = j.at("build_number").get<std::uint64_t>();
    a.version.value = j.at("version").get<std::string>();
    a.platform.value = j.at("platform").get<std::string>();
    a.commit = commit_from_json(j.at("commit"));
    a.hudson_script.text = j.at("script").at("text").get<std::string>();
    a.hudson_script.spec_hash = j.at("script").at("spec_hash").get<std::string>();
    for (const auto& b : j.at("bindings")) {
      a.bindings.push_back({b.at("name").get<std::string>(),
                            b.at("value").get<std::string>()});
    }
    a.hudson_script.bindings = a.bindings;
    const std::string policy = j.value("workspace_policy", std::string("clean_after"));
    a.workspace_policy =
        policy == "keep" ? WorkspacePolicy::kKeep : WorkspacePolicy::kCleanAfter;
    return a;
  });
}

json to_json(const LogChunk& c) {
  return {{"build_id", c.build_id},
          {"chunk_index", c.chunk_index},
          {"data", crypto::base64_encode(c.bytes)}};
}

LogChunk chunk_from_json(const json& j) {
  return guarded("LOG_CHUNK", [&] {
    LogChunk c;
    c.build_id = j.at("build_id").get<model::BuildId>();
    c.chunk_index = j.at("chunk_index").get<std::uint64_t>();
    auto bytes = crypto::base64_decode(j.at("data").get<std::string>());
    if (!bytes) throw Error(Errc::MalformedFrame, "LOG_CHUNK: bad base64");
    if (bytes->size() > kMaxChunkPayload) {
      throw Error(Errc::MalformedFrame, "LOG_CHUNK: payload over 64 KiB");
    }
    c.bytes = std::move(*bytes);
    return c;
  });
}

json to_json(const BuildResult& r) {
  return {{"build_id", r.build_id},       {"exit_code", r.exit_code},
          {"log_bytes", r.log_bytes},     {"chunk_count", r.chunk_count},
          {"cause", r.cause}};
}

BuildResult result_from_json(const json& j) {
  return guarded("RESULT", [&] {
    BuildResult r;
    r.build_id = j.at("build_id").get<model::BuildId>();
    r.exit_code = j.at("exit_code").get<int>();
    r.log_bytes = j.value("log_bytes", std::uint64_t{0});
    r.chunk_count = j.value("chunk_count", std::uint64_t{0});
    r.cause = j.value("cause", std::string{});
    return r;
  });
}

json to_json(const HelloAck& a) {
  return {{"heartbeat_interval_ms", a.heartbeat_interval_ms},
          {"heartbeat_timeout_ms", a.heartbeat_timeout_ms}};
}

HelloAck ack_from_json(const json& j) {
  return guarded("HELLO_ACK", [&] {
    HelloAck a;
    a.heartbeat_interval_ms = j.at("heartbeat_interval_ms").get<std::int64_t>();
    a.heartbeat_timeout_ms = j.at("heartbeat_timeout_ms").get<std::int64_t>();
    return a;
  });
}

json to_json(const ErrorBody& e) { return {{"error", e.error}, {"detail", e.detail}}; }

ErrorBody error_from_json(const json& j) {
  return guarded("ERROR", [&] {
    return ErrorBody{j.at("error").get<std::string>(), j.value("detail", std::string{})};
  });
}

WireMessage handshake(const AgentHello& hello, const HandshakePolicy& policy) {
  auto error = [](Errc code, std::string detail) {
    return WireMessage{MessageKind::kError, 0,
                       to_json(ErrorBody{std::string(errc_name(code)), std::move(detail)})};
  };
  if (hello.protocol_version != policy.protocol_version) {
    return error(Errc::VersionMismatch,
                 "agent speaks v" + std::to_string(hello.protocol_version) +
                     ", master v" + std::to_string(policy.protocol_version));
  }
  auto it = policy.agents.find(hello.agent_name);
  if (it == policy.agents.end()) {
    return error(Errc::UnknownPlatform,
                 "agent '" + hello.agent_name + "' is not registered");
  }
  if (it->second != hello.platform) {
    return error(Errc::UnknownPlatform, "agent '" + hello.agent_name +
                                            "' is registered for platform '" +
                                            it->second.value + "', not '" +
                                            hello.platform.value + "'");
  }
  return WireMessage{MessageKind::kHelloAck, 0, to_json(policy.ack)};
}

std::vector<std::string_view> chunk_payloads(std::string_view bytes, std::size_t max) {
  std::vector<std::string_view> out;
  for (std::size_t off = 0; off < bytes.size(); off += max) {
    out.push_back(bytes.substr(off, max));
  }
  return out;
}

}  // namespace forgeci::protocol

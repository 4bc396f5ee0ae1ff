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

#include <gtest/gtest.h>

#include <random>

#include "forgeci/crypto.hpp"
#include "test_util.hpp"

namespace forgeci::protocol {
namespace {

using testing::error_of;

TEST(Wire, EncodeDecodeRoundTrip) {
  const WireMessage msg{MessageKind::kHeartbeat, 5, json::object()};
  const std::string frame = encode(msg);
  EXPECT_EQ(frame, "{\"body\":{},\"kind\":\"HEARTBEAT\",\"seq\":5}\n");
  EXPECT_EQ(decode(frame), msg);
}

TEST(Wire, EveryKindRoundTrips) {
  for (const char* k : {"HELLO", "HELLO_ACK", "HEARTBEAT", "ASSIGN", "ACCEPT",
                        "LOG_CHUNK", "RESULT", "CANCEL", "ERROR"}) {
    const auto kind = parse_kind(k);
    ASSERT_TRUE(kind) << k;
    EXPECT_EQ(to_string(*kind), k);
    EXPECT_EQ(decode(encode({*kind, 1, {{"x", 1}}})).kind, *kind);
  }
  EXPECT_FALSE(parse_kind("hello"));
}

TEST(Wire, DecodeRejects) {
  EXPECT_EQ(error_of([] { decode("not json"); }), Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { decode("[1,2]"); }), Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { decode(R"({"seq":1,"body":{}})"); }), Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { decode(R"({"kind":"HEARTBEAT","body":{}})"); }),
            Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { decode(R"({"kind":"HEARTBEAT","seq":-1,"body":{}})"); }),
            Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { decode(R"({"kind":"HEARTBEAT","seq":1,"body":[]})"); }),
            Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { decode(R"({"kind":"PING","seq":1,"body":{}})"); }),
            Errc::UnknownKind);
}

TEST(Sequence, CounterStartsAtOne) {
  SeqCounter c;
  EXPECT_EQ(c.next(), 1u);
  EXPECT_EQ(c.next(), 2u);
}

TEST(Sequence, TrackerRejectsRegressionAndGap) {
  SeqTracker t;
  EXPECT_EQ(error_of([&] { t.observe(0); }), Errc::SeqRegression);
  EXPECT_EQ(error_of([&] { t.observe(2); }), Errc::SeqGap);
  t.observe(1);
  t.observe(2);
  EXPECT_EQ(error_of([&] { t.observe(2); }), Errc::SeqRegression);
  EXPECT_EQ(error_of([&] { t.observe(1); }), Errc::SeqRegression);
  EXPECT_EQ(error_of([&] { t.observe(4); }), Errc::SeqGap);
  EXPECT_EQ(t.last(), 2u);
}

TEST(Sequence, RandomStreamsAcceptedIffGapless) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    SeqTracker t;
    std::uint64_t expected = 1;
    for (int i = 0; i < 50; ++i) {
      const std::uint64_t seq = rng() % 4 == 0 ? rng() % (expected + 3) : expected;
      if (seq == expected) {
        t.observe(seq);
        ++expected;
      } else {
        const Errc e = error_of([&] { t.observe(seq); });
        EXPECT_EQ(e, seq < expected ? Errc::SeqRegression : Errc::SeqGap);
        EXPECT_EQ(t.last(), expected - 1);
      }
    }
  }
}

TEST(Chunks, GaplessPerBuild) {
  ChunkTracker t;
  t.observe(7, 0);
  t.observe(8, 0);
  t.observe(7, 1);
  EXPECT_EQ(error_of([&] { t.observe(7, 3); }), Errc::ChunkGap);
  EXPECT_EQ(error_of([&] { t.observe(8, 0); }), Errc::ChunkGap);
  EXPECT_EQ(t.received(7), 2u);
  t.forget(7);
  EXPECT_EQ(t.received(7), 0u);
}

TEST(Chunks, PayloadSplitting) {
  const std::string bytes(kMaxChunkPayload * 2 + 5, 'z');
  const auto parts = chunk_payloads(bytes);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].size(), kMaxChunkPayload);
  EXPECT_EQ(parts[2].size(), 5u);
  EXPECT_TRUE(chunk_payloads("").empty());
}

TEST(Chunks, BinaryBytesSurviveTheWire) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    LogChunk c{static_cast<model::BuildId>(i), static_cast<std::uint64_t>(i % 9), {}};
    const std::size_t n = rng() % 300;
    for (std::size_t k = 0; k < n; ++k) c.bytes += static_cast<char>(rng() % 256);
    const WireMessage m = decode(encode({MessageKind::kLogChunk, 1, to_json(c)}));
    const LogChunk back = chunk_from_json(m.body);
    EXPECT_EQ(back.bytes, c.bytes);
    EXPECT_EQ(back.chunk_index, c.chunk_index);
  }
}

TEST(Chunks, OversizedPayloadRejected) {
  json body = {{"build_id", 1}, {"chunk_index", 0},
               {"data", crypto::base64_encode(std::string(kMaxChunkPayload + 1, 'a'))}};
  EXPECT_EQ(error_of([&] { chunk_from_json(body); }), Errc::MalformedFrame);
  body["data"] = "!!!";
  EXPECT_EQ(error_of([&] { chunk_from_json(body); }), Errc::MalformedFrame);
}

TEST(FrameReaderTest, ReassemblesSplitFrames) {
  FrameReader r;
  const std::string a = encode({MessageKind::kHeartbeat, 1, json::object()});
  const std::string b = encode({MessageKind::kAccept, 2, {{"build_id", 3}}});
  const std::string all = a + b;
  for (char c : all) r.feed(std::string_view(&c, 1));
  auto f1 = r.next_frame();
  auto f2 = r.next_frame();
  ASSERT_TRUE(f1 && f2);
  EXPECT_EQ(decode(*f1).seq, 1u);
  EXPECT_EQ(decode(*f2).kind, MessageKind::kAccept);
  EXPECT_FALSE(r.next_frame());
}

TEST(FrameReaderTest, OversizedFrameRejected) {
  FrameReader r;
  r.feed(std::string(kMaxFrameBytes + 1, 'x'));
  EXPECT_EQ(error_of([&] { r.next_frame(); }), Errc::MalformedFrame);
}

TEST(Bodies, AssignmentRoundTrip) {
  Assignment a;
  a.build_id = 42;
  a.job_name = "COBRAToolbox-branches-auto-linux";
  a.build_number = 9;
  a.version = {"R2016b"};
  a.platform = {"linux"};
  a.commit = {"opencobra/cobratoolbox", std::string(40, 'a'), "develop", std::nullopt};
  a.bindings = {{"ARCH", "linux"}, {"MATLAB_VER", "R2016b"}};
  a.hudson_script.text = "#!/bin/sh\nset -e\necho hi\n";
  a.hudson_script.spec_hash = "0123456789abcdef";
  a.workspace_policy = WorkspacePolicy::kKeep;
  const Assignment b = assignment_from_json(decode(encode({MessageKind::kAssign, 1, to_json(a)})).body);
  EXPECT_EQ(b.build_id, 42u);
  EXPECT_EQ(b.commit, a.commit);
  EXPECT_EQ(b.bindings, a.bindings);
  EXPECT_EQ(b.hudson_script.text, a.hudson_script.text);
  EXPECT_EQ(b.workspace_policy, WorkspacePolicy::kKeep);
  ASSERT_NE(b.binding("MATLAB_VER"), nullptr);
  EXPECT_EQ(b.binding("MATLAB_VER")->value, "R2016b");
  EXPECT_EQ(b.binding("NOPE"), nullptr);
}

TEST(Bodies, MissingFieldsAreMalformed) {
  EXPECT_EQ(error_of([] { hello_from_json({{"agent_name", "x"}}); }), Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { result_from_json({{"exit_code", 0}}); }), Errc::MalformedFrame);
  EXPECT_EQ(error_of([] { assignment_from_json(json::object()); }), Errc::MalformedFrame);
}

TEST(Bodies, ResultAndHelloRoundTrip) {
  const BuildResult r{5, 137, 1000, 2, "spawn_failed"};
  const BuildResult r2 = result_from_json(to_json(r));
  EXPECT_EQ(r2.exit_code, 137);
  EXPECT_EQ(r2.log_bytes, 1000u);
  EXPECT_EQ(r2.cause, "spawn_failed");
  const AgentHello h{"linux-1", {"linux"}, 8, 16384, "Ubuntu", 1};
  EXPECT_EQ(hello_from_json(to_json(h)), h);
}

TEST(Handshake, AcceptsRegisteredAgent) {
  HandshakePolicy p;
  p.agents = {{"linux", {"linux"}}};
  const WireMessage m = handshake({"linux", {"linux"}, 1, 1, "", 1}, p);
  EXPECT_EQ(m.kind, MessageKind::kHelloAck);
  EXPECT_EQ(ack_from_json(m.body).heartbeat_timeout_ms, 30000);
}

TEST(Handshake, RejectsVersionAndPlatform) {
  HandshakePolicy p;
  p.agents = {{"linux", {"linux"}}};
  auto m = handshake({"linux", {"linux"}, 1, 1, "", 2}, p);
  EXPECT_EQ(m.kind, MessageKind::kError);
  EXPECT_EQ(error_from_json(m.body).error, "VersionMismatch");
  m = handshake({"linux", {"solaris"}, 1, 1, "", 1}, p);
  EXPECT_EQ(error_from_json(m.body).error, "UnknownPlatform");
  m = handshake({"ghost", {"linux"}, 1, 1, "", 1}, p);
  EXPECT_EQ(error_from_json(m.body).error, "UnknownPlatform");
}

}  // namespace
}  // namespace forgeci::protocol

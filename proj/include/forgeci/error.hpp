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

#ifndef FORGECI_ERROR_HPP_
#define FORGECI_ERROR_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace forgeci {

// Every failure the library reports carries one of these codes. The code
// names double as the error names exposed over the HTTP API and the CLI.
enum class Errc {
  // pipeline / config dialect
  UnknownKey,
  DuplicateKey,
  MissingScriptPhase,
  IndentationError,
  EmptyCommand,
  DuplicateBinding,
  InvalidBinding,
  // protocol
  MalformedFrame,
  UnknownKind,
  SeqRegression,
  SeqGap,
  ChunkGap,
  VersionMismatch,
  UnknownPlatform,
  DuplicateAgentName,
  // master
  BadSignature,
  MalformedPayload,
  NoSuchJob,
  NotManuallyTriggerable,
  BadSha,
  UnknownBuild,
  NotRunning,
  ConfigInvalid,
  // agent
  FetchFailed,
  SpawnFailed,
  WorkspaceCleanupFailed,
  FileVanished,
  // status
  TransientClientError,
  PermanentClientError,
  MalformedContext,
  Unauthorized,
  UnknownContext,
  // quality
  UnknownFile,
  EmptyCodebase,
  NegativePercent,
  IoError,
  // docworks
  EmptyBlock,
  DuplicateFunctionName,
  // generic
  InvalidArgument,
  ConnectionFailed,
};

std::string_view errc_name(Errc code);
std::optional<Errc> parse_errc(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace forgeci

#endif  // FORGECI_ERROR_HPP_

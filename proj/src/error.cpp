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

#include "forgeci/error.hpp"

namespace forgeci {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::MissingScriptPhase: return "MissingScriptPhase";
    case Errc::IndentationError: return "IndentationError";
    case Errc::EmptyCommand: return "EmptyCommand";
    case Errc::DuplicateBinding: return "DuplicateBinding";
    case Errc::InvalidBinding: return "InvalidBinding";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::UnknownKind: return "UnknownKind";
    case Errc::SeqRegression: return "SeqRegression";
    case Errc::SeqGap: return "SeqGap";
    case Errc::ChunkGap: return "ChunkGap";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::UnknownPlatform: return "UnknownPlatform";
    case Errc::DuplicateAgentName: return "DuplicateAgentName";
    case Errc::BadSignature: return "BadSignature";
    case Errc::MalformedPayload: return "MalformedPayload";
    case Errc::NoSuchJob: return "NoSuchJob";
    case Errc::NotManuallyTriggerable: return "NotManuallyTriggerable";
    case Errc::BadSha: return "BadSha";
    case Errc::UnknownBuild: return "UnknownBuild";
    case Errc::NotRunning: return "NotRunning";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::FetchFailed: return "FetchFailed";
    case Errc::SpawnFailed: return "SpawnFailed";
    case Errc::WorkspaceCleanupFailed: return "WorkspaceCleanupFailed";
    case Errc::FileVanished: return "FileVanished";
    case Errc::TransientClientError: return "TransientClientError";
    case Errc::PermanentClientError: return "PermanentClientError";
    case Errc::MalformedContext: return "MalformedContext";
    case Errc::Unauthorized: return "Unauthorized";
    case Errc::UnknownContext: return "UnknownContext";
    case Errc::UnknownFile: return "UnknownFile";
    case Errc::EmptyCodebase: return "EmptyCodebase";
    case Errc::NegativePercent: return "NegativePercent";
    case Errc::IoError: return "IoError";
    case Errc::EmptyBlock: return "EmptyBlock";
    case Errc::DuplicateFunctionName: return "DuplicateFunctionName";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConnectionFailed: return "ConnectionFailed";
  }
  return "Unknown";
}

std::optional<Errc> parse_errc(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Errc::ConnectionFailed); ++i) {
    if (errc_name(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) +
                         (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(detail) {}

}  // namespace forgeci

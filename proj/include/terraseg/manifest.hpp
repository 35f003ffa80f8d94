// Copyright 2026 The TerraSeg Authors
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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace terraseg {

inline constexpr std::string_view kToolVersion = "1.0.0";

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// Reproducibility envelope written next to CLI outputs.
struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string command;
  std::string config_digest;  // sha256 of the canonical effective config
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, sha256)
  std::optional<std::uint64_t> seed;
};

RunManifest make_manifest(std::string command, const nlohmann::json& effective_config,
                          std::optional<std::uint64_t> seed = std::nullopt);
/// Hashes the file at `path` and records it.
void add_input(RunManifest& manifest, const std::string& path);

nlohmann::json manifest_to_json(const RunManifest& manifest);

}  // namespace terraseg

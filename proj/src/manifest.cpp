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

#include "terraseg/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>

#include "terraseg/canonical_json.hpp"
#include "terraseg/error.hpp"
#include "terraseg/tensor_io.hpp"

namespace terraseg {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RunManifest make_manifest(std::string command, const nlohmann::json& effective_config,
                          std::optional<std::uint64_t> seed) {
  RunManifest m;
  m.command = std::move(command);
  m.config_digest = sha256_hex(canonical_dump(effective_config));
  m.seed = seed;
  return m;
}

void add_input(RunManifest& manifest, const std::string& path) {
  manifest.inputs.emplace_back(path, sha256_hex(read_file(path)));
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : m.inputs) inputs.push_back({{"path", path}, {"digest", digest}});
  return {{"tool_version", m.tool_version},
          {"command", m.command},
          {"config_digest", m.config_digest},
          {"inputs", inputs},
          {"seed", m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr)}};
}

}  // namespace terraseg

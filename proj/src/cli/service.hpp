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

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "terraseg/class_schema.hpp"

namespace terraseg {

inline constexpr std::size_t kDefaultMaxBodyBytes = 64u << 20;

/// Flag value if given, else TERRASEG_MAX_BODY_BYTES, else 64 MiB.
std::size_t resolve_max_body_bytes(std::optional<std::size_t> flag);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_body_bytes = kDefaultMaxBodyBytes;
  int threads = 4;
};

/// HTTP front end over the shared operations. Handlers only read the schema
/// and config, so requests are independent.
class Service {
 public:
  Service(ClassSchema schema, ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the socket and returns the bound port.
  int bind();
  /// Blocks serving requests until stop().
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace terraseg

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

#include <string>

#include <json.hpp>

namespace terraseg {

/// Compact JSON with keys in lexicographic order, integers printed exactly
/// and reals with 7 significant digits. Non-finite reals become null. Two
/// equal documents always serialise to the same bytes.
std::string canonical_dump(const nlohmann::json& value);

std::string format_real(double value);

}  // namespace terraseg

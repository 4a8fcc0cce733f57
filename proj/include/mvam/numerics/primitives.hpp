// Copyright 2026 The mvam Authors.
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

#pragma once

#include <initializer_list>
#include <span>
#include <string_view>

namespace mvam::numerics {

/// Names of the differentiable primitives Graph provides.
std::span<const std::string_view> required_primitives();

bool has_primitive(std::string_view name);

/// Throws CapabilityError naming the first primitive that is not provided.
/// Models call this from their constructors so that a missing primitive is
/// reported before any training starts.
void require_primitives(std::initializer_list<std::string_view> names);

}  // namespace mvam::numerics

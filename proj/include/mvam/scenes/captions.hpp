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

#include <string>
#include <vector>

#include "mvam/decoder/vocabulary.hpp"
#include "mvam/scenes/scene.hpp"

namespace mvam::scenes {

/// Every word the templates can produce, in vocabulary order.
const std::vector<std::string>& grammar_words();

/// Specials followed by grammar_words().
decoder::Vocabulary caption_vocabulary();

/// Template strings for one change type (slots in braces).
const std::vector<std::string>& caption_templates(ChangeType type);

/// The filled no-change sentences.
const std::vector<std::string>& no_change_captions();
bool is_no_change_caption(const std::string& sentence);

/// Fills one template with the change's attribute words.
std::string fill_template(const std::string& templ, const ChangeRecord& change);

/// k reference sentences. Templates are drawn without replacement while
/// k does not exceed the template count, then with replacement.
std::vector<std::string> caption_refs(const ChangeRecord& change, Rng& rng, int k);

}  // namespace mvam::scenes

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

#include "mvam/scenes/captions.hpp"

#include <algorithm>
#include <numeric>

#include "mvam/numerics/errors.hpp"

namespace mvam::scenes {

namespace {

// Slots: {size} {color} {shape} {material} describe the object as it was
// before the change (after, for Add); {new_color} and {new_material} are the
// changed attribute.
const std::vector<std::vector<std::string>>& all_templates() {
  static const std::vector<std::vector<std::string>> templates = {
      // C
      {"the {size} {color} {shape} changed to {new_color}",
       "the {color} {shape} became {new_color}",
       "the {color} {material} {shape} turned {new_color}"},
      // T
      {"the {size} {color} {shape} changed to {new_material}",
       "the {color} {material} {shape} became {new_material}",
       "the {color} {shape} turned {new_material}"},
      // A
      {"a {size} {color} {shape} has been added",
       "someone added a {color} {material} {shape}",
       "there is a new {size} {color} {shape}"},
      // D
      {"the {size} {color} {shape} has disappeared",
       "the {color} {material} {shape} is missing",
       "someone removed the {color} {shape}"},
      // M
      {"the {size} {color} {shape} moved",
       "the {color} {material} {shape} changed its location",
       "someone moved the {color} {shape}"},
      // DI
      {"the scene remains the same", "there is no change", "nothing has changed"},
  };
  return templates;
}

void replace_all(std::string& s, const std::string& slot, std::string_view word) {
  for (std::size_t pos = s.find(slot); pos != std::string::npos; pos = s.find(slot, pos + word.size())) {
    s.replace(pos, slot.size(), word);
  }
}

}  // namespace

const std::vector<std::string>& grammar_words() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w = {"the",     "a",     "changed",  "to",     "became", "turned",
                                  "has",     "been",  "added",    "someone", "there", "is",
                                  "new",     "disappeared", "missing", "removed", "moved", "its",
                                  "location", "scene", "remains", "same",    "no",    "change",
                                  "nothing"};
    for (int i = 0; i < kSizeCount; ++i) w.emplace_back(name(static_cast<Size>(i)));
    for (int i = 0; i < kColorCount; ++i) w.emplace_back(name(static_cast<Color>(i)));
    for (int i = 0; i < kMaterialCount; ++i) w.emplace_back(name(static_cast<Material>(i)));
    for (int i = 0; i < kShapeCount; ++i) w.emplace_back(name(static_cast<Shape>(i)));
    return w;
  }();
  return words;
}

decoder::Vocabulary caption_vocabulary() { return decoder::Vocabulary(grammar_words()); }

const std::vector<std::string>& caption_templates(ChangeType type) {
  return all_templates()[static_cast<std::size_t>(type)];
}

const std::vector<std::string>& no_change_captions() { return caption_templates(ChangeType::kDistractor); }

bool is_no_change_caption(const std::string& sentence) {
  const auto& set = no_change_captions();
  return std::find(set.begin(), set.end(), sentence) != set.end();
}

std::string fill_template(const std::string& templ, const ChangeRecord& change) {
  std::string s = templ;
  if (change.type == ChangeType::kDistractor) return s;
  const std::optional<SceneObject>& described =
      change.type == ChangeType::kAdd ? change.object_after : change.object_before;
  if (!described) throw ContractError("fill_template: change record lacks the described object");
  replace_all(s, "{size}", name(described->size));
  replace_all(s, "{color}", name(described->color));
  replace_all(s, "{shape}", name(described->shape));
  replace_all(s, "{material}", name(described->material));
  if (change.object_after) {
    replace_all(s, "{new_color}", name(change.object_after->color));
    replace_all(s, "{new_material}", name(change.object_after->material));
  }
  if (s.find('{') != std::string::npos) throw ContractError("fill_template: unfilled slot in '" + s + "'");
  return s;
}

std::vector<std::string> caption_refs(const ChangeRecord& change, Rng& rng, int k) {
  if (k < 1) throw ContractError("caption_refs: k must be at least 1");
  const auto& templates = caption_templates(change.type);
  const auto n = templates.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const std::size_t pick = static_cast<std::size_t>(i) < n ? order[static_cast<std::size_t>(i)] : rng.uniform_int(n);
    out.push_back(fill_template(templates[pick], change));
  }
  return out;
}

}  // namespace mvam::scenes

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


#include "mvam/cli/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <utility>
#include <variant>

#include "mvam/numerics/errors.hpp"
#include "mvam/scenes/captions.hpp"

namespace mvam::cli {

namespace {

using Field = std::variant<std::uint64_t RunConfig::*, int RunConfig::*, double RunConfig::*, bool RunConfig::*,
                           std::string RunConfig::*>;

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"seed", &RunConfig::seed},
      {"grid_width", &RunConfig::grid_width},
      {"grid_height", &RunConfig::grid_height},
      {"n", &RunConfig::n},
      {"min_objects", &RunConfig::min_objects},
      {"max_objects", &RunConfig::max_objects},
      {"max_shift", &RunConfig::max_shift},
      {"noise_std", &RunConfig::noise_std},
      {"amplitude", &RunConfig::amplitude},
      {"refs_per_pair", &RunConfig::refs_per_pair},
      {"include_distractors", &RunConfig::include_distractors},
      {"train_ratio", &RunConfig::train_ratio},
      {"val_ratio", &RunConfig::val_ratio},
      {"feat_dim", &RunConfig::feat_dim},
      {"hidden_dim", &RunConfig::hidden_dim},
      {"embed_dim", &RunConfig::embed_dim},
      {"dropout", &RunConfig::dropout},
      {"a_u_init", &RunConfig::a_u_init},
      {"b_u_init", &RunConfig::b_u_init},
      {"vocab", &RunConfig::vocab},
      {"lr_xe", &RunConfig::lr_xe},
      {"lr_raf", &RunConfig::lr_raf},
      {"epochs_xe", &RunConfig::epochs_xe},
      {"epochs_raf", &RunConfig::epochs_raf},
      {"batch", &RunConfig::batch},
      {"lambda", &RunConfig::lambda},
      {"gamma", &RunConfig::gamma},
      {"c", &RunConfig::c},
      {"max_len", &RunConfig::max_len},
      {"data_dir", &RunConfig::data_dir},
      {"run_dir", &RunConfig::run_dir},
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return field;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename V>
V parse_number(std::string_view key, std::string_view text) {
  V value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false, got '" + std::string(text) +
                    "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const Field& field = find_field(key);
  std::visit(
      [&](auto member) {
        using V = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<V, bool>) {
          this->*member = parse_bool(key, value);
        } else if constexpr (std::is_same_v<V, std::string>) {
          this->*member = std::string(value);
        } else {
          this->*member = parse_number<V>(key, value);
        }
      },
      field);
}

std::string RunConfig::get(std::string_view key) const {
  const Field& field = find_field(key);
  return std::visit(
      [&](auto member) -> std::string {
        using V = std::remove_cvref_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<V, bool>) {
          return this->*member ? "true" : "false";
        } else if constexpr (std::is_same_v<V, std::string>) {
          return this->*member;
        } else if constexpr (std::is_same_v<V, double>) {
          return format_double(this->*member);
        } else {
          return std::to_string(this->*member);
        }
      },
      field);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::validate() const {
  require(grid_width > 0 && grid_height > 0, "grid_width and grid_height must be positive");
  require(n >= 0, "n must be >= 0");
  require(min_objects >= 1 && min_objects <= max_objects, "need 1 <= min_objects <= max_objects");
  require(max_objects < grid_width * grid_height, "max_objects must leave a free cell");
  require(max_shift >= 0, "max_shift must be >= 0");
  require(noise_std >= 0.0 && amplitude > 0.0, "noise_std must be >= 0 and amplitude > 0");
  require(refs_per_pair >= 1, "refs_per_pair must be >= 1");
  require(train_ratio >= 0.0 && val_ratio >= 0.0 && train_ratio + val_ratio <= 1.0,
          "train_ratio and val_ratio must be >= 0 and sum to at most 1");
  require(feat_dim > 0 && hidden_dim > 0 && embed_dim > 0, "feat_dim, hidden_dim and embed_dim must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(lr_xe >= 0.0 && lr_raf >= 0.0, "learning rates must be >= 0");
  require(epochs_xe >= 0 && epochs_raf >= 0, "epoch counts must be >= 0");
  require(batch > 0, "batch must be positive");
  require(max_len > 0, "max_len must be positive");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
  require(c > 0.0, "c must be > 0");
  try {
    render().validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

training::ConfigEcho RunConfig::echo() const {
  training::ConfigEcho out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, get(name));
  return out;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

scenes::GeneratorConfig RunConfig::generator() const {
  scenes::GeneratorConfig g;
  g.grid = grid();
  g.min_objects = min_objects;
  g.max_objects = max_objects;
  g.max_shift = max_shift;
  g.noise_std = noise_std;
  g.include_distractors = include_distractors;
  g.refs_per_pair = refs_per_pair;
  return g;
}

scenes::RenderConfig RunConfig::render() const {
  scenes::RenderConfig r;
  r.feat_dim = feat_dim;
  r.noise_std = noise_std;
  r.amplitude = amplitude;
  return r;
}

training::ModelConfig RunConfig::model() const {
  training::ModelConfig m;
  m.feat_dim = feat_dim;
  m.hidden_dim = hidden_dim;
  m.embed_dim = embed_dim;
  m.dropout = dropout;
  m.a_u_init = a_u_init;
  m.b_u_init = b_u_init;
  return m;
}

training::RafConfig RunConfig::raf() const {
  training::RafConfig r;
  r.gamma = gamma;
  r.c = c;
  r.lambda = lambda;
  return r;
}

decoder::Vocabulary RunConfig::vocabulary() const {
  if (vocab.empty()) return scenes::caption_vocabulary();
  return decoder::Vocabulary::load(vocab);
}

}  // namespace mvam::cli

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


#include "mvam/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvam/numerics/errors.hpp"

namespace mvam::training {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'M', 'V', 'A', 'M', 'C', 'K', 'P', 'T'};

template <typename V>
void write_raw(std::ostream& out, const V& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V read_raw(std::istream& in, const std::string& what) {
  V value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(V));
  if (!in) throw DataError("checkpoint: truncated while reading " + what);
  return value;
}

void write_matrix(std::ostream& out, const Matrix<float>& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
}

Matrix<float> read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  Matrix<float> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  if (!in) throw DataError("checkpoint: truncated in " + what);
  return m;
}

Phase parse_phase(const std::string& s) {
  if (s == "xe") return Phase::kXe;
  if (s == "raf") return Phase::kRaf;
  throw DataError("checkpoint: unknown phase '" + s + "'");
}

}  // namespace

const char* phase_name(Phase phase) { return phase == Phase::kXe ? "xe" : "raf"; }

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainState& state, Phase phase,
                     const ConfigEcho& config_echo) {
  const ModelConfig& mc = model.config();
  const auto params = model.params().all();
  const bool has_moments = !state.adam.first_moments().empty();

  Json header;
  Json echo = Json::object();
  for (const auto& [key, value] : config_echo) echo[key] = value;
  header["config"] = echo;
  header["model"] = {{"feat_dim", mc.feat_dim},
                     {"hidden_dim", mc.hidden_dim},
                     {"embed_dim", mc.embed_dim},
                     {"dropout", mc.dropout},
                     {"a_u_init", mc.a_u_init},
                     {"b_u_init", mc.b_u_init},
                     {"scale_similarity", mc.vam.scale_similarity}};
  header["vocab"] = model.vocab().tokens();
  header["epoch"] = state.epoch;
  header["phase"] = phase_name(phase);
  header["rng"] = state.rng.state();
  header["adam"] = {{"steps", state.adam.steps()},
                    {"lr", state.adam.options().lr},
                    {"beta1", state.adam.options().beta1},
                    {"beta2", state.adam.options().beta2},
                    {"eps", state.adam.options().eps},
                    {"moments", has_moments}};
  Json shapes = Json::array();
  for (const auto* p : params) shapes.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  header["params"] = shapes;
  const std::string text = header.dump();

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    write_raw(out, kCheckpointVersion);
    write_raw(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto* p : params) write_matrix(out, p->value);
    if (has_moments) {
      for (const auto& m : state.adam.first_moments()) write_matrix(out, m);
      for (const auto& v : state.adam.second_moments()) write_matrix(out, v);
    }
    if (!out) throw DataError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("checkpoint: " + path.string() + " is not a checkpoint file");
  }
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto length = read_raw<std::uint64_t>(in, "header length");
  if (length > (std::uint64_t{1} << 30)) throw DataError("checkpoint: implausible header length");
  std::string text(static_cast<std::size_t>(length), '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw DataError("checkpoint: truncated header");

  try {
    const Json header = Json::parse(text);
    const Json& jm = header.at("model");
    ModelConfig mc;
    mc.feat_dim = jm.at("feat_dim").get<int>();
    mc.hidden_dim = jm.at("hidden_dim").get<int>();
    mc.embed_dim = jm.at("embed_dim").get<int>();
    mc.dropout = jm.at("dropout").get<double>();
    mc.a_u_init = jm.at("a_u_init").get<double>();
    mc.b_u_init = jm.at("b_u_init").get<double>();
    mc.vam.scale_similarity = jm.at("scale_similarity").get<bool>();
    Vocabulary vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());

    Checkpoint ck{Model(mc, std::move(vocab), 0), TrainState(0), parse_phase(header.at("phase").get<std::string>()),
                  {}};
    for (const auto& [key, value] : header.at("config").items()) ck.config_echo.emplace_back(key, value.get<std::string>());

    auto params = ck.model.params().all();
    const Json& shapes = header.at("params");
    if (shapes.size() != params.size()) throw DataError("checkpoint: parameter count does not match the model");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto rows = shapes[i].at("rows").get<Eigen::Index>();
      const auto cols = shapes[i].at("cols").get<Eigen::Index>();
      const auto name = shapes[i].at("name").get<std::string>();
      if (name != params[i]->name || rows != params[i]->value.rows() || cols != params[i]->value.cols()) {
        throw DataError("checkpoint: parameter " + std::to_string(i) + " (" + name + ") has an unexpected shape");
      }
      params[i]->value = read_matrix(in, rows, cols, name);
      params[i]->zero_grad();
    }

    const Json& ja = header.at("adam");
    Adam::Options options;
    options.lr = ja.at("lr").get<double>();
    options.beta1 = ja.at("beta1").get<double>();
    options.beta2 = ja.at("beta2").get<double>();
    options.eps = ja.at("eps").get<double>();
    ck.state.adam = Adam(options);
    std::vector<Matrix<float>> m;
    std::vector<Matrix<float>> v;
    if (ja.at("moments").get<bool>()) {
      for (const auto* p : params) m.push_back(read_matrix(in, p->value.rows(), p->value.cols(), "first moments"));
      for (const auto* p : params) v.push_back(read_matrix(in, p->value.rows(), p->value.cols(), "second moments"));
    }
    ck.state.adam.restore(ja.at("steps").get<std::int64_t>(), std::move(m), std::move(v));
    ck.state.epoch = header.at("epoch").get<int>();
    ck.state.rng.restore(header.at("rng").get<std::string>());
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes after payload");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: malformed header: " + std::string(e.what()));
  }
}

}  // namespace mvam::training

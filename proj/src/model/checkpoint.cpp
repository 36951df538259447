// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "pbd/error.hpp"

namespace pbd::model {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'P', 'B', 'D', 'C', 'K', 'P', 'T', '1'};

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Mdcnet& model, const json& meta) {
  json header;
  header["config"] = to_json(model.config());
  header["meta"] = meta;
  json tensors = json::array();
  for (const auto& p : model.params().items()) {
    const auto s = p.tensor.shape();
    tensors.push_back({{"name", p.name}, {"shape", {s.n, s.c, s.h, s.w}}});
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kCheckpointVersion);
  write_pod(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.params().items()) {
    const auto d = p.tensor.data();
    os.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
  }
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a checkpoint file: " + path.string());
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  }
  const auto header_size = read_pod<std::uint64_t>(is);
  if (!is || header_size > (1u << 26)) throw DataError("corrupt checkpoint header: " + path.string());
  std::string text(header_size, '\0');
  is.read(text.data(), static_cast<std::streamsize>(header_size));
  if (!is) throw DataError("truncated checkpoint header: " + path.string());

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  Checkpoint ck;
  ck.model = std::make_unique<Mdcnet>(model_config_from_json(header.at("config")));
  ck.meta = header.value("meta", json::object());

  auto& params = ck.model->params();
  std::set<std::string> seen;
  for (const auto& entry : header.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    auto* p = params.find(name);
    if (p == nullptr) throw DataError("checkpoint tensor not in model: " + name);
    const auto s = entry.at("shape");
    const nn::Shape shape{s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>(), s.at(3).get<int>()};
    if (!(shape == p->tensor.shape())) {
      throw DataError("checkpoint tensor " + name + " has shape " + shape.str() + ", model expects " + p->tensor.shape().str());
    }
    auto d = p->tensor.mutable_data();
    is.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!is) throw DataError("truncated checkpoint data at " + name + ": " + path.string());
    seen.insert(name);
  }
  if (seen.size() != params.items().size()) throw DataError("checkpoint is missing model tensors: " + path.string());
  return ck;
}

}  // namespace pbd::model

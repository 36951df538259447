// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>

#include "pbd/json_io.hpp"
#include "pbd/model/mdcnet.hpp"

namespace pbd::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<Mdcnet> model;
  json meta;  // free-form run metadata (prompt, labels, steps)
};

/// Layout: 8-byte magic "PBDCKPT1", u32 version, u64 header size, JSON header
/// {config, meta, tensors: [{name, shape}]}, then raw little-endian doubles in
/// header order.
void save_checkpoint(const std::filesystem::path& path, const Mdcnet& model, const json& meta = json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pbd::model

// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace pbd {

using json = nlohmann::json;

/// Parses a JSON document; failures raise IoError naming the path.
json read_json(const std::filesystem::path& path);

/// Writes `doc` pretty-printed with a trailing newline. Key order is sorted,
/// so output is byte-stable.
void write_json(const std::filesystem::path& path, const json& doc);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace pbd

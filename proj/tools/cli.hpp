// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pbd::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kContract = 4 };

/// Runs one `pbd` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbd::cli

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace avflow {

/// Runs one CLI invocation (args exclude the program name) and returns the
/// process exit code: 0 ok, 2 usage, 3 config, 4 numeric, 5 I/O.
int run_cli(const std::vector<std::string>& args);

}  // namespace avflow

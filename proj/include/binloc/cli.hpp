// Copyright 2026 The binloc Authors.
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

#ifndef BINLOC_CLI_HPP
#define BINLOC_CLI_HPP

#include <string>

namespace binloc::cli {

/// Entry point for the `binloc` tool. Exit codes: 0 success, 1 runtime
/// failure, 2 usage error.
int run(int argc, const char* const* argv);

/// Full --help text including every subcommand's flags (used by doc tests).
std::string help_text();

}  // namespace binloc::cli

#endif  // BINLOC_CLI_HPP

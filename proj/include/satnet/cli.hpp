// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: gen, train, eval, solve, gradcheck, inspect.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace satnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one invocation. args excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace satnet::cli

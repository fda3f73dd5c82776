// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cirrange/nn/gradcheck.hpp"

namespace cirrange::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct OracleCase {
    std::string name;
    nn::GradCheckReport report;
};

/// Finite-difference checks over a linear model, the RSSI MLP and the full CIR
/// CNN at rows x cols, all with randomly initialised weights.
std::vector<OracleCase> gradcheck_suite(std::size_t rows, std::size_t cols, const nn::GradCheckOptions& options);

/// Entry point of the `cirrange` tool. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cirrange::cli

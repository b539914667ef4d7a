// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <roughfrob/core.hpp>

namespace roughfrob {

/// Line-oriented experiment config:
///
///   command = solve-pfaff
///   level = 12
///   [g]
///   kind = weierstrass_1d
///   beta = 0.9
///
/// Values are JSON literals (numbers, true/false, "strings", [arrays], {objects}) or bare words.
/// Section names may be dotted (`[problem.driver]`) to nest tables. `#` starts a comment.
json parse_config(const std::string& text);
json load_config(const std::string& path);
/// Inverse of parse_config for objects nested at most through tables.
std::string format_config(const json& cfg);

}  // namespace roughfrob

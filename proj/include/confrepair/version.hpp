// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace confrepair {

inline constexpr const char* tool_version = "0.1.0";

} // namespace confrepair

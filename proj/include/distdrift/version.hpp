// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace distdrift {

inline constexpr const char* kVersion = "distdrift 0.1.0";

}  // namespace distdrift

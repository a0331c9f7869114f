// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace segrobust {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace segrobust

// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace thumbseed::log {

void set_quiet(bool quiet);
void warn(const std::string& message);
void info(const std::string& message);

}  // namespace thumbseed::log

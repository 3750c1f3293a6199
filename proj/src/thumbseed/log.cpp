// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/log.hpp"

#include <atomic>
#include <iostream>

namespace thumbseed::log {
namespace {
std::atomic<bool> g_quiet{false};
}

void set_quiet(bool quiet) { g_quiet = quiet; }

void warn(const std::string& message) {
  if (!g_quiet) std::cerr << "thumbseed: warning: " << message << '\n';
}

void info(const std::string& message) {
  if (!g_quiet) std::cerr << "thumbseed: " << message << '\n';
}

}  // namespace thumbseed::log

#include "lidartraj/logging.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace lidartraj {

namespace {
std::atomic<bool> g_enabled{true};
std::atomic<long> g_count{0};
std::mutex g_mu;
}  // namespace

void Warn(const std::string& message) {
  ++g_count;
  if (!g_enabled) return;
  std::lock_guard<std::mutex> lock(g_mu);
  std::cerr << "warning: " << message << "\n";
}

void SetWarningsEnabled(bool enabled) { g_enabled = enabled; }

long WarningCount() { return g_count; }

}  // namespace lidartraj

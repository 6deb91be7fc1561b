#include "drfuse/diag.hpp"

#include <iostream>
#include <mutex>

#include "drfuse/errors.hpp"

namespace drfuse {

const char* to_string(SolverFailure f) noexcept {
  switch (f) {
    case SolverFailure::no_overlap: return "NoOverlap";
    case SolverFailure::domain_violation: return "DomainViolation";
    case SolverFailure::max_iterations: return "MaxIterations";
    case SolverFailure::non_convergence: return "NonConvergence";
    case SolverFailure::singular: return "Singular";
  }
  return "Unknown";
}

namespace diag {
namespace {

std::mutex g_mutex;
std::vector<std::string>* g_sink = nullptr;
bool g_silent = false;

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (g_sink != nullptr) {
    g_sink->push_back(message);
  } else if (!g_silent) {
    std::cerr << "warning: " << message << '\n';
  }
}

ScopedCapture::ScopedCapture(std::vector<std::string>& sink) {
  std::lock_guard<std::mutex> lock(g_mutex);
  previous_ = g_sink;
  g_sink = &sink;
}

ScopedCapture::~ScopedCapture() {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_sink = previous_;
}

ScopedSilence::ScopedSilence() {
  std::lock_guard<std::mutex> lock(g_mutex);
  previous_ = g_silent;
  g_silent = true;
}

ScopedSilence::~ScopedSilence() {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_silent = previous_;
}

}  // namespace diag
}  // namespace drfuse

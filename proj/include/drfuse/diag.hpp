#pragma once

#include <functional>
#include <string>
#include <vector>

// Process-wide warning channel. Warnings go to stderr unless a capture is active.
namespace drfuse::diag {

void warn(const std::string& message);

// While alive, warnings are appended to `sink` instead of printed. Nests.
class ScopedCapture {
 public:
  explicit ScopedCapture(std::vector<std::string>& sink);
  ~ScopedCapture();
  ScopedCapture(const ScopedCapture&) = delete;
  ScopedCapture& operator=(const ScopedCapture&) = delete;

 private:
  std::vector<std::string>* previous_;
};

// Silences warnings for the lifetime of the object (used inside replication loops).
class ScopedSilence {
 public:
  ScopedSilence();
  ~ScopedSilence();
  ScopedSilence(const ScopedSilence&) = delete;
  ScopedSilence& operator=(const ScopedSilence&) = delete;

 private:
  bool previous_;
};

}  // namespace drfuse::diag

#pragma once

#include <functional>
#include <string>

namespace donn {

using WarningHandler = std::function<void(const std::string&)>;

// Warnings default to stderr. Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

/// RAII capture of warnings, mostly for tests.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::string& text() const { return text_; }
  int count() const { return count_; }

 private:
  WarningHandler previous_;
  std::string text_;
  int count_ = 0;
};

}  // namespace donn

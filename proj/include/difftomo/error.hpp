#pragma once

#include <stdexcept>
#include <string>

namespace difftomo {

// Single error type for the whole library; the message is the diagnostic
// the CLI prints on one line.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace difftomo

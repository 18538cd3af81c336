#pragma once

#include <stdexcept>
#include <string>

namespace nnmass {

// Domain error raised by every module for violated preconditions, invalid
// descriptors and numeric failures. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nnmass

// SPDX-License-Identifier: MIT
//
// Shared error types. Validation failures are caller mistakes (bad config,
// inconsistent dimensions) and map to CLI exit code 2; numerical failures are
// runtime aborts (instability, non-finite values) and map to exit code 3.
#pragma once

#include <stdexcept>
#include <string>

namespace meshvmc {

class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw validation_error(what);
}

}  // namespace meshvmc
